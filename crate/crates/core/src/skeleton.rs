//! One-pixel-wide skeletons of navigable rasters and their 8-neighbour degree
//! structure.
//!
//! Thinning is the classic directional scheme: each iteration makes four
//! sub-passes (north, south, east, west border points). A sub-pass first
//! collects, in parallel over the current image, every border point of that
//! direction that is simple and has at least two set neighbours; it then
//! deletes the candidates in row-major order, re-checking both conditions
//! against the partially updated image. The re-check makes every individual
//! deletion simple, so 8-connectivity of the foreground and 4-connectivity of
//! the background are preserved. Iteration stops at the first pass that
//! deletes nothing.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::OccupancyGrid;
use crate::raster::{Pixel, Raster, NEIGHBORS8};

/// Which skeleton nodes become waypoint candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum DegreeConfig {
    /// Endpoints only.
    #[default]
    #[serde(rename = "deg1")]
    Deg1,
    /// Junctions only.
    #[serde(rename = "gt2")]
    DegGt2,
    /// Endpoints, junctions and isolated pixels.
    #[serde(rename = "ne2")]
    DegNe2,
}

impl DegreeConfig {
    pub fn accepts(self, degree: u8) -> bool {
        match self {
            DegreeConfig::Deg1 => degree == 1,
            DegreeConfig::DegGt2 => degree > 2,
            DegreeConfig::DegNe2 => degree != 2,
        }
    }
}

impl FromStr for DegreeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deg1" => Ok(DegreeConfig::Deg1),
            "gt2" => Ok(DegreeConfig::DegGt2),
            "ne2" => Ok(DegreeConfig::DegNe2),
            other => Err(Error::input(format!(
                "unknown degree config {other:?} (expected deg1, gt2 or ne2)"
            ))),
        }
    }
}

impl fmt::Display for DegreeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegreeConfig::Deg1 => "deg1",
            DegreeConfig::DegGt2 => "gt2",
            DegreeConfig::DegNe2 => "ne2",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SkeletonGraph {
    pub mask: Raster,
    /// Per-pixel 8-neighbour skeleton count; 0 off the skeleton.
    degree: Vec<u8>,
    pub grid: OccupancyGrid,
}

impl SkeletonGraph {
    fn new(mask: Raster, grid: OccupancyGrid) -> Self {
        let degree = (0..mask.rows() * mask.cols())
            .map(|i| {
                let (r, c) = (i / mask.cols(), i % mask.cols());
                if mask.get(r, c) {
                    mask.neighbor_count(r, c)
                } else {
                    0
                }
            })
            .collect();
        Self { mask, degree, grid }
    }

    pub fn degree(&self, (r, c): Pixel) -> u8 {
        self.degree[r * self.mask.cols() + c]
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// Debug image: background 0, isolated 64, degree 1 255, degree 2 128,
    /// junctions 192.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.mask.cols(), self.mask.rows())?;
        let bytes: Vec<u8> = self
            .degree
            .iter()
            .zip(self.mask.data())
            .map(|(&d, &on)| match (on, d) {
                (false, _) => 0,
                (true, 0) => 64,
                (true, 1) => 255,
                (true, 2) => 128,
                (true, _) => 192,
            })
            .collect();
        w.write_all(&bytes)
    }
}

pub fn skeletonize(grid: &OccupancyGrid) -> SkeletonGraph {
    SkeletonGraph::new(thin(&grid.cells), grid.clone())
}

/// Degree of every skeleton pixel, keyed in row-major order.
pub fn node_degrees(graph: &SkeletonGraph) -> BTreeMap<Pixel, u8> {
    graph.mask.pixels().map(|p| (p, graph.degree(p))).collect()
}

/// Skeleton pixels whose degree matches `config`, row-major.
pub fn select_by_degree(graph: &SkeletonGraph, config: DegreeConfig) -> Vec<Pixel> {
    graph
        .mask
        .pixels()
        .filter(|&p| config.accepts(graph.degree(p)))
        .collect()
}

// Neighbour bits follow NEIGHBORS8: N, NE, E, SE, S, SW, W, NW.
const BIT_N: u8 = 1 << 0;
const BIT_E: u8 = 1 << 2;
const BIT_S: u8 = 1 << 4;
const BIT_W: u8 = 1 << 6;

/// Yokoi's 8-connectivity number of a neighbourhood code. A set pixel is
/// simple (deletable without changing topology) iff this equals 1.
pub(crate) const fn connectivity_number(code: u8) -> u8 {
    // Counterclockwise from east: E, NE, N, NW, W, SW, S, SE.
    const ORDER: [u8; 8] = [2, 1, 0, 7, 6, 5, 4, 3];
    let mut x = [0u8; 8];
    let mut i = 0;
    while i < 8 {
        x[i] = 1 - ((code >> ORDER[i]) & 1);
        i += 1;
    }
    let mut n = 0;
    let mut k = 0;
    while k < 8 {
        n += x[k] - x[k] * x[(k + 1) % 8] * x[(k + 2) % 8];
        k += 2;
    }
    n
}

const fn build_simple_table() -> [bool; 256] {
    let mut t = [false; 256];
    let mut code = 0;
    while code < 256 {
        t[code] = connectivity_number(code as u8) == 1;
        code += 1;
    }
    t
}

static SIMPLE: [bool; 256] = build_simple_table();

/// Whether a set pixel with this neighbourhood code (bit k set when
/// neighbour k in N, NE, E, SE, S, SW, W, NW order is set) is simple.
pub fn is_simple_code(code: u8) -> bool {
    SIMPLE[code as usize]
}

struct Padded {
    stride: usize,
    img: Vec<u8>,
    offsets: [isize; 8],
}

impl Padded {
    fn new(src: &Raster) -> Self {
        let stride = src.cols() + 2;
        let mut img = vec![0u8; stride * (src.rows() + 2)];
        for (r, c) in src.pixels() {
            img[(r + 1) * stride + c + 1] = 1;
        }
        let s = stride as isize;
        let offsets = NEIGHBORS8.map(|(dr, dc)| dr * s + dc);
        Self { stride, img, offsets }
    }

    fn code(&self, i: usize) -> u8 {
        let mut code = 0u8;
        for (bit, off) in self.offsets.iter().enumerate() {
            if self.img[(i as isize + off) as usize] != 0 {
                code |= 1 << bit;
            }
        }
        code
    }

    fn is_border(&self, i: usize) -> bool {
        self.code(i) & (BIT_N | BIT_E | BIT_S | BIT_W) != (BIT_N | BIT_E | BIT_S | BIT_W)
    }

    fn into_raster(self, rows: usize, cols: usize) -> Raster {
        let mut out = Raster::new(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if self.img[(r + 1) * self.stride + c + 1] != 0 {
                    out.set(r, c, true);
                }
            }
        }
        out
    }
}

fn deletable(code: u8, dir_bit: u8) -> bool {
    code & dir_bit == 0 && code.count_ones() >= 2 && SIMPLE[code as usize]
}

/// Thins a raster to a one-pixel-wide, topology-preserving skeleton.
pub fn thin(src: &Raster) -> Raster {
    let mut p = Padded::new(src);
    let s = p.stride as isize;
    let four = [-s, 1, s, -1];

    // Border pixels (set, with at least one unset 4-neighbour), kept sorted.
    let mut border: Vec<usize> = (0..p.img.len())
        .filter(|&i| p.img[i] != 0 && p.is_border(i))
        .collect();
    let mut in_border = vec![false; p.img.len()];
    for &i in &border {
        in_border[i] = true;
    }

    let mut candidates = Vec::new();
    let mut fresh = Vec::new();
    loop {
        let mut changed = false;
        for dir_bit in [BIT_N, BIT_S, BIT_E, BIT_W] {
            candidates.clear();
            candidates.extend(
                border
                    .iter()
                    .copied()
                    .filter(|&i| p.img[i] != 0 && deletable(p.code(i), dir_bit)),
            );
            for &i in &candidates {
                if !deletable(p.code(i), dir_bit) {
                    continue;
                }
                p.img[i] = 0;
                changed = true;
                for off in four {
                    let j = (i as isize + off) as usize;
                    if p.img[j] != 0 && !in_border[j] {
                        in_border[j] = true;
                        fresh.push(j);
                    }
                }
            }
            if !fresh.is_empty() || !candidates.is_empty() {
                border.retain(|&i| p.img[i] != 0);
                border.append(&mut fresh);
                border.sort_unstable();
            }
        }
        if !changed {
            break;
        }
    }
    p.into_raster(src.rows(), src.cols())
}
