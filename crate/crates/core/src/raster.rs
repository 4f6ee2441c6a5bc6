//! Row-major boolean rasters and the connectivity helpers the perception and
//! skeleton stages share.

use serde::{Deserialize, Serialize};

/// (row, col) index into a raster.
pub type Pixel = (usize, usize);

/// The 8 neighbour offsets, clockwise from north.
pub(crate) const NEIGHBORS8: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

const NEIGHBORS4: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Raster {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Raster {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), rows * cols, "raster data length");
        Self { rows, cols, data }
    }

    /// Builds a raster from text rows where `#` (or `1`) marks a set pixel.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut out = Raster::new(rows.len(), cols);
        for (r, line) in rows.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                if ch == '#' || ch == '1' {
                    out.set(r, c, true);
                }
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn in_bounds(&self, r: isize, c: isize) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    /// Out-of-bounds reads are false.
    pub fn get_signed(&self, r: isize, c: isize) -> bool {
        self.in_bounds(r, c) && self.data[r as usize * self.cols + c as usize]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i / self.cols, i % self.cols))
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Raster) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Number of set 8-neighbours of (r, c); the border is truncated.
    pub fn neighbor_count(&self, r: usize, c: usize) -> u8 {
        NEIGHBORS8
            .iter()
            .filter(|(dr, dc)| self.get_signed(r as isize + dr, c as isize + dc))
            .count() as u8
    }

    /// Labels 8-connected components of set pixels. Labels start at 1 in
    /// row-major order of each component's first pixel; 0 is background.
    pub fn label_components(&self) -> (Vec<u32>, Vec<usize>) {
        let mut labels = vec![0u32; self.data.len()];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.data.len() {
            if !self.data[start] || labels[start] != 0 {
                continue;
            }
            let label = sizes.len() as u32 + 1;
            let mut size = 0usize;
            labels[start] = label;
            stack.push(start);
            while let Some(i) = stack.pop() {
                size += 1;
                let (r, c) = ((i / self.cols) as isize, (i % self.cols) as isize);
                for (dr, dc) in NEIGHBORS8 {
                    let (nr, nc) = (r + dr, c + dc);
                    if self.in_bounds(nr, nc) {
                        let j = nr as usize * self.cols + nc as usize;
                        if self.data[j] && labels[j] == 0 {
                            labels[j] = label;
                            stack.push(j);
                        }
                    }
                }
            }
            sizes.push(size);
        }
        (labels, sizes)
    }

    pub fn component_count(&self) -> usize {
        self.label_components().1.len()
    }

    /// Keeps only the largest 8-connected component. Ties go to the component
    /// whose first pixel comes first in row-major order.
    pub fn largest_component(&self) -> Raster {
        let (labels, sizes) = self.label_components();
        let Some(best) = sizes
            .iter()
            .enumerate()
            .fold(None::<(usize, usize)>, |acc, (i, &s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((i, s)),
            })
            .map(|(i, _)| i as u32 + 1)
        else {
            return Raster::new(self.rows, self.cols);
        };
        Raster {
            rows: self.rows,
            cols: self.cols,
            data: labels.iter().map(|&l| l == best).collect(),
        }
    }

    /// Sets every unset pixel that cannot reach the raster border through
    /// 4-connected unset pixels.
    pub fn fill_holes(&self) -> Raster {
        let mut outside = vec![false; self.data.len()];
        let mut stack = Vec::new();
        let seed = |i: usize, stack: &mut Vec<usize>, outside: &mut Vec<bool>| {
            if !self.data[i] && !outside[i] {
                outside[i] = true;
                stack.push(i);
            }
        };
        for c in 0..self.cols {
            seed(c, &mut stack, &mut outside);
            if self.rows > 0 {
                seed((self.rows - 1) * self.cols + c, &mut stack, &mut outside);
            }
        }
        for r in 0..self.rows {
            seed(r * self.cols, &mut stack, &mut outside);
            if self.cols > 0 {
                seed(r * self.cols + self.cols - 1, &mut stack, &mut outside);
            }
        }
        while let Some(i) = stack.pop() {
            let (r, c) = ((i / self.cols) as isize, (i % self.cols) as isize);
            for (dr, dc) in NEIGHBORS4 {
                let (nr, nc) = (r + dr, c + dc);
                if self.in_bounds(nr, nc) {
                    let j = nr as usize * self.cols + nc as usize;
                    if !self.data[j] && !outside[j] {
                        outside[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        Raster {
            rows: self.rows,
            cols: self.cols,
            data: outside.iter().map(|&o| !o).collect(),
        }
    }

    /// True if some 2x2 window is fully set.
    pub fn has_full_2x2(&self) -> bool {
        (0..self.rows.saturating_sub(1)).any(|r| {
            (0..self.cols.saturating_sub(1)).any(|c| {
                self.get(r, c) && self.get(r, c + 1) && self.get(r + 1, c) && self.get(r + 1, c + 1)
            })
        })
    }
}
