//! Skeleton pixels to the structured decision space.

use serde::{Deserialize, Serialize};

use crate::backends::DescriptionProvider;
use crate::error::{Error, Result};
use crate::geom::{heading_of, Point2, Pose};
use crate::perception::{Observation, OccupancyGrid};
use crate::raster::{Pixel, Raster};
use crate::skeleton::{select_by_degree, DegreeConfig, SkeletonGraph};

/// A candidate target in relative polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub id: usize,
    /// Agent frame: x forward, y left, metres.
    pub position: Point2,
    pub distance: f64,
    /// Degrees in (-180, 180], counterclockwise (left) positive.
    pub heading: f64,
    /// Rotate-in-place pseudo-waypoint emitted when nothing else survives.
    #[serde(default)]
    pub fallback: bool,
}

impl Waypoint {
    pub fn from_agent_point(id: usize, position: Point2) -> Self {
        Self {
            id,
            position,
            distance: position.norm(),
            heading: heading_of(position),
            fallback: false,
        }
    }

    pub fn from_polar(id: usize, distance: f64, heading: f64) -> Self {
        let (s, c) = heading.to_radians().sin_cos();
        Self {
            id,
            position: Point2::new(distance * c, distance * s),
            distance,
            heading: crate::geom::wrap_degrees(heading),
            fallback: false,
        }
    }

    /// Distance 0, heading +90: turn left in place.
    pub fn rotate_in_place(id: usize) -> Self {
        Self {
            id,
            position: Point2::new(0.0, 0.0),
            distance: 0.0,
            heading: 90.0,
            fallback: true,
        }
    }

    pub fn world_position(&self, pose: &Pose) -> Point2 {
        pose.agent_to_world(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointConfig {
    /// Pixels.
    pub merge_radius: f64,
    /// Metres; waypoints strictly closer are dropped.
    pub min_exclusion: f64,
    pub degree_config: DegreeConfig,
}

impl Default for WaypointConfig {
    fn default() -> Self {
        Self {
            merge_radius: 10.0,
            min_exclusion: 1.0,
            degree_config: DegreeConfig::Deg1,
        }
    }
}

impl WaypointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.merge_radius >= 0.0) || !(self.min_exclusion >= 0.0) {
            return Err(Error::input("waypoint: merge_radius and min_exclusion must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub waypoint: Waypoint,
    pub description: String,
}

/// Ordered (waypoint, description) pairs offered to a decision provider.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecisionSpace {
    pub entries: Vec<DecisionEntry>,
}

/// Wire form of one decision-space entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntryJson {
    pub id: usize,
    pub distance_m: f64,
    pub heading_deg: f64,
    pub description: String,
}

impl DecisionSpace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&DecisionEntry> {
        self.entries.iter().find(|e| e.waypoint.id == id)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.waypoint.id).collect()
    }

    pub fn to_wire(&self) -> Vec<DecisionEntryJson> {
        self.entries
            .iter()
            .map(|e| DecisionEntryJson {
                id: e.waypoint.id,
                distance_m: e.waypoint.distance,
                heading_deg: e.waypoint.heading,
                description: e.description.clone(),
            })
            .collect()
    }

    /// `[{id, distance_m, heading_deg, description}, ...]`
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("decision space serialises")
    }
}

fn cluster_once(pixels: &[(i64, i64)], radius: f64) -> Vec<(i64, i64)> {
    let n = pixels.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let r2 = radius * radius;
    for i in 0..n {
        for j in i + 1..n {
            let dr = (pixels[i].0 - pixels[j].0) as f64;
            let dc = (pixels[i].1 - pixels[j].1) as f64;
            if dr * dr + dc * dc <= r2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut sums: Vec<(f64, f64, usize)> = vec![(0.0, 0.0, 0); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        sums[root].0 += pixels[i].0 as f64;
        sums[root].1 += pixels[i].1 as f64;
        sums[root].2 += 1;
    }
    let mut out: Vec<(i64, i64)> = sums
        .into_iter()
        .filter(|s| s.2 > 0)
        .map(|(r, c, k)| {
            // f64::round rounds half away from zero.
            ((r / k as f64).round() as i64, (c / k as f64).round() as i64)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Transitively clusters pixels closer than `merge_radius` (inclusive) and
/// replaces each cluster with its rounded centroid. Repeats until no two
/// outputs are within the radius, so the result is a fixpoint.
pub fn merge_close(pixels: &[Pixel], merge_radius: f64) -> Vec<Pixel> {
    let mut cur: Vec<(i64, i64)> = pixels.iter().map(|&(r, c)| (r as i64, c as i64)).collect();
    cur.sort_unstable();
    cur.dedup();
    loop {
        let next = cluster_once(&cur, merge_radius);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur.into_iter().map(|(r, c)| (r as usize, c as usize)).collect()
}

/// Nearest set pixel of `mask` (Euclidean; ties row-major first), or the
/// pixel itself if already set.
pub fn snap_to_mask(pixel: Pixel, mask: &Raster) -> Option<Pixel> {
    if pixel.0 < mask.rows() && pixel.1 < mask.cols() && mask.get(pixel.0, pixel.1) {
        return Some(pixel);
    }
    let mut best: Option<(i64, Pixel)> = None;
    for p in mask.pixels() {
        let dr = p.0 as i64 - pixel.0 as i64;
        let dc = p.1 as i64 - pixel.1 as i64;
        let d = dr * dr + dc * dc;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, p));
        }
    }
    best.map(|(_, p)| p)
}

pub fn pixel_to_waypoint(pixel: Pixel, grid: &OccupancyGrid, id: usize) -> Result<Waypoint> {
    if pixel.0 >= grid.rows() || pixel.1 >= grid.cols() {
        return Err(Error::input(format!(
            "pixel {pixel:?} outside {}x{} grid",
            grid.rows(),
            grid.cols()
        )));
    }
    Ok(Waypoint::from_agent_point(id, grid.cell_center(pixel)))
}

/// Drops waypoints strictly closer than `min_exclusion`.
pub fn filter_near(waypoints: Vec<Waypoint>, min_exclusion: f64) -> Vec<Waypoint> {
    waypoints
        .into_iter()
        .filter(|w| w.distance >= min_exclusion)
        .collect()
}

/// Degree selection, merging, snapping back onto the skeleton, projection and
/// near-field exclusion. Ids are provisional until the space is assembled.
pub fn generate_waypoints(skeleton: &SkeletonGraph, cfg: &WaypointConfig) -> Vec<Waypoint> {
    let selected = select_by_degree(skeleton, cfg.degree_config);
    let mut pixels: Vec<Pixel> = merge_close(&selected, cfg.merge_radius)
        .into_iter()
        .filter_map(|p| snap_to_mask(p, &skeleton.mask))
        .collect();
    pixels.sort_unstable();
    pixels.dedup();
    let waypoints = pixels
        .into_iter()
        .enumerate()
        .map(|(i, p)| Waypoint::from_agent_point(i, skeleton.grid.cell_center(p)))
        .collect();
    filter_near(waypoints, cfg.min_exclusion)
}

/// Canonical presentation order: ascending |heading|, left before right on
/// equal magnitude, then nearer first.
fn presentation_order(a: &Waypoint, b: &Waypoint) -> std::cmp::Ordering {
    a.heading
        .abs()
        .total_cmp(&b.heading.abs())
        .then(b.heading.total_cmp(&a.heading))
        .then(a.distance.total_cmp(&b.distance))
}

/// Orders the waypoints, assigns ids `0..n`, and asks `provider` to describe
/// each one using the view nearest its heading. An empty input yields the
/// rotate-in-place fallback.
pub fn assemble_decision_space(
    waypoints: &[Waypoint],
    provider: &dyn DescriptionProvider,
    obs: &Observation,
) -> Result<DecisionSpace> {
    let mut ordered: Vec<Waypoint> = if waypoints.is_empty() {
        vec![Waypoint::rotate_in_place(0)]
    } else {
        waypoints.to_vec()
    };
    ordered.sort_by(presentation_order);
    let mut entries = Vec::with_capacity(ordered.len());
    for (id, mut waypoint) in ordered.into_iter().enumerate() {
        waypoint.id = id;
        let view = obs.nearest_view(waypoint.heading);
        let description = provider
            .describe_direction(obs, view, &waypoint)
            .map_err(|e| Error::Waypoint {
                id,
                source: Box::new(e),
            })?;
        entries.push(DecisionEntry {
            waypoint,
            description,
        });
    }
    Ok(DecisionSpace { entries })
}
