use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimWorld;
use crate::error::{Error, Result};
use crate::geom::Point2;

/// Geodesic distances (metres) from one source cell to every cell.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    height: usize,
    cell_size: f64,
    world_height_m: f64,
    occupied: Vec<bool>,
    dist: Vec<f64>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl DistanceField {
    pub(super) fn compute(world: &SimWorld, (sr, sc): (usize, usize)) -> Self {
        let (w, h) = (world.width, world.height);
        // Dijkstra in cell units; scaled once at the end.
        let mut dist = vec![f64::INFINITY; w * h];
        let mut heap = BinaryHeap::new();
        let start = sr * w + sc;
        dist[start] = 0.0;
        heap.push(Entry(0.0, start));
        let diag = std::f64::consts::SQRT_2;
        while let Some(Entry(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            let (r, c) = ((i / w) as i64, (i % w) as i64);
            for (dr, dc) in [
                (-1, 0),
                (1, 0),
                (0, -1),
                (0, 1),
                (-1, -1),
                (-1, 1),
                (1, -1),
                (1, 1),
            ] {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if world.occupied[j] {
                    continue;
                }
                let cost = if dr != 0 && dc != 0 {
                    // No squeezing between two diagonal walls.
                    if world.occupied[r as usize * w + nc as usize]
                        || world.occupied[nr as usize * w + c as usize]
                    {
                        continue;
                    }
                    diag
                } else {
                    1.0
                };
                let nd = d + cost;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Entry(nd, j));
                }
            }
        }
        for d in &mut dist {
            *d *= world.cell_size;
        }
        Self {
            width: w,
            height: h,
            cell_size: world.cell_size,
            world_height_m: h as f64 * world.cell_size,
            occupied: world.occupied.clone(),
            dist,
        }
    }

    fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let col = (p.x / self.cell_size).floor();
        let row = ((self.world_height_m - p.y) / self.cell_size).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some((row as usize, col as usize))
    }

    /// Distance to a free point; errors if `p` is in a wall or off the map.
    pub fn distance_to(&self, p: Point2) -> Result<f64> {
        match self.cell_of(p) {
            Some((r, c)) if !self.occupied[r * self.width + c] => Ok(self.dist[r * self.width + c]),
            _ => Err(Error::input(format!(
                "point ({:.3}, {:.3}) is not in free space",
                p.x, p.y
            ))),
        }
    }

    /// Like [`distance_to`](Self::distance_to), but a point inside a wall is
    /// first moved to the nearest free cell within `snap_radius` metres.
    pub fn distance_to_snapped(&self, p: Point2, snap_radius: f64) -> f64 {
        if let Ok(d) = self.distance_to(p) {
            return d;
        }
        let reach = (snap_radius / self.cell_size).ceil() as i64;
        let col = (p.x / self.cell_size).floor() as i64;
        let row = ((self.world_height_m - p.y) / self.cell_size).floor() as i64;
        let mut best: Option<(i64, f64)> = None;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (r, c) = (row + dr, col + dc);
                if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
                    continue;
                }
                let i = r as usize * self.width + c as usize;
                let d2 = dr * dr + dc * dc;
                if self.occupied[i] || (d2 as f64).sqrt() > reach as f64 {
                    continue;
                }
                if best.is_none_or(|(bd, bv)| d2 < bd || (d2 == bd && self.dist[i] < bv)) {
                    best = Some((d2, self.dist[i]));
                }
            }
        }
        best.map_or(f64::INFINITY, |(_, v)| v)
    }
}
