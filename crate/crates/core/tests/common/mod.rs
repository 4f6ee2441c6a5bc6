#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelnav::perception::{OccupancyGrid, PerceptionConfig};
use skelnav::raster::Raster;

pub mod disk;
pub mod dtw_oracle;
pub mod mazes;
pub mod spl_cases;
pub mod thin_oracle;

/// Refined-looking 500x500 region: a union of random discs and capsules,
/// hole-filled and cut down to its largest component.
pub fn blob_map(seed: u64) -> Raster {
    let n = 500usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Raster::new(n, n);
    let blobs = rng.random_range(2..7);
    let mut anchor = (250.0f64, 250.0f64);
    for _ in 0..blobs {
        let (ax, ay) = anchor;
        let bx = (ax + rng.random_range(-150.0..150.0)).clamp(20.0, 480.0);
        let by = (ay + rng.random_range(-150.0..150.0)).clamp(20.0, 480.0);
        let rad: f64 = rng.random_range(12.0..70.0);
        // Capsule from anchor to (bx, by).
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = (dx * dx + dy * dy).max(1e-9);
        let r0 = (ax.min(bx) - rad).max(0.0) as usize;
        let r1 = ((ax.max(bx) + rad) as usize).min(n - 1);
        let c0 = (ay.min(by) - rad).max(0.0) as usize;
        let c1 = ((ay.max(by) + rad) as usize).min(n - 1);
        for i in r0..=r1 {
            for j in c0..=c1 {
                let (px, py) = (i as f64 - ax, j as f64 - ay);
                let t = ((px * dx + py * dy) / len2).clamp(0.0, 1.0);
                let (qx, qy) = (px - t * dx, py - t * dy);
                if qx * qx + qy * qy <= rad * rad {
                    r.set(i, j, true);
                }
            }
        }
        anchor = (bx, by);
    }
    r.fill_holes().largest_component()
}

/// Default-geometry grid whose cells are `cells` (which must be 500x500).
pub fn grid_with(cells: Raster) -> OccupancyGrid {
    let g = OccupancyGrid::empty(&PerceptionConfig::default());
    g.with_cells(cells)
}

/// Grid of the smallest default-cell-size geometry that fits `r`, with `r`
/// copied into its top-left corner.
pub fn small_grid(r: &Raster) -> OccupancyGrid {
    let cfg = PerceptionConfig {
        planning_radius: r.rows().max(r.cols()) as f64 * 0.01 + 0.02,
        ..Default::default()
    };
    let g = OccupancyGrid::empty(&cfg);
    let mut cells = Raster::new(g.rows(), g.cols());
    for (i, j) in r.pixels() {
        cells.set(i, j, true);
    }
    g.with_cells(cells)
}

/// Plain 8-neighbour count, straight from the definition.
pub fn degree_of(r: &Raster, i: usize, j: usize) -> u8 {
    let mut n = 0;
    for di in -1i64..=1 {
        for dj in -1i64..=1 {
            if (di, dj) != (0, 0) && r.get_signed(i as isize + di as isize, j as isize + dj as isize) {
                n += 1;
            }
        }
    }
    n
}
