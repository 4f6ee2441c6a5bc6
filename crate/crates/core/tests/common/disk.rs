use skelnav::geom::{Point2, Pose};
use skelnav::perception::{perceive, CameraIntrinsics, OccupancyGrid, PerceptionConfig};
use skelnav::simenv::{MapBuilder, SimWorld};

/// 30 degree tiles with f ~ 1023 px: floor rows at 5 m are about 0.02 m
/// apart, so every cell inside the planning radius receives a return.
pub fn dense_tile() -> CameraIntrinsics {
    CameraIntrinsics {
        width: 548,
        height: 8192,
        ..CameraIntrinsics::panorama_tile()
    }
}

/// Open square floor with a one-cell wall border.
pub fn open_floor(side_m: f64) -> SimWorld {
    MapBuilder::new(side_m, side_m, 0.05)
        .carve_rect(0.05, 0.05, side_m - 0.05, side_m - 0.05)
        .build()
}

/// Circular room of `radius` metres centred in a square map.
pub fn round_room(radius: f64, cell: f64) -> SimWorld {
    let n = ((2.0 * radius + 1.0) / cell).ceil() as usize;
    let c = n as f64 * cell / 2.0;
    let mut occ = vec![true; n * n];
    for r in 0..n {
        for col in 0..n {
            let x = (col as f64 + 0.5) * cell - c;
            let y = (n as f64 - r as f64 - 0.5) * cell - c;
            if (x * x + y * y).sqrt() < radius {
                occ[r * n + col] = false;
            }
        }
    }
    SimWorld::new(n, n, cell, occ).unwrap()
}

/// Farthest navigable distance along each whole-degree azimuth, marching in
/// 5 mm steps through the grid.
pub fn disk_radii(grid: &OccupancyGrid, limit: f64) -> Vec<f64> {
    (0..360)
        .map(|a| {
            let (s, c) = (a as f64).to_radians().sin_cos();
            let mut last = 0.0;
            let mut d = 0.0;
            while d <= limit {
                if let Some((r, col)) = grid.cell_of(Point2::new(d * c, d * s)) {
                    if grid.cells.get(r, col) {
                        last = d;
                    }
                }
                d += 0.005;
            }
            last
        })
        .collect()
}

/// Largest deviation in grid cells between the perceived disk radius and
/// `expected` over all azimuths.
pub fn disk_error_cells(
    world: &SimWorld,
    pose: Pose,
    k: &CameraIntrinsics,
    cfg: &PerceptionConfig,
    expected: f64,
) -> f64 {
    let obs = world.render_panorama(&pose, 12, k).unwrap();
    let grid = perceive(&obs, k, cfg).unwrap();
    disk_radii(&grid, cfg.planning_radius + 0.5)
        .into_iter()
        .map(|r| (r - expected).abs() / cfg.cell_size)
        .fold(0.0, f64::max)
}
