//! Depth panorama to agent-centric navigable raster.
//!
//! Frame conventions. A depth frame is a pinhole image with the principal
//! point at the image centre and square pixels; `depth` is planar (distance
//! along the optical axis). In camera coordinates the ray through pixel
//! `(u, v)` is `(right, down, forward) = ((u + 0.5 - w/2) / f, (v + 0.5 - h/2) / f, 1)`.
//! The agent frame is z-up: `x = forward`, `y = -right` (left positive),
//! `z = -down`, measured from the camera centre, so the floor sits at
//! `z = -camera_height`. A camera `y`-up convention (horizontal plane = x-z)
//! maps onto this one by `(x_cam, y_cam, z_cam) -> (z_cam, -x_cam, y_cam)`.
//! Each frame is then rotated by its view heading, counterclockwise about z.

mod frame_io;
mod smoothing;

pub use frame_io::{read_depth_frame, write_depth_frame};
pub use smoothing::{gaussian_kernel, gaussian_sigma_for_kernel, smooth_binary};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point2, Pose};
use crate::raster::{Pixel, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    /// Degrees.
    pub horizontal_fov: f64,
    /// Metres above the floor.
    pub camera_height: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            horizontal_fov: 90.0,
            camera_height: 1.25,
        }
    }
}

impl CameraIntrinsics {
    /// Tall, narrow frames that tile a 12-view panorama edge to edge. The
    /// focal length (~256 px) keeps floor sampling dense out to ~3.5 m, and
    /// the ~76 degree downward half-FOV sees the floor from ~0.3 m, so the
    /// blind spot under the camera cannot split a 1 m corridor in two.
    pub fn panorama_tile() -> Self {
        Self {
            width: 137,
            height: 2048,
            horizontal_fov: 30.0,
            camera_height: 1.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::input("intrinsics: width and height must be > 0"));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < 180.0) {
            return Err(Error::input("intrinsics: horizontal_fov must lie in (0, 180)"));
        }
        if !(self.camera_height > 0.0) {
            return Err(Error::input("intrinsics: camera_height must be > 0"));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        self.width as f64 / 2.0 / (self.horizontal_fov.to_radians() / 2.0).tan()
    }

    /// Normalised image-plane coordinates of a pixel centre: (right, down).
    pub fn ray_slopes(&self, u: usize, v: usize) -> (f64, f64) {
        let f = self.focal();
        (
            (u as f64 + 0.5 - self.width as f64 / 2.0) / f,
            (v as f64 + 0.5 - self.height as f64 / 2.0) / f,
        )
    }
}

/// Planar depth in metres, row-major. Values that are not finite and
/// strictly positive mean "no return" and are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

/// Depth written for pixels whose ray hits nothing.
pub const NO_RETURN: f32 = 0.0;

impl DepthFrame {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![NO_RETURN; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, depth: f32) -> Self {
        Self {
            width,
            height,
            data: vec![depth; width * height],
        }
    }

    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, d: f32) {
        self.data[v * self.width + u] = d;
    }
}

pub fn is_valid_depth(d: f32) -> bool {
    d.is_finite() && d > 0.0
}

/// One timestep's panoramic sensor bundle.
#[derive(Debug, Clone, Default)]
pub struct Observation {
    pub frames: Vec<DepthFrame>,
    /// View headings in degrees relative to agent forward, counterclockwise.
    pub headings: Vec<f64>,
    pub timestep: usize,
    /// Ground-truth pose, filled in by the simulator. Only scripted oracle
    /// providers read it.
    pub pose: Option<Pose>,
    /// Optional RGB views aligned with `frames`.
    pub rgb: Option<Vec<RgbImage>>,
}

impl Observation {
    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::input("observation has no frames"));
        }
        if self.frames.len() != self.headings.len() {
            return Err(Error::input(format!(
                "observation has {} frames but {} headings",
                self.frames.len(),
                self.headings.len()
            )));
        }
        if let Some(rgb) = &self.rgb {
            if rgb.len() != self.frames.len() {
                return Err(Error::input("rgb view count differs from depth frame count"));
            }
        }
        if self.headings.len() > 1 {
            let spacing = self.headings[1] - self.headings[0];
            if !(spacing > 0.0) {
                return Err(Error::input("view headings must be strictly increasing"));
            }
            for w in self.headings.windows(2) {
                if ((w[1] - w[0]) - spacing).abs() > 1e-9 {
                    return Err(Error::input("view headings must be evenly spaced"));
                }
            }
        }
        Ok(())
    }

    /// Index of the view whose heading is angularly nearest `heading_deg`.
    /// Ties go to the lower index.
    pub fn nearest_view(&self, heading_deg: f64) -> usize {
        let mut best = 0;
        let mut best_gap = f64::INFINITY;
        for (i, &h) in self.headings.iter().enumerate() {
            let gap = crate::geom::wrap_degrees(heading_deg - h).abs();
            if gap < best_gap - 1e-12 {
                best = i;
                best_gap = gap;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Agent-centric points: x forward, y left, z up from the camera centre.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceptionConfig {
    /// Points strictly below this height (metres, camera-relative) are kept.
    pub height_threshold: f64,
    /// Metres; also fixes the grid extent at 2r x 2r.
    pub planning_radius: f64,
    /// Metres per cell.
    pub cell_size: f64,
    /// Gaussian kernel width in cells; odd.
    pub smoothing_kernel: usize,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            height_threshold: -1.0,
            planning_radius: 5.0,
            cell_size: 0.02,
            smoothing_kernel: 75,
        }
    }
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) {
            return Err(Error::input("perception: cell_size must be > 0"));
        }
        if !(self.planning_radius > 0.0) {
            return Err(Error::input("perception: planning_radius must be > 0"));
        }
        if self.smoothing_kernel == 0 || self.smoothing_kernel % 2 == 0 {
            return Err(Error::input("perception: smoothing_kernel must be odd and >= 1"));
        }
        if !self.height_threshold.is_finite() {
            return Err(Error::input("perception: height_threshold must be finite"));
        }
        Ok(())
    }
}

/// Agent-centric traversability raster.
///
/// Row 0 is the far-forward edge and column 0 the far-left edge, so the
/// raster reads like a top-down map with the agent facing up. `origin` is the
/// agent-frame position of the outer corner of cell (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub cells: Raster,
    pub cell_size: f64,
    pub origin: Point2,
    pub agent_cell: Pixel,
}

impl OccupancyGrid {
    /// An all-false grid spanning 2r x 2r around the agent. The side is an
    /// even number of cells so cell edges always fall on multiples of
    /// `cell_size` from the agent.
    pub fn empty(cfg: &PerceptionConfig) -> Self {
        let half = (cfg.planning_radius / cfg.cell_size - 1e-9).ceil().max(1.0) as usize;
        let n = 2 * half;
        let extent = half as f64 * cfg.cell_size;
        Self {
            cells: Raster::new(n, n),
            cell_size: cfg.cell_size,
            origin: Point2::new(extent, extent),
            agent_cell: (half, half),
        }
    }

    pub fn rows(&self) -> usize {
        self.cells.rows()
    }

    pub fn cols(&self) -> usize {
        self.cells.cols()
    }

    /// Agent-frame centre of a cell.
    pub fn cell_center(&self, (r, c): Pixel) -> Point2 {
        Point2::new(
            self.origin.x - (r as f64 + 0.5) * self.cell_size,
            self.origin.y - (c as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_of(&self, p: Point2) -> Option<Pixel> {
        let r = ((self.origin.x - p.x) / self.cell_size).floor();
        let c = ((self.origin.y - p.y) / self.cell_size).floor();
        if r < 0.0 || c < 0.0 || r >= self.rows() as f64 || c >= self.cols() as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Marks the cells of every point that passes the height and radius filter.
    pub fn accumulate(&mut self, cloud: &PointCloud, cfg: &PerceptionConfig) {
        for p in &cloud.points {
            if p.z < cfg.height_threshold && p.x.hypot(p.y) < cfg.planning_radius {
                if let Some((r, c)) = self.cell_of(Point2::new(p.x, p.y)) {
                    self.cells.set(r, c, true);
                }
            }
        }
    }

    pub fn with_cells(&self, cells: Raster) -> Self {
        Self {
            cells,
            ..self.clone()
        }
    }
}

/// Back-projects one depth frame into the agent frame.
pub fn depth_to_pointcloud(
    frame: &DepthFrame,
    heading_deg: f64,
    intrinsics: &CameraIntrinsics,
) -> Result<PointCloud> {
    intrinsics.validate()?;
    if frame.width != intrinsics.width || frame.height != intrinsics.height {
        return Err(Error::input(format!(
            "depth frame is {}x{}, intrinsics expect {}x{}",
            frame.width, frame.height, intrinsics.width, intrinsics.height
        )));
    }
    if frame.data.len() != frame.width * frame.height {
        return Err(Error::input("depth frame data length does not match its dimensions"));
    }
    let (sin_h, cos_h) = heading_deg.to_radians().sin_cos();
    let f = intrinsics.focal();
    let cx = frame.width as f64 / 2.0;
    let cy = frame.height as f64 / 2.0;
    let mut points = Vec::new();
    for v in 0..frame.height {
        let down = (v as f64 + 0.5 - cy) / f;
        let row = &frame.data[v * frame.width..(v + 1) * frame.width];
        for (u, &d) in row.iter().enumerate() {
            if !is_valid_depth(d) {
                continue;
            }
            let d = d as f64;
            let right = (u as f64 + 0.5 - cx) / f;
            let fwd = d;
            let left = -d * right;
            points.push(Point3 {
                x: cos_h * fwd - sin_h * left,
                y: sin_h * fwd + cos_h * left,
                z: -d * down,
            });
        }
    }
    Ok(PointCloud { points })
}

/// Union of the per-view clouds. Duplicates are kept.
pub fn merge_panorama(obs: &Observation, intrinsics: &CameraIntrinsics) -> Result<PointCloud> {
    obs.validate()?;
    let mut merged = PointCloud::default();
    for (frame, &heading) in obs.frames.iter().zip(&obs.headings) {
        merged
            .points
            .extend(depth_to_pointcloud(frame, heading, intrinsics)?.points);
    }
    Ok(merged)
}

/// Keeps points below the height threshold and inside the planning radius,
/// then projects them top-down onto the grid.
pub fn extract_navigable_region(cloud: &PointCloud, cfg: &PerceptionConfig) -> OccupancyGrid {
    let mut grid = OccupancyGrid::empty(cfg);
    grid.accumulate(cloud, cfg);
    grid
}

/// Hole filling, Gaussian smoothing, re-binarisation at 0.5, then the
/// largest 8-connected component.
pub fn refine_region(grid: &OccupancyGrid, cfg: &PerceptionConfig) -> OccupancyGrid {
    if grid.cells.is_empty() {
        return grid.clone();
    }
    let filled = grid.cells.fill_holes();
    let smoothed = smooth_binary(&filled, cfg.smoothing_kernel);
    grid.with_cells(smoothed.largest_component())
}

/// Full per-step perception: every view is projected straight into the grid
/// (no merged cloud is materialised), then refined.
pub fn perceive(
    obs: &Observation,
    intrinsics: &CameraIntrinsics,
    cfg: &PerceptionConfig,
) -> Result<OccupancyGrid> {
    cfg.validate()?;
    obs.validate()?;
    let mut grid = OccupancyGrid::empty(cfg);
    for (frame, &heading) in obs.frames.iter().zip(&obs.headings) {
        grid.accumulate(&depth_to_pointcloud(frame, heading, intrinsics)?, cfg);
    }
    Ok(refine_region(&grid, cfg))
}
