//! Synthetic continuous 2D world: occupancy bitmap, ray-cast depth panoramas,
//! collision-clamped motion and perturbation hooks.
//!
//! The bitmap is row-major with row 0 along the north edge. World metres put
//! the south-west corner at the origin, +x east, +y north.

mod bundle;
mod builder;
mod geodesic;

pub use bundle::{read_pgm, write_pgm, MapBundle};
pub use builder::MapBuilder;
pub use geodesic::DistanceField;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{wrap_degrees, Point2, Pose};
use crate::perception::{CameraIntrinsics, DepthFrame, Observation, NO_RETURN};

pub const DEFAULT_WALL_HEIGHT: f64 = 2.5;
pub const DEFAULT_AGENT_RADIUS: f64 = 0.2;

/// Named polygonal area, used for oracle descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub polygon: Vec<Point2>,
}

impl Region {
    pub fn contains(&self, p: Point2) -> bool {
        let poly = &self.polygon;
        let mut inside = false;
        let mut j = poly.len().wrapping_sub(1);
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub label: String,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimWorld {
    width: usize,
    height: usize,
    cell_size: f64,
    /// true = wall.
    occupied: Vec<bool>,
    pub wall_height: f64,
    pub agent_radius: f64,
    pub regions: Vec<Region>,
    pub objects: Vec<SceneObject>,
}

/// One closed-loop motion command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    /// Degrees, counterclockwise.
    pub rotate: f64,
    /// Metres along the new heading.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: String,
    pub start: Pose,
    pub goal: Point2,
    pub instruction: String,
    /// One target per instruction clause, for oracle providers.
    #[serde(default)]
    pub subtask_hints: Vec<Point2>,
    pub reference_path: Vec<Point2>,
}

impl EpisodeSpec {
    pub fn validate(&self, world: &SimWorld) -> Result<()> {
        if !world.is_free(self.start.position()) {
            return Err(Error::input(format!("episode {}: start is not in free space", self.id)));
        }
        if !world.is_free(self.goal) {
            return Err(Error::input(format!("episode {}: goal is not in free space", self.id)));
        }
        let (Some(first), Some(last)) = (self.reference_path.first(), self.reference_path.last())
        else {
            return Err(Error::input(format!("episode {}: empty reference path", self.id)));
        };
        if first.dist(self.start.position()) > 1e-6 || last.dist(self.goal) > 1e-6 {
            return Err(Error::input(format!(
                "episode {}: reference path must run from start to goal",
                self.id
            )));
        }
        if self.instruction.trim().is_empty() {
            return Err(Error::input(format!("episode {}: empty instruction", self.id)));
        }
        Ok(())
    }
}

impl SimWorld {
    pub fn new(width: usize, height: usize, cell_size: f64, occupied: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input("world bitmap must be nonempty"));
        }
        if !(cell_size > 0.0) {
            return Err(Error::input("world cell_size must be > 0"));
        }
        if occupied.len() != width * height {
            return Err(Error::input("world bitmap length does not match its dimensions"));
        }
        Ok(Self {
            width,
            height,
            cell_size,
            occupied,
            wall_height: DEFAULT_WALL_HEIGHT,
            agent_radius: DEFAULT_AGENT_RADIUS,
            regions: Vec::new(),
            objects: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn extent(&self) -> Point2 {
        Point2::new(self.width as f64 * self.cell_size, self.height as f64 * self.cell_size)
    }

    /// (row, col) of the cell containing `p`, if inside the map.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let col = (p.x / self.cell_size).floor();
        let row = ((self.height as f64 * self.cell_size - p.y) / self.cell_size).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some((row as usize, col as usize))
    }

    pub fn cell_center(&self, (row, col): (usize, usize)) -> Point2 {
        Point2::new(
            (col as f64 + 0.5) * self.cell_size,
            (self.height as f64 - row as f64 - 0.5) * self.cell_size,
        )
    }

    pub fn is_occupied_cell(&self, row: usize, col: usize) -> bool {
        self.occupied[row * self.width + col]
    }

    pub fn is_free(&self, p: Point2) -> bool {
        self.cell_of(p)
            .is_some_and(|(r, c)| !self.is_occupied_cell(r, c))
    }

    pub fn region_at(&self, p: Point2) -> Option<&str> {
        self.regions
            .iter()
            .find(|r| r.contains(p))
            .map(|r| r.label.as_str())
    }

    /// Distance from `origin` along `angle_deg` to the first wall cell or the
    /// map edge, capped at `max_range`. Zero if `origin` is itself blocked.
    pub fn raycast(&self, origin: Point2, angle_deg: f64, max_range: f64) -> f64 {
        let (sin, cos) = angle_deg.to_radians().sin_cos();
        // Grid space: u along columns (east), w along rows (south).
        let u0 = origin.x / self.cell_size;
        let w0 = (self.height as f64 * self.cell_size - origin.y) / self.cell_size;
        let (du, dw) = (cos, -sin);
        let mut col = u0.floor() as i64;
        let mut row = w0.floor() as i64;
        let blocked = |row: i64, col: i64| {
            row < 0
                || col < 0
                || row >= self.height as i64
                || col >= self.width as i64
                || self.occupied[row as usize * self.width + col as usize]
        };
        if blocked(row, col) {
            return 0.0;
        }
        let max_t = max_range / self.cell_size;
        let step_col: i64 = if du > 0.0 { 1 } else { -1 };
        let step_row: i64 = if dw > 0.0 { 1 } else { -1 };
        let t_delta_u = if du != 0.0 { 1.0 / du.abs() } else { f64::INFINITY };
        let t_delta_w = if dw != 0.0 { 1.0 / dw.abs() } else { f64::INFINITY };
        let mut t_max_u = if du > 0.0 {
            (col as f64 + 1.0 - u0) * t_delta_u
        } else if du < 0.0 {
            (u0 - col as f64) * t_delta_u
        } else {
            f64::INFINITY
        };
        let mut t_max_w = if dw > 0.0 {
            (row as f64 + 1.0 - w0) * t_delta_w
        } else if dw < 0.0 {
            (w0 - row as f64) * t_delta_w
        } else {
            f64::INFINITY
        };
        loop {
            let t = if t_max_u < t_max_w {
                col += step_col;
                let t = t_max_u;
                t_max_u += t_delta_u;
                t
            } else {
                row += step_row;
                let t = t_max_w;
                t_max_w += t_delta_w;
                t
            };
            if t >= max_t {
                return max_range;
            }
            if blocked(row, col) {
                return t * self.cell_size;
            }
        }
    }

    fn require_free(&self, p: Point2, what: &str) -> Result<()> {
        if self.is_free(p) {
            Ok(())
        } else {
            Err(Error::input(format!("{what} ({:.3}, {:.3}) is not in free space", p.x, p.y)))
        }
    }

    /// Renders `n_views` depth frames at `360 / n_views` spacing.
    ///
    /// Each column casts one horizontal ray to find the wall range; each
    /// pixel then takes the nearer of its floor-plane and wall intersections.
    /// Rays that clear the wall top with no floor hit get [`NO_RETURN`].
    pub fn render_panorama(
        &self,
        pose: &Pose,
        n_views: usize,
        intrinsics: &CameraIntrinsics,
    ) -> Result<Observation> {
        intrinsics.validate()?;
        if n_views == 0 || 360 % n_views != 0 {
            return Err(Error::input(format!("n_views {n_views} must divide 360")));
        }
        self.require_free(pose.position(), "pose")?;
        let spacing = 360.0 / n_views as f64;
        let headings: Vec<f64> = (0..n_views).map(|i| i as f64 * spacing).collect();
        let f = intrinsics.focal();
        let (w, h) = (intrinsics.width, intrinsics.height);
        let cam_h = intrinsics.camera_height;
        let headroom = self.wall_height - cam_h;
        let max_range = self.extent().norm() + self.cell_size;
        let slopes: Vec<f64> = (0..h).map(|v| (v as f64 + 0.5 - h as f64 / 2.0) / f).collect();

        let frames = headings
            .iter()
            .map(|&heading| {
                let mut frame = DepthFrame::new(w, h);
                for u in 0..w {
                    let t_u = (u as f64 + 0.5 - w as f64 / 2.0) / f;
                    let angle = pose.yaw + heading - t_u.atan().to_degrees();
                    let range = self.raycast(pose.position(), angle, max_range);
                    let d_wall = range / (1.0 + t_u * t_u).sqrt();
                    for (v, &s) in slopes.iter().enumerate() {
                        let depth = if s > 0.0 {
                            (cam_h / s).min(d_wall)
                        } else if -d_wall * s <= headroom {
                            d_wall
                        } else {
                            NO_RETURN as f64
                        };
                        frame.data[v * w + u] = depth as f32;
                    }
                }
                frame
            })
            .collect();

        Ok(Observation {
            frames,
            headings,
            timestep: 0,
            pose: Some(*pose),
            rgb: None,
        })
    }

    /// Rotates, then translates along the new heading by the requested
    /// distance or up to `agent_radius` short of the first wall, whichever is
    /// less.
    pub fn step(&self, pose: &Pose, action: &Action) -> Pose {
        let yaw = wrap_degrees(pose.yaw + action.rotate);
        let travel = self.clamped_travel(pose.position(), yaw, action.distance);
        let (s, c) = yaw.to_radians().sin_cos();
        Pose::new(pose.x + travel * c, pose.y + travel * s, yaw)
    }

    fn clamped_travel(&self, from: Point2, angle_deg: f64, requested: f64) -> f64 {
        if !(requested > 0.0) {
            return 0.0;
        }
        let free = self.raycast(from, angle_deg, requested + self.agent_radius + self.cell_size);
        requested.min((free - self.agent_radius).max(0.0))
    }

    /// Displaces the agent by `magnitude` in a seeded random direction whose
    /// straight segment (plus agent radius) is free. After 16 rejected
    /// directions the agent moves along the first one as far as free space
    /// allows.
    pub fn inject_perturbation(&self, pose: &Pose, magnitude: f64, seed: u64) -> Result<Pose> {
        if !(magnitude >= 0.0) {
            return Err(Error::input("perturbation magnitude must be >= 0"));
        }
        if magnitude == 0.0 {
            return Ok(*pose);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut first = None;
        let needed = magnitude + self.agent_radius;
        for _ in 0..16 {
            let angle: f64 = rng.random_range(0.0..360.0);
            first.get_or_insert(angle);
            if self.raycast(pose.position(), angle, needed + self.cell_size) >= needed {
                let (s, c) = angle.to_radians().sin_cos();
                return Ok(Pose::new(pose.x + magnitude * c, pose.y + magnitude * s, pose.yaw));
            }
        }
        let angle = first.expect("at least one sample");
        let travel = self.clamped_travel(pose.position(), angle, magnitude);
        let (s, c) = angle.to_radians().sin_cos();
        Ok(Pose::new(pose.x + travel * c, pose.y + travel * s, pose.yaw))
    }

    /// Shortest 8-connected path length over free cells (no corner cutting),
    /// `f64::INFINITY` when disconnected.
    pub fn geodesic_distance(&self, a: Point2, b: Point2) -> Result<f64> {
        self.require_free(b, "geodesic target")?;
        self.distance_field(a)?.distance_to(b)
    }

    /// Single-source geodesic field rooted at `source`.
    pub fn distance_field(&self, source: Point2) -> Result<DistanceField> {
        self.require_free(source, "geodesic source")?;
        Ok(DistanceField::compute(self, self.cell_of(source).expect("free implies inside")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 10 m x 6 m room with 0.05 m cells and a one-cell wall border.
    fn room() -> SimWorld {
        MapBuilder::new(10.0, 6.0, 0.05).carve_rect(0.05, 0.05, 9.95, 5.95).build()
    }

    #[test]
    fn raycast_hits_wall_face() {
        let w = room();
        let d = w.raycast(Point2::new(2.0, 3.0), 0.0, 100.0);
        assert!((d - 7.95).abs() < 1e-9, "{d}");
        let d = w.raycast(Point2::new(2.0, 3.0), 90.0, 100.0);
        assert!((d - 2.95).abs() < 1e-9, "{d}");
        assert_eq!(w.raycast(Point2::new(2.0, 3.0), 0.0, 1.0), 1.0);
    }

    #[test]
    fn centre_pixel_sees_wall_distance() {
        let w = room();
        let k = CameraIntrinsics {
            width: 33,
            height: 33,
            horizontal_fov: 90.0,
            camera_height: 1.25,
        };
        // Wall face at x = 9.95, agent at x = 6.95: 3 m ahead.
        let obs = w.render_panorama(&Pose::new(6.95, 3.0, 0.0), 12, &k).unwrap();
        let d = obs.frames[0].get(16, 16);
        assert!((d - 3.0).abs() < 1e-5, "{d}");
        assert_eq!(obs.headings.len(), 12);
        assert_eq!(obs.headings[1], 30.0);

        let six = w.render_panorama(&Pose::new(6.95, 3.0, 0.0), 6, &k).unwrap();
        assert_eq!(six.frames.len(), 6);
        assert_eq!(six.headings[1], 60.0);
        assert!(w.render_panorama(&Pose::new(6.95, 3.0, 0.0), 7, &k).is_err());
        assert!(w.render_panorama(&Pose::new(0.01, 0.01, 0.0), 12, &k).is_err());
    }

    #[test]
    fn step_clamps_before_wall() {
        let w = room();
        // Wall face at x = 9.95; start 0.5 m short of it.
        let p = w.step(&Pose::new(9.45, 3.0, 0.0), &Action { rotate: 0.0, distance: 2.0 });
        assert!((p.x - 9.75).abs() < 1e-9, "{}", p.x);
        let free = w.step(&Pose::new(2.0, 3.0, 0.0), &Action { rotate: 0.0, distance: 1.0 });
        assert_eq!((free.x, free.y), (3.0, 3.0));
        let spin = w.step(&Pose::new(2.0, 3.0, 0.0), &Action { rotate: 90.0, distance: 0.0 });
        assert_eq!((spin.x, spin.y, spin.yaw), (2.0, 3.0, 90.0));
    }

    #[test]
    fn perturbation_exact_when_unobstructed() {
        let w = room();
        let pose = Pose::new(5.0, 3.0, 10.0);
        assert_eq!(w.inject_perturbation(&pose, 0.0, 7).unwrap(), pose);
        let a = w.inject_perturbation(&pose, 0.5, 7).unwrap();
        let b = w.inject_perturbation(&pose, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.position().dist(pose.position()) - 0.5).abs() < 1e-12);
        assert_eq!(a.yaw, pose.yaw);
        assert!(w.inject_perturbation(&pose, -1.0, 7).is_err());
    }

    #[test]
    fn perturbation_in_alcove_falls_back_to_free_point() {
        // 0.3 m square pocket: no direction has 0.5 m + radius of clearance.
        let w = MapBuilder::new(2.0, 2.0, 0.05).carve_rect(0.85, 0.85, 1.15, 1.15).build();
        let pose = Pose::new(1.0, 1.0, 0.0);
        let p = w.inject_perturbation(&pose, 0.5, 3).unwrap();
        assert!(w.is_free(p.position()));
        assert!(p.position().dist(pose.position()) < 0.5);
    }

    #[test]
    fn geodesic_basics() {
        let w = room();
        let a = Point2::new(2.025, 3.025);
        assert_eq!(w.geodesic_distance(a, a).unwrap(), 0.0);
        let d = w.geodesic_distance(a, Point2::new(6.025, 3.025)).unwrap();
        assert!((d - 4.0).abs() <= w.cell_size(), "{d}");
        assert!(w.geodesic_distance(Point2::new(0.01, 0.01), a).is_err());

        let split = MapBuilder::new(4.0, 2.0, 0.1)
            .carve_rect(0.1, 0.1, 1.9, 1.9)
            .carve_rect(2.1, 0.1, 3.9, 1.9)
            .build();
        let d = split
            .geodesic_distance(Point2::new(1.0, 1.0), Point2::new(3.0, 1.0))
            .unwrap();
        assert!(d.is_infinite());
    }

    #[test]
    fn region_lookup() {
        let mut w = room();
        w.regions.push(Region {
            label: "hallway".into(),
            polygon: vec![
                Point2::new(0.0, 0.0),
                Point2::new(5.0, 0.0),
                Point2::new(5.0, 6.0),
                Point2::new(0.0, 6.0),
            ],
        });
        assert_eq!(w.region_at(Point2::new(1.0, 1.0)), Some("hallway"));
        assert_eq!(w.region_at(Point2::new(7.0, 1.0)), None);
    }
}
