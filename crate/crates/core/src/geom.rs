//! Planar geometry shared by the simulator and the planner.
//!
//! Angles are in degrees, counterclockwise-positive. Agent-frame coordinates
//! put +x forward and +y to the left; world coordinates put +x east and +y
//! north, with yaw measured from +x.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

/// Agent position in the world frame plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Degrees, counterclockwise from world +x, in (-180, 180].
    pub yaw: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Maps an agent-frame point (x forward, y left) into the world frame.
    pub fn agent_to_world(&self, p: Point2) -> Point2 {
        let (s, c) = self.yaw.to_radians().sin_cos();
        Point2::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    pub fn world_to_agent(&self, p: Point2) -> Point2 {
        let (s, c) = self.yaw.to_radians().sin_cos();
        let d = p - self.position();
        Point2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }
}

/// Wraps an angle into (-180, 180].
pub fn wrap_degrees(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Polar heading of an agent-frame point, in (-180, 180], 0 = straight ahead.
pub fn heading_of(p: Point2) -> f64 {
    // atan2(-0.0, -1) is -pi; fold it onto +180.
    wrap_degrees(p.y.atan2(p.x).to_degrees())
}
