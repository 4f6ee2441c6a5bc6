//! Zero-shot instruction-following navigation over skeleton-structured waypoints.
//!
//! The pipeline per step is:
//!
//! 1. [`perception`]: depth panorama to an agent-centric navigable raster.
//! 2. [`skeleton`]: morphological thinning of that raster into a one-pixel-wide
//!    graph, with per-pixel 8-neighbour degrees.
//! 3. [`waypoint`]: degree-selected skeleton pixels become polar waypoints, each
//!    paired with a directional description (the decision space).
//! 4. [`regulator`]: a decision provider picks a waypoint, the agent moves, and a
//!    description provider reports progress against the active subtask, closing
//!    the loop.
//!
//! [`simenv`] is a synthetic 2D world that renders depth panoramas and executes
//! motion, [`backends`] holds the provider contracts (scripted oracle, remote
//! HTTP models, record/replay tapes) and [`metrics`] scores episode records.

pub mod backends;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod perception;
pub mod raster;
pub mod regulator;
pub mod simenv;
pub mod skeleton;
pub mod waypoint;

pub use error::{Error, Result};
pub use geom::{Point2, Pose};
