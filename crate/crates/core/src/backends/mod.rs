//! Model provider contracts and their implementations.
//!
//! A [`DescriptionProvider`] stands in for the vision-language model: it
//! describes the panorama, describes the view towards each waypoint, and
//! compares before/after views against the active subtask. A
//! [`DecisionProvider`] stands in for the language model: it splits the
//! instruction into subtasks and picks a waypoint.
//!
//! Implementations: [`oracle`] (scripted, reads simulator ground truth),
//! [`remote`] (HTTP chat-completions endpoint behind an injectable
//! [`remote::Transport`]) and [`tape`] (record any provider's outputs and
//! replay them later).

mod compose;
pub mod oracle;
pub mod prompts;
pub mod remote;
pub mod tape;

pub use compose::{compose_feedback_image, compose_panorama_grid};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::Pose;
use crate::perception::Observation;
use crate::regulator::{Feedback, HistoryEntry, Subtask};
use crate::waypoint::{DecisionSpace, Waypoint};

/// A decision provider's pick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub id: usize,
    pub explanation: String,
}

/// Inputs for post-action feedback.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackRequest<'a> {
    pub before: &'a Observation,
    pub after: &'a Observation,
    /// View of `before` aligned with the chosen waypoint.
    pub before_view: usize,
    /// Front-facing view of `after`.
    pub after_view: usize,
    pub subtask: &'a Subtask,
    pub chosen: &'a Waypoint,
}

/// Inputs for one waypoint decision.
#[derive(Debug, Clone, Copy)]
pub struct DecisionRequest<'a> {
    pub space: &'a DecisionSpace,
    pub feedback: &'a Feedback,
    pub instruction: &'a str,
    pub history: &'a [HistoryEntry],
    pub subtask: &'a Subtask,
    /// Panorama-level scene summary, if one was produced this step.
    pub scene: Option<&'a str>,
    /// Ground-truth pose; only scripted oracles use it.
    pub pose: Option<Pose>,
}

pub trait DescriptionProvider: Send + Sync {
    fn describe_panorama(&self, obs: &Observation) -> Result<String>;

    fn describe_direction(&self, obs: &Observation, view_index: usize, waypoint: &Waypoint)
        -> Result<String>;

    fn compare(&self, request: &FeedbackRequest<'_>) -> Result<Feedback>;
}

pub trait DecisionProvider: Send + Sync {
    fn decompose(&self, instruction: &str) -> Result<Vec<String>>;

    fn choose(&self, request: &DecisionRequest<'_>) -> Result<Choice>;
}
