//! The closed decision-feedback loop.
//!
//! Each step: render the panorama, extract the navigable region, skeletonize,
//! build the decision space, let the decision provider pick a waypoint, act,
//! then ask the description provider how the move changed progress on the
//! active subtask. The episode always runs `max(|subtasks|, min_steps)` steps.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::oracle::FEEDBACK_NONE;
use crate::backends::{Choice, DecisionProvider, DecisionRequest, DescriptionProvider, FeedbackRequest};
use crate::error::{Error, Result};
use crate::geom::{Point2, Pose};
use crate::perception::{perceive, CameraIntrinsics, Observation, PerceptionConfig};
use crate::simenv::{Action, DistanceField, EpisodeSpec, SimWorld};
use crate::skeleton::skeletonize;
use crate::waypoint::{
    assemble_decision_space, generate_waypoints, DecisionEntry, DecisionEntryJson, DecisionSpace, Waypoint,
    WaypointConfig,
};

/// Geodesic radius (metres) around a subtask hint that counts as reaching it.
pub const ADVANCE_RADIUS: f64 = 1.5;
/// Snap radius for geodesic lookups of positions that graze a wall.
const SNAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub index: usize,
    pub text: String,
    /// World-frame target, for oracle providers only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_hint: Option<Point2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Advanced,
    Regressed,
    Unclear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub text: String,
    pub subtask_index: usize,
    pub verdict: Verdict,
    /// Set when a remote describer declares the subtask done.
    #[serde(default)]
    pub subtask_complete: bool,
}

impl Feedback {
    /// Feedback shown before the first action.
    pub fn initial() -> Self {
        Self {
            text: FEEDBACK_NONE.to_string(),
            subtask_index: 0,
            verdict: Verdict::Unclear,
            subtask_complete: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub timestep: usize,
    pub chosen_id: usize,
    pub explanation: String,
}

/// Mid-trajectory displacement used by the robustness protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub magnitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub min_steps: usize,
    pub n_views: usize,
    pub perception: PerceptionConfig,
    pub waypoint: WaypointConfig,
    pub intrinsics: CameraIntrinsics,
    /// Applied once, after the action of step `max_steps / 2` (at least 1).
    pub perturbation: Option<PerturbationConfig>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            min_steps: 6,
            n_views: 12,
            perception: PerceptionConfig::default(),
            waypoint: WaypointConfig::default(),
            intrinsics: CameraIntrinsics::panorama_tile(),
            perturbation: None,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_steps < 1 {
            return Err(Error::input("min_steps must be >= 1"));
        }
        if self.n_views < 1 || 360 % self.n_views != 0 {
            return Err(Error::input(format!("n_views {} must divide 360", self.n_views)));
        }
        if let Some(p) = &self.perturbation {
            if !(p.magnitude >= 0.0 && p.magnitude.is_finite()) {
                return Err(Error::input("perturbation magnitude must be finite and >= 0"));
            }
        }
        self.perception.validate()?;
        self.waypoint.validate()?;
        self.intrinsics.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub describer: &'a dyn DescriptionProvider,
    pub decider: &'a dyn DecisionProvider,
}

/// One call again on a retryable error, then give up.
fn retry_once<T>(mut f: impl FnMut() -> Result<T>) -> Result<T> {
    match f() {
        Err(e) if e.is_retryable() => f(),
        r => r,
    }
}

/// Splits `instruction` into subtasks. Hints are attached by position, with
/// the last subtask always bound to the last hint (the goal).
pub fn decompose(
    instruction: &str,
    provider: &dyn DecisionProvider,
    hints: &[Point2],
) -> Result<Vec<Subtask>> {
    if instruction.trim().is_empty() {
        return Err(Error::input("empty instruction"));
    }
    let texts = retry_once(|| {
        let t = provider.decompose(instruction)?;
        if t.is_empty() {
            Err(Error::Protocol("provider returned no subtasks".into()))
        } else {
            Ok(t)
        }
    })?;
    let n = texts.len();
    Ok(texts
        .into_iter()
        .enumerate()
        .map(|(index, text)| {
            let target_hint = match hints.len() {
                0 => None,
                h if index + 1 == n => Some(hints[h - 1]),
                h => Some(hints[index.min(h - 1)]),
            };
            Subtask {
                index,
                text,
                target_hint,
            }
        })
        .collect())
}

pub fn max_steps(subtasks: &[Subtask], cfg: &EpisodeConfig) -> usize {
    subtasks.len().max(cfg.min_steps)
}

pub fn generate_feedback(
    before: &Observation,
    after: &Observation,
    subtask: &Subtask,
    chosen: &Waypoint,
    provider: &dyn DescriptionProvider,
) -> Result<Feedback> {
    before.validate()?;
    after.validate()?;
    let req = FeedbackRequest {
        before,
        after,
        before_view: before.nearest_view(chosen.heading),
        after_view: after.nearest_view(0.0),
        subtask,
        chosen,
    };
    retry_once(|| provider.compare(&req))
}

/// Asks the provider for a choice and checks it against the space. One retry
/// on timeouts and contract violations.
pub fn select_waypoint(req: &DecisionRequest<'_>, provider: &dyn DecisionProvider) -> Result<Choice> {
    if req.space.is_empty() {
        return Err(Error::input("empty decision space"));
    }
    retry_once(|| {
        let c = provider.choose(req)?;
        if req.space.get(c.id).is_none() {
            return Err(Error::Protocol(format!("chosen id {} not in {:?}", c.id, req.space.ids())));
        }
        if c.explanation.trim().is_empty() {
            return Err(Error::Protocol("empty explanation".into()));
        }
        Ok(c)
    })
}

pub fn to_action(w: &Waypoint) -> Action {
    Action {
        rotate: w.heading,
        distance: w.distance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub episode_id: String,
    pub instruction: String,
    pub subtasks: Vec<Subtask>,
    pub config_hash: String,
    pub config: EpisodeConfig,
    pub start: Pose,
    pub goal: Point2,
    pub reference_path: Vec<Point2>,
    pub max_steps: usize,
    /// Geodesic start-to-goal distance; `None` when unreachable.
    pub geodesic_start: Option<f64>,
    /// Reason the episode stopped early, if it did.
    pub failed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub subtask_index: usize,
    pub decision_space: Vec<DecisionEntryJson>,
    pub chosen_id: usize,
    pub explanation: String,
    pub action: Action,
    /// Pose after the action.
    pub pose: Pose,
    /// Pose after a perturbation applied at the end of this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbed: Option<Pose>,
    pub feedback: Feedback,
    /// True for rotate-in-place steps (empty skeleton or all subtasks done).
    pub fallback: bool,
    /// Geodesic distance from the final pose of the step to the goal.
    pub geodesic_to_goal: Option<f64>,
}

impl StepRecord {
    pub fn final_pose(&self) -> Pose {
        self.perturbed.unwrap_or(self.pose)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub header: RecordHeader,
    pub steps: Vec<StepRecord>,
}

impl EpisodeRecord {
    /// Start pose followed by every pose the agent occupied.
    pub fn poses(&self) -> Vec<Pose> {
        let mut out = vec![self.header.start];
        for s in &self.steps {
            out.push(s.pose);
            out.extend(s.perturbed);
        }
        out
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.poses().iter().map(Pose::position).collect()
    }

    pub fn final_pose(&self) -> Pose {
        self.steps.last().map_or(self.header.start, StepRecord::final_pose)
    }

    pub fn is_failed(&self) -> bool {
        self.header.failed.is_some()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header: RecordHeader = match lines.next() {
            Some(l) => serde_json::from_str(&l?)?,
            None => return Err(Error::input("empty episode record")),
        };
        let steps = lines
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect::<Result<Vec<StepRecord>>>()?;
        Ok(Self { header, steps })
    }
}

fn finite(d: f64) -> Option<f64> {
    d.is_finite().then_some(d)
}

/// Runs one episode for exactly `max_steps` steps, or fewer if a provider
/// fails beyond its retry, in which case the record is marked failed.
///
/// Subtask advancement is checked at the top of every step. With target
/// hints, the active subtask advances once the agent is within
/// [`ADVANCE_RADIUS`] geodesic metres of its hint and the latest verdict is
/// not `Regressed`. Without hints it advances when the latest feedback sets
/// `subtask_complete`. After the last subtask completes the agent rotates in
/// place for the remaining budget.
pub fn run_episode(
    world: &SimWorld,
    episode: &EpisodeSpec,
    providers: Providers<'_>,
    cfg: &EpisodeConfig,
) -> Result<EpisodeRecord> {
    cfg.validate()?;
    episode.validate(world)?;
    for h in &episode.subtask_hints {
        if !world.is_free(*h) {
            return Err(Error::input(format!("episode {}: subtask hint in a wall", episode.id)));
        }
    }
    let goal_field = world.distance_field(episode.goal)?;
    let to_goal = |p: &Pose| finite(goal_field.distance_to_snapped(p.position(), SNAP));

    let mut header = RecordHeader {
        episode_id: episode.id.clone(),
        instruction: episode.instruction.clone(),
        subtasks: Vec::new(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        start: episode.start,
        goal: episode.goal,
        reference_path: episode.reference_path.clone(),
        max_steps: 0,
        geodesic_start: to_goal(&episode.start),
        failed: None,
    };

    let subtasks = match decompose(&episode.instruction, providers.decider, &episode.subtask_hints) {
        Ok(s) => s,
        Err(e @ Error::InvalidInput(_)) => return Err(e),
        Err(e) => {
            header.failed = Some(format!("decompose: {e}"));
            return Ok(EpisodeRecord {
                header,
                steps: Vec::new(),
            });
        }
    };
    let budget = max_steps(&subtasks, cfg);
    header.subtasks = subtasks.clone();
    header.max_steps = budget;
    let hint_fields: Vec<Option<DistanceField>> = subtasks
        .iter()
        .map(|s| s.target_hint.map(|h| world.distance_field(h)).transpose())
        .collect::<Result<_>>()?;
    let perturb_step = cfg.perturbation.map(|p| ((budget / 2).max(1), p));

    let mut steps = Vec::with_capacity(budget);
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut feedback = Feedback::initial();
    let mut active = 0usize;
    let mut pose = episode.start;
    let mut obs: Option<Observation> = None;

    for t in 1..=budget {
        while active < subtasks.len() {
            let done = match &hint_fields[active] {
                Some(f) => {
                    feedback.verdict != Verdict::Regressed
                        && f.distance_to_snapped(pose.position(), SNAP) <= ADVANCE_RADIUS
                }
                None => feedback.subtask_complete && feedback.subtask_index == active,
            };
            if !done {
                break;
            }
            active += 1;
        }

        let outcome = if active == subtasks.len() {
            Ok(hold_step(t, pose, world, subtasks.len() - 1))
        } else {
            decide_and_act(
                t,
                world,
                pose,
                obs.take(),
                &subtasks[active],
                &feedback,
                &history,
                &episode.instruction,
                providers,
                cfg,
            )
        };
        let (mut step, next_obs) = match outcome {
            Ok(v) => v,
            Err(e @ Error::InvalidInput(_)) => return Err(e),
            Err(e) => {
                header.failed = Some(format!("step {t}: {e}"));
                break;
            }
        };
        obs = next_obs;
        if let Some((at, p)) = perturb_step {
            if at == t {
                step.perturbed = Some(world.inject_perturbation(&step.pose, p.magnitude, p.seed)?);
                obs = None;
            }
        }
        pose = step.final_pose();
        step.geodesic_to_goal = to_goal(&pose);
        if !step.fallback || active < subtasks.len() {
            history.push(HistoryEntry {
                timestep: t,
                chosen_id: step.chosen_id,
                explanation: step.explanation.clone(),
            });
        }
        feedback = step.feedback.clone();
        steps.push(step);
    }

    Ok(EpisodeRecord { header, steps })
}

fn hold_step(t: usize, pose: Pose, world: &SimWorld, last: usize) -> (StepRecord, Option<Observation>) {
    let w = Waypoint::rotate_in_place(0);
    let action = to_action(&w);
    let next = world.step(&pose, &action);
    let step = StepRecord {
        t,
        subtask_index: last,
        decision_space: DecisionSpace {
            entries: vec![DecisionEntry {
                waypoint: w,
                description: "all subtasks complete".into(),
            }],
        }
        .to_wire(),
        chosen_id: 0,
        explanation: "all subtasks complete; holding position".into(),
        action,
        pose: next,
        perturbed: None,
        feedback: Feedback {
            text: "all subtasks complete".into(),
            subtask_index: last,
            verdict: Verdict::Unclear,
            subtask_complete: true,
        },
        fallback: true,
        geodesic_to_goal: None,
    };
    (step, None)
}

#[allow(clippy::too_many_arguments)]
fn decide_and_act(
    t: usize,
    world: &SimWorld,
    pose: Pose,
    cached: Option<Observation>,
    subtask: &Subtask,
    feedback: &Feedback,
    history: &[HistoryEntry],
    instruction: &str,
    providers: Providers<'_>,
    cfg: &EpisodeConfig,
) -> Result<(StepRecord, Option<Observation>)> {
    let mut obs = match cached {
        Some(o) => o,
        None => world.render_panorama(&pose, cfg.n_views, &cfg.intrinsics)?,
    };
    obs.timestep = t;
    let grid = perceive(&obs, &cfg.intrinsics, &cfg.perception)?;
    let skeleton = skeletonize(&grid);
    let candidates = generate_waypoints(&skeleton, &cfg.waypoint);

    let scene = retry_once(|| providers.describer.describe_panorama(&obs))?;
    let space = retry_once(|| assemble_decision_space(&candidates, providers.describer, &obs))?;
    let req = DecisionRequest {
        space: &space,
        feedback,
        instruction,
        history,
        subtask,
        scene: Some(&scene),
        pose: Some(pose),
    };
    let choice = select_waypoint(&req, providers.decider)?;
    let chosen = space.get(choice.id).expect("validated").waypoint;
    let action = to_action(&chosen);
    let next = world.step(&pose, &action);

    let mut after = world.render_panorama(&next, cfg.n_views, &cfg.intrinsics)?;
    after.timestep = t + 1;
    let fb = generate_feedback(&obs, &after, subtask, &chosen, providers.describer)?;

    let step = StepRecord {
        t,
        subtask_index: subtask.index,
        decision_space: space.to_wire(),
        chosen_id: choice.id,
        explanation: choice.explanation,
        action,
        pose: next,
        perturbed: None,
        feedback: fb,
        fallback: chosen.fallback,
        geodesic_to_goal: None,
    };
    Ok((step, Some(after)))
}

/// Re-executes a record's actions (and its perturbation) from the start pose.
pub fn replay_actions(world: &SimWorld, record: &EpisodeRecord) -> Result<Vec<Pose>> {
    let mut pose = record.header.start;
    let mut out = vec![pose];
    let perturbation = record.header.config.perturbation;
    for s in &record.steps {
        pose = world.step(&pose, &s.action);
        out.push(pose);
        if s.perturbed.is_some() {
            let p = perturbation
                .ok_or_else(|| Error::input("record has a perturbed step but no perturbation config"))?;
            pose = world.inject_perturbation(&pose, p.magnitude, p.seed)?;
            out.push(pose);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::oracle::{GeodesicOracle, OracleDecider, OracleDescriber};
    use crate::simenv::MapBuilder;
    use std::sync::Arc;

    fn subtasks(n: usize) -> Vec<Subtask> {
        (0..n)
            .map(|index| Subtask {
                index,
                text: format!("s{index}"),
                target_hint: None,
            })
            .collect()
    }

    #[test]
    fn step_budget() {
        let cfg = EpisodeConfig::default();
        assert_eq!(max_steps(&subtasks(2), &cfg), 6);
        assert_eq!(max_steps(&subtasks(9), &cfg), 9);
        assert_eq!(max_steps(&subtasks(6), &cfg), 6);
    }

    #[test]
    fn action_mapping() {
        let a = to_action(&Waypoint::from_polar(0, 2.828, 45.0));
        assert_eq!((a.rotate, a.distance), (45.0, 2.828));
        let a = to_action(&Waypoint::rotate_in_place(0));
        assert_eq!((a.rotate, a.distance), (90.0, 0.0));
        let a = to_action(&Waypoint::from_polar(0, 1.2, 180.0));
        assert_eq!((a.rotate, a.distance), (180.0, 1.2));
    }

    #[test]
    fn hints_bind_last_to_goal() {
        struct Three;
        impl DecisionProvider for Three {
            fn decompose(&self, _: &str) -> Result<Vec<String>> {
                Ok(vec!["a".into(), "b".into(), "c".into()])
            }
            fn choose(&self, _: &DecisionRequest<'_>) -> Result<Choice> {
                unreachable!()
            }
        }
        let h = [Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)];
        let s = decompose("x", &Three, &h).unwrap();
        assert_eq!(s[0].target_hint, Some(h[0]));
        assert_eq!(s[1].target_hint, Some(h[1]));
        assert_eq!(s[2].target_hint, Some(h[1]));
        assert!(decompose(" ", &Three, &h).is_err());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = EpisodeConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.n_views = 6;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    fn corridor() -> Arc<SimWorld> {
        Arc::new(
            MapBuilder::new(12.0, 3.0, 0.05)
                .carve_rect(0.05, 0.05, 11.95, 2.95)
                .build(),
        )
    }

    #[test]
    fn corridor_goal_ahead() {
        let world = corridor();
        let geo = Arc::new(GeodesicOracle::new(world.clone()));
        let (d, p) = (OracleDescriber::new(geo.clone()), OracleDecider::new(geo));
        let ep = EpisodeSpec {
            id: "c".into(),
            start: Pose::new(2.0, 1.5, 0.0),
            goal: Point2::new(6.0, 1.5),
            instruction: "Walk down the corridor.".into(),
            subtask_hints: vec![Point2::new(6.0, 1.5)],
            reference_path: vec![Point2::new(2.0, 1.5), Point2::new(6.0, 1.5)],
        };
        let rec = run_episode(
            &world,
            &ep,
            Providers {
                describer: &d,
                decider: &p,
            },
            &EpisodeConfig::default(),
        )
        .unwrap();
        assert!(rec.header.failed.is_none());
        assert_eq!(rec.steps.len(), 6);
        let last = rec.final_pose().position();
        assert!(world.geodesic_distance(last, ep.goal).unwrap() < 3.0);
        for s in &rec.steps {
            assert!(s.decision_space.iter().any(|e| e.id == s.chosen_id));
        }
        let replayed = replay_actions(&world, &rec).unwrap();
        assert_eq!(replayed, rec.poses());
        let back = EpisodeRecord::read_jsonl(&rec.to_jsonl()[..]).unwrap();
        assert_eq!(back, rec);
    }
}
