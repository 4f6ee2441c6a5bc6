//! Scripted providers that read simulator ground truth. Outputs depend only
//! on the world and the call inputs, so repeated calls are byte-identical.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Choice, DecisionProvider, DecisionRequest, DescriptionProvider, FeedbackRequest};
use crate::error::{Error, Result};
use crate::geom::{Point2, Pose};
use crate::perception::Observation;
use crate::regulator::{Feedback, Verdict};
use crate::simenv::{DistanceField, SimWorld};
use crate::waypoint::Waypoint;

/// Waypoint positions that land inside a wall are snapped this far (metres)
/// to the nearest free cell before a geodesic lookup.
const SNAP_RADIUS: f64 = 0.5;
/// Rays that hit a wall closer than this are described as "wall ahead".
const WALL_AHEAD: f64 = 0.5;
/// Objects this close (metres) to a waypoint ray count as visible along it.
const RAY_CORRIDOR: f64 = 1.0;
const PANORAMA_RANGE: f64 = 5.0;

/// Cached single-target geodesic fields over one world.
#[derive(Debug)]
pub struct GeodesicOracle {
    world: Arc<SimWorld>,
    cache: Mutex<HashMap<(usize, usize), Arc<DistanceField>>>,
}

impl GeodesicOracle {
    pub fn new(world: Arc<SimWorld>) -> Self {
        Self {
            world,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn world(&self) -> &Arc<SimWorld> {
        &self.world
    }

    pub fn field(&self, target: Point2) -> Result<Arc<DistanceField>> {
        let cell = self
            .world
            .cell_of(target)
            .ok_or_else(|| Error::input("geodesic target outside the map"))?;
        if let Some(f) = self.cache.lock().expect("oracle cache poisoned").get(&cell) {
            return Ok(f.clone());
        }
        let field = Arc::new(self.world.distance_field(target)?);
        self.cache
            .lock()
            .expect("oracle cache poisoned")
            .insert(cell, field.clone());
        Ok(field)
    }

    /// Geodesic distance from `from` (snapped out of walls) to `target`.
    pub fn distance(&self, from: Point2, target: Point2) -> Result<f64> {
        Ok(self.field(target)?.distance_to_snapped(from, SNAP_RADIUS))
    }
}

fn require_pose(obs: &Observation) -> Result<Pose> {
    obs.pose
        .ok_or_else(|| Error::Backend("oracle provider needs the simulator pose".into()))
}

fn visible_objects(world: &SimWorld, from: Point2, mut keep: impl FnMut(Point2) -> Option<f64>) -> Vec<String> {
    let mut seen: Vec<(f64, &str)> = world
        .objects
        .iter()
        .filter_map(|o| {
            let key = keep(o.position)?;
            let d = from.dist(o.position);
            let bearing = (o.position.y - from.y).atan2(o.position.x - from.x).to_degrees();
            // Line of sight: nothing blocks the straight segment.
            (world.raycast(from, bearing, d) >= d - 1e-9).then_some((key, o.label.as_str()))
        })
        .collect();
    seen.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    let mut labels: Vec<String> = Vec::new();
    for (_, l) in seen {
        if !labels.iter().any(|x| x == l) {
            labels.push(l.to_string());
        }
    }
    labels
}

fn render_labels(region: Option<&str>, objects: &[String]) -> String {
    let visible = if objects.is_empty() {
        "none".to_string()
    } else {
        objects.join(", ")
    };
    format!("{}; visible: {visible}", region.unwrap_or("open area"))
}

/// Template description of what lies along the ray towards `waypoint`:
/// `"<region>; visible: <objects|none>"`, or `"wall ahead"` when a wall is
/// closer than 0.5 m in that direction.
pub fn oracle_describe_direction(world: &SimWorld, pose: &Pose, waypoint: &Waypoint) -> String {
    let bearing = pose.yaw + waypoint.heading;
    let origin = pose.position();
    if world.raycast(origin, bearing, WALL_AHEAD) < WALL_AHEAD {
        return "wall ahead".to_string();
    }
    let (s, c) = bearing.to_radians().sin_cos();
    let reach = waypoint.distance.max(1.0);
    let target = Point2::new(origin.x + reach * c, origin.y + reach * s);
    let objects = visible_objects(world, origin, |p| {
        let d = p - origin;
        let along = d.x * c + d.y * s;
        let across = (-d.x * s + d.y * c).abs();
        (along > 0.0 && along <= reach + RAY_CORRIDOR && across <= RAY_CORRIDOR).then_some(along)
    });
    render_labels(world.region_at(target), &objects)
}

pub const FEEDBACK_NONE: &str = "no feedback yet";

/// The three fixed feedback texts, keyed by verdict.
pub fn oracle_feedback_text(verdict: Verdict, subtask: &str) -> String {
    match verdict {
        Verdict::Advanced => format!("progress: moved closer to the target of \"{subtask}\""),
        Verdict::Regressed => format!("drift: moved away from the target of \"{subtask}\""),
        Verdict::Unclear => format!("unclear: no measurable change toward \"{subtask}\""),
    }
}

pub fn verdict_for(before: f64, after: f64) -> Verdict {
    if after < before {
        Verdict::Advanced
    } else if after > before {
        Verdict::Regressed
    } else {
        Verdict::Unclear
    }
}

#[derive(Debug, Clone)]
pub struct OracleDescriber {
    geo: Arc<GeodesicOracle>,
}

impl OracleDescriber {
    pub fn new(geo: Arc<GeodesicOracle>) -> Self {
        Self { geo }
    }
}

impl DescriptionProvider for OracleDescriber {
    fn describe_panorama(&self, obs: &Observation) -> Result<String> {
        let pose = require_pose(obs)?;
        let world = self.geo.world();
        let here = pose.position();
        let objects = visible_objects(world, here, |p| {
            let d = here.dist(p);
            (d <= PANORAMA_RANGE).then_some(d)
        });
        Ok(render_labels(world.region_at(here), &objects))
    }

    fn describe_direction(&self, obs: &Observation, _view: usize, waypoint: &Waypoint) -> Result<String> {
        let pose = require_pose(obs)?;
        Ok(oracle_describe_direction(self.geo.world(), &pose, waypoint))
    }

    fn compare(&self, req: &FeedbackRequest<'_>) -> Result<Feedback> {
        let before = require_pose(req.before)?;
        let after = require_pose(req.after)?;
        let target = req
            .subtask
            .target_hint
            .ok_or_else(|| Error::Backend("oracle feedback needs a subtask target hint".into()))?;
        let field = self.geo.field(target)?;
        let verdict = verdict_for(
            field.distance_to_snapped(before.position(), SNAP_RADIUS),
            field.distance_to_snapped(after.position(), SNAP_RADIUS),
        );
        Ok(Feedback {
            text: oracle_feedback_text(verdict, &req.subtask.text),
            subtask_index: req.subtask.index,
            verdict,
            subtask_complete: false,
        })
    }
}

/// Splits on sentence-ending punctuation followed by whitespace or the end.
pub fn split_sentences(instruction: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = instruction.chars().peekable();
    while let Some(ch) = chars.next() {
        current.push(ch);
        if matches!(ch, '.' | '!' | '?') && chars.peek().is_none_or(|c| c.is_whitespace()) {
            let s = current.trim();
            if s.chars().any(|c| c.is_alphanumeric()) {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if s.chars().any(|c| c.is_alphanumeric()) {
        out.push(s.to_string());
    }
    out
}

/// Picks the waypoint geodesically closest to the active subtask target.
/// Ties go to the smaller |heading|, then the smaller id.
#[derive(Debug, Clone)]
pub struct OracleDecider {
    geo: Arc<GeodesicOracle>,
}

impl OracleDecider {
    pub fn new(geo: Arc<GeodesicOracle>) -> Self {
        Self { geo }
    }

    /// (id, geodesic distance) for every entry, in space order.
    pub fn score(&self, req: &DecisionRequest<'_>) -> Result<Vec<(usize, f64)>> {
        let pose = req
            .pose
            .ok_or_else(|| Error::Backend("oracle decider needs the simulator pose".into()))?;
        let target = req
            .subtask
            .target_hint
            .ok_or_else(|| Error::Backend("oracle decider needs a subtask target hint".into()))?;
        let field = self.geo.field(target)?;
        Ok(req
            .space
            .entries
            .iter()
            .map(|e| {
                let at = e.waypoint.world_position(&pose);
                (e.waypoint.id, field.distance_to_snapped(at, SNAP_RADIUS))
            })
            .collect())
    }
}

impl DecisionProvider for OracleDecider {
    fn decompose(&self, instruction: &str) -> Result<Vec<String>> {
        Ok(split_sentences(instruction))
    }

    fn choose(&self, req: &DecisionRequest<'_>) -> Result<Choice> {
        let scores = self.score(req)?;
        let best = req
            .space
            .entries
            .iter()
            .zip(&scores)
            .min_by(|(a, (_, da)), (b, (_, db))| {
                da.total_cmp(db)
                    .then(a.waypoint.heading.abs().total_cmp(&b.waypoint.heading.abs()))
                    .then(a.waypoint.id.cmp(&b.waypoint.id))
            })
            .ok_or_else(|| Error::input("empty decision space"))?;
        let (entry, (_, d)) = best;
        Ok(Choice {
            id: entry.waypoint.id,
            explanation: format!(
                "waypoint {} ({:.2} m at {:+.0} deg) is {:.2} m from the target of \"{}\"",
                entry.waypoint.id, entry.waypoint.distance, entry.waypoint.heading, d, req.subtask.text
            ),
        })
    }
}

/// Oracle decider that, with probability `noise`, picks a uniformly random
/// waypoint instead. Seeded, so a given seed replays identically.
#[derive(Debug)]
pub struct NoisyOracleDecider {
    inner: OracleDecider,
    noise: f64,
    rng: Mutex<ChaCha8Rng>,
}

impl NoisyOracleDecider {
    pub fn new(geo: Arc<GeodesicOracle>, noise: f64, seed: u64) -> Self {
        Self {
            inner: OracleDecider::new(geo),
            noise: noise.clamp(0.0, 1.0),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

impl DecisionProvider for NoisyOracleDecider {
    fn decompose(&self, instruction: &str) -> Result<Vec<String>> {
        self.inner.decompose(instruction)
    }

    fn choose(&self, req: &DecisionRequest<'_>) -> Result<Choice> {
        let pick = {
            let mut rng = self.rng.lock().expect("rng poisoned");
            let roll: f64 = rng.random();
            let idx = rng.random_range(0..req.space.len().max(1));
            (roll < self.noise).then_some(idx)
        };
        match pick.and_then(|i| req.space.entries.get(i)) {
            Some(e) => Ok(Choice {
                id: e.waypoint.id,
                explanation: format!("waypoint {} chosen at random", e.waypoint.id),
            }),
            None => self.inner.choose(req),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regulator::Subtask;
    use crate::simenv::MapBuilder;
    use crate::waypoint::{DecisionEntry, DecisionSpace};

    fn hall() -> SimWorld {
        MapBuilder::new(12.0, 4.0, 0.05)
            .carve_rect(0.05, 0.05, 11.95, 3.95)
            .region("hallway", 0.0, 0.0, 6.0, 4.0)
            .object("plant", 4.0, 2.3)
            .build()
    }

    #[test]
    fn sentence_split() {
        assert_eq!(
            split_sentences("Walk out of the bedroom. Turn left and enter the bathroom."),
            vec!["Walk out of the bedroom.", "Turn left and enter the bathroom."]
        );
        assert_eq!(split_sentences("Go to the kitchen"), vec!["Go to the kitchen"]);
        assert_eq!(split_sentences("Stop at 3.5 m. Wait!"), vec!["Stop at 3.5 m.", "Wait!"]);
        assert!(split_sentences("  ").is_empty());
    }

    #[test]
    fn direction_templates() {
        let w = hall();
        let pose = Pose::new(2.0, 2.0, 0.0);
        let wp = Waypoint::from_polar(0, 2.0, 0.0);
        assert_eq!(oracle_describe_direction(&w, &pose, &wp), "hallway; visible: plant");
        let east = Pose::new(8.0, 2.0, 0.0);
        assert_eq!(oracle_describe_direction(&w, &east, &wp), "open area; visible: none");
        let wall = Pose::new(11.6, 2.0, 0.0);
        assert_eq!(oracle_describe_direction(&w, &wall, &wp), "wall ahead");
    }

    #[test]
    fn verdicts() {
        assert_eq!(verdict_for(4.2, 3.1), Verdict::Advanced);
        assert_eq!(verdict_for(3.1, 3.1), Verdict::Unclear);
        assert_eq!(verdict_for(2.0, 2.9), Verdict::Regressed);
    }

    fn space(headings: &[(f64, f64)]) -> DecisionSpace {
        DecisionSpace {
            entries: headings
                .iter()
                .enumerate()
                .map(|(i, &(d, h))| DecisionEntry {
                    waypoint: Waypoint::from_polar(i, d, h),
                    description: String::new(),
                })
                .collect(),
        }
    }

    #[test]
    fn tie_prefers_smaller_heading() {
        let w = Arc::new(hall());
        let decider = OracleDecider::new(Arc::new(GeodesicOracle::new(w)));
        // Both waypoints fall inside the agent's own cell, so their geodesic
        // distances are identical.
        let sp = space(&[(0.01, -60.0), (0.01, 30.0)]);
        let subtask = Subtask {
            index: 0,
            text: "go".into(),
            target_hint: Some(Point2::new(2.0, 2.0)),
        };
        let fb = Feedback::initial();
        let req = DecisionRequest {
            space: &sp,
            feedback: &fb,
            instruction: "go",
            history: &[],
            subtask: &subtask,
            scene: None,
            pose: Some(Pose::new(6.025, 2.025, 180.0)),
        };
        let scores = decider.score(&req).unwrap();
        assert_eq!(scores[0].1, scores[1].1);
        assert_eq!(decider.choose(&req).unwrap().id, 1);
    }
}
