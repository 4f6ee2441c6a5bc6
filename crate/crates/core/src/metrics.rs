//! Navigation metrics: TL, NE, SR, OSR, SPL, nDTW and SDTW.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point2, Pose};
use crate::regulator::EpisodeRecord;
use crate::simenv::SimWorld;

/// An episode succeeds when it stops strictly closer than this (metres).
pub const SUCCESS_THRESHOLD: f64 = 3.0;
/// Distance scale of nDTW.
pub const NDTW_THRESHOLD: f64 = 3.0;
pub const SDTW_CONVENTION: &str = "success-weighted nDTW (SR x nDTW)";

pub fn trajectory_length(poses: &[Pose]) -> f64 {
    poses
        .windows(2)
        .map(|w| w[0].position().dist(w[1].position()))
        .sum()
}

pub fn navigation_error(world: &SimWorld, last: Point2, goal: Point2) -> Result<f64> {
    world.geodesic_distance(goal, last)
}

pub fn success(ne: f64) -> f64 {
    if ne < SUCCESS_THRESHOLD {
        1.0
    } else {
        0.0
    }
}

/// 1 when any visited pose was within the success threshold of the goal.
pub fn oracle_success(world: &SimWorld, poses: &[Pose], goal: Point2) -> Result<f64> {
    let field = world.distance_field(goal)?;
    let mut best = f64::INFINITY;
    for p in poses {
        best = best.min(field.distance_to(p.position())?);
    }
    Ok(success(best))
}

pub fn spl(sr: f64, shortest: f64, tl: f64) -> f64 {
    if shortest <= 0.0 {
        return sr;
    }
    sr * shortest / tl.max(shortest)
}

/// Minimal total Euclidean cost over monotone, boundary-matched alignments.
pub fn dtw(path: &[Point2], reference: &[Point2]) -> Result<f64> {
    if path.is_empty() || reference.is_empty() {
        return Err(Error::input("dtw needs two nonempty paths"));
    }
    let m = reference.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for p in path {
        cur[0] = f64::INFINITY;
        for (j, r) in reference.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = best + p.dist(*r);
        }
        std::mem::swap(&mut prev, &mut cur);
        prev[0] = f64::INFINITY;
    }
    Ok(prev[m])
}

pub fn ndtw(path: &[Point2], reference: &[Point2], d_th: f64) -> Result<f64> {
    Ok((-dtw(path, reference)? / (reference.len() as f64 * d_th)).exp())
}

pub fn sdtw(sr: f64, ndtw: f64) -> f64 {
    sr * ndtw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode_id: String,
    #[serde(rename = "TL")]
    pub tl: f64,
    /// `None` when the final position cannot reach the goal.
    #[serde(rename = "NE")]
    pub ne: Option<f64>,
    #[serde(rename = "NDTW")]
    pub ndtw: f64,
    #[serde(rename = "OSR")]
    pub osr: f64,
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "SPL")]
    pub spl: f64,
    #[serde(rename = "SDTW")]
    pub sdtw: f64,
    pub failed: bool,
}

pub fn evaluate_record(world: &SimWorld, record: &EpisodeRecord) -> Result<EpisodeMetrics> {
    let h = &record.header;
    let poses = record.poses();
    let tl = trajectory_length(&poses);
    let field = world.distance_field(h.goal)?;
    let ne = field.distance_to(record.final_pose().position())?;
    let shortest = field.distance_to(h.start.position())?;
    let sr = if record.is_failed() { 0.0 } else { success(ne) };
    let osr = oracle_success(world, &poses, h.goal)?;
    let positions: Vec<Point2> = poses.iter().map(Pose::position).collect();
    let nd = ndtw(&positions, &h.reference_path, NDTW_THRESHOLD)?;
    Ok(EpisodeMetrics {
        episode_id: h.episode_id.clone(),
        tl,
        ne: ne.is_finite().then_some(ne),
        ndtw: nd,
        osr,
        sr,
        spl: if shortest.is_finite() { spl(sr, shortest, tl) } else { 0.0 },
        sdtw: sdtw(sr, nd),
        failed: record.is_failed(),
    })
}

/// Means over episodes. NE averages reachable episodes only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub episodes: usize,
    #[serde(rename = "TL")]
    pub tl: f64,
    #[serde(rename = "NE")]
    pub ne: Option<f64>,
    #[serde(rename = "NDTW")]
    pub ndtw: f64,
    #[serde(rename = "OSR")]
    pub osr: f64,
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "SPL")]
    pub spl: f64,
    #[serde(rename = "SDTW")]
    pub sdtw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sdtw_convention: String,
    pub success_threshold_m: f64,
    pub per_episode: Vec<EpisodeMetrics>,
    pub aggregate: AggregateMetrics,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

pub fn aggregate(per_episode: Vec<EpisodeMetrics>) -> Result<MetricReport> {
    if per_episode.is_empty() {
        return Err(Error::input("no episodes to aggregate"));
    }
    let m = |f: fn(&EpisodeMetrics) -> f64| mean(per_episode.iter().map(f)).expect("nonempty");
    let aggregate = AggregateMetrics {
        episodes: per_episode.len(),
        tl: m(|e| e.tl),
        ne: mean(per_episode.iter().filter_map(|e| e.ne)),
        ndtw: m(|e| e.ndtw),
        osr: m(|e| e.osr),
        sr: m(|e| e.sr),
        spl: m(|e| e.spl),
        sdtw: m(|e| e.sdtw),
    };
    Ok(MetricReport {
        sdtw_convention: SDTW_CONVENTION.into(),
        success_threshold_m: SUCCESS_THRESHOLD,
        per_episode,
        aggregate,
    })
}
