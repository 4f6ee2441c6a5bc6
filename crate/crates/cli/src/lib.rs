//! Command implementations behind the `skelnav` binary.
//!
//! Every command returns [`CliError`], which maps onto the process exit
//! code: 2 for bad input, 3 for model backend failures.

pub mod demo;
pub mod plot;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use skelnav::backends::oracle::{GeodesicOracle, NoisyOracleDecider, OracleDecider, OracleDescriber};
use skelnav::backends::remote::{HttpTransport, RemoteClient, RemoteConfig, RemoteDecider};
use skelnav::backends::tape::{load_tape, RecordingDecider, RecordingDescriber, Tape, TapeReplay};
use skelnav::backends::DecisionProvider;
use skelnav::metrics::{aggregate, evaluate_record, MetricReport};
use skelnav::regulator::{run_episode, EpisodeConfig, EpisodeRecord, PerturbationConfig, Providers};
use skelnav::simenv::{EpisodeSpec, MapBundle, SimWorld};
use skelnav::skeleton::DegreeConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Backend(_) => 3,
        }
    }
}

impl From<skelnav::Error> for CliError {
    fn from(e: skelnav::Error) -> Self {
        use skelnav::Error as E;
        match e {
            E::InvalidInput(_) | E::Io(_) | E::Json(_) => CliError::Usage(e.to_string()),
            _ => CliError::Backend(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Oracle,
    Remote,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeArg {
    Deg1,
    Gt2,
    Ne2,
}

impl From<DegreeArg> for DegreeConfig {
    fn from(d: DegreeArg) -> Self {
        match d {
            DegreeArg::Deg1 => DegreeConfig::Deg1,
            DegreeArg::Gt2 => DegreeConfig::DegGt2,
            DegreeArg::Ne2 => DegreeConfig::DegNe2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// 12 views against 6.
    Views6,
    /// No perturbation against one mid-trajectory displacement.
    Perturb,
}

/// Everything one batch of episodes depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub map: PathBuf,
    /// Empty means every episode in the bundle.
    pub episodes: Vec<String>,
    pub mode: Mode,
    pub views: usize,
    /// Metres; `None` disables the perturbation.
    pub perturb_magnitude: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub degree_config: DegreeArg,
    pub min_steps: usize,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
    /// Probability that the oracle decider picks a random waypoint.
    pub choice_noise: f64,
    pub remote_config: Option<PathBuf>,
    /// Directory of `<id>.tape.jsonl` files for replay mode.
    pub tapes: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(map: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            map: map.into(),
            episodes: Vec::new(),
            mode: Mode::Oracle,
            views: 12,
            perturb_magnitude: None,
            seed: 0,
            out: out.into(),
            degree_config: DegreeArg::Deg1,
            min_steps: 6,
            workers: 0,
            choice_noise: 0.0,
            remote_config: None,
            tapes: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..=1.0).contains(&self.choice_noise) {
            return Err(usage("--choice-noise must lie in [0, 1]"));
        }
        if self.mode == Mode::Replay && self.tapes.is_none() {
            return Err(usage("replay mode needs --tapes"));
        }
        if self.mode != Mode::Oracle && self.choice_noise > 0.0 {
            return Err(usage("--choice-noise only applies to oracle mode"));
        }
        if let Some(m) = self.perturb_magnitude {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(usage("--perturb-magnitude must be finite and >= 0"));
            }
        }
        self.episode_config(0).validate()?;
        Ok(())
    }

    /// Per-episode config. `index` is the episode's position in the bundle,
    /// so a given episode sees the same seed however the batch is filtered.
    pub fn episode_config(&self, index: usize) -> EpisodeConfig {
        let mut cfg = EpisodeConfig {
            min_steps: self.min_steps,
            n_views: self.views,
            perturbation: self.perturb_magnitude.map(|magnitude| PerturbationConfig {
                magnitude,
                seed: episode_seed(self.seed, index),
            }),
            ..Default::default()
        };
        cfg.waypoint.degree_config = self.degree_config.into();
        cfg
    }
}

/// Decorrelates per-episode streams drawn from one manifest seed.
pub fn episode_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn load_bundle(dir: &Path) -> CliResult<MapBundle> {
    MapBundle::load(dir).map_err(|e| usage(format!("map bundle {}: {e}", dir.display())))
}

fn select<'a>(bundle: &'a MapBundle, ids: &[String]) -> CliResult<Vec<(usize, &'a EpisodeSpec)>> {
    if ids.is_empty() {
        return Ok(bundle.episodes.iter().enumerate().collect());
    }
    ids.iter()
        .map(|id| {
            bundle
                .episodes
                .iter()
                .position(|e| &e.id == id)
                .map(|i| (i, &bundle.episodes[i]))
                .ok_or_else(|| usage(format!("episode {id} is not in the bundle")))
        })
        .collect()
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| usage(e.to_string()))?;
    tmp.write_all(bytes).map_err(|e| usage(e.to_string()))?;
    tmp.persist(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn record_path(out: &Path, id: &str) -> PathBuf {
    out.join(format!("{id}.jsonl"))
}

pub fn tape_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.tape.jsonl"))
}

/// Outcome of one `cmd_run` batch.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<EpisodeRecord>,
    pub paths: Vec<PathBuf>,
}

impl RunSummary {
    pub fn failed(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| r.is_failed())
            .map(|r| r.header.episode_id.as_str())
            .collect()
    }
}

enum Deciders {
    Exact(OracleDecider),
    Noisy(NoisyOracleDecider),
    Remote(RemoteDecider),
}

impl Deciders {
    fn inner(&self) -> &dyn DecisionProvider {
        match self {
            Deciders::Exact(d) => d,
            Deciders::Noisy(d) => d,
            Deciders::Remote(d) => d,
        }
    }
}

impl DecisionProvider for Deciders {
    fn decompose(&self, instruction: &str) -> skelnav::Result<Vec<String>> {
        self.inner().decompose(instruction)
    }

    fn choose(&self, req: &skelnav::backends::DecisionRequest<'_>) -> skelnav::Result<skelnav::backends::Choice> {
        self.inner().choose(req)
    }
}

fn remote_client(m: &RunManifest) -> CliResult<RemoteClient> {
    let cfg = match &m.remote_config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<RemoteConfig>(&text)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => RemoteConfig::default(),
    };
    cfg.validate()?;
    let transport = Arc::new(HttpTransport::new(cfg.timeout()));
    RemoteClient::from_env(cfg, transport).map_err(|e| CliError::Backend(e.to_string()))
}

fn run_one(
    m: &RunManifest,
    world: &Arc<SimWorld>,
    geo: &Arc<GeodesicOracle>,
    client: Option<&RemoteClient>,
    index: usize,
    ep: &EpisodeSpec,
) -> CliResult<(EpisodeRecord, Option<Tape>)> {
    let cfg = m.episode_config(index);
    if m.mode == Mode::Replay {
        let dir = m.tapes.as_ref().expect("validated");
        let path = tape_path(dir, &ep.id);
        let entries = load_tape(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let replay = TapeReplay::new(entries);
        let rec = run_episode(world, ep, Providers { describer: &replay, decider: &replay }, &cfg)?;
        return Ok((rec, None));
    }
    // The simulator has no RGB, so descriptions always come from the
    // symbolic oracle; only decisions go to the remote model.
    let describer = OracleDescriber::new(geo.clone());
    let decider = match (m.mode, client) {
        (Mode::Remote, Some(c)) => Deciders::Remote(RemoteDecider::new(c.clone())),
        _ if m.choice_noise > 0.0 => {
            Deciders::Noisy(NoisyOracleDecider::new(geo.clone(), m.choice_noise, episode_seed(m.seed, index)))
        }
        _ => Deciders::Exact(OracleDecider::new(geo.clone())),
    };
    let tape = Tape::new();
    let d = RecordingDescriber::new(describer, tape.clone());
    let p = RecordingDecider::new(decider, tape.clone());
    let rec = run_episode(world, ep, Providers { describer: &d, decider: &p }, &cfg)?;
    Ok((rec, Some(tape)))
}

/// Runs every selected episode and writes `<out>/<id>.jsonl` (plus a tape
/// per episode outside replay mode). Records are written even when some
/// episodes fail; callers decide the exit code from [`RunSummary::failed`].
pub fn cmd_run(m: &RunManifest) -> CliResult<RunSummary> {
    m.validate()?;
    let bundle = load_bundle(&m.map)?;
    let chosen = select(&bundle, &m.episodes)?;
    if chosen.is_empty() {
        return Err(usage("the bundle has no episodes"));
    }
    let client = match m.mode {
        Mode::Remote => Some(remote_client(m)?),
        _ => None,
    };
    let world = Arc::new(bundle.world.clone());
    let geo = Arc::new(GeodesicOracle::new(world.clone()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(m.workers)
        .build()
        .map_err(|e| usage(format!("worker pool: {e}")))?;
    let results: Vec<CliResult<(EpisodeRecord, PathBuf)>> = pool.install(|| {
        chosen
            .par_iter()
            .map(|&(index, ep)| {
                let (rec, tape) = run_one(m, &world, &geo, client.as_ref(), index, ep)?;
                let path = record_path(&m.out, &ep.id);
                write_atomic(&path, &rec.to_jsonl())?;
                if let Some(t) = tape {
                    let mut buf = Vec::new();
                    t.write_jsonl(&mut buf)?;
                    write_atomic(&tape_path(&m.out, &ep.id), &buf)?;
                }
                Ok((rec, path))
            })
            .collect()
    });
    let mut summary = RunSummary { records: Vec::new(), paths: Vec::new() };
    for r in results {
        let (rec, path) = r?;
        summary.records.push(rec);
        summary.paths.push(path);
    }
    Ok(summary)
}

pub fn read_record(path: &Path) -> CliResult<EpisodeRecord> {
    let f = fs::File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    EpisodeRecord::read_jsonl(std::io::BufReader::new(f))
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Expands directories into their record files (`*.jsonl`, tapes excluded),
/// sorted by name.
pub fn collect_records(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    let name = f.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    name.ends_with(".jsonl") && !name.ends_with(".tape.jsonl")
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn evaluate(world: &SimWorld, records: &[EpisodeRecord]) -> CliResult<MetricReport> {
    if records.is_empty() {
        return Err(usage("no records to evaluate"));
    }
    let per = records
        .iter()
        .map(|r| evaluate_record(world, r))
        .collect::<skelnav::Result<Vec<_>>>()?;
    Ok(aggregate(per)?)
}

pub fn cmd_eval(records: &[PathBuf], map: &Path) -> CliResult<MetricReport> {
    let bundle = load_bundle(map)?;
    let paths = collect_records(records)?;
    let recs = paths.iter().map(|p| read_record(p)).collect::<CliResult<Vec<_>>>()?;
    evaluate(&bundle.world, &recs)
}

/// One side of a robustness comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub n_views: usize,
    pub perturb_magnitude: Option<f64>,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub baseline: Condition,
    pub degraded: Condition,
    /// Degraded relative to baseline per metric, e.g. `"↓34.29%"`.
    pub relative_change: BTreeMap<String, String>,
}

/// Percent change from `base` to `new` with a direction arrow and two
/// decimals; "n/a" when the baseline is zero or missing.
pub fn relative_change(base: Option<f64>, new: Option<f64>) -> String {
    match (base, new) {
        (Some(b), Some(n)) if b != 0.0 => {
            let pct = (n - b) / b.abs() * 100.0;
            let s = format!("{:.2}%", pct.abs());
            if s == "0.00%" {
                s
            } else if pct > 0.0 {
                format!("↑{s}")
            } else {
                format!("↓{s}")
            }
        }
        _ => "n/a".into(),
    }
}

fn metric_values(r: &MetricReport) -> [(&'static str, Option<f64>); 7] {
    let a = &r.aggregate;
    [
        ("TL", Some(a.tl)),
        ("NE", a.ne),
        ("NDTW", Some(a.ndtw)),
        ("OSR", Some(a.osr)),
        ("SR", Some(a.sr)),
        ("SPL", Some(a.spl)),
        ("SDTW", Some(a.sdtw)),
    ]
}

/// Runs the baseline and the degraded condition on the same episodes and
/// seeds, writing each under `<out>/<label>/` and the paired report to
/// `<out>/robustness_<protocol>.json`. In replay mode tapes are read from
/// `<tapes>/<label>/`.
pub fn cmd_robustness(m: &RunManifest, protocol: Protocol) -> CliResult<RobustnessReport> {
    if m.mode == Mode::Remote {
        return Err(usage("robustness protocols run in oracle or replay mode"));
    }
    let (base_label, deg_label) = match protocol {
        Protocol::Views6 => ("views12", "views6"),
        Protocol::Perturb => ("baseline", "perturb"),
    };
    let condition = |label: &str, views: usize, perturb: Option<f64>| -> CliResult<Condition> {
        let mut cm = m.clone();
        cm.views = views;
        cm.perturb_magnitude = perturb;
        cm.out = m.out.join(label);
        cm.tapes = m.tapes.as_ref().map(|t| t.join(label));
        let summary = cmd_run(&cm)?;
        let bundle = load_bundle(&m.map)?;
        Ok(Condition {
            label: label.into(),
            n_views: views,
            perturb_magnitude: perturb,
            report: evaluate(&bundle.world, &summary.records)?,
        })
    };
    let (baseline, degraded) = match protocol {
        Protocol::Views6 => (
            condition(base_label, 12, m.perturb_magnitude)?,
            condition(deg_label, 6, m.perturb_magnitude)?,
        ),
        Protocol::Perturb => (
            condition(base_label, m.views, None)?,
            condition(deg_label, m.views, Some(m.perturb_magnitude.unwrap_or(0.5)))?,
        ),
    };
    let relative_change = metric_values(&baseline.report)
        .iter()
        .zip(metric_values(&degraded.report))
        .map(|((k, b), (_, d))| (k.to_string(), relative_change(*b, d)))
        .collect();
    let report = RobustnessReport { protocol, seed: m.seed, baseline, degraded, relative_change };
    let name = match protocol {
        Protocol::Views6 => "robustness_views6.json",
        Protocol::Perturb => "robustness_perturb.json",
    };
    let json = serde_json::to_vec_pretty(&report).map_err(|e| usage(e.to_string()))?;
    write_atomic(&m.out.join(name), &json)?;
    Ok(report)
}

/// Plain-text table of a robustness report, one row per condition.
pub fn format_robustness(r: &RobustnessReport) -> String {
    let mut s = format!("{:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}\n", "", "TL", "NE", "NDTW", "OSR", "SR", "SPL", "SDTW");
    for c in [&r.baseline, &r.degraded] {
        s.push_str(&format!("{:<10}", c.label));
        for (_, v) in metric_values(&c.report) {
            match v {
                Some(v) => s.push_str(&format!(" {v:>7.3}")),
                None => s.push_str(&format!(" {:>7}", "-")),
            }
        }
        s.push('\n');
    }
    s.push_str(&format!("{:<10}", "change"));
    for (k, _) in metric_values(&r.baseline.report) {
        s.push_str(&format!(" {:>7}", r.relative_change[k]));
    }
    s.push('\n');
    s
}

pub fn cmd_plot(record: &Path, map: &Path) -> CliResult<String> {
    let bundle = load_bundle(map)?;
    let rec = read_record(record)?;
    Ok(plot::render_svg(&bundle.world, &rec))
}
