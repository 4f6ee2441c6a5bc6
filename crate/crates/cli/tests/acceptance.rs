//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with
//! `cargo test -p skelnav-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::disk::{dense_tile, disk_error_cells, open_floor, round_room};
use common::dtw_oracle::exhaustive_dtw;
use common::mazes::mazes;
use common::spl_cases::spl_case;
use common::{blob_map, degree_of, grid_with, small_grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelnav::backends::oracle::{GeodesicOracle, OracleDecider, OracleDescriber};
use skelnav::geom::{Point2, Pose};
use skelnav::metrics::{dtw, evaluate_record, navigation_error, ndtw, spl, success, trajectory_length, NDTW_THRESHOLD};
use skelnav::perception::{CameraIntrinsics, PerceptionConfig};
use skelnav::raster::Raster;
use skelnav::regulator::{replay_actions, run_episode, EpisodeConfig, Providers};
use skelnav::simenv::{EpisodeSpec, MapBuilder};
use skelnav::skeleton::{node_degrees, select_by_degree, skeletonize, DegreeConfig};
use skelnav_cli::{cmd_robustness, cmd_run, demo, read_record, Mode, Protocol, RunManifest};
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn skeleton_suite() -> Outcome {
    let mut slowest = 0.0f64;
    for seed in 0..200u64 {
        let grid = grid_with(blob_map(seed));
        let t0 = Instant::now();
        let g = skeletonize(&grid);
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        slowest = slowest.max(ms);
        check(g.mask.is_subset_of(&grid.cells), || format!("seed {seed}: not a subset"))?;
        check(!g.mask.has_full_2x2(), || format!("seed {seed}: 2x2 block"))?;
        check(g.mask.component_count() == grid.cells.component_count(), || {
            format!("seed {seed}: {} components, input has {}", g.mask.component_count(), grid.cells.component_count())
        })?;
        check(skeletonize(&grid).mask == g.mask, || format!("seed {seed}: not deterministic"))?;
        check(ms < 200.0, || format!("seed {seed}: {ms:.1} ms"))?;
    }
    Ok(format!("200 maps, slowest {slowest:.1} ms"))
}

fn degree_algebra() -> Outcome {
    let mut points = 0usize;
    for seed in 0..200u64 {
        let g = skeletonize(&grid_with(blob_map(seed)));
        let ne2 = select_by_degree(&g, DegreeConfig::DegNe2);
        let ends = select_by_degree(&g, DegreeConfig::Deg1);
        let junctions = select_by_degree(&g, DegreeConfig::DegGt2);
        for p in ends.iter().chain(&junctions) {
            check(ne2.contains(p), || format!("seed {seed}: {p:?} missing from DegNe2"))?;
        }
        for (p, d) in node_degrees(&g) {
            check(d == degree_of(&g.mask, p.0, p.1), || format!("seed {seed}: degree at {p:?}"))?;
        }
        points += ends.len() + junctions.len();
    }
    let mut line = Raster::new(5, 24);
    for j in 2..22 {
        line.set(2, j, true);
    }
    let ends = select_by_degree(&skeletonize(&small_grid(&line)), DegreeConfig::Deg1);
    check(ends == vec![(2, 2), (2, 21)], || format!("line ends {ends:?}"))?;
    Ok(format!("200 skeletons, {points} selected pixels, line ends {ends:?}"))
}

fn perception_round_trip() -> Outcome {
    let k = dense_tile();
    let mut worst = 0.0f64;
    let floor = open_floor(16.0);
    for r in [2.0, 3.5, 5.0] {
        let cfg = PerceptionConfig { planning_radius: r, ..Default::default() };
        let err = disk_error_cells(&floor, Pose::new(8.0, 8.0, 17.0), &k, &cfg, r);
        check(err <= 2.0, || format!("open floor r={r}: {err:.2} cells"))?;
        worst = worst.max(err);
    }
    // Visible range shorter than the planning radius.
    let room = round_room(2.5, 0.02);
    let c = room.extent().x / 2.0;
    let err = disk_error_cells(&room, Pose::new(c, c, 0.0), &k, &PerceptionConfig::default(), 2.5);
    check(err <= 2.0, || format!("room radius 2.5: {err:.2} cells"))?;
    worst = worst.max(err);

    let tile = CameraIntrinsics::panorama_tile();
    let cfg = PerceptionConfig::default();
    let at5 = disk_error_cells(&floor, Pose::new(8.0, 8.0, 17.0), &tile, &cfg, 5.0);
    println!("info  perception: simulator tile {}x{} at r=5 is off by {at5:.2} cells", tile.width, tile.height);
    Ok(format!("{}x{} tiles, worst {worst:.2} cells", k.width, k.height))
}

fn random_path(rng: &mut ChaCha8Rng) -> Vec<Point2> {
    let n = rng.random_range(1..=6);
    (0..n).map(|_| Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))).collect()
}

fn metrics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..500 {
        let (a, b) = (random_path(&mut rng), random_path(&mut rng));
        let (fast, slow) = (dtw(&a, &b).map_err(|e| e.to_string())?, exhaustive_dtw(&a, &b));
        check(fast.to_bits() == slow.to_bits(), || format!("pair {i}: {fast} vs {slow}"))?;
        let n = ndtw(&a, &a, NDTW_THRESHOLD).map_err(|e| e.to_string())?;
        check(n == 1.0, || format!("pair {i}: ndtw(p, p) = {n}"))?;
    }
    for k in 0..20 {
        let case = spl_case(k);
        let (start, goal) = (case.path[0], *case.path.last().expect("nonempty"));
        let poses: Vec<Pose> = case.path.iter().map(|p| Pose::new(p.x, p.y, 0.0)).collect();
        let tl = trajectory_length(&poses);
        let shortest = case.world.geodesic_distance(start, goal).map_err(|e| e.to_string())?;
        check(tl == shortest, || format!("case {k}: TL {tl} vs geodesic {shortest}"))?;
        let sr = success(navigation_error(&case.world, goal, goal).map_err(|e| e.to_string())?);
        let v = spl(sr, shortest, tl);
        check(v == 1.0, || format!("case {k}: SPL {v}"))?;
    }
    Ok("500 DTW pairs exact, 20 SPL cases".into())
}

fn closed_loop() -> Outcome {
    let t0 = Instant::now();
    let all = mazes();
    check(all.len() == 20, || format!("{} mazes", all.len()))?;
    for m in all {
        let world = Arc::new(m.world);
        let geo = Arc::new(GeodesicOracle::new(world.clone()));
        let d = OracleDescriber::new(geo.clone());
        let p = OracleDecider::new(geo);
        let rec = run_episode(&world, &m.episode, Providers { describer: &d, decider: &p }, &EpisodeConfig::default())
            .map_err(|e| format!("{}: {e}", m.name))?;
        check(!rec.is_failed(), || format!("{}: {:?}", m.name, rec.header.failed))?;
        let met = evaluate_record(&world, &rec).map_err(|e| e.to_string())?;
        check(met.sr == 1.0, || format!("{}: NE {:?}", m.name, met.ne))?;
        let mut prev = rec.header.geodesic_start.ok_or_else(|| format!("{}: unreachable", m.name))?;
        for s in rec.steps.iter().filter(|s| !s.fallback) {
            let g = s.geodesic_to_goal.ok_or_else(|| format!("{} step {}: unreachable", m.name, s.t))?;
            check(g <= prev + 1e-9, || format!("{} step {}: {g:.3} > {prev:.3}", m.name, s.t))?;
            prev = g;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("20/20 mazes, {secs:.1} s"))
}

fn stopping_rule() -> Outcome {
    let world = Arc::new(
        MapBuilder::new(12.0, 3.0, 0.05)
            .carve_rect(0.05, 0.05, 11.95, 2.95)
            .region("hall", 0.0, 0.0, 12.0, 3.0)
            .build(),
    );
    let geo = Arc::new(GeodesicOracle::new(world.clone()));
    let d = OracleDescriber::new(geo.clone());
    let p = OracleDecider::new(geo);
    let mut got = Vec::new();
    for (clauses, expect) in [(2usize, 6usize), (9, 9)] {
        let start = Pose::new(1.0, 1.5, 0.0);
        let goal = Point2::new(10.0, 1.5);
        let ep = EpisodeSpec {
            id: format!("hall{clauses}"),
            start,
            goal,
            instruction: (0..clauses).map(|i| format!("Walk on, part {i}.")).collect::<Vec<_>>().join(" "),
            subtask_hints: vec![goal],
            reference_path: vec![start.position(), goal],
        };
        let rec = run_episode(&world, &ep, Providers { describer: &d, decider: &p }, &EpisodeConfig::default())
            .map_err(|e| e.to_string())?;
        check(rec.header.subtasks.len() == clauses, || format!("{} subtasks parsed", rec.header.subtasks.len()))?;
        check(rec.steps.len() == expect, || format!("{clauses} subtasks: {} steps", rec.steps.len()))?;
        got.push(rec.steps.len());
    }
    Ok(format!("2 subtasks -> {} steps, 9 subtasks -> {} steps", got[0], got[1]))
}

fn robustness(tmp: &Path) -> Outcome {
    let map = tmp.join("office6");
    demo::office_bundle(6, 3).save(&map).map_err(|e| e.to_string())?;
    for (protocol, magnitude) in [(Protocol::Views6, None), (Protocol::Perturb, Some(0.5))] {
        let reports: Vec<_> = (0..2)
            .map(|i| {
                let mut m = RunManifest::new(&map, tmp.join(format!("det-{protocol:?}-{i}")));
                m.seed = 17;
                m.perturb_magnitude = magnitude;
                cmd_robustness(&m, protocol).map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()?;
        check(reports[0] == reports[1], || format!("{protocol:?}: reports differ between runs"))?;
    }

    let map = tmp.join("office50");
    demo::office_bundle(50, 1).save(&map).map_err(|e| e.to_string())?;
    let mut m = RunManifest::new(&map, tmp.join("noisy"));
    m.seed = 5;
    m.choice_noise = 0.3;
    let r = cmd_robustness(&m, Protocol::Views6).map_err(|e| e.to_string())?;
    let (sr12, sr6) = (r.baseline.report.aggregate.sr, r.degraded.report.aggregate.sr);
    check(r.baseline.report.aggregate.episodes == 50, || "baseline episode count".into())?;
    check(sr12 >= sr6, || format!("SR 12 views {sr12:.2} < 6 views {sr6:.2}"))?;
    Ok(format!("paired reports deterministic; noisy oracle SR 12 views {sr12:.2} >= 6 views {sr6:.2}"))
}

fn replay_determinism(tmp: &Path) -> Outcome {
    let map = tmp.join("office-replay");
    demo::office_bundle(10, 7).save(&map).map_err(|e| e.to_string())?;
    let mut m = RunManifest::new(&map, tmp.join("rec"));
    m.seed = 3;
    m.choice_noise = 0.3;
    m.perturb_magnitude = Some(0.5);
    let first = cmd_run(&m).map_err(|e| e.to_string())?;

    let mut r = m.clone();
    r.mode = Mode::Replay;
    r.choice_noise = 0.0;
    r.tapes = Some(m.out.clone());
    r.out = tmp.join("rep");
    let second = cmd_run(&r).map_err(|e| e.to_string())?;
    check(first.paths.len() == 10 && second.paths.len() == 10, || "episode count".into())?;

    let bundle = skelnav_cli::load_bundle(&map).map_err(|e| e.to_string())?;
    let world = &bundle.world;
    for (a, b) in first.paths.iter().zip(&second.paths) {
        let bytes = (std::fs::read(a), std::fs::read(b));
        let (Ok(x), Ok(y)) = bytes else { return Err("unreadable record".into()) };
        check(x == y, || format!("{}: replayed record differs", a.display()))?;
        let (ra, rb) = (read_record(a).map_err(|e| e.to_string())?, read_record(b).map_err(|e| e.to_string())?);
        let (ma, mb) = (
            evaluate_record(world, &ra).map_err(|e| e.to_string())?,
            evaluate_record(world, &rb).map_err(|e| e.to_string())?,
        );
        let bits = |v: &skelnav::metrics::EpisodeMetrics| {
            [v.tl, v.ndtw, v.osr, v.sr, v.spl, v.sdtw, v.ne.unwrap_or(f64::NAN)].map(f64::to_bits)
        };
        check(bits(&ma) == bits(&mb), || format!("{}: metrics differ", a.display()))?;
        let poses = replay_actions(world, &rb).map_err(|e| e.to_string())?;
        let bit_poses = |ps: &[Pose]| ps.iter().map(|p| [p.x, p.y, p.yaw].map(f64::to_bits)).collect::<Vec<_>>();
        check(bit_poses(&poses) == bit_poses(&ra.poses()), || format!("{}: re-executed poses differ", a.display()))?;
    }
    Ok("10 episodes with noise and perturbation: records, metrics and poses bit-exact".into())
}

fn main() -> ExitCode {
    let tmp = TempDir::new().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("skeleton suite", Box::new(skeleton_suite)),
        ("degree-config algebra", Box::new(degree_algebra)),
        ("perception round-trip", Box::new(perception_round_trip)),
        ("metrics oracle equivalence", Box::new(metrics_oracles)),
        ("closed-loop success", Box::new(closed_loop)),
        ("stopping rule", Box::new(stopping_rule)),
        ("robustness harness", Box::new(|| robustness(tmp.path()))),
        ("replay determinism", Box::new(|| replay_determinism(tmp.path()))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let t0 = Instant::now();
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail} ({:.1} s)", t0.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
