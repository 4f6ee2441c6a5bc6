//! A small office floor with seeded episodes, for trying the pipeline end
//! to end without authoring a map.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelnav::geom::{Point2, Pose};
use skelnav::simenv::{EpisodeSpec, MapBuilder, MapBundle, SimWorld};

/// 16 m x 10 m: an east-west corridor with three offices to the north and
/// two labs to the south, each behind a 1 m doorway.
pub fn office_world() -> SimWorld {
    MapBuilder::new(16.0, 10.0, 0.05)
        .carve_rect(0.5, 4.5, 15.5, 6.0)
        .carve_rect(0.5, 6.5, 5.0, 9.5)
        .carve_rect(5.5, 6.5, 10.5, 9.5)
        .carve_rect(11.0, 6.5, 15.5, 9.5)
        .carve_rect(0.5, 0.5, 7.5, 4.0)
        .carve_rect(8.0, 0.5, 15.5, 4.0)
        .carve_rect(2.25, 5.9, 3.25, 6.6)
        .carve_rect(7.5, 5.9, 8.5, 6.6)
        .carve_rect(12.75, 5.9, 13.75, 6.6)
        .carve_rect(3.5, 3.9, 4.5, 4.6)
        .carve_rect(11.25, 3.9, 12.25, 4.6)
        .region("corridor", 0.0, 4.25, 16.0, 6.25)
        .region("west office", 0.0, 6.25, 5.25, 10.0)
        .region("middle office", 5.25, 6.25, 10.75, 10.0)
        .region("east office", 10.75, 6.25, 16.0, 10.0)
        .region("west lab", 0.0, 0.0, 7.75, 4.25)
        .region("east lab", 7.75, 0.0, 16.0, 4.25)
        .object("sofa", 1.5, 8.5)
        .object("desk", 8.0, 9.0)
        .object("plant", 14.8, 7.0)
        .object("bench", 2.0, 1.5)
        .object("printer", 14.5, 1.2)
        .object("water cooler", 10.0, 5.6)
        .build()
}

/// Places the agent is sent to: room interiors and corridor stops.
const ANCHORS: &[(f64, f64)] = &[
    (2.0, 5.25),
    (5.5, 5.25),
    (8.0, 5.25),
    (10.5, 5.25),
    (14.0, 5.25),
    (2.75, 8.0),
    (4.0, 7.5),
    (8.0, 7.75),
    (9.5, 8.5),
    (13.25, 8.0),
    (14.5, 8.75),
    (4.0, 2.5),
    (2.0, 3.0),
    (6.0, 1.5),
    (11.75, 2.5),
    (9.5, 1.5),
    (14.0, 3.0),
];

/// Shortest free-space path from `start` to `goal` as cell centres, by
/// descending the goal's distance field. Endpoints are the exact inputs.
pub fn shortest_path(world: &SimWorld, start: Point2, goal: Point2) -> Option<Vec<Point2>> {
    let field = world.distance_field(goal).ok()?;
    let mut cell = world.cell_of(start)?;
    let mut d = field.distance_to(start).ok()?;
    if !d.is_finite() {
        return None;
    }
    let mut out = vec![start];
    let (h, w) = (world.height() as i64, world.width() as i64);
    while d > 0.0 {
        let mut best = (d, cell);
        for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)] {
            let (r, c) = (cell.0 as i64 + dr, cell.1 as i64 + dc);
            if r < 0 || c < 0 || r >= h || c >= w || world.is_occupied_cell(r as usize, c as usize) {
                continue;
            }
            if dr != 0 && dc != 0
                && (world.is_occupied_cell(cell.0, c as usize) || world.is_occupied_cell(r as usize, cell.1))
            {
                continue;
            }
            let nd = field.distance_to(world.cell_center((r as usize, c as usize))).ok()?;
            if nd < best.0 {
                best = (nd, (r as usize, c as usize));
            }
        }
        if best.1 == cell {
            return None;
        }
        (d, cell) = best;
        out.push(world.cell_center(cell));
    }
    *out.last_mut().expect("nonempty") = goal;
    Some(out)
}

/// Keeps every `stride`-th point plus both ends.
fn thin_path(path: &[Point2], stride: usize) -> Vec<Point2> {
    let mut out: Vec<Point2> = path.iter().step_by(stride).copied().collect();
    if out.last() != path.last() {
        out.push(*path.last().expect("nonempty"));
    }
    out
}

/// `n` episodes between distinct anchors whose geodesic separation lies in
/// [3, 9] m. Instructions have two to four clauses.
pub fn office_bundle(n: usize, seed: u64) -> MapBundle {
    let world = office_world();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episodes = Vec::with_capacity(n);
    while episodes.len() < n {
        let &(sx, sy) = ANCHORS.choose(&mut rng).expect("anchors");
        let &(gx, gy) = ANCHORS.choose(&mut rng).expect("anchors");
        let (start, goal) = (Point2::new(sx, sy), Point2::new(gx, gy));
        let yaw = f64::from(rng.random_range(0..12) * 30 - 150);
        let Some(path) = shortest_path(&world, start, goal) else {
            continue;
        };
        let len: f64 = path.windows(2).map(|p| p[0].dist(p[1])).sum();
        if !(3.0..=9.0).contains(&len) {
            continue;
        }
        let goal_name = world.region_at(goal).unwrap_or("the goal").to_string();
        let clauses = rng.random_range(2..=4);
        let mut parts = vec!["Leave where you are.".to_string()];
        parts.extend((2..clauses).map(|_| "Keep following the way through.".to_string()));
        parts.push(format!("Stop in the {goal_name}."));
        episodes.push(EpisodeSpec {
            id: format!("office-{:03}", episodes.len()),
            start: Pose::new(sx, sy, yaw),
            goal,
            instruction: parts.join(" "),
            subtask_hints: vec![goal],
            reference_path: thin_path(&path, 10),
        });
    }
    MapBundle::new(world, episodes)
}
