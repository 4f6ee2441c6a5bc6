//! Worlds where a recorded path provably equals the geodesic shortest path:
//! one-cell-wide axis-aligned corridors with power-of-two cell sizes, so
//! every length is an exact binary fraction.

use skelnav::geom::Point2;
use skelnav::simenv::SimWorld;

pub struct SplCase {
    pub world: SimWorld,
    /// Corner points of the corridor, start first, goal last.
    pub path: Vec<Point2>,
}

/// Case `k` in 0..20: a staircase corridor with `1 + k % 4` turns and leg
/// lengths that vary with `k`.
pub fn spl_case(k: usize) -> SplCase {
    let cell = [0.125, 0.25, 0.5, 0.0625][k % 4];
    let turns = 1 + k % 4;
    let legs: Vec<usize> = (0..=turns).map(|i| 3 + (k * 7 + i * 5) % 9).collect();
    // Walk in cell coordinates (col, row-from-bottom), alternating east/north.
    let mut cells = vec![(1usize, 1usize)];
    let (mut c, mut r) = (1usize, 1usize);
    for (i, &len) in legs.iter().enumerate() {
        for _ in 0..len {
            if i % 2 == 0 {
                c += 1
            } else {
                r += 1
            }
            cells.push((c, r));
        }
    }
    let (w, h) = (c + 2, r + 2);
    let mut occ = vec![true; w * h];
    for &(cc, rr) in &cells {
        occ[(h - 1 - rr) * w + cc] = false;
    }
    let world = SimWorld::new(w, h, cell, occ).unwrap();
    let centre = |(cc, rr): (usize, usize)| Point2::new((cc as f64 + 0.5) * cell, (rr as f64 + 0.5) * cell);
    let mut path = vec![centre(cells[0])];
    let mut idx = 0;
    for &len in &legs {
        idx += len;
        path.push(centre(cells[idx]));
    }
    SplCase { world, path }
}
