use skelnav::geom::Point2;

/// Minimum over every monotone, boundary-matched alignment, enumerated
/// recursively. Costs accumulate in path order.
pub fn exhaustive_dtw(a: &[Point2], b: &[Point2]) -> f64 {
    fn go(a: &[Point2], b: &[Point2], i: usize, j: usize, acc: f64) -> f64 {
        let acc = acc + a[i].dist(b[j]);
        if i + 1 == a.len() && j + 1 == b.len() {
            return acc;
        }
        let mut best = f64::INFINITY;
        if i + 1 < a.len() {
            best = best.min(go(a, b, i + 1, j, acc));
        }
        if j + 1 < b.len() {
            best = best.min(go(a, b, i, j + 1, acc));
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            best = best.min(go(a, b, i + 1, j + 1, acc));
        }
        best
    }
    go(a, b, 0, 0, 0.0)
}
