//! Straightforward reference thinning: full-image scans, simplicity decided
//! by flood-filling the 3x3 neighbourhood instead of a lookup table.

/// 3x3 neighbourhood as `nb[dr + 1][dc + 1]`, centre ignored.
pub type Nbhd = [[bool; 3]; 3];

fn components(cells: &[(usize, usize)], adjacent: impl Fn((usize, usize), (usize, usize)) -> bool) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; cells.len()];
    let mut out = Vec::new();
    for s in 0..cells.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![cells[s]];
        let mut stack = vec![s];
        while let Some(a) = stack.pop() {
            for b in 0..cells.len() {
                if !seen[b] && adjacent(cells[a], cells[b]) {
                    seen[b] = true;
                    comp.push(cells[b]);
                    stack.push(b);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// (8, 4) simple-point test: exactly one 8-component of foreground
/// neighbours, and exactly one 4-component of background neighbours that
/// touches the centre's 4-neighbourhood.
pub fn brute_simple(nb: &Nbhd) -> bool {
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for r in 0..3 {
        for c in 0..3 {
            if (r, c) == (1, 1) {
                continue;
            }
            if nb[r][c] { fg.push((r, c)) } else { bg.push((r, c)) }
        }
    }
    let adj8 = |a: (usize, usize), b: (usize, usize)| a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1;
    let adj4 = |a: (usize, usize), b: (usize, usize)| a.0.abs_diff(b.0) + a.1.abs_diff(b.1) == 1;
    let is4 = |p: &(usize, usize)| p.0.abs_diff(1) + p.1.abs_diff(1) == 1;
    let fg_comps = components(&fg, adj8).len();
    let bg_comps = components(&bg, adj4)
        .into_iter()
        .filter(|comp| comp.iter().any(is4))
        .count();
    fg_comps == 1 && bg_comps == 1
}

/// Neighbourhood code in N, NE, E, SE, S, SW, W, NW bit order.
pub fn nbhd_from_code(code: u8) -> Nbhd {
    const POS: [(usize, usize); 8] = [(0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0), (0, 0)];
    let mut nb = [[false; 3]; 3];
    for (k, &(r, c)) in POS.iter().enumerate() {
        nb[r][c] = code >> k & 1 == 1;
    }
    nb
}

fn nbhd(img: &[Vec<bool>], i: usize, j: usize) -> Nbhd {
    let mut nb = [[false; 3]; 3];
    for (r, row) in nb.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let (ii, jj) = (i as i64 + r as i64 - 1, j as i64 + c as i64 - 1);
            *v = ii >= 0
                && jj >= 0
                && (ii as usize) < img.len()
                && (jj as usize) < img[0].len()
                && img[ii as usize][jj as usize];
        }
    }
    nb
}

fn removable(img: &[Vec<bool>], i: usize, j: usize, dir: (usize, usize)) -> bool {
    let nb = nbhd(img, i, j);
    let count = nb.iter().flatten().filter(|&&v| v).count() - usize::from(nb[1][1]);
    img[i][j] && !nb[dir.0][dir.1] && count >= 2 && brute_simple(&nb)
}

/// Directional thinning: north, south, east, west sub-passes; candidates
/// gathered over the whole image, then removed in row-major order after a
/// re-check; repeat until nothing changes.
pub fn reference_thin(src: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let mut img = src.to_vec();
    let dirs = [(0, 1), (2, 1), (1, 2), (1, 0)];
    loop {
        let mut changed = false;
        for dir in dirs {
            let mut cand = Vec::new();
            for i in 0..img.len() {
                for j in 0..img[0].len() {
                    if removable(&img, i, j, dir) {
                        cand.push((i, j));
                    }
                }
            }
            for (i, j) in cand {
                if removable(&img, i, j, dir) {
                    img[i][j] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return img;
        }
    }
}
