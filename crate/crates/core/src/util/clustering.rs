//! Min-max-diameter partitions of a small point set into at most `n` parts.
//!
//! Points are local indices `0..len`; distances come from a closure so callers
//! can run this on fibers without building subspaces.

use super::union_find::UnionFind;

/// Largest point count solved exactly.
pub const EXACT_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Largest part diameter.
    pub value: f64,
    /// Parts as sorted local indices, ordered by least member.
    pub parts: Vec<Vec<usize>>,
    /// `true` when `value` is the optimum; `false` for the component relaxation.
    pub exact: bool,
}

/// Exact optimum for `len <= EXACT_CAP`, else [`component_relaxation`].
pub fn min_max_diameter(len: usize, parts: usize, d: impl Fn(usize, usize) -> f64) -> Clustering {
    if len <= EXACT_CAP {
        exact(len, parts, d)
    } else {
        component_relaxation(len, parts, d)
    }
}

/// Binary search over realized distances; each probe is an `n`-colouring of
/// the conflict graph `d > threshold`.
pub fn exact(len: usize, parts: usize, d: impl Fn(usize, usize) -> f64) -> Clustering {
    assert!(parts >= 1, "at least one part is required");
    let mut thresholds = vec![0.0];
    thresholds.extend(pairs(len).map(|(i, j)| d(i, j)));
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let colour_at = |t: f64| colour(len, parts, |i, j| d(i, j) > t);
    let (mut lo, mut hi) = (0, thresholds.len() - 1);
    let mut best = colour_at(thresholds[hi]).expect("one part always fits at the diameter");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match colour_at(thresholds[mid]) {
            Some(c) => {
                best = c;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let parts = classes(&best);
    Clustering {
        value: max_diameter(&parts, &d),
        parts,
        exact: true,
    }
}

/// Smallest realized scale at which the `≤`-components number at most `parts`;
/// the components form the partition. An upper bound on the optimum.
pub fn component_relaxation(len: usize, parts: usize, d: impl Fn(usize, usize) -> f64) -> Clustering {
    assert!(parts >= 1, "at least one part is required");
    let mut edges: Vec<(f64, usize, usize)> = pairs(len).map(|(i, j)| (d(i, j), i, j)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind::new(len);
    let mut count = len;
    let mut k = 0;
    while count > parts && k < edges.len() {
        let t = edges[k].0;
        while k < edges.len() && edges[k].0 == t {
            if uf.union(edges[k].1, edges[k].2) {
                count -= 1;
            }
            k += 1;
        }
    }
    let mut best = uf.classes();
    let mut value = max_diameter(&best, &d);
    for cand in [farthest_first(len, parts.min(len), &d), saturation_search(len, parts, &d)] {
        let v = max_diameter(&cand, &d);
        if cand.len() <= parts && v < value {
            best = cand;
            value = v;
        }
    }
    Clustering {
        value,
        parts: best,
        exact: false,
    }
}

/// Backtracking nodes per threshold probe above the exact cap.
const PROBE_BUDGET: u64 = 20_000;

// Binary search over thresholds with a DSATUR colouring of the conflict
// graph, then a budgeted backtracking one, as the (incomplete) probe.
fn saturation_search(len: usize, parts: usize, d: &impl Fn(usize, usize) -> f64) -> Vec<Vec<usize>> {
    let mut thresholds = vec![0.0];
    thresholds.extend(pairs(len).map(|(i, j)| d(i, j)));
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let (mut lo, mut hi) = (0, thresholds.len() - 1);
    let mut best = vec![0; len];
    while lo < hi {
        let mid = (lo + hi) / 2;
        let conflict = |i: usize, j: usize| d(i, j) > thresholds[mid];
        let found = saturation_colour(len, parts, conflict).or_else(|| match colour_within(len, parts, conflict, PROBE_BUDGET) {
            Probe::Found(c) => Some(c),
            _ => None,
        });
        match found {
            Some(c) => {
                best = c;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    classes(&best)
}

fn saturation_colour(len: usize, colours: usize, conflict: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    let mut colour: Vec<Option<usize>> = vec![None; len];
    let mut seen: Vec<Vec<bool>> = vec![vec![false; colours]; len];
    let degree: Vec<usize> = (0..len).map(|i| (0..len).filter(|&j| j != i && conflict(i, j)).count()).collect();
    for _ in 0..len {
        let v = (0..len)
            .filter(|&i| colour[i].is_none())
            .max_by_key(|&i| (seen[i].iter().filter(|&&b| b).count(), degree[i], std::cmp::Reverse(i)))?;
        let c = (0..colours).find(|&c| !seen[v][c])?;
        colour[v] = Some(c);
        for j in 0..len {
            if j != v && conflict(v, j) {
                seen[j][c] = true;
            }
        }
    }
    Some(colour.into_iter().map(|c| c.expect("every point coloured")).collect())
}

// Gonzalez k-center seeding, points assigned to the nearest centre.
fn farthest_first(len: usize, k: usize, d: &impl Fn(usize, usize) -> f64) -> Vec<Vec<usize>> {
    if len == 0 {
        return Vec::new();
    }
    let mut centres = vec![0];
    let mut near: Vec<f64> = (0..len).map(|i| d(0, i)).collect();
    while centres.len() < k {
        let (far, gap) = near
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if gap <= 0.0 {
            break;
        }
        centres.push(far);
        for (i, v) in near.iter_mut().enumerate() {
            *v = v.min(d(far, i));
        }
    }
    let mut parts = vec![Vec::new(); centres.len()];
    for i in 0..len {
        let mut best = 0;
        for (c, &ctr) in centres.iter().enumerate() {
            if d(ctr, i) < d(centres[best], i) {
                best = c;
            }
        }
        parts[best].push(i);
    }
    parts.retain(|p| !p.is_empty());
    parts.sort_by_key(|p| p[0]);
    parts
}

fn pairs(len: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).flat_map(move |i| ((i + 1)..len).map(move |j| (i, j)))
}

fn max_diameter(parts: &[Vec<usize>], d: &impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = 0.0_f64;
    for p in parts {
        for (a, &i) in p.iter().enumerate() {
            for &j in &p[a + 1..] {
                best = best.max(d(i, j));
            }
        }
    }
    best
}

fn classes(colours: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot: Vec<Option<usize>> = Vec::new();
    for (i, &c) in colours.iter().enumerate() {
        if slot.len() <= c {
            slot.resize(c + 1, None);
        }
        let s = *slot[c].get_or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[s].push(i);
    }
    out
}

/// Backtracking `k`-colouring; vertices taken in decreasing degree order and
/// new colours opened one at a time to break symmetry.
fn colour(len: usize, k: usize, conflict: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    match colour_within(len, k, conflict, u64::MAX) {
        Probe::Found(c) => Some(c),
        _ => None,
    }
}

enum Probe {
    Found(Vec<usize>),
    Impossible,
    OutOfBudget,
}

/// Backtracking `k`-colouring, largest degree first, giving up after `budget` nodes.
fn colour_within(len: usize, k: usize, conflict: impl Fn(usize, usize) -> bool, budget: u64) -> Probe {
    let adj: Vec<Vec<bool>> = (0..len)
        .map(|i| (0..len).map(|j| i != j && conflict(i.min(j), i.max(j))).collect())
        .collect();
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(adj[v].iter().filter(|&&b| b).count()));
    let mut colours = vec![usize::MAX; len];

    struct Ctx<'a> {
        k: usize,
        order: &'a [usize],
        adj: &'a [Vec<bool>],
        nodes: u64,
        budget: u64,
    }
    fn go(cx: &mut Ctx, pos: usize, used: usize, colours: &mut [usize]) -> Option<bool> {
        if pos == cx.order.len() {
            return Some(true);
        }
        cx.nodes += 1;
        if cx.nodes > cx.budget {
            return None;
        }
        let v = cx.order[pos];
        for c in 0..(used + 1).min(cx.k) {
            if (0..cx.adj.len()).any(|u| cx.adj[v][u] && colours[u] == c) {
                continue;
            }
            colours[v] = c;
            if go(cx, pos + 1, used.max(c + 1), colours)? {
                return Some(true);
            }
            colours[v] = usize::MAX;
        }
        Some(false)
    }

    let mut cx = Ctx {
        k,
        order: &order,
        adj: &adj,
        nodes: 0,
        budget,
    };
    match go(&mut cx, 0, 0, &mut colours) {
        Some(true) => Probe::Found(colours),
        Some(false) => Probe::Impossible,
        None => Probe::OutOfBudget,
    }
}
