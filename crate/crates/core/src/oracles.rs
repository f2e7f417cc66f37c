//! Exhaustive reference searches for small spaces. They share no code with
//! the searches they check beyond the distance matrix.

use crate::metric::Space;

/// Points at most this many for every oracle here.
pub const ORACLE_CAP: usize = 12;

/// Least `dim_r` over partitions whose blocks have diameter at most `cap`,
/// by depth-first search over block assignments with multiplicity pruning.
pub fn min_partition_dim(space: &Space, r: f64, cap: f64) -> i64 {
    let n = space.len();
    assert!(n <= ORACLE_CAP, "oracle limited to {ORACLE_CAP} points");
    if n == 0 {
        return -1;
    }
    struct St<'a> {
        space: &'a Space,
        r: f64,
        cap: f64,
        blocks: Vec<Vec<usize>>,
        // near[z]: bitmask of blocks within distance < r of z
        near: Vec<u32>,
        best: usize,
    }
    fn mult(near: &[u32]) -> usize {
        near.iter().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }
    fn go(st: &mut St, x: usize) {
        let n = st.space.len();
        if mult(&st.near) >= st.best {
            return;
        }
        if x == n {
            st.best = mult(&st.near);
            return;
        }
        for b in 0..=st.blocks.len() {
            if b < st.blocks.len() && st.blocks[b].iter().any(|&y| st.space.d(x, y) > st.cap) {
                continue;
            }
            if b == st.blocks.len() {
                st.blocks.push(Vec::new());
            }
            st.blocks[b].push(x);
            let saved = st.near.clone();
            for z in 0..n {
                if (st.r == 0.0 && z == x) || st.space.d(z, x) < st.r {
                    st.near[z] |= 1 << b;
                }
            }
            go(st, x + 1);
            st.near = saved;
            st.blocks[b].pop();
            if st.blocks[b].is_empty() {
                st.blocks.pop();
            }
        }
    }
    let mut st = St {
        space,
        r,
        cap,
        blocks: Vec::new(),
        near: vec![0; n],
        best: n + 1,
    };
    go(&mut st, 0);
    st.best as i64 - 1
}

/// Largest mass of a family of sets, pairwise at distance `≥ r`, each of
/// diameter `≤ s`. Members are built point by point.
pub fn max_family_mass(space: &Space, weights: &[f64], r: f64, s: f64) -> f64 {
    let mut pts: Vec<usize> = (0..space.len()).filter(|&x| weights[x] > 0.0).collect();
    assert!(pts.len() <= ORACLE_CAP, "oracle limited to {ORACLE_CAP} points");
    pts.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut rest = vec![0.0; pts.len() + 1];
    for i in (0..pts.len()).rev() {
        rest[i] = rest[i + 1] + weights[pts[i]];
    }
    struct St<'a> {
        space: &'a Space,
        w: &'a [f64],
        pts: Vec<usize>,
        rest: Vec<f64>,
        r: f64,
        s: f64,
        sets: Vec<Vec<usize>>,
        best: f64,
    }
    fn go(st: &mut St, i: usize, cur: f64) {
        if cur > st.best {
            st.best = cur;
        }
        if i == st.pts.len() || cur + st.rest[i] <= st.best {
            return;
        }
        let x = st.pts[i];
        let k = st.sets.len();
        for j in 0..=k {
            let fits = (0..k).all(|m| {
                st.sets[m]
                    .iter()
                    .all(|&y| if m == j { st.space.d(x, y) <= st.s } else { st.space.d(x, y) >= st.r })
            });
            if !fits {
                continue;
            }
            if j == k {
                st.sets.push(vec![x]);
            } else {
                st.sets[j].push(x);
            }
            go(st, i + 1, cur + st.w[x]);
            if j == k {
                st.sets.pop();
            } else {
                st.sets[j].pop();
            }
        }
        go(st, i + 1, cur);
    }
    let mut st = St {
        space,
        w: weights,
        pts,
        rest,
        r,
        s,
        sets: Vec::new(),
        best: 0.0,
    };
    go(&mut st, 0, 0.0);
    st.best
}

/// Whether the points can be split among `scales.len()` families, family
/// `i` being `scales[i]`-disjoint with members of diameter at most `cap`.
///
/// Points given to family `i` must share a member with everything closer
/// than `scales[i]`, so it suffices to check the chains of such links.
pub fn families_exist(space: &Space, scales: &[f64], cap: f64) -> bool {
    let n = space.len();
    assert!(n <= ORACLE_CAP, "oracle limited to {ORACLE_CAP} points");
    if scales.is_empty() {
        return n == 0;
    }
    fn chain_ok(space: &Space, owner: &[Option<usize>], x: usize, r: f64, cap: f64) -> bool {
        let fam = owner[x];
        let mut seen = vec![x];
        let mut i = 0;
        while i < seen.len() {
            let a = seen[i];
            for b in 0..owner.len() {
                if owner[b] == fam && !seen.contains(&b) && space.d(a, b) < r {
                    seen.push(b);
                }
            }
            i += 1;
        }
        seen.iter().all(|&a| seen.iter().all(|&b| space.d(a, b) <= cap))
    }
    fn go(space: &Space, scales: &[f64], cap: f64, owner: &mut Vec<Option<usize>>, x: usize) -> bool {
        if x == owner.len() {
            return true;
        }
        for (i, &r) in scales.iter().enumerate() {
            owner[x] = Some(i);
            if chain_ok(space, owner, x, r, cap) && go(space, scales, cap, owner, x + 1) {
                return true;
            }
        }
        owner[x] = None;
        false
    }
    let mut owner = vec![None; n];
    go(space, scales, cap, &mut owner, 0)
}

/// `max(sup_a d(a, B), sup_b d(b, A))` by direct scan.
pub fn hausdorff(space: &Space, a: &[usize], b: &[usize]) -> f64 {
    let one = |p: &[usize], q: &[usize]| {
        p.iter()
            .map(|&x| q.iter().map(|&y| space.d(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}
