//! Seeded random instances for the property suites.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covers::Family;
use crate::error::Result;
use crate::maps::{CoarseMap, Control};
use crate::metric::{Label, Norm, PointSet, Space};
use crate::msp::Measure;
use crate::trees::{net_balls, net_tree, Containment, DecompositionTree};

pub type Rand = ChaCha8Rng;

/// Independent stream for instance `i` of a run, so that instances do not
/// depend on one another's consumption.
pub fn instance_rng(seed: u64, stream: &str, i: usize) -> Rand {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h);
    rng.set_stream(i as u64);
    rng
}

/// Distinct integer points on a line or in the plane (ℓ¹).
pub fn random_space(rng: &mut Rand, lo: usize, hi: usize) -> Space {
    let len = rng.gen_range(lo..=hi);
    let plane = rng.gen_bool(0.5);
    let spread = (len as i64 * 3).max(8);
    let mut seen = BTreeSet::new();
    let mut coords = Vec::with_capacity(len);
    while coords.len() < len {
        let p: Vec<i64> = if plane {
            let side = (spread as f64).sqrt().ceil() as i64 + 2;
            vec![rng.gen_range(0..side * 2), rng.gen_range(0..side * 2)]
        } else {
            vec![rng.gen_range(0..spread)]
        };
        if seen.insert(p.clone()) {
            coords.push(p);
        }
    }
    coords.sort();
    let pts: Vec<Vec<f64>> = coords.iter().map(|c| c.iter().map(|&v| v as f64).collect()).collect();
    Space::from_cloud(None, &pts, Norm::L1).expect("distinct integer points form a metric")
}

/// Net balls of a random radius taken in shuffled order, each possibly
/// grown by a random margin so that members overlap.
pub fn random_cover(rng: &mut Rand, space: &Space) -> Family {
    let diam = space.diam_or_zero(&space.all()).max(1.0);
    let radius = rng.gen_range(0.0..diam / 3.0).floor();
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.shuffle(rng);
    let mut covered = vec![false; space.len()];
    let mut sets = Vec::new();
    for c in order {
        if covered[c] {
            continue;
        }
        let grow = if rng.gen_bool(0.3) { rng.gen_range(0.0..=radius + 1.0) } else { 0.0 };
        let ball: PointSet = (0..space.len()).filter(|&p| space.d(c, p) <= radius + grow).collect();
        for p in &ball {
            covered[p] = true;
        }
        sets.push(ball);
    }
    sets.sort();
    sets.dedup();
    Family::new(sets)
}

/// A map with the `n` it is built to satisfy and, when known, a control.
#[derive(Debug, Clone)]
pub struct RandomMap {
    pub kind: &'static str,
    pub map: CoarseMap,
    pub n: usize,
    pub control: Option<Control>,
}

/// Projection of `n` sheets over a random base. Over each base point a
/// random nonempty set of sheets is present; sheets sit at mutual distance
/// `sep` (added to the base distance). The preimage of any set splits by
/// sheet into isometric copies, so the identity is a control.
pub fn fold_map(rng: &mut Rand, max_points: usize) -> RandomMap {
    let n = rng.gen_range(1..=3usize);
    let base_len = rng.gen_range(4..=(max_points / n).max(4));
    let base = random_space(rng, base_len, base_len);
    let sep = rng.gen_range(1..=6) as f64;
    let mut pts = Vec::new();
    for y in 0..base.len() {
        let mut sheets: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
        if sheets.is_empty() {
            sheets.push(rng.gen_range(0..n));
        }
        pts.extend(sheets.into_iter().map(|s| (y, s)));
    }
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(y, s)| {
            pts.iter()
                .map(|&(y2, s2)| base.d(y, y2) + if s == s2 { 0.0 } else { sep })
                .collect()
        })
        .collect();
    let labels = pts.iter().map(|&(y, s)| Label::Str(format!("{}.{s}", base.label(y)))).collect();
    let domain = Space::from_matrix(Some(labels), rows).expect("sum of a metric and a discrete metric");
    let assign = pts.iter().map(|&(y, _)| y).collect();
    let map = CoarseMap::new(Arc::new(domain), Arc::new(base), assign).expect("valid by construction");
    RandomMap {
        kind: "fold",
        map,
        n,
        control: Some(Control::identity()),
    }
}

/// A surjection from a random space onto a random smaller space with fibers
/// of size at most `n`. No control is supplied; callers measure it.
pub fn scatter_map(rng: &mut Rand, max_points: usize) -> RandomMap {
    let n = rng.gen_range(1..=3usize);
    let y_len = rng.gen_range(3..=(max_points / n).clamp(3, 40));
    let codomain = random_space(rng, y_len, y_len);
    let x_len = rng.gen_range(y_len..=(y_len * n).min(max_points).max(y_len));
    let domain = random_space(rng, x_len, x_len);
    // every base point once, so the map is onto, then spare slots up to `n` per point
    let mut slots: Vec<usize> = (0..y_len).collect();
    let mut spare: Vec<usize> = (0..y_len).flat_map(|y| std::iter::repeat_n(y, n - 1)).collect();
    spare.shuffle(rng);
    slots.extend(spare);
    let mut assign: Vec<usize> = slots[..x_len].to_vec();
    assign.shuffle(rng);
    let map = CoarseMap::new(Arc::new(domain), Arc::new(codomain), assign).expect("valid by construction");
    RandomMap {
        kind: "scatter",
        map,
        n,
        control: None,
    }
}

/// Either kind of map, evenly.
pub fn random_map(rng: &mut Rand, max_points: usize) -> RandomMap {
    if rng.gen_bool(0.5) {
        fold_map(rng, max_points)
    } else {
        scatter_map(rng, max_points)
    }
}

/// A random valid tree in countable-asdim form: net-ball levels with
/// shrinking radii. With probability `cover_share` every non-root element
/// is thickened by an open margin, turning it into a cover-mode tree.
pub fn random_tree(rng: &mut Rand, space: &Space, cover_share: f64) -> Result<DecompositionTree> {
    let diam = space.diam_or_zero(&space.all()).max(2.0);
    let depth = rng.gen_range(1..=3usize);
    let mut radii = Vec::with_capacity(depth);
    let mut scales = Vec::with_capacity(depth);
    let mut radius = diam;
    for _ in 0..depth {
        radius = (radius / rng.gen_range(2.0..4.0)).floor().max(0.0);
        radii.push(radius);
        scales.push((radius * rng.gen_range(0.5..2.0)).max(1.0));
    }
    let mut tree = net_tree(space, &radii, &scales)?;
    if rng.gen_bool(cover_share) {
        let least = tree.scales.iter().copied().fold(f64::INFINITY, f64::min);
        let margin = (least / 2.0).floor().min(2.0);
        if margin > 0.0 {
            for level in tree.levels.iter_mut().skip(1) {
                for s in level.sets.iter_mut() {
                    *s = space.neighborhood(s, margin);
                }
            }
            for s in tree.scales.iter_mut() {
                *s -= 2.0 * margin;
            }
            tree.containment = Containment::Cover;
            let last = tree.levels.last().expect("root level");
            tree.terminal_mesh = last.sets.iter().map(|s| space.diam_or_zero(s)).fold(0.0, f64::max);
        }
    }
    Ok(tree)
}

/// Uniform, exponential or concentrated weights.
pub fn random_measure(rng: &mut Rand, len: usize) -> (&'static str, Measure) {
    let w: Vec<f64> = match rng.gen_range(0..4) {
        0 => vec![1.0; len],
        1 => (0..len).map(|_| (-rng.gen_range(0.0..4.0f64)).exp()).collect(),
        2 => {
            let x = rng.gen_range(0..len);
            (0..len).map(|i| if i == x { 1.0 } else { 1e-6 }).collect()
        }
        _ => {
            let k = rng.gen_range(1..=len.min(3));
            let mut idx: Vec<usize> = (0..len).collect();
            idx.shuffle(rng);
            let heavy: BTreeSet<usize> = idx[..k].iter().copied().collect();
            (0..len).map(|i| if heavy.contains(&i) { 1.0 } else { 0.0 }).collect()
        }
    };
    let kind = match w.iter().filter(|&&v| v == 0.0).count() {
        0 if w.iter().all(|&v| v == w[0]) => "uniform",
        0 if w.iter().any(|&v| v == 1e-6) => "concentrated",
        0 => "exponential",
        _ => "atomic",
    };
    (kind, Measure::new(w).expect("positive total weight"))
}

/// Greedy cover by closed balls of `radius`, in index order.
pub fn ball_cover(space: &Space, radius: f64) -> Family {
    Family::new(net_balls(space, &space.all(), radius))
}
