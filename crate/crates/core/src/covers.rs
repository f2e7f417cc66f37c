//! Families of subsets and their scale statistics, plus the multiplicity to
//! disjointness construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{PointSet, Space};

/// An indexed family of subsets of one space, optionally grouped by color.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub sets: Vec<PointSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<usize>>,
}

impl Family {
    pub fn new(sets: Vec<PointSet>) -> Self {
        Self { sets, colors: None }
    }

    pub fn colored(sets: Vec<PointSet>, colors: Vec<usize>) -> Result<Self> {
        if sets.len() != colors.len() {
            return Err(Error::Shape(format!(
                "{} sets but {} colors",
                sets.len(),
                colors.len()
            )));
        }
        Ok(Self {
            sets,
            colors: Some(colors),
        })
    }

    pub fn single(set: PointSet) -> Self {
        Self::new(vec![set])
    }

    pub fn singletons(points: &PointSet) -> Self {
        Self::new(points.iter().map(PointSet::singleton).collect())
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn color(&self, i: usize) -> usize {
        self.colors.as_ref().map_or(0, |c| c[i])
    }

    /// One more than the largest color; 1 for uncolored nonempty families.
    pub fn color_count(&self) -> usize {
        match &self.colors {
            Some(c) => c.iter().max().map_or(0, |m| m + 1),
            None => usize::from(!self.sets.is_empty()),
        }
    }

    /// Number of colors that actually carry a set.
    pub fn used_colors(&self) -> usize {
        let mut c: Vec<usize> = (0..self.len()).map(|i| self.color(i)).collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    /// Sets grouped by color, indexed by color value (possibly empty classes).
    pub fn classes(&self) -> Vec<Family> {
        let mut out = vec![Family::default(); self.color_count()];
        for (i, s) in self.sets.iter().enumerate() {
            out[self.color(i)].sets.push(s.clone());
        }
        out
    }

    pub fn union(&self) -> PointSet {
        self.sets.iter().fold(PointSet::new(), |acc, s| acc.union(s))
    }

    /// First point of `support` not in any set.
    pub fn uncovered(&self, support: &PointSet) -> Option<usize> {
        let u = self.union();
        support.iter().find(|&x| !u.contains(x))
    }

    pub fn check_in(&self, space: &Space) -> Result<()> {
        self.sets.iter().try_for_each(|s| space.check_set(s))
    }
}

/// Closest cross pair between distinct members: `(distance, x, y)` with
/// `x ≤ y`. Overlapping members give distance 0. `None` for fewer than two
/// nonempty members.
pub fn min_cross_distance(space: &Space, fam: &Family) -> Option<(f64, usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, a) in fam.sets.iter().enumerate() {
        for b in &fam.sets[i + 1..] {
            if let Some(c) = space.closest_pair(a, b) {
                let better = match best {
                    None => true,
                    Some(bst) => c.0 < bst.0 || (c.0 == bst.0 && (c.1, c.2) < (bst.1, bst.2)),
                };
                if better {
                    best = Some(c);
                }
            }
        }
    }
    best
}

/// A pair from different members that is closer than the requested scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisjointViolation {
    pub x: usize,
    pub y: usize,
    pub dist: f64,
}

/// `Ok` if all cross pairs are at distance `≥ r`; otherwise the closest pair.
pub fn check_r_disjoint(space: &Space, fam: &Family, r: f64) -> std::result::Result<(), DisjointViolation> {
    match min_cross_distance(space, fam) {
        Some((dist, x, y)) if dist < r => Err(DisjointViolation { x, y, dist }),
        _ => Ok(()),
    }
}

pub fn is_r_disjoint(space: &Space, fam: &Family, r: f64) -> bool {
    check_r_disjoint(space, fam, r).is_ok()
}

/// Every color class is `r`-disjoint.
pub fn classes_r_disjoint(space: &Space, fam: &Family, r: f64) -> std::result::Result<(), (usize, DisjointViolation)> {
    for (c, class) in fam.classes().iter().enumerate() {
        check_r_disjoint(space, class, r).map_err(|v| (c, v))?;
    }
    Ok(())
}

/// Largest number of members whose open `r`-neighborhoods (taken inside
/// `support`) contain a common point of `support`.
pub fn max_multiplicity_on(space: &Space, support: &PointSet, fam: &Family, r: f64) -> usize {
    support
        .iter()
        .map(|x| {
            fam.sets
                .iter()
                .filter(|u| !u.is_empty() && (u.contains(x) || space.dist_to_set(x, u) < r))
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// Nerve dimension of the `r`-expansions: max point multiplicity minus one,
/// `-1` when every member is empty.
pub fn dim_at_scale(space: &Space, fam: &Family, r: f64) -> i64 {
    dim_on(space, &space.all(), fam, r)
}

/// [`dim_at_scale`] inside the subspace `support`.
pub fn dim_on(space: &Space, support: &PointSet, fam: &Family, r: f64) -> i64 {
    max_multiplicity_on(space, support, fam, r) as i64 - 1
}

/// Dimension with closed `r`-expansions (`d ≤ r`).
pub fn dim_closed(space: &Space, fam: &Family, r: f64) -> i64 {
    dim_at_scale(space, fam, r.next_up())
}

/// Largest member diameter.
pub fn mesh(space: &Space, fam: &Family) -> Result<f64> {
    if fam.is_empty() {
        return Err(Error::Empty("family"));
    }
    Ok(fam
        .sets
        .iter()
        .map(|s| space.diam_or_zero(s))
        .fold(0.0, f64::max))
}

/// Largest `L` such that every open `L`-ball lies in some member; `+∞` when a
/// member is the whole space.
pub fn lebesgue_number(space: &Space, fam: &Family) -> Result<f64> {
    if let Some(x) = fam.uncovered(&space.all()) {
        return Err(Error::NotACover(x));
    }
    // B(x, L) ⊆ U  iff  L ≤ dist(x, X \ U)
    let complements: Vec<PointSet> = fam.sets.iter().map(|u| space.all().difference(u)).collect();
    Ok((0..space.len())
        .map(|x| {
            fam.sets
                .iter()
                .zip(&complements)
                .filter(|(u, _)| u.contains(x))
                .map(|(_, c)| space.dist_to_set(x, c))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min))
}

/// A set keyed by the index set `T` of input members that defines it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyed {
    pub key: Vec<usize>,
    pub set: PointSet,
}

/// Audit record of [`make_disjoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointTrace {
    pub scale: f64,
    pub n: usize,
    pub support: PointSet,
    /// `level[s][k]` is `f_s` at the `k`-th support point; `None` is `+∞`.
    pub level: Vec<Vec<Option<f64>>>,
    /// `W_T` for every realized `T`.
    pub w_sets: Vec<Keyed>,
    /// `{x ∈ W_T : B(x, scale/(2n+2)) ⊆ W_T}`.
    pub inner: Vec<Keyed>,
    /// The output sets: each point goes to the `T` cut at its largest gap.
    pub cores: Vec<Keyed>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disjointified {
    pub family: Family,
    pub trace: DisjointTrace,
}

/// [`make_disjoint_on`] over the whole space.
pub fn make_disjoint(space: &Space, cover: &Family, r: f64, n: Option<usize>) -> Result<Disjointified> {
    make_disjoint_on(space, &space.all(), cover, r, n)
}

/// Splits a cover of `support` with `dim_r ≤ n` into a partition colored
/// `0..=n` whose classes are `r/(n+1)`-disjoint. Each output set lies in
/// `⋂_{t∈T} B(U_t, r)` for its key `T`. Neighborhoods are taken in `support`.
pub fn make_disjoint_on(
    space: &Space,
    support: &PointSet,
    cover: &Family,
    r: f64,
    n: Option<usize>,
) -> Result<Disjointified> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::BadScale(r));
    }
    space.check_set(support)?;
    if support.is_empty() {
        return Err(Error::Empty("support"));
    }
    for s in &cover.sets {
        if let Some(x) = s.iter().find(|&x| !support.contains(x)) {
            return Err(Error::Invalid(format!("member point {x} lies outside the support")));
        }
    }
    if let Some(x) = cover.uncovered(support) {
        return Err(Error::NotACover(x));
    }
    let dim = dim_on(space, support, cover, r);
    let n = n.unwrap_or(dim.max(0) as usize);
    if dim > n as i64 {
        return Err(Error::DimensionTooHigh {
            found: dim,
            bound: n as i64,
        });
    }

    let pts = support.as_slice();
    let outside: Vec<PointSet> = cover
        .sets
        .iter()
        .map(|u| {
            let nb = space.neighborhood(u, r).intersection(support);
            support.difference(&nb)
        })
        .collect();
    // f_s(x) = dist(x, support \ B(U_s, r)), +∞ if that complement is empty
    let level: Vec<Vec<f64>> = outside
        .iter()
        .map(|out| pts.iter().map(|&x| space.dist_to_set(x, out)).collect())
        .collect();

    let sorted_positive = |k: usize| -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = (0..cover.len())
            .map(|s| (s, level[s][k]))
            .filter(|&(_, f)| f > 0.0)
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    };
    let gap = |hi: f64, lo: f64| -> f64 {
        match (hi.is_infinite(), lo.is_infinite()) {
            (true, true) => 0.0,
            (true, false) => f64::INFINITY,
            _ => hi - lo,
        }
    };

    let mut realized: Vec<Vec<usize>> = Vec::new();
    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(pts.len());
    for k in 0..pts.len() {
        let vals = sorted_positive(k);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..vals.len() {
            let next = vals.get(i + 1).map_or(0.0, |v| v.1);
            let g = gap(vals[i].1, next);
            if g > 0.0 {
                let mut key: Vec<usize> = vals[..=i].iter().map(|v| v.0).collect();
                key.sort_unstable();
                realized.push(key);
                if best.is_none_or(|(_, bg)| g > bg) {
                    best = Some((i, g));
                }
            }
        }
        let (cut, _) = best.expect("a point of a member has f ≥ r > 0");
        let mut key: Vec<usize> = vals[..=cut].iter().map(|v| v.0).collect();
        key.sort_unstable();
        chosen.push(key);
    }
    realized.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    realized.dedup();

    let w_sets: Vec<Keyed> = realized
        .iter()
        .map(|key| {
            let set = (0..pts.len())
                .filter(|&k| {
                    let inside = key.iter().map(|&t| level[t][k]).fold(f64::INFINITY, f64::min);
                    let rest = (0..cover.len())
                        .filter(|s| !key.contains(s))
                        .map(|s| level[s][k])
                        .fold(0.0, f64::max);
                    inside > rest
                })
                .map(|k| pts[k])
                .collect();
            Keyed {
                key: key.clone(),
                set,
            }
        })
        .collect();
    let shrink = r / (2 * n + 2) as f64;
    let inner = w_sets
        .iter()
        .map(|w| Keyed {
            key: w.key.clone(),
            set: inner_within(space, support, &w.set, shrink),
        })
        .collect();

    let mut cores: Vec<Keyed> = Vec::new();
    for key in &realized {
        let set: PointSet = (0..pts.len())
            .filter(|&k| &chosen[k] == key)
            .map(|k| pts[k])
            .collect();
        if !set.is_empty() {
            cores.push(Keyed {
                key: key.clone(),
                set,
            });
        }
    }
    let family = Family::colored(
        cores.iter().map(|c| c.set.clone()).collect(),
        cores.iter().map(|c| c.key.len() - 1).collect(),
    )?;
    let to_opt = |v: f64| v.is_finite().then_some(v);
    Ok(Disjointified {
        family,
        trace: DisjointTrace {
            scale: r,
            n,
            support: support.clone(),
            level: level
                .iter()
                .map(|row| row.iter().copied().map(to_opt).collect())
                .collect(),
            w_sets,
            inner,
            cores,
        },
    })
}

fn inner_within(space: &Space, support: &PointSet, a: &PointSet, r: f64) -> PointSet {
    a.iter()
        .filter(|&x| support.iter().all(|y| a.contains(y) || space.d(x, y) >= r))
        .collect()
}
