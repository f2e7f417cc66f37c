//! Metric sparsification at fixed parameters: mass-maximizing separated
//! families, the color-class bound, and measure transport along maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covers::{check_r_disjoint, make_disjoint_on, mesh, min_cross_distance, Family};
use crate::error::{Error, Result};
use crate::maps::{control_upper, CoarseMap, Control};
use crate::metric::{PointSet, Space};
use crate::util::cliques::{BitGraph, MAX_VERTICES};
use crate::util::lp::covering_game;

/// Largest support searched exhaustively by [`best_mass_family`].
pub const EXACT_CAP: usize = 16;

/// Largest preimage for which [`map_msp_check`] solves the covering game.
pub const GAME_CAP: usize = 12;

/// Slack when comparing float mass sums against thresholds.
pub const MASS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub weights: Vec<f64>,
    /// Set when the input did not sum to 1 and was rescaled.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub renormalized: bool,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Measure(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Measure("total mass is zero".into()));
        }
        if (total - 1.0).abs() <= 1e-9 {
            return Ok(Self {
                weights,
                renormalized: false,
            });
        }
        Ok(Self {
            weights: weights.iter().map(|w| w / total).collect(),
            renormalized: true,
        })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        Self::new(vec![1.0 / len as f64; len])
    }

    pub fn uniform_on(len: usize, support: &PointSet) -> Result<Self> {
        let mut w = vec![0.0; len];
        for x in support {
            w[x] = 1.0 / support.len() as f64;
        }
        Self::new(w)
    }

    pub fn point(len: usize, x: usize) -> Result<Self> {
        let mut w = vec![0.0; len];
        w[x] = 1.0;
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self, a: &PointSet) -> f64 {
        a.iter().map(|x| self.weights[x]).sum()
    }

    pub fn support(&self) -> PointSet {
        (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect()
    }

    /// `μ(· ∩ a) / μ(a)`.
    pub fn restricted(&self, a: &PointSet) -> Result<Self> {
        let mut w = vec![0.0; self.len()];
        for x in a {
            w[x] = self.weights[x];
        }
        Self::new(w).map(|mut m| {
            m.renormalized = false;
            m
        })
    }

    fn check_on(&self, space: &Space) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::Measure(format!("{} weights for {} points", self.len(), space.len())));
        }
        Ok(())
    }
}

/// An `r`-disjoint family of `s`-bounded sets together with its mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassFamily {
    pub family: Family,
    pub scale: f64,
    pub bound: f64,
    pub mass: f64,
}

impl MassFamily {
    /// Checks the certificate triple: disjointness, boundedness and mass.
    pub fn certify(space: &Space, mu: &Measure, family: Family, scale: f64, bound: f64) -> Result<Self> {
        mu.check_on(space)?;
        family.check_in(space)?;
        if let Err(v) = check_r_disjoint(space, &family, scale) {
            return Err(Error::NotDisjoint {
                x: v.x,
                y: v.y,
                dist: v.dist,
                required: scale,
            });
        }
        if let Some(s) = family.sets.iter().find(|s| space.diam_or_zero(s) > bound) {
            return Err(Error::Invalid(format!(
                "member of diameter {} exceeds the bound {bound}",
                space.diam_or_zero(s)
            )));
        }
        let mass = family.sets.iter().map(|s| mu.mass(s)).sum();
        Ok(Self {
            family,
            scale,
            bound,
            mass,
        })
    }
}

/// How points of a union are chained into components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    /// `d < r`: components are the coarsest `r`-disjoint split.
    Strict,
    /// `d ≤ r`.
    Closed,
}

fn components(space: &Space, a: &PointSet, r: f64, link: Link) -> Vec<PointSet> {
    match link {
        Link::Strict => space.strict_components(a, r),
        Link::Closed => space.components(a, r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestMass {
    pub family: MassFamily,
    /// `false`: greedy, the mass is only a lower bound on the optimum.
    pub exact: bool,
}

/// An `r`-disjoint family of `s`-bounded sets of largest mass.
pub fn best_mass_family(space: &Space, mu: &Measure, r: f64, s: f64) -> Result<BestMass> {
    let best = best_mass_union(space, mu, r, s, Link::Strict)?;
    Ok(BestMass {
        family: MassFamily::certify(space, mu, Family::new(best.components), r, s)?,
        exact: best.exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestUnion {
    pub union: PointSet,
    pub components: Vec<PointSet>,
    pub mass: f64,
    pub exact: bool,
}

/// Largest-mass subset whose components (under `link` at `r`) are all
/// `s`-bounded. Exhaustive when the support has at most [`EXACT_CAP`]
/// points, else [`greedy_mass_union`].
pub fn best_mass_union(space: &Space, mu: &Measure, r: f64, s: f64, link: Link) -> Result<BestUnion> {
    if !(r >= 0.0 && s >= 0.0) {
        return Err(Error::BadScale(if r >= 0.0 { s } else { r }));
    }
    mu.check_on(space)?;
    if mu.support().len() <= EXACT_CAP {
        Ok(exact_mass_union(space, mu, r, s, link))
    } else {
        Ok(greedy_mass_union(space, mu, r, s, link))
    }
}

/// Every subset of the support; exponential in its size.
pub fn exact_mass_union(space: &Space, mu: &Measure, r: f64, s: f64, link: Link) -> BestUnion {
    let supp = mu.support();
    let pts = supp.as_slice();
    assert!(pts.len() < 32, "support too large for the exhaustive search");
    let mut best = (0.0, PointSet::new(), Vec::new());
    for mask in 1u32..(1 << pts.len()) {
        let set: PointSet = (0..pts.len()).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
        let m = mu.mass(&set);
        if m <= best.0 {
            continue;
        }
        let comps = components(space, &set, r, link);
        if comps.iter().all(|c| space.diam_or_zero(c) <= s) {
            best = (m, set, comps);
        }
    }
    BestUnion {
        union: best.1,
        components: best.2,
        mass: best.0,
        exact: true,
    }
}

/// Grows the heaviest `s`-bounded set by nearest neighbors, removes the
/// points linked to it at `r`, and repeats. A lower bound on the optimum.
pub fn greedy_mass_union(space: &Space, mu: &Measure, r: f64, s: f64, link: Link) -> BestUnion {
    let mut left = mu.support();
    let mut chosen: Vec<PointSet> = Vec::new();
    while !left.is_empty() {
        let mut pick: Option<(f64, PointSet)> = None;
        for c in &left {
            let mut order: Vec<usize> = left.iter().collect();
            order.sort_by(|&a, &b| space.d(c, a).total_cmp(&space.d(c, b)).then(a.cmp(&b)));
            let mut grown = PointSet::new();
            for p in order {
                if grown.iter().all(|q| space.d(p, q) <= s) {
                    grown.insert(p);
                }
            }
            let m = mu.mass(&grown);
            if pick.as_ref().is_none_or(|(bm, _)| m > *bm) {
                pick = Some((m, grown));
            }
        }
        let (_, set) = pick.expect("nonempty");
        let blocked = match link {
            Link::Strict => space.neighborhood(&set, r),
            Link::Closed => (0..space.len()).filter(|&x| space.dist_to_set(x, &set) <= r).collect(),
        };
        left = left.difference(&blocked);
        chosen.push(set);
    }
    chosen.sort();
    let union = chosen.iter().fold(PointSet::new(), |a, b| a.union(b));
    BestUnion {
        mass: mu.mass(&union),
        union,
        components: chosen,
        exact: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorChoice {
    pub family: MassFamily,
    pub color: usize,
    pub colors: usize,
    /// `1 / colors`.
    pub lower_bound: f64,
}

/// The heaviest color class of a colored cover whose classes are
/// `r`-disjoint; its mass is at least `1 / colors`.
pub fn asdim_to_msp(space: &Space, cover: &Family, r: f64, mu: &Measure) -> Result<ColorChoice> {
    mu.check_on(space)?;
    cover.check_in(space)?;
    if let Some(x) = cover.uncovered(&space.all()) {
        return Err(Error::NotACover(x));
    }
    let bound = mesh(space, cover)?;
    let mut best: Option<(usize, MassFamily)> = None;
    let mut colors = 0;
    for (c, class) in cover.classes().into_iter().enumerate() {
        if class.is_empty() {
            continue;
        }
        colors += 1;
        let fam = MassFamily::certify(space, mu, class, r, bound)?;
        if best.as_ref().is_none_or(|(_, b)| fam.mass > b.mass) {
            best = Some((c, fam));
        }
    }
    let (color, family) = best.ok_or(Error::Empty("cover"))?;
    Ok(ColorChoice {
        family,
        color,
        colors,
        lower_bound: 1.0 / colors as f64,
    })
}

/// `λ({x}) = μ({y : s(y) = x})` for a right inverse `s` of a surjective map.
pub fn transfer_measure_selection(f: &CoarseMap, mu: &Measure, selection: &[usize]) -> Result<Measure> {
    f.require_surjective()?;
    let (x, y) = (f.domain(), f.codomain());
    mu.check_on(y)?;
    if selection.len() != y.len() {
        return Err(Error::Shape(format!("{} selected points for {} codomain points", selection.len(), y.len())));
    }
    let mut w = vec![0.0; x.len()];
    for (p, &s) in selection.iter().enumerate() {
        if s >= x.len() || f.at(s) != p {
            return Err(Error::BadSelection(p));
        }
        w[s] += mu.weights[p];
    }
    Ok(Measure {
        weights: w,
        renormalized: false,
    })
}

/// The least domain point of each fiber.
pub fn least_selection(f: &CoarseMap) -> Result<Vec<usize>> {
    f.require_surjective()?;
    let mut s = vec![usize::MAX; f.codomain().len()];
    for x in (0..f.domain().len()).rev() {
        s[f.at(x)] = x;
    }
    Ok(s)
}

/// `λ({y}) = μ(f⁻¹(y))`.
pub fn pushforward_measure(f: &CoarseMap, mu: &Measure) -> Result<Measure> {
    mu.check_on(f.domain())?;
    let mut w = vec![0.0; f.codomain().len()];
    for (x, &m) in mu.weights.iter().enumerate() {
        w[f.at(x)] += m;
    }
    Ok(Measure {
        weights: w,
        renormalized: mu.renormalized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushedMass {
    /// The heaviest color; its bound is the provable `E(B) + 2nR`.
    pub family: MassFamily,
    pub colors: usize,
    pub witness_mass: f64,
    /// `μ(f(∪Ω))`.
    pub image_mass: f64,
    /// `1 / (2n)`.
    pub lower_bound: f64,
    /// `E(B) + nR` and whether the output mesh stays within it.
    pub tight_bound: f64,
    pub tight_bound_holds: bool,
    /// `D(2nR)`, which the witness gaps had to exceed.
    pub required_gap: f64,
}

/// Pushes a domain witness for the transferred measure to the codomain.
///
/// The witness must be more than `D(2nR)`-disjoint with transferred mass at
/// least 1/2. Its images are disjointified at `nR` into at most `n` colors,
/// each `R`-disjoint, and the heaviest color is returned.
pub fn msp_pushforward(
    f: &CoarseMap,
    n: usize,
    control: &Control,
    mu: &Measure,
    r: f64,
    selection: &[usize],
    witness: &Family,
) -> Result<PushedMass> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::BadScale(r));
    }
    let (x, y) = (f.domain(), f.codomain());
    let lambda = transfer_measure_selection(f, mu, selection)?;
    witness.check_in(x)?;
    let sets: Vec<PointSet> = witness.sets.iter().filter(|s| !s.is_empty()).cloned().collect();
    let witness = Family::new(sets);
    if witness.is_empty() {
        return Err(Error::Empty("witness"));
    }
    let witness_mass = lambda.mass(&witness.union());
    if witness_mass < 0.5 - MASS_EPS {
        return Err(Error::MassThreshold {
            stage: "witness",
            mass: witness_mass,
            needed: 0.5,
        });
    }
    let required_gap = control.eval(2.0 * n as f64 * r);
    if let Some((dist, a, b)) = min_cross_distance(x, &witness) {
        if dist <= required_gap {
            return Err(Error::NotDisjoint {
                x: a,
                y: b,
                dist,
                required: required_gap,
            });
        }
    }
    let witness_mesh = mesh(x, &witness)?;
    let e_b = control_upper(f).eval(witness_mesh);

    let mut images: Vec<PointSet> = Vec::new();
    for s in &witness.sets {
        let im = f.image(s);
        if !images.contains(&im) {
            images.push(im);
        }
    }
    let support = images.iter().fold(PointSet::new(), |a, b| a.union(b));
    let image_mass = mu.mass(&support);
    let out = make_disjoint_on(y, &support, &Family::new(images), n as f64 * r, Some(n - 1))?;
    let bound = e_b + 2.0 * n as f64 * r;
    let mut best: Option<MassFamily> = None;
    let mut colors = 0;
    for class in out.family.classes() {
        if class.is_empty() {
            continue;
        }
        colors += 1;
        let fam = MassFamily::certify(y, mu, class, r, bound)?;
        if best.as_ref().is_none_or(|b| fam.mass > b.mass) {
            best = Some(fam);
        }
    }
    let family = best.expect("the support is nonempty");
    let tight_bound = e_b + n as f64 * r;
    let out_mesh = mesh(y, &family.family)?;
    Ok(PushedMass {
        tight_bound_holds: out_mesh <= tight_bound,
        family,
        colors,
        witness_mass,
        image_mass,
        lower_bound: 1.0 / (2 * n) as f64,
        tight_bound,
        required_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMass {
    pub stage: String,
    pub mass: f64,
    pub needed: f64,
    /// Mass equal to the threshold up to float slack.
    pub equality: bool,
}

impl StageMass {
    fn check(stage: String, mass: f64, needed: f64) -> Result<Self> {
        if mass < needed - MASS_EPS {
            return Err(Error::MassThreshold {
                stage: if stage == "codomain" { "codomain" } else { "fiber" },
                mass,
                needed,
            });
        }
        Ok(Self {
            equality: (mass - needed).abs() <= MASS_EPS,
            stage,
            mass,
            needed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulledMass {
    pub omega: PointSet,
    /// `R_X`-components of `omega` (chains with steps `≤ R_X`).
    pub components: Vec<PointSet>,
    pub mass: f64,
    /// Largest component diameter.
    pub bound: f64,
    pub scale_x: f64,
    /// `R_Y = E(R_X)`.
    pub scale_y: f64,
    /// Codomain stage, then one entry per component `Λ_i`.
    pub stages: Vec<StageMass>,
    pub result: StageMass,
}

/// Builds a heavy domain set from a codomain routine and a fiber routine.
///
/// `codomain_routine` gets the pushed measure and returns a set of mass at
/// least 1/2; it is split into `R_Y`-components `Λ_i`. `fiber_routine` gets
/// `f⁻¹(Λ_i)` and the normalized restriction of `μ` to it, and returns a
/// subset of mass at least 1/2. The union has mass at least 1/4.
pub fn msp_pullback(
    f: &CoarseMap,
    mu: &Measure,
    scale_x: f64,
    codomain_routine: impl Fn(&Measure) -> Result<PointSet>,
    fiber_routine: impl Fn(&PointSet, &Measure) -> Result<PointSet>,
) -> Result<PulledMass> {
    let (x, y) = (f.domain(), f.codomain());
    let lambda = pushforward_measure(f, mu)?;
    let scale_y = control_upper(f).eval(scale_x);
    let big = codomain_routine(&lambda)?;
    y.check_set(&big)?;
    let mut stages = vec![StageMass::check("codomain".into(), lambda.mass(&big), 0.5)?];
    let mut omega = PointSet::new();
    for (i, part) in y.components(&big, scale_y).iter().enumerate() {
        let pre = f.preimage(part);
        if mu.mass(&pre) <= 0.0 {
            continue;
        }
        let local = mu.restricted(&pre)?;
        let got = fiber_routine(&pre, &local)?;
        if !got.is_subset(&pre) {
            return Err(Error::Invalid(format!("fiber routine left the preimage of component {i}")));
        }
        stages.push(StageMass::check(format!("fiber {i}"), local.mass(&got), 0.5)?);
        omega = omega.union(&got);
    }
    let comps = x.components(&omega, scale_x);
    let bound = comps.iter().map(|c| x.diam_or_zero(c)).fold(0.0, f64::max);
    let mass = mu.mass(&omega);
    Ok(PulledMass {
        result: StageMass::check("result".into(), mass, 0.25)?,
        omega,
        components: comps,
        mass,
        bound,
        scale_x,
        scale_y,
        stages,
    })
}

/// [`msp_pullback`] with exhaustive routines: codomain components bounded by
/// `k`, domain components bounded by `s`.
pub fn msp_pullback_searched(f: &CoarseMap, mu: &Measure, scale_x: f64, k: f64, s: f64) -> Result<PulledMass> {
    let scale_y = control_upper(f).eval(scale_x);
    let (x, y) = (f.domain().clone(), f.codomain().clone());
    msp_pullback(
        f,
        mu,
        scale_x,
        |lambda| Ok(best_mass_union(&y, lambda, scale_y, k, Link::Closed)?.union),
        |_, local| Ok(best_mass_union(&x, local, scale_x, s, Link::Closed)?.union),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Achievable,
    NotAchievable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageCase {
    /// A maximal subset of `A` of diameter `< K`.
    pub image: PointSet,
    pub preimage: PointSet,
    /// Worst-case best mass over measures on the preimage (exact) or the
    /// smallest best mass seen (sampled).
    pub value: f64,
    pub worst: Vec<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMspReport {
    pub verdict: Verdict,
    pub worst_value: f64,
    pub cases: Vec<ImageCase>,
    /// `false` when `A` exceeded the clique cap and balls were used.
    pub cliques_exact: bool,
}

/// Whether every measure on `f⁻¹(A)` whose image support has diameter `< k`
/// puts mass above `c` on a set whose strict `r`-components are
/// `s`-bounded. Exact through the covering game for preimages of at most
/// [`GAME_CAP`] points; sampled (seeded) otherwise.
pub fn map_msp_check(f: &CoarseMap, a: &PointSet, r: f64, s: f64, c: f64, k: f64, seed: u64) -> Result<MapMspReport> {
    if !(r >= 0.0 && s >= 0.0 && k >= 0.0) {
        return Err(Error::Invalid("scales must be nonnegative".into()));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Invalid(format!("threshold {c} must lie in (0, 1)")));
    }
    let (x, y) = (f.domain(), f.codomain());
    y.check_set(a)?;
    let hit: PointSet = a.iter().filter(|&p| !f.preimage(&PointSet::singleton(p)).is_empty()).collect();
    let pts = hit.as_slice();
    let (images, cliques_exact): (Vec<PointSet>, bool) = if pts.len() <= MAX_VERTICES {
        let g = BitGraph::from_fn(pts.len(), |i, j| y.d(pts[i], pts[j]) < k);
        (
            g.maximal_cliques().into_iter().map(|c| c.into_iter().map(|i| pts[i]).collect()).collect(),
            true,
        )
    } else {
        let mut v: Vec<PointSet> = pts
            .iter()
            .map(|&p| pts.iter().copied().filter(|&q| y.d(p, q) < k / 2.0).collect())
            .collect();
        v.sort();
        v.dedup();
        (v, false)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(images.len());
    for image in images {
        let pre = f.preimage(&image);
        let q = pre.as_slice();
        let case = if q.len() <= GAME_CAP {
            let mut hyper: Vec<Vec<usize>> = Vec::new();
            let mut feasible = Vec::new();
            for mask in 1u32..(1 << q.len()) {
                let set: PointSet = (0..q.len()).filter(|i| mask >> i & 1 == 1).map(|i| q[i]).collect();
                if x.strict_components(&set, r).iter().all(|c| x.diam_or_zero(c) <= s) {
                    feasible.push(mask);
                }
            }
            // keep inclusion-maximal unions only
            for &m in &feasible {
                if !feasible.iter().any(|&o| o != m && o & m == m) {
                    hyper.push((0..q.len()).filter(|i| m >> i & 1 == 1).collect());
                }
            }
            let (value, local) = covering_game(q.len(), &hyper);
            let mut worst = vec![0.0; x.len()];
            for (i, &p) in q.iter().enumerate() {
                worst[p] = local[i];
            }
            ImageCase {
                image,
                preimage: pre,
                value,
                worst,
                exact: true,
            }
        } else {
            let mut trials: Vec<Vec<f64>> = Vec::new();
            let mut uniform = vec![0.0; x.len()];
            for &p in q {
                uniform[p] = 1.0;
            }
            trials.push(uniform);
            // points pairwise too close to separate and too far to share a set
            let mut clash: Vec<usize> = Vec::new();
            for &p in q {
                if clash.iter().all(|&o| x.d(p, o) < r && x.d(p, o) > s) {
                    clash.push(p);
                }
            }
            let mut w = vec![0.0; x.len()];
            for &p in &clash {
                w[p] = 1.0;
            }
            trials.push(w);
            for _ in 0..32 {
                let mut w = vec![0.0; x.len()];
                for &p in q {
                    let u: f64 = rng.gen_range(1e-9..1.0);
                    w[p] = -u.ln();
                }
                trials.push(w);
            }
            let mut value = f64::INFINITY;
            let mut worst = Vec::new();
            let mut all_exact = true;
            for w in trials {
                let mu = Measure::new(w)?;
                let b = best_mass_union(x, &mu, r, s, Link::Strict)?;
                all_exact &= b.exact;
                if b.mass < value {
                    value = b.mass;
                    worst = mu.weights;
                }
            }
            let _ = all_exact;
            ImageCase {
                image,
                preimage: pre,
                value,
                worst,
                exact: false,
            }
        };
        cases.push(case);
    }

    let worst_value = cases.iter().map(|c| c.value).fold(1.0, f64::min);
    let all_exact = cliques_exact && cases.iter().all(|c| c.exact);
    let verdict = if all_exact {
        if worst_value > c {
            Verdict::Achievable
        } else {
            Verdict::NotAchievable
        }
    } else {
        Verdict::Inconclusive
    };
    Ok(MapMspReport {
        verdict,
        worst_value,
        cases,
        cliques_exact,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::covers::make_disjoint;
    use crate::maps::tests::{abs_map, idx};
    use crate::maps::{group_quotient, GroupAction};
    use crate::metric::Label;

    fn range(lo: usize, hi_incl: usize) -> PointSet {
        PointSet::range(lo, hi_incl + 1)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    /// Every family of `r`-disjoint `s`-bounded sets drawn from all subsets.
    fn brute_best(space: &Space, mu: &Measure, r: f64, s: f64) -> f64 {
        let n = space.len();
        let bounded: Vec<PointSet> = (1u32..(1 << n))
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect::<PointSet>())
            .filter(|p| space.diam_or_zero(p) <= s)
            .collect();
        fn go(space: &Space, mu: &Measure, r: f64, cands: &[PointSet], from: usize, picked: &mut Vec<PointSet>) -> f64 {
            let here: f64 = picked.iter().map(|p| mu.mass(p)).sum();
            let mut best = here;
            for i in from..cands.len() {
                let ok = picked
                    .iter()
                    .all(|p| space.closest_pair(p, &cands[i]).is_some_and(|c| c.0 >= r));
                if ok {
                    picked.push(cands[i].clone());
                    best = best.max(go(space, mu, r, cands, i + 1, picked));
                    picked.pop();
                }
            }
            best
        }
        go(space, mu, r, &bounded, 0, &mut Vec::new())
    }

    #[test]
    fn uniform_ten_points() {
        let x = Space::integer_interval(0, 9);
        let mu = Measure::uniform(10).unwrap();
        let b = best_mass_family(&x, &mu, 2.0, 3.0).unwrap();
        assert!(b.exact);
        assert!(close(b.family.mass, 0.8), "{}", b.family.mass);
        assert_eq!(b.family.family.sets.len(), 2);
        assert!(b.family.family.sets.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn point_mass_and_large_bound() {
        let x = Space::integer_interval(0, 9);
        let b = best_mass_family(&x, &Measure::point(10, 4).unwrap(), 2.0, 0.0).unwrap();
        assert_eq!(b.family.family.sets, vec![PointSet::singleton(4)]);
        assert_eq!(b.family.mass, 1.0);
        let b = best_mass_family(&x, &Measure::uniform(10).unwrap(), 2.0, 9.0).unwrap();
        assert_eq!(b.family.family.sets, vec![x.all()]);
        assert!(close(b.family.mass, 1.0));
    }

    #[test]
    fn exact_matches_family_brute_force() {
        let x = Space::from_cloud(
            None,
            &[vec![0.0], vec![1.0], vec![2.5], vec![3.0], vec![5.0], vec![5.5], vec![8.0]],
            crate::metric::Norm::L1,
        )
        .unwrap();
        let mu = Measure::new(vec![0.1, 0.3, 0.05, 0.2, 0.15, 0.1, 0.1]).unwrap();
        for (r, s) in [(1.0, 1.0), (2.0, 1.0), (2.0, 3.0), (0.6, 0.0), (3.0, 2.5)] {
            let b = best_mass_family(&x, &mu, r, s).unwrap();
            assert!(close(b.family.mass, brute_best(&x, &mu, r, s)), "r={r} s={s}");
        }
    }

    #[test]
    fn greedy_is_flagged_and_dominated() {
        let x = Space::integer_interval(0, 19);
        let mu = Measure::uniform(20).unwrap();
        let g = best_mass_family(&x, &mu, 2.0, 3.0).unwrap();
        assert!(!g.exact);
        assert!(g.family.mass <= 0.8 + 1e-12);
        assert!(g.family.mass >= 0.75 - 1e-12);
    }

    #[test]
    fn color_bound() {
        let x = Space::integer_interval(0, 20);
        let cover = Family::new(vec![range(0, 10), range(5, 15), range(10, 20)]);
        let d = make_disjoint(&x, &cover, 3.0, None).unwrap();
        let n = d.trace.n;
        let scale = 3.0 / (n + 1) as f64;
        let mu = Measure::uniform(21).unwrap();
        let pick = asdim_to_msp(&x, &d.family, scale, &mu).unwrap();
        assert!(pick.family.mass >= pick.lower_bound - 1e-12);
        assert!(pick.lower_bound >= 1.0 / (n + 1) as f64);

        let one = asdim_to_msp(&x, &Family::single(x.all()), 1.0, &mu).unwrap();
        assert!(close(one.family.mass, 1.0));

        // all mass on the heaviest color's union
        let target = d.family.classes()[pick.color].union();
        let heavy = Measure::uniform_on(21, &target).unwrap();
        let pick2 = asdim_to_msp(&x, &d.family, scale, &heavy).unwrap();
        assert!(close(pick2.family.mass, 1.0));
    }

    #[test]
    fn color_bound_rejects_bad_covers() {
        let x = Space::integer_interval(0, 5);
        let mu = Measure::uniform(6).unwrap();
        assert!(matches!(
            asdim_to_msp(&x, &Family::new(vec![range(0, 4)]), 1.0, &mu),
            Err(Error::NotACover(5))
        ));
        assert!(asdim_to_msp(&x, &Family::new(vec![range(0, 2), range(3, 5)]), 2.0, &mu).is_err());
    }

    #[test]
    fn selection_transfer() {
        let x = Arc::new(Space::integer_interval(0, 4));
        let id = CoarseMap::identity(x.clone());
        let mu = Measure::new(vec![0.1, 0.2, 0.3, 0.4, 0.0]).unwrap();
        assert_eq!(transfer_measure_selection(&id, &mu, &[0, 1, 2, 3, 4]).unwrap().weights, mu.weights);

        let f = abs_map(3);
        let mu = Measure::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let at = |v: i64| f.domain().index_of(&Label::Int(v)).unwrap();
        let plus: Vec<usize> = [0, 1, 2, 3].map(at).to_vec();
        let l = transfer_measure_selection(&f, &mu, &plus).unwrap();
        for v in 0..4 {
            assert_eq!(l.weights[plus[v]], mu.weights[v]);
        }
        assert!(l.weights[..3].iter().all(|&w| w == 0.0));
        let minus: Vec<usize> = [0, -1, -2, 2].map(at).to_vec();
        assert!(matches!(
            transfer_measure_selection(&f, &mu, &minus),
            Err(Error::BadSelection(3))
        ));
    }

    #[test]
    fn quotient_selection_is_uniform() {
        let q = group_quotient(Arc::new(Space::cycle(6)), &GroupAction::cyclic_rotation(6, 2)).unwrap();
        let mu = Measure::uniform(3).unwrap();
        let l = transfer_measure_selection(&q.proj, &mu, &[0, 1, 2]).unwrap();
        assert_eq!(&l.weights[..3], &[1.0 / 3.0; 3]);
        assert!(l.weights[3..].iter().all(|&w| w == 0.0));
    }

    #[test]
    fn measure_pushforward() {
        let f = abs_map(2);
        let l = pushforward_measure(&f, &Measure::uniform(5).unwrap()).unwrap();
        assert!(close(l.weights[0], 0.2) && close(l.weights[1], 0.4) && close(l.weights[2], 0.4));
        let x = Arc::new(Space::integer_interval(0, 3));
        let y = Arc::new(Space::integer_interval(0, 0));
        let c = CoarseMap::new(x, y, vec![0; 4]).unwrap();
        assert_eq!(pushforward_measure(&c, &Measure::uniform(4).unwrap()).unwrap().weights, vec![1.0]);
    }

    #[test]
    fn identity_pushforward_returns_witness() {
        let x = Arc::new(Space::integer_interval(0, 9));
        let f = CoarseMap::identity(x.clone());
        let mu = Measure::uniform(10).unwrap();
        let w = Family::new(vec![range(0, 3), range(6, 9)]);
        let sel: Vec<usize> = (0..10).collect();
        let p = msp_pushforward(&f, 1, &Control::identity(), &mu, 1.0, &sel, &w).unwrap();
        assert_eq!(p.family.family.sets, w.sets);
        assert!(p.family.mass >= p.lower_bound);
        assert!(p.tight_bound_holds);
    }

    #[test]
    fn abs_pushforward_mass() {
        let f = abs_map(9);
        let (x, y) = (f.domain().clone(), f.codomain().clone());
        let mu = Measure::uniform(10).unwrap();
        let sel = idx(&x, &(0..10).collect::<Vec<_>>()).into_vec();
        let lambda = transfer_measure_selection(&f, &mu, &sel).unwrap();
        // witness for λ: D(2nR) = 4 with n = 2, R = 1, so gaps of at least 5
        let best = best_mass_family(&x.subspace(&lambda.support()), &Measure::uniform(10).unwrap(), 5.0, 4.0).unwrap();
        assert!(best.family.mass >= 0.5);
        let w = Family::new(
            best.family
                .family
                .sets
                .iter()
                .map(|s| s.iter().map(|i| lambda.support().as_slice()[i]).collect())
                .collect(),
        );
        let p = msp_pushforward(&f, 2, &Control::identity(), &mu, 1.0, &sel, &w).unwrap();
        assert!(p.family.mass >= 0.25 - 1e-12);
        assert!(is_ok(&y, &p.family));
    }

    fn is_ok(space: &Space, m: &MassFamily) -> bool {
        check_r_disjoint(space, &m.family, m.scale).is_ok()
            && m.family.sets.iter().all(|s| space.diam_or_zero(s) <= m.bound)
    }

    #[test]
    fn quotient_pushforward_mass() {
        let q = group_quotient(Arc::new(Space::cycle(6)), &GroupAction::cyclic_rotation(6, 2)).unwrap();
        let f = q.proj.clone();
        let mu = Measure::uniform(3).unwrap();
        let sel = least_selection(&f).unwrap();
        // orbits' least points 0,1,2 sit at distances 2 and 4 in the symmetrized metric
        let w = Family::single(PointSet::from(vec![0, 1, 2]));
        let p = msp_pushforward(&f, 2, &Control::linear(2.0), &mu, 1.0, &sel, &w).unwrap();
        assert!(p.family.mass >= 0.25);
        assert!(is_ok(f.codomain(), &p.family));
        assert_eq!(p.family.bound, control_upper(&f).eval(4.0) + 4.0);
    }

    #[test]
    fn pushforward_checks_witness() {
        let x = Arc::new(Space::integer_interval(0, 9));
        let f = CoarseMap::identity(x);
        let mu = Measure::uniform(10).unwrap();
        let sel: Vec<usize> = (0..10).collect();
        let light = Family::new(vec![range(0, 1)]);
        assert!(matches!(
            msp_pushforward(&f, 1, &Control::identity(), &mu, 1.0, &sel, &light),
            Err(Error::MassThreshold { .. })
        ));
        let close_sets = Family::new(vec![range(0, 3), range(5, 9)]);
        assert!(matches!(
            msp_pushforward(&f, 1, &Control::identity(), &mu, 1.0, &sel, &close_sets),
            Err(Error::NotDisjoint { .. })
        ));
    }

    #[test]
    fn identity_pullback() {
        let x = Arc::new(Space::integer_interval(0, 9));
        let f = CoarseMap::identity(x);
        let p = msp_pullback_searched(&f, &Measure::uniform(10).unwrap(), 1.0, 2.0, 2.0).unwrap();
        assert!(p.mass >= 0.25);
        assert!(p.bound <= 2.0);
    }

    #[test]
    fn abs_pullback() {
        let f = abs_map(9);
        let mu = Measure::uniform(19).unwrap();
        let p = msp_pullback_searched(&f, &mu, 1.0, 3.0, 3.0).unwrap();
        assert!(p.mass >= 0.25);
        assert!(p.components.iter().all(|c| f.domain().diam_or_zero(c) <= 3.0));
        assert!(p.stages.iter().all(|s| s.mass >= s.needed - MASS_EPS));
    }

    #[test]
    fn constant_pullback_is_one_fiber() {
        let x = Arc::new(Space::integer_interval(0, 7));
        let y = Arc::new(Space::integer_interval(0, 0));
        let f = CoarseMap::new(x.clone(), y, vec![0; 8]).unwrap();
        let mu = Measure::uniform(8).unwrap();
        let p = msp_pullback_searched(&f, &mu, 1.0, 0.0, 2.0).unwrap();
        assert_eq!(p.stages.len(), 2);
        let direct = best_mass_union(&x, &mu, 1.0, 2.0, Link::Closed).unwrap();
        assert_eq!(p.omega, direct.union);
    }

    #[test]
    fn pullback_reports_the_failing_stage() {
        let x = Arc::new(Space::integer_interval(0, 3));
        let f = CoarseMap::identity(x);
        let r = msp_pullback(
            &f,
            &Measure::uniform(4).unwrap(),
            1.0,
            |_| Ok(PointSet::singleton(0)),
            |_, _| Ok(PointSet::new()),
        );
        assert!(matches!(r, Err(Error::MassThreshold { stage: "codomain", .. })));
    }

    #[test]
    fn game_on_a_single_fiber() {
        // fiber {-2, 2} ∪ ... of |x| over the single point 2, plus 0
        let f = abs_map(3);
        let a = PointSet::singleton(2);
        let rep = map_msp_check(&f, &a, 10.0, 0.0, 0.4, 1.0, 0).unwrap();
        assert_eq!(rep.cases.len(), 1);
        assert!(close(rep.worst_value, 0.5));
        assert_eq!(rep.verdict, Verdict::Achievable);
        let rep = map_msp_check(&f, &a, 10.0, 0.0, 0.6, 1.0, 0).unwrap();
        assert_eq!(rep.verdict, Verdict::NotAchievable);
        // separated points can be taken together
        let rep = map_msp_check(&f, &a, 2.0, 0.0, 0.9, 1.0, 0).unwrap();
        assert!(close(rep.worst_value, 1.0));
    }

    #[test]
    fn large_bound_is_achievable() {
        let f = abs_map(4);
        let a = f.codomain().all();
        let rep = map_msp_check(&f, &a, 1.0, 8.0, 0.99, 2.0, 0).unwrap();
        assert!(close(rep.worst_value, 1.0));
        assert_eq!(rep.verdict, Verdict::Achievable);
    }

    #[test]
    fn crowded_fiber_is_not_achievable() {
        let x = Arc::new(Space::integer_interval(0, 4));
        let y = Arc::new(Space::integer_interval(0, 0));
        let f = CoarseMap::new(x, y, vec![0; 5]).unwrap();
        let rep = map_msp_check(&f, &PointSet::singleton(0), 10.0, 0.0, 0.9, 1.0, 0).unwrap();
        assert!(close(rep.worst_value, 0.2));
        assert_eq!(rep.verdict, Verdict::NotAchievable);
    }

    #[test]
    fn large_fibers_are_sampled() {
        let x = Arc::new(Space::integer_interval(0, 19));
        let y = Arc::new(Space::integer_interval(0, 0));
        let f = CoarseMap::new(x, y, vec![0; 20]).unwrap();
        let rep = map_msp_check(&f, &PointSet::singleton(0), 2.0, 1.0, 0.5, 1.0, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert!(!rep.cases[0].exact);
        assert_eq!(rep, map_msp_check(&f, &PointSet::singleton(0), 2.0, 1.0, 0.5, 1.0, 3).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_dominates_greedy(pts in prop::collection::btree_set(0i32..40, 17..22), ws in prop::collection::vec(0.01f64..1.0, 22), r in 1.0f64..4.0, s in 0.0f64..5.0) {
            let coords: Vec<Vec<f64>> = pts.iter().map(|&p| vec![p as f64]).collect();
            let x = Space::from_cloud(None, &coords, crate::metric::Norm::L1).unwrap();
            let mut w = ws[..pts.len()].to_vec();
            // restrict the support so the exhaustive branch applies
            for v in w.iter_mut().skip(EXACT_CAP) {
                *v = 0.0;
            }
            let mu = Measure::new(w.clone()).unwrap();
            let exact = best_mass_family(&x, &mu, r, s).unwrap();
            prop_assert!(exact.exact);
            // greedy on the same measure over a padded support
            let mut w2 = w;
            for v in w2.iter_mut().skip(EXACT_CAP) {
                *v = 1e-9;
            }
            let mu2 = Measure::new(w2).unwrap();
            let greedy = best_mass_family(&x, &mu2, r, s).unwrap();
            prop_assert!(!greedy.exact);
            let greedy_on_mu: f64 = greedy.family.family.sets.iter().map(|s| mu.mass(s)).sum();
            prop_assert!(exact.family.mass >= greedy_on_mu - 1e-9);
        }

        #[test]
        fn pushforward_preserves_total(ws in prop::collection::vec(0.0f64..1.0, 9)) {
            prop_assume!(ws.iter().sum::<f64>() > 0.0);
            let f = abs_map(4);
            let mu = Measure::new(ws).unwrap();
            let l = pushforward_measure(&f, &mu).unwrap();
            prop_assert!((l.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
