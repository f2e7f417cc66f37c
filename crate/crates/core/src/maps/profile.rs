//! Coarsely n-to-1 analysis over maximal `r`-bounded subsets of the image.

use serde::{Deserialize, Serialize};

use super::{CoarseMap, Control};
use crate::error::{Error, Result};
use crate::metric::{PointSet, Space};
use crate::util::cliques::{BitGraph, MAX_VERTICES};
use crate::util::clustering;

/// Maximal `r`-bounded subsets of a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedSets {
    pub sets: Vec<PointSet>,
    /// `false` when the point set exceeded the clique cap and closed balls of
    /// radius `r/2` were used instead (every such ball is `r`-bounded, but not
    /// every `r`-bounded set lies in one).
    pub exact: bool,
}

/// Every `r`-bounded subset of `points` lies in one of the returned sets.
/// Exact (maximal cliques of the `d ≤ r` graph) up to 64 points.
pub fn maximal_bounded_sets(space: &Space, points: &PointSet, r: f64) -> BoundedSets {
    let pts = points.as_slice();
    if pts.len() <= MAX_VERTICES {
        let g = BitGraph::from_fn(pts.len(), |i, j| space.d(pts[i], pts[j]) <= r);
        let sets = g
            .maximal_cliques()
            .into_iter()
            .map(|c| c.into_iter().map(|i| pts[i]).collect())
            .collect();
        BoundedSets { sets, exact: true }
    } else {
        let mut sets: Vec<PointSet> = pts
            .iter()
            .map(|&c| pts.iter().copied().filter(|&y| space.d(c, y) <= r / 2.0).collect())
            .collect();
        sets.sort();
        sets.dedup();
        BoundedSets { sets, exact: false }
    }
}

/// Worst case over maximal `r`-bounded `B` of the `R`-components of `f⁻¹(B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub max_components: usize,
    pub max_component_diam: f64,
    /// A set `B` attaining the component count.
    pub witness: PointSet,
    pub exact: bool,
}

pub fn n_to_1_profile(f: &CoarseMap, r: f64, big_r: f64) -> Profile {
    let (x, y) = (f.domain(), f.codomain());
    let bounded = maximal_bounded_sets(y, &f.full_image(), r);
    let mut out = Profile {
        max_components: 0,
        max_component_diam: 0.0,
        witness: PointSet::new(),
        exact: bounded.exact,
    };
    for b in &bounded.sets {
        let comps = x.components(&f.preimage(b), big_r);
        if comps.len() > out.max_components {
            out.max_components = comps.len();
            out.witness = b.clone();
        }
        for c in &comps {
            out.max_component_diam = out.max_component_diam.max(x.diam_or_zero(c));
        }
    }
    out
}

/// Least part-diameter bound at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub r: f64,
    /// Smallest achievable maximum part diameter (after the monotone envelope).
    pub inf: f64,
    /// Smallest value usable with the strict inequality `diam < C`.
    pub literal: f64,
    /// The set `B` that forces `inf` at this scale.
    pub witness: PointSet,
    /// `false` if some fiber used the component relaxation or the bounded
    /// sets came from the ball fallback.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NToOneControl {
    pub n: usize,
    pub points: Vec<ControlPoint>,
    /// Reported values are infima of part diameters; the strict condition
    /// needs anything above them.
    pub strict: bool,
}

impl NToOneControl {
    pub fn control(&self) -> Control {
        Control::Step(super::StepFunction::monotone(
            self.points.iter().map(|p| (p.r, p.inf)).collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    pub r: f64,
    pub needed: f64,
    pub cap: f64,
    pub witness: PointSet,
}

/// Worst min-max-diameter split of `f⁻¹(B)` into `n` parts over maximal
/// `r`-bounded `B`: `(value, witness B, exact)`.
pub fn worst_split(f: &CoarseMap, n: usize, r: f64) -> (f64, PointSet, bool) {
    let x = f.domain();
    let bounded = maximal_bounded_sets(f.codomain(), &f.full_image(), r);
    let mut worst = (0.0, PointSet::new(), bounded.exact);
    for b in &bounded.sets {
        let pre = f.preimage(b);
        let pts = pre.as_slice();
        let c = clustering::min_max_diameter(pts.len(), n, |i, j| x.d(pts[i], pts[j]));
        worst.2 &= c.exact;
        if c.value > worst.0 || worst.1.is_empty() {
            worst.0 = c.value.max(worst.0);
            worst.1 = b.clone();
        }
    }
    worst
}

/// Tabulates the least control `C` at every realized scale of the image. With
/// a cap, a scale whose requirement exceeds it is refused with its witness.
pub fn n_to_1_control(f: &CoarseMap, n: usize, cap: Option<f64>) -> Result<std::result::Result<NToOneControl, Refusal>> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let mut scales = vec![0.0];
    scales.extend(f.codomain().realized_distances(&f.full_image()));
    let mut points: Vec<ControlPoint> = Vec::with_capacity(scales.len());
    let mut running = 0.0_f64;
    for &r in &scales {
        let (value, witness, exact) = worst_split(f, n, r);
        if let Some(cap) = cap {
            if value > cap {
                return Ok(Err(Refusal {
                    r,
                    needed: value,
                    cap,
                    witness,
                }));
            }
        }
        running = running.max(value);
        points.push(ControlPoint {
            r,
            inf: running,
            literal: running.next_up(),
            witness,
            exact,
        });
    }
    Ok(Ok(NToOneControl {
        n,
        points,
        strict: true,
    }))
}

/// Outcome of checking a supplied control at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCheck {
    pub scale: f64,
    pub required: f64,
    pub supplied: f64,
    pub exact: bool,
}

/// Verifies that preimages of `scale`-bounded sets split into `n` parts of
/// diameter `≤ control(scale)`. A relaxed (upper-bound) requirement that
/// exceeds the control is reported as a failure too: nothing was certified.
pub fn check_control(f: &CoarseMap, n: usize, control: &Control, scale: f64) -> Result<ControlCheck> {
    let (required, witness, exact) = worst_split(f, n, scale);
    let supplied = control.eval(scale);
    if required > supplied {
        return Err(Error::Control(format!(
            "at scale {scale} the preimage of {:?} needs parts of diameter {required} (> {supplied}){}",
            witness.as_slice(),
            if exact { "" } else { " by the relaxed search" }
        )));
    }
    Ok(ControlCheck {
        scale,
        required,
        supplied,
        exact,
    })
}

/// Per maximal `r`-bounded `B`: `R`-components of `f⁻¹(B)` number at most `n`
/// and have diameter at most `2nR`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroWitness {
    pub r: f64,
    pub big_r: f64,
    pub worst_components: usize,
    pub worst_diam: f64,
    pub diam_bound: f64,
    pub holds: bool,
    pub witness: PointSet,
    pub exact: bool,
}

pub fn asdim_zero_witness(f: &CoarseMap, n: usize, control: &Control, r: f64, big_r: f64) -> Result<ZeroWitness> {
    let c = control.eval(r);
    if big_r < c {
        return Err(Error::Scales(format!("R = {big_r} is below C(r) = {c}")));
    }
    let p = n_to_1_profile(f, r, big_r);
    let bound = 2.0 * n as f64 * big_r;
    Ok(ZeroWitness {
        r,
        big_r,
        worst_components: p.max_components,
        worst_diam: p.max_component_diam,
        diam_bound: bound,
        holds: p.max_components <= n && p.max_component_diam <= bound,
        witness: p.witness,
        exact: p.exact,
    })
}
