//! Maps between finite spaces: control functions, coarsely n-to-1 analysis,
//! transfer of covers, factorization and finite group quotients.

mod group;
mod profile;
mod transfer;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covers::{min_cross_distance, Family};
use crate::error::{Error, Result};
use crate::metric::{PointSet, Space};

pub use group::{group_quotient, symmetrize_metric, GroupAction, Quotient};
pub use profile::{
    asdim_zero_witness, check_control, maximal_bounded_sets, n_to_1_control, n_to_1_profile, BoundedSets,
    worst_split, ControlCheck, ControlPoint, NToOneControl, Profile, Refusal, ZeroWitness,
};
pub use transfer::{factorize, pushforward_cover, pushforward_disjointify, Factorization, PushedCover, PushedDisjoint};

/// A total function between two finite spaces.
#[derive(Debug, Clone)]
pub struct CoarseMap {
    domain: Arc<Space>,
    codomain: Arc<Space>,
    assign: Vec<usize>,
}

impl CoarseMap {
    pub fn new(domain: Arc<Space>, codomain: Arc<Space>, assign: Vec<usize>) -> Result<Self> {
        if assign.len() != domain.len() {
            return Err(Error::Shape(format!(
                "assignment has {} entries for {} domain points",
                assign.len(),
                domain.len()
            )));
        }
        if let Some(&index) = assign.iter().find(|&&y| y >= codomain.len()) {
            return Err(Error::PointOutOfRange {
                index,
                len: codomain.len(),
            });
        }
        Ok(Self {
            domain,
            codomain,
            assign,
        })
    }

    pub fn identity(space: Arc<Space>) -> Self {
        let assign = (0..space.len()).collect();
        Self {
            domain: space.clone(),
            codomain: space,
            assign,
        }
    }

    pub fn domain(&self) -> &Arc<Space> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<Space> {
        &self.codomain
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    #[inline]
    pub fn at(&self, x: usize) -> usize {
        self.assign[x]
    }

    pub fn image(&self, a: &PointSet) -> PointSet {
        a.iter().map(|x| self.assign[x]).collect()
    }

    pub fn full_image(&self) -> PointSet {
        self.assign.iter().copied().collect()
    }

    pub fn preimage(&self, b: &PointSet) -> PointSet {
        (0..self.assign.len()).filter(|&x| b.contains(self.assign[x])).collect()
    }

    pub fn image_family(&self, fam: &Family) -> Family {
        Family {
            sets: fam.sets.iter().map(|s| self.image(s)).collect(),
            colors: fam.colors.clone(),
        }
    }

    pub fn is_surjective(&self) -> bool {
        self.full_image().len() == self.codomain.len()
    }

    pub fn require_surjective(&self) -> Result<()> {
        let img = self.full_image();
        match (0..self.codomain.len()).find(|&y| !img.contains(y)) {
            Some(y) => Err(Error::NotSurjective(y)),
            None => Ok(()),
        }
    }

    /// Same assignment on a different (re-metrized) domain with the same points.
    pub fn with_domain(&self, domain: Arc<Space>) -> Result<Self> {
        Self::new(domain, self.codomain.clone(), self.assign.clone())
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &CoarseMap) -> Result<Self> {
        if next.domain.len() != self.codomain.len() {
            return Err(Error::Shape("composition of maps with mismatched spaces".into()));
        }
        let assign = self.assign.iter().map(|&y| next.assign[y]).collect();
        Self::new(self.domain.clone(), next.codomain.clone(), assign)
    }
}

/// Nondecreasing right-constant function on `[0, ∞)`; zero before the first
/// breakpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub breakpoints: Vec<(f64, f64)>,
}

impl StepFunction {
    /// Sorts by abscissa and replaces values by their running maximum.
    pub fn monotone(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        let mut hi = f64::NEG_INFINITY;
        for (r, v) in points {
            hi = hi.max(v);
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 = hi,
                _ => out.push((r, hi)),
            }
        }
        Self { breakpoints: out }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&(b, _)| b <= r);
        if k == 0 {
            0.0
        } else {
            self.breakpoints[k - 1].1
        }
    }
}

/// A control function, either tabulated or affine `slope·r + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Control {
    Affine { slope: f64, offset: f64 },
    Step(StepFunction),
}

impl Control {
    pub fn identity() -> Self {
        Control::Affine {
            slope: 1.0,
            offset: 0.0,
        }
    }

    pub fn linear(slope: f64) -> Self {
        Control::Affine { slope, offset: 0.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Control::Affine { slope, offset } => slope * r + offset,
            Control::Step(s) => s.eval(r),
        }
    }
}

/// Tight upper control `E(r) = max{d_Y(fx, fy) : d_X(x, y) ≤ r}`, with
/// breakpoints at realized domain distances.
pub fn control_upper(f: &CoarseMap) -> StepFunction {
    let (x, y) = (f.domain(), f.codomain());
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((x.d(i, j), y.d(f.at(i), f.at(j))));
        }
    }
    StepFunction::monotone(pairs)
}

/// `max{d_Y(fx, fy) : d_X(x, y) < r}`; `-∞` when no pair qualifies.
pub fn control_upper_strict(f: &CoarseMap, r: f64) -> f64 {
    let (x, y) = (f.domain(), f.codomain());
    let mut best = if r > 0.0 { 0.0 } else { f64::NEG_INFINITY };
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            if x.d(i, j) < r {
                best = f64::max(best, y.d(f.at(i), f.at(j)));
            }
        }
    }
    best
}

/// Preimages of a family of the codomain; empty preimages are dropped.
///
/// The preimages are `d`-disjoint as soon as members with nonempty preimage
/// are farther apart than [`control_upper_strict`] at `d`; that precondition
/// is checked and a violating pair reported.
pub fn pullback_family(f: &CoarseMap, fam: &Family, d: f64) -> Result<Family> {
    fam.check_in(f.codomain())?;
    let pre: Vec<(usize, PointSet)> = fam
        .sets
        .iter()
        .enumerate()
        .map(|(i, s)| (i, f.preimage(s)))
        .filter(|(_, p)| !p.is_empty())
        .collect();
    let hit = Family::new(pre.iter().map(|(i, _)| fam.sets[*i].clone()).collect());
    let required = control_upper_strict(f, d);
    if let Some((dist, x, y)) = min_cross_distance(f.codomain(), &hit) {
        if dist <= required {
            return Err(Error::NotDisjoint { x, y, dist, required });
        }
    }
    let colors = fam.colors.as_ref().map(|c| pre.iter().map(|(i, _)| c[*i]).collect());
    Ok(Family {
        sets: pre.into_iter().map(|(_, p)| p).collect(),
        colors,
    })
}
