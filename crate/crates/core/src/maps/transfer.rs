//! Pushing covers forward along coarsely n-to-1 maps and factoring such maps
//! through a space with small fibers.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_control, control_upper, CoarseMap, Control, ControlCheck};
use crate::covers::{dim_closed, dim_on, make_disjoint_on, mesh, DisjointTrace, Family};
use crate::error::{Error, Result};
use crate::metric::{PointSet, Space};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushedCover {
    /// `{f(U) : U ∈ 𝒰}` on the codomain.
    pub family: Family,
    /// `dim_r` of the image family inside `f(X)`.
    pub image_dim: i64,
    /// `dim` of `𝒰` with closed `C(2r)`-expansions.
    pub source_dim: i64,
    /// `(source_dim + 1)·n − 1`.
    pub bound: i64,
    /// `dim` of `𝒰` with open `C(r)`-expansions, for comparison.
    pub source_dim_open: i64,
    pub control: ControlCheck,
}

impl PushedCover {
    pub fn holds(&self) -> bool {
        self.image_dim <= self.bound
    }
}

fn require_cover(f: &CoarseMap, cover: &Family) -> Result<()> {
    cover.check_in(f.domain())?;
    match cover.uncovered(&f.domain().all()) {
        Some(x) => Err(Error::NotACover(x)),
        None => Ok(()),
    }
}

/// Images of the members of a cover of the domain. The image family has
/// `dim_r ≤ (dim^closed_{C(2r)}(𝒰) + 1)·n − 1`; the control is verified at
/// scale `2r` first.
pub fn pushforward_cover(f: &CoarseMap, cover: &Family, r: f64, n: usize, control: &Control) -> Result<PushedCover> {
    require_cover(f, cover)?;
    let check = check_control(f, n, control, 2.0 * r)?;
    let family = f.image_family(cover);
    let image_dim = dim_on(f.codomain(), &f.full_image(), &family, r);
    let source_dim = dim_closed(f.domain(), cover, control.eval(2.0 * r));
    let source_dim_open = crate::covers::dim_at_scale(f.domain(), cover, control.eval(r));
    Ok(PushedCover {
        family,
        image_dim,
        source_dim,
        bound: (source_dim + 1) * n as i64 - 1,
        source_dim_open,
        control: check,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushedDisjoint {
    pub family: Family,
    /// `m`: closed `C(2r)` dimension of the input cover.
    pub source_dim: i64,
    pub color_bound: usize,
    /// Every color class is disjoint at this scale, `r / (n(m+1))`.
    pub disjoint_scale: f64,
    /// `E(b) + 2r` with `b` the input mesh.
    pub mesh_bound: f64,
    pub trace: DisjointTrace,
}

/// Pushes a cover forward and disjointifies the image inside `f(X)` at scale
/// `r`: at most `n(m+1)` colors, each `r/(n(m+1))`-disjoint, mesh at most
/// `E(b) + 2r`.
pub fn pushforward_disjointify(f: &CoarseMap, cover: &Family, r: f64, n: usize, control: &Control) -> Result<PushedDisjoint> {
    let pushed = pushforward_cover(f, cover, r, n, control)?;
    let image = f.full_image();
    let dim = pushed.image_dim.max(0) as usize;
    let out = make_disjoint_on(f.codomain(), &image, &pushed.family, r, Some(dim))?;
    let b = mesh(f.domain(), cover)?;
    let colors = n * (pushed.source_dim.max(0) as usize + 1);
    Ok(PushedDisjoint {
        family: out.family,
        source_dim: pushed.source_dim,
        color_bound: colors,
        disjoint_scale: r / colors as f64,
        mesh_bound: control_upper(f).eval(b) + 2.0 * r,
        trace: out.trace,
    })
}

/// `f = q ∘ p` with `p: X → Z` a coarse equivalence and `q` at most `n`-to-1.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// The domain with distances replaced by `max(1, d)`.
    pub adjusted: Arc<Space>,
    /// Classes: `R`-components of fibers (in the adjusted metric).
    pub classes: Vec<PointSet>,
    /// Classes with the Hausdorff metric.
    pub z: Arc<Space>,
    pub p: CoarseMap,
    pub q: CoarseMap,
    /// Least member of each class; `p ∘ s = id`.
    pub selection: Vec<usize>,
    pub class_diam: f64,
    pub max_fiber_classes: usize,
}

impl Factorization {
    /// Largest `|d_H([x],[y]) − d(x,y)|` over all pairs, in the adjusted metric.
    pub fn max_distortion(&self) -> f64 {
        let x = &self.adjusted;
        let mut worst = 0.0_f64;
        for a in 0..x.len() {
            for b in 0..x.len() {
                let dz = self.z.d(self.p.at(a), self.p.at(b));
                worst = worst.max((dz - x.d(a, b)).abs());
            }
        }
        worst
    }

    /// `max_x d(x, s(p(x)))`.
    pub fn selection_offset(&self) -> f64 {
        (0..self.adjusted.len())
            .map(|x| self.adjusted.d(x, self.selection[self.p.at(x)]))
            .fold(0.0, f64::max)
    }
}

pub fn factorize(f: &CoarseMap, n: usize, big_r: f64) -> Result<Factorization> {
    if !(big_r.is_finite() && big_r >= 0.0) {
        return Err(Error::BadScale(big_r));
    }
    let adjusted = Arc::new(f.domain().floored(1.0)?);
    let mut classes: Vec<PointSet> = Vec::new();
    let mut max_fiber_classes = 0;
    let bound = 2.0 * n as f64 * big_r;
    for y in 0..f.codomain().len() {
        let fiber = f.preimage(&PointSet::singleton(y));
        if fiber.is_empty() {
            continue;
        }
        let comps = adjusted.components(&fiber, big_r);
        if comps.len() > n {
            return Err(Error::TooManyComponents {
                found: comps.len(),
                n,
                scale: big_r,
            });
        }
        max_fiber_classes = max_fiber_classes.max(comps.len());
        for c in comps {
            let d = adjusted.diam_or_zero(&c);
            if d > bound {
                return Err(Error::Control(format!(
                    "fiber component of diameter {d} exceeds 2nR = {bound}"
                )));
            }
            classes.push(c);
        }
    }
    classes.sort();
    let k = classes.len();
    let mut dist = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let h = adjusted.hausdorff(&classes[i], &classes[j])?;
            dist[i * k + j] = h;
            dist[j * k + i] = h;
        }
    }
    let selection: Vec<usize> = classes.iter().map(|c| c.first().expect("nonempty class")).collect();
    let labels = selection.iter().map(|&x| adjusted.label(x).clone()).collect();
    let z = Arc::new(Space::derived(labels, dist)?);
    let mut p_assign = vec![0; adjusted.len()];
    for (i, c) in classes.iter().enumerate() {
        for x in c {
            p_assign[x] = i;
        }
    }
    let q_assign = selection.iter().map(|&x| f.at(x)).collect();
    let class_diam = classes.iter().map(|c| adjusted.diam_or_zero(c)).fold(0.0, f64::max);
    Ok(Factorization {
        p: CoarseMap::new(adjusted.clone(), z.clone(), p_assign)?,
        q: CoarseMap::new(z.clone(), f.codomain().clone(), q_assign)?,
        adjusted,
        classes,
        z,
        selection,
        class_diam,
        max_fiber_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::classes_r_disjoint;
    use crate::maps::tests::abs_map;
    use crate::maps::{group_quotient, GroupAction};

    #[test]
    fn singletons_under_absolute_value() {
        let f = abs_map(5);
        let cover = Family::singletons(&f.domain().all());
        let p = pushforward_cover(&f, &cover, 0.5, 2, &Control::identity()).unwrap();
        assert!(p.image_dim <= 1);
        assert_eq!(p.source_dim_open, 0);
        assert!(p.holds());
    }

    #[test]
    fn identity_pushes_the_cover_unchanged() {
        let x = Arc::new(Space::integer_interval(0, 12));
        let id = CoarseMap::identity(x.clone());
        let cover = Family::new(vec![PointSet::range(0, 6), PointSet::range(4, 13)]);
        let p = pushforward_cover(&id, &cover, 2.0, 1, &Control::identity()).unwrap();
        assert_eq!(p.family, cover);
        assert!(p.holds());
    }

    #[test]
    fn constant_map_collapses_every_member() {
        let x = Arc::new(Space::integer_interval(0, 5));
        let pt = Arc::new(Space::integer_interval(0, 0));
        let f = CoarseMap::new(x, pt, vec![0; 6]).unwrap();
        let cover = Family::new(vec![PointSet::range(0, 3), PointSet::range(3, 6)]);
        let p = pushforward_cover(&f, &cover, 1.0, 1, &Control::Affine { slope: 0.0, offset: 5.0 }).unwrap();
        assert_eq!(p.image_dim, 1);
        assert!(p.holds());
    }

    #[test]
    fn literal_scale_bound_fails_on_a_path() {
        // Y: a - y - b with unit edges; X = {a', b'} at distance 2 mapping onto {a, b}
        let y = Arc::new(Space::from_graph(None, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap());
        let x = Arc::new(Space::from_matrix(None, vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap());
        let f = CoarseMap::new(x, y, vec![0, 2]).unwrap();
        let cover = Family::singletons(&f.domain().all());
        let p = pushforward_cover(&f, &cover, 1.5, 1, &Control::identity()).unwrap();
        assert_eq!(p.image_dim, 0);
        // inside f(X) = {a, b} the open 1.5-balls are disjoint; in all of Y they meet at y
        let full = crate::covers::dim_at_scale(f.codomain(), &p.family, 1.5);
        assert_eq!(full, 1);
        assert_eq!((p.source_dim_open + 1) - 1, 0);
        assert!(full > p.source_dim_open);
        assert!(p.holds());
    }

    #[test]
    fn disjointify_absolute_value() {
        let f = abs_map(5);
        let cover = Family::singletons(&f.domain().all());
        let out = pushforward_disjointify(&f, &cover, 1.0, 2, &Control::identity()).unwrap();
        assert!(out.family.color_count() <= 2);
        assert_eq!(classes_r_disjoint(f.codomain(), &out.family, 0.5), Ok(()));
        assert!(mesh(f.codomain(), &out.family).unwrap() <= out.mesh_bound);
        assert_eq!(out.family.uncovered(&f.full_image()), None);
    }

    #[test]
    fn disjointify_identity_keeps_one_color() {
        let x = Arc::new(Space::integer_interval(0, 11));
        let id = CoarseMap::identity(x);
        let cover = Family::new(vec![PointSet::range(0, 6), PointSet::range(6, 12)]);
        let out = pushforward_disjointify(&id, &cover, 1.0, 1, &Control::identity()).unwrap();
        assert_eq!(out.family.color_count(), 1);
    }

    #[test]
    fn disjointify_c6_quotient() {
        let q = group_quotient(Arc::new(Space::cycle(6)), &GroupAction::cyclic_rotation(6, 2)).unwrap();
        let cover = Family::new(q.orbits.clone());
        let out = pushforward_disjointify(&q.proj, &cover, 1.0, 2, &Control::linear(2.0)).unwrap();
        assert!(out.family.color_count() <= out.color_bound);
        assert_eq!(classes_r_disjoint(&q.space, &out.family, out.disjoint_scale), Ok(()));
        assert!(mesh(&q.space, &out.family).unwrap() <= out.mesh_bound);
    }

    #[test]
    fn factorize_absolute_value() {
        let f = abs_map(5);
        let fz = factorize(&f, 2, 1.0).unwrap();
        assert_eq!(fz.classes.len(), 11);
        assert_eq!(fz.max_fiber_classes, 2);
        let composed = fz.p.then(&fz.q).unwrap();
        assert_eq!(composed.assign(), f.assign());
        assert!(fz.max_distortion() <= 2.0 * fz.class_diam);
        assert!(matches!(factorize(&f, 1, 1.0), Err(Error::TooManyComponents { found: 2, .. })));
    }

    #[test]
    fn factorize_injective_and_constant() {
        let x = Arc::new(Space::integer_interval(0, 3));
        let id = CoarseMap::identity(x.clone());
        let fz = factorize(&id, 1, 0.5).unwrap();
        assert_eq!(fz.z.matrix(), x.matrix());
        let pt = Arc::new(Space::integer_interval(0, 0));
        let c = CoarseMap::new(x, pt, vec![0; 4]).unwrap();
        let fz = factorize(&c, 1, 3.0).unwrap();
        assert_eq!(fz.classes.len(), 1);
        assert_eq!(fz.selection_offset(), 3.0);
    }
}
