//! Finite group actions by permutations, invariant metrics and orbit quotients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::CoarseMap;
use crate::error::{Error, Result};
use crate::metric::{PointSet, Space};
use crate::util::union_find::UnionFind;

/// `table[g][h]` is the product `g·h`; `perms[g][x]` is `g·x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAction {
    pub table: Vec<Vec<usize>>,
    pub perms: Vec<Vec<usize>>,
}

impl GroupAction {
    /// The cyclic group generated by one permutation of order `order`.
    pub fn cyclic(generator: &[usize], order: usize) -> Self {
        let mut perms = vec![(0..generator.len()).collect::<Vec<_>>()];
        for k in 1..order {
            let prev = &perms[k - 1];
            perms.push(prev.iter().map(|&x| generator[x]).collect());
        }
        let table = (0..order)
            .map(|g| (0..order).map(|h| (g + h) % order).collect())
            .collect();
        Self { table, perms }
    }

    /// `Z_order` rotating the `points`-cycle by `points / order` steps.
    pub fn cyclic_rotation(points: usize, order: usize) -> Self {
        let step = points / order;
        let gen: Vec<usize> = (0..points).map(|x| (x + step) % points).collect();
        Self::cyclic(&gen, order)
    }

    /// `Z_2` reversing the index order of `points` points.
    pub fn reversal(points: usize) -> Self {
        let gen: Vec<usize> = (0..points).rev().collect();
        Self::cyclic(&gen, 2)
    }

    pub fn trivial(points: usize) -> Self {
        Self {
            table: vec![vec![0]],
            perms: vec![(0..points).collect()],
        }
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    /// Checks the group axioms, that every element acts by a permutation of a
    /// `points`-point space and that the action is a homomorphism with the
    /// identity acting trivially.
    pub fn validate(&self, points: usize) -> Result<()> {
        let m = self.table.len();
        let bad = |msg: String| Err(Error::GroupAction(msg));
        if m == 0 {
            return bad("empty group".into());
        }
        if self.table.iter().any(|row| row.len() != m || row.iter().any(|&v| v >= m)) {
            return bad("composition table is not a square table over the group".into());
        }
        let Some(e) = (0..m).find(|&e| (0..m).all(|g| self.table[e][g] == g && self.table[g][e] == g)) else {
            return bad("no identity element".into());
        };
        for g in 0..m {
            if !(0..m).any(|h| self.table[g][h] == e) {
                return bad(format!("element {g} has no inverse"));
            }
            for h in 0..m {
                for k in 0..m {
                    if self.table[self.table[g][h]][k] != self.table[g][self.table[h][k]] {
                        return bad(format!("not associative at ({g}, {h}, {k})"));
                    }
                }
            }
        }
        if self.perms.len() != m {
            return bad(format!("{} permutations for {m} elements", self.perms.len()));
        }
        for (g, p) in self.perms.iter().enumerate() {
            let mut seen = vec![false; points];
            if p.len() != points || p.iter().any(|&x| x >= points || std::mem::replace(&mut seen[x], true)) {
                return bad(format!("element {g} does not act by a permutation"));
            }
        }
        if self.perms[e].iter().enumerate().any(|(x, &y)| x != y) {
            return bad("identity does not act trivially".into());
        }
        for g in 0..m {
            for h in 0..m {
                let gh = self.table[g][h];
                for x in 0..points {
                    if self.perms[gh][x] != self.perms[g][self.perms[h][x]] {
                        return bad(format!("action is not a homomorphism at ({g}, {h}, {x})"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn orbits(&self, points: usize) -> Vec<PointSet> {
        let mut uf = UnionFind::new(points);
        for p in &self.perms {
            for (x, &gx) in p.iter().enumerate() {
                uf.union(x, gx);
            }
        }
        uf.classes().into_iter().map(PointSet::from).collect()
    }
}

/// The invariant metric `d(x, y) = Σ_g ρ(g·x, g·y)`.
pub fn symmetrize_metric(space: &Space, action: &GroupAction) -> Result<Space> {
    action.validate(space.len())?;
    let n = space.len();
    let mut dist = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            dist[x * n + y] = action.perms.iter().map(|p| space.d(p[x], p[y])).sum();
        }
    }
    Space::derived(space.labels().to_vec(), dist)
}

#[derive(Debug, Clone)]
pub struct Quotient {
    /// The domain with the invariant metric.
    pub symmetrized: Arc<Space>,
    /// Orbits with the Hausdorff metric; each orbit is labelled by its least member.
    pub space: Arc<Space>,
    pub orbits: Vec<PointSet>,
    /// Projection from `symmetrized` onto `space`.
    pub proj: CoarseMap,
    pub group_order: usize,
}

/// Symmetrizes the metric, then takes the orbit space with the Hausdorff metric.
pub fn group_quotient(space: Arc<Space>, action: &GroupAction) -> Result<Quotient> {
    let sym = Arc::new(symmetrize_metric(&space, action)?);
    let orbits = action.orbits(space.len());
    let k = orbits.len();
    let mut dist = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let h = sym.hausdorff(&orbits[i], &orbits[j])?;
            dist[i * k + j] = h;
            dist[j * k + i] = h;
        }
    }
    let labels = orbits
        .iter()
        .map(|o| sym.label(o.first().expect("orbits are nonempty")).clone())
        .collect();
    let quotient = Arc::new(Space::derived(labels, dist)?);
    let mut assign = vec![0; space.len()];
    for (i, o) in orbits.iter().enumerate() {
        for x in o {
            assign[x] = i;
        }
    }
    let proj = CoarseMap::new(sym.clone(), quotient.clone(), assign)?;
    Ok(Quotient {
        symmetrized: sym,
        space: quotient,
        orbits,
        proj,
        group_order: action.order(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{check_control, Control};

    #[test]
    fn trivial_group_changes_nothing() {
        let x = Arc::new(Space::integer_interval(0, 5));
        let a = GroupAction::trivial(6);
        assert_eq!(symmetrize_metric(&x, &a).unwrap().matrix(), x.matrix());
        let q = group_quotient(x.clone(), &a).unwrap();
        assert_eq!(q.space.matrix(), x.matrix());
        assert_eq!(q.proj.assign(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn antipodal_symmetrization_of_c6() {
        let c6 = Space::cycle(6);
        let a = GroupAction::cyclic_rotation(6, 2);
        let d = symmetrize_metric(&c6, &a).unwrap();
        assert_eq!(d.d(0, 1), 2.0);
        for p in &a.perms {
            for x in 0..6 {
                for y in 0..6 {
                    assert_eq!(d.d(p[x], p[y]), d.d(x, y));
                }
            }
        }
        for x in 0..6 {
            for y in 0..6 {
                assert!(c6.d(x, y) <= d.d(x, y));
                assert!(d.d(x, y) <= 2.0 * a.perms.iter().map(|p| c6.d(p[x], p[y])).fold(0.0, f64::max));
            }
        }
    }

    #[test]
    fn c6_antipodal_quotient() {
        let q = group_quotient(Arc::new(Space::cycle(6)), &GroupAction::cyclic_rotation(6, 2)).unwrap();
        let orbits: Vec<Vec<usize>> = q.orbits.iter().map(|o| o.as_slice().to_vec()).collect();
        assert_eq!(orbits, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        // unnormalized sum: every orbit pair sits at Hausdorff distance 2
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q.space.d(i, j), if i == j { 0.0 } else { 2.0 });
            }
        }
        for r in [0.0, 1.0, 2.0, 4.0] {
            check_control(&q.proj, 2, &Control::linear(2.0), r).unwrap();
        }
    }

    #[test]
    fn reflection_quotient_of_symmetric_interval() {
        let x = Arc::new(Space::integer_interval(-3, 3));
        let q = group_quotient(x, &GroupAction::reversal(7)).unwrap();
        assert_eq!(q.orbits.len(), 4);
        // orbits {±3}, {±2}, {±1}, {0}: doubled distances
        let order: Vec<i64> = q
            .space
            .labels()
            .iter()
            .map(|l| match l {
                crate::metric::Label::Int(v) => *v,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(order, vec![-3, -2, -1, 0]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(q.space.d(i, j), 2.0 * (i as f64 - j as f64).abs());
            }
        }
    }

    #[test]
    fn projection_is_one_lipschitz() {
        let q = group_quotient(Arc::new(Space::cycle(8)), &GroupAction::cyclic_rotation(8, 4)).unwrap();
        for x in 0..8 {
            for y in 0..8 {
                assert!(q.space.d(q.proj.at(x), q.proj.at(y)) <= q.symmetrized.d(x, y));
            }
        }
    }

    #[test]
    fn invalid_actions_are_rejected() {
        let mut a = GroupAction::cyclic_rotation(6, 2);
        a.perms[1][0] = 1;
        assert!(a.validate(6).is_err());
        let mut b = GroupAction::cyclic_rotation(6, 3);
        b.table[1][1] = 0;
        assert!(b.validate(6).is_err());
        let c = GroupAction::cyclic(&[1, 2, 0], 2);
        assert!(c.validate(3).is_err());
    }
}
