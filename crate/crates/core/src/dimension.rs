//! Dimension at a fixed scale under a mesh cap, witnesses for the finite
//! analog of asymptotic property C, and their transfer along maps.

use serde::{Deserialize, Serialize};

use crate::covers::{dim_at_scale, make_disjoint_on, mesh, min_cross_distance, Family};
use crate::error::{Error, Result};
use crate::maps::{check_control, control_upper_strict, CoarseMap, Control};
use crate::metric::{PointSet, Space};

/// Largest space searched exhaustively.
pub const EXACT_CAP: usize = 16;

/// Default node budget for exhaustive searches.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsdimResult {
    pub dim: i64,
    pub cover: Family,
    /// `true` when `dim` is the proven minimum; otherwise an upper bound.
    pub exact: bool,
    pub nodes: u64,
}

/// Minimum of `dim_r` over covers of mesh at most `mesh_cap`.
///
/// Only partitions are searched: shrinking a cover to a partition never raises
/// the dimension or the mesh.
pub fn asdim_at_scale(space: &Space, r: f64, mesh_cap: f64, budget: u64) -> Result<AsdimResult> {
    if !(mesh_cap >= 0.0) {
        return Err(Error::BadScale(mesh_cap));
    }
    if !(r >= 0.0) {
        return Err(Error::BadScale(r));
    }
    if space.is_empty() {
        return Ok(AsdimResult {
            dim: -1,
            cover: Family::default(),
            exact: true,
            nodes: 0,
        });
    }
    let greedy = greedy_partition(space, r, mesh_cap);
    let greedy_dim = dim_at_scale(space, &greedy, r);
    if space.len() > EXACT_CAP {
        return Ok(AsdimResult {
            dim: greedy_dim,
            cover: greedy,
            exact: false,
            nodes: 0,
        });
    }
    let mut search = PartitionSearch::new(space, r, mesh_cap, budget);
    for target in 0..greedy_dim {
        match search.feasible(target as usize + 1) {
            Some(Some(blocks)) => {
                let cover = Family::new(blocks.into_iter().map(PointSet::from).collect());
                let dim = dim_at_scale(space, &cover, r);
                return Ok(AsdimResult {
                    dim,
                    cover,
                    exact: true,
                    nodes: search.nodes,
                });
            }
            Some(None) => continue,
            None => {
                return Ok(AsdimResult {
                    dim: greedy_dim,
                    cover: greedy,
                    exact: false,
                    nodes: search.nodes,
                })
            }
        }
    }
    Ok(AsdimResult {
        dim: greedy_dim,
        cover: greedy,
        exact: true,
        nodes: search.nodes,
    })
}

/// Each point joins the block (or a new one) that keeps the largest
/// multiplicity smallest; ties prefer existing blocks in index order.
fn greedy_partition(space: &Space, r: f64, cap: f64) -> Family {
    let n = space.len();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut expanded: Vec<Vec<bool>> = Vec::new();
    let mut count = vec![0usize; n];
    let near = |x: usize, y: usize| x == y || space.d(x, y) < r;
    for x in 0..n {
        let mut best: Option<(usize, Option<usize>)> = None;
        let mut options: Vec<Option<usize>> = (0..blocks.len()).map(Some).collect();
        options.push(None);
        for opt in options {
            if let Some(b) = opt {
                if blocks[b].iter().any(|&y| space.d(x, y) > cap) {
                    continue;
                }
            }
            let peak = (0..n)
                .map(|y| {
                    let grows = near(x, y) && opt.is_none_or(|b| !expanded[b][y]);
                    count[y] + usize::from(grows)
                })
                .max()
                .unwrap_or(0);
            if best.is_none_or(|(p, _)| peak < p) {
                best = Some((peak, opt));
            }
        }
        let b = match best.expect("a new block is always allowed").1 {
            Some(b) => b,
            None => {
                blocks.push(Vec::new());
                expanded.push(vec![false; n]);
                blocks.len() - 1
            }
        };
        blocks[b].push(x);
        for y in 0..n {
            if near(x, y) && !expanded[b][y] {
                expanded[b][y] = true;
                count[y] += 1;
            }
        }
    }
    Family::new(blocks.into_iter().map(PointSet::from).collect())
}

/// Depth-first search over restricted-growth partitions with bitmask
/// expansions and multiplicity counters.
struct PartitionSearch<'a> {
    space: &'a Space,
    cap: f64,
    near: Vec<u64>,
    budget: u64,
    nodes: u64,
}

impl<'a> PartitionSearch<'a> {
    fn new(space: &'a Space, r: f64, cap: f64, budget: u64) -> Self {
        let n = space.len();
        let near = (0..n)
            .map(|x| {
                (0..n)
                    .filter(|&y| x == y || space.d(x, y) < r)
                    .fold(0u64, |m, y| m | (1 << y))
            })
            .collect();
        Self {
            space,
            cap,
            near,
            budget,
            nodes: 0,
        }
    }

    /// `Some(Some(p))` if a partition with multiplicity `≤ limit` exists,
    /// `Some(None)` if none does, `None` if the budget ran out.
    fn feasible(&mut self, limit: usize) -> Option<Option<Vec<Vec<usize>>>> {
        let n = self.space.len();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut masks: Vec<u64> = Vec::new();
        let mut count = vec![0usize; n];
        match self.go(0, limit, &mut blocks, &mut masks, &mut count) {
            Ok(true) => Some(Some(blocks)),
            Ok(false) => Some(None),
            Err(()) => None,
        }
    }

    fn go(
        &mut self,
        x: usize,
        limit: usize,
        blocks: &mut Vec<Vec<usize>>,
        masks: &mut Vec<u64>,
        count: &mut [usize],
    ) -> std::result::Result<bool, ()> {
        if x == self.space.len() {
            return Ok(true);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(());
        }
        for b in 0..=blocks.len() {
            let fresh = b == blocks.len();
            if !fresh && blocks[b].iter().any(|&y| self.space.d(x, y) > self.cap) {
                continue;
            }
            let old = if fresh { 0 } else { masks[b] };
            let added = self.near[x] & !old;
            if bits(added).any(|y| count[y] + 1 > limit) {
                continue;
            }
            for y in bits(added) {
                count[y] += 1;
            }
            if fresh {
                blocks.push(vec![x]);
                masks.push(added);
            } else {
                blocks[b].push(x);
                masks[b] |= added;
            }
            if self.go(x + 1, limit, blocks, masks, count)? {
                return Ok(true);
            }
            if fresh {
                blocks.pop();
                masks.pop();
            } else {
                blocks[b].pop();
                masks[b] = old;
            }
            for y in bits(added) {
                count[y] -= 1;
            }
        }
        Ok(false)
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            b
        })
    })
}

/// Disjointness and mesh of one family of a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCertificate {
    pub scale: f64,
    pub disjoint: bool,
    /// Smallest cross distance; `None` for fewer than two members.
    pub min_cross: Option<f64>,
    pub mesh: f64,
}

/// Families `𝒰_i`, each `R_i`-disjoint and bounded, jointly covering the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApcWitness {
    pub scales: Vec<f64>,
    pub families: Vec<Family>,
    pub certificates: Vec<FamilyCertificate>,
}

impl ApcWitness {
    pub fn certify(space: &Space, scales: Vec<f64>, families: Vec<Family>) -> Result<Self> {
        if scales.len() != families.len() {
            return Err(Error::Scales(format!(
                "{} scales for {} families",
                scales.len(),
                families.len()
            )));
        }
        let certificates = families
            .iter()
            .zip(&scales)
            .map(|(fam, &scale)| {
                let min_cross = min_cross_distance(space, fam).map(|c| c.0);
                FamilyCertificate {
                    scale,
                    disjoint: min_cross.is_none_or(|m| m >= scale),
                    min_cross,
                    mesh: if fam.is_empty() { 0.0 } else { mesh(space, fam).unwrap_or(0.0) },
                }
            })
            .collect();
        Ok(Self {
            scales,
            families,
            certificates,
        })
    }

    pub fn union(&self) -> PointSet {
        self.families.iter().fold(PointSet::new(), |a, f| a.union(&f.union()))
    }

    pub fn mesh(&self) -> f64 {
        self.certificates.iter().map(|c| c.mesh).fold(0.0, f64::max)
    }

    /// Covers the space and every family is disjoint at its scale.
    pub fn holds(&self, space: &Space) -> bool {
        self.union().len() == space.len() && self.certificates.iter().all(|c| c.disjoint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefusalReason {
    BudgetExhausted,
    Impossible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ApcOutcome {
    Found {
        witness: ApcWitness,
        /// `"greedy"` or `"search"`.
        method: String,
    },
    Refused {
        reason: RefusalReason,
        /// Points the greedy pass could not place.
        residue: PointSet,
    },
}

/// Tries to cover the space by families `𝒰_i`, `𝒰_i` being `R_i`-disjoint with
/// members of diameter at most `mesh_cap`: a first-fit pass, then an
/// exhaustive search over assignments of points to (family, member).
pub fn apc_witness(space: &Space, scales: &[f64], mesh_cap: f64, budget: u64) -> Result<ApcOutcome> {
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Scales("scales must be strictly increasing".into()));
    }
    if !(mesh_cap >= 0.0) {
        return Err(Error::BadScale(mesh_cap));
    }
    let mut state = Placement::new(space, scales, mesh_cap);
    let mut residue = Vec::new();
    for x in 0..space.len() {
        match state.options(x).first() {
            Some(&opt) => state.apply(x, opt),
            None => residue.push(x),
        }
    }
    if residue.is_empty() {
        return Ok(ApcOutcome::Found {
            witness: state.witness()?,
            method: "greedy".into(),
        });
    }
    let mut state = Placement::new(space, scales, mesh_cap);
    let mut nodes = 0u64;
    match state.search(0, budget, &mut nodes) {
        Some(true) => Ok(ApcOutcome::Found {
            witness: state.witness()?,
            method: "search".into(),
        }),
        Some(false) => Ok(ApcOutcome::Refused {
            reason: RefusalReason::Impossible,
            residue: residue.into(),
        }),
        None => Ok(ApcOutcome::Refused {
            reason: RefusalReason::BudgetExhausted,
            residue: residue.into(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Join(usize, usize),
    Open(usize),
}

struct Placement<'a> {
    space: &'a Space,
    scales: &'a [f64],
    cap: f64,
    blocks: Vec<Vec<Vec<usize>>>,
}

impl<'a> Placement<'a> {
    fn new(space: &'a Space, scales: &'a [f64], cap: f64) -> Self {
        Self {
            space,
            scales,
            cap,
            blocks: vec![Vec::new(); scales.len()],
        }
    }

    fn far_from_others(&self, x: usize, fam: usize, except: Option<usize>) -> bool {
        self.blocks[fam]
            .iter()
            .enumerate()
            .filter(|(b, _)| Some(*b) != except)
            .all(|(_, blk)| blk.iter().all(|&y| self.space.d(x, y) >= self.scales[fam]))
    }

    fn options(&self, x: usize) -> Vec<Slot> {
        let mut out = Vec::new();
        for fam in 0..self.scales.len() {
            for (b, blk) in self.blocks[fam].iter().enumerate() {
                if blk.iter().all(|&y| self.space.d(x, y) <= self.cap) && self.far_from_others(x, fam, Some(b)) {
                    out.push(Slot::Join(fam, b));
                }
            }
        }
        for fam in 0..self.scales.len() {
            if self.far_from_others(x, fam, None) {
                out.push(Slot::Open(fam));
            }
        }
        out
    }

    fn apply(&mut self, x: usize, slot: Slot) {
        match slot {
            Slot::Join(f, b) => self.blocks[f][b].push(x),
            Slot::Open(f) => self.blocks[f].push(vec![x]),
        }
    }

    fn undo(&mut self, slot: Slot) {
        match slot {
            Slot::Join(f, b) => {
                self.blocks[f][b].pop();
            }
            Slot::Open(f) => {
                self.blocks[f].pop();
            }
        }
    }

    fn search(&mut self, x: usize, budget: u64, nodes: &mut u64) -> Option<bool> {
        if x == self.space.len() {
            return Some(true);
        }
        *nodes += 1;
        if *nodes > budget {
            return None;
        }
        for slot in self.options(x) {
            self.apply(x, slot);
            if self.search(x + 1, budget, nodes)? {
                return Some(true);
            }
            self.undo(slot);
        }
        Some(false)
    }

    fn witness(&self) -> Result<ApcWitness> {
        let families = self
            .blocks
            .iter()
            .map(|bs| Family::new(bs.iter().map(|b| PointSet::from(b.clone())).collect()))
            .collect();
        ApcWitness::certify(self.space, self.scales.to_vec(), families)
    }
}

/// Families `𝒱_i` with `dim_{R_i}(𝒱_i) ≤ n_i`, jointly covering the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSequenceWitness {
    pub dims: Vec<usize>,
    pub families: Vec<Family>,
}

/// `R_i = Σ_{j ≤ i} (n_j + 1)·M_{m_j + j}` with `m_j = Σ_{i ≤ j} n_i`
/// (1-based indices into `gaps`). Errors when `gaps` is shorter than `m_k + k`.
pub fn level_scales(dims: &[usize], gaps: &[f64]) -> Result<Vec<f64>> {
    let mut m = 0;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(dims.len());
    for (j, &nj) in dims.iter().enumerate() {
        m += nj;
        let idx = m + j + 1;
        let gap = *gaps.get(idx - 1).ok_or_else(|| {
            Error::Scales(format!("gap list has {} entries, level {} needs index {idx}", gaps.len(), j + 1))
        })?;
        total += (nj + 1) as f64 * gap;
        out.push(total);
    }
    let needed = m + dims.len();
    if gaps.len() < needed {
        return Err(Error::Scales(format!("gap list must have at least {needed} entries")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub witness: ApcWitness,
    pub level_scales: Vec<f64>,
    /// `(level, color)` that produced each output family.
    pub origin: Vec<(usize, usize)>,
}

/// Splits each `𝒱_i` into `n_i + 1` disjoint classes at scale `R_i` and
/// concatenates them; output family `t` is `M_t`-disjoint.
pub fn apc_normalize(space: &Space, w: &DimSequenceWitness, gaps: &[f64]) -> Result<Normalized> {
    if w.dims.len() != w.families.len() {
        return Err(Error::Shape(format!(
            "{} dimensions for {} families",
            w.dims.len(),
            w.families.len()
        )));
    }
    if gaps.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Scales("gaps must be strictly increasing".into()));
    }
    let scales = level_scales(&w.dims, gaps)?;
    let covered = w.families.iter().fold(PointSet::new(), |a, f| a.union(&f.union()));
    if let Some(x) = space.all().difference(&covered).first() {
        return Err(Error::NotACover(x));
    }
    let mut families = Vec::new();
    let mut origin = Vec::new();
    for (i, (fam, &ni)) in w.families.iter().zip(&w.dims).enumerate() {
        let r = scales[i];
        let found = dim_at_scale(space, fam, r);
        if found > ni as i64 {
            return Err(Error::DimensionTooHigh {
                found,
                bound: ni as i64,
            });
        }
        let classes = if fam.union().is_empty() {
            vec![Family::default(); ni + 1]
        } else {
            let mut c = make_disjoint_on(space, &fam.union(), fam, r, Some(ni))?.family.classes();
            c.resize(ni + 1, Family::default());
            c
        };
        for (c, class) in classes.into_iter().enumerate() {
            families.push(class);
            origin.push((i, c));
        }
    }
    let out_scales = gaps[..families.len()].to_vec();
    Ok(Normalized {
        witness: ApcWitness::certify(space, out_scales, families)?,
        level_scales: scales,
        origin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAudit {
    pub output: usize,
    pub input_family: usize,
    pub disjoint_at: f64,
    pub required_input_gap: f64,
    pub input_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushedApc {
    pub witness: ApcWitness,
    pub audit: Vec<ScaleAudit>,
}

/// Pushes a witness along a coarsely `n`-to-1 map. Input family `i` must be
/// more than `C(2n·R_{in})`-disjoint; its image is split into `n` families,
/// output `(i−1)n + j` being `R_{in}`-disjoint.
pub fn apc_pushforward(f: &CoarseMap, n: usize, control: &Control, w: &ApcWitness, targets: &[f64]) -> Result<PushedApc> {
    let k = w.families.len();
    if n == 0 || targets.len() != k * n {
        return Err(Error::Scales(format!(
            "{} target scales for {k} families and n = {n} (need {})",
            targets.len(),
            k * n
        )));
    }
    if targets.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Scales("target scales must be strictly increasing".into()));
    }
    let (x, y) = (f.domain(), f.codomain());
    let mut families = Vec::with_capacity(k * n);
    let mut audit = Vec::with_capacity(k * n);
    for (i, fam) in w.families.iter().enumerate() {
        let top = targets[(i + 1) * n - 1];
        let rho = n as f64 * top;
        let required = control.eval(2.0 * rho);
        let gap = min_cross_distance(x, fam).map(|c| c.0);
        if gap.is_some_and(|g| g <= required) {
            return Err(Error::Scales(format!(
                "input family {} has gap {} but must exceed C(2n·R_{}) = {required}",
                i + 1,
                gap.unwrap_or_default(),
                (i + 1) * n
            )));
        }
        check_control(f, n, control, 2.0 * rho)?;
        let image = f.image_family(fam);
        let support = image.union();
        let mut classes = if support.is_empty() {
            Vec::new()
        } else {
            make_disjoint_on(y, &support, &Family::new(image.sets), rho, Some(n - 1))?
                .family
                .classes()
        };
        classes.resize(n, Family::default());
        for (j, class) in classes.into_iter().enumerate() {
            audit.push(ScaleAudit {
                output: i * n + j + 1,
                input_family: i + 1,
                disjoint_at: top,
                required_input_gap: required,
                input_gap: gap,
            });
            families.push(class);
        }
    }
    Ok(PushedApc {
        witness: ApcWitness::certify(y, targets.to_vec(), families)?,
        audit,
    })
}

/// Pulls a witness back: family `i` of the output consists of the
/// `R_max`-components of preimages of family `i`. Family `i` on the codomain
/// must be farther apart than `max{d_Y(fx,fy) : d_X(x,y) < R_i}`. With a
/// `bound`, components of larger diameter are an error.
pub fn apc_pullback(f: &CoarseMap, w: &ApcWitness, scales: &[f64], bound: Option<f64>) -> Result<ApcWitness> {
    if scales.len() != w.families.len() {
        return Err(Error::Scales(format!(
            "{} scales for {} families",
            scales.len(),
            w.families.len()
        )));
    }
    let (x, y) = (f.domain(), f.codomain());
    let top = scales.iter().copied().fold(0.0, f64::max);
    let mut families = Vec::with_capacity(scales.len());
    for (i, (fam, &r)) in w.families.iter().zip(scales).enumerate() {
        let hit = Family::new(fam.sets.iter().filter(|s| !f.preimage(s).is_empty()).cloned().collect());
        let required = control_upper_strict(f, r);
        if let Some((dist, a, b)) = min_cross_distance(y, &hit) {
            if dist <= required {
                return Err(Error::NotDisjoint {
                    x: a,
                    y: b,
                    dist,
                    required,
                });
            }
        }
        let mut sets = Vec::new();
        for s in &hit.sets {
            for c in x.components(&f.preimage(s), top) {
                if let Some(m) = bound {
                    let d = x.diam_or_zero(&c);
                    if d > m {
                        return Err(Error::Control(format!(
                            "component of diameter {d} in family {} exceeds the bound {m}",
                            i + 1
                        )));
                    }
                }
                sets.push(c);
            }
        }
        families.push(Family::new(sets));
    }
    ApcWitness::certify(x, scales.to_vec(), families)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::maps::tests::abs_map;
    use crate::maps::{group_quotient, GroupAction};

    fn line(lo: i64, hi: i64) -> Space {
        Space::integer_interval(lo, hi)
    }

    /// Brute force over all set partitions (restricted growth strings).
    fn brute_asdim(space: &Space, r: f64, cap: f64) -> i64 {
        let n = space.len();
        let mut best = i64::MAX;
        let mut rgs = vec![0usize; n];
        loop {
            let k = rgs.iter().max().map_or(0, |m| m + 1);
            let mut blocks = vec![Vec::new(); k];
            for (x, &b) in rgs.iter().enumerate() {
                blocks[b].push(x);
            }
            let fam = Family::new(blocks.into_iter().map(PointSet::from).collect());
            if mesh(space, &fam).unwrap() <= cap {
                best = best.min(dim_at_scale(space, &fam, r));
            }
            // next restricted growth string
            let mut i = n;
            loop {
                if i == 1 {
                    return best;
                }
                i -= 1;
                let prefix_max = rgs[..i].iter().max().copied().unwrap_or(0);
                if rgs[i] <= prefix_max {
                    rgs[i] += 1;
                    for v in &mut rgs[i + 1..] {
                        *v = 0;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn asdim_examples() {
        let x = line(0, 15);
        let res = asdim_at_scale(&x, 3.0, 5.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(res.dim, 1);
        assert!(res.exact);
        assert!(mesh(&x, &res.cover).unwrap() <= 5.0);
        let all = asdim_at_scale(&x, 3.0, 15.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(all.dim, 0);
        assert_eq!(all.cover.sets, vec![x.all()]);
        let sparse = Space::from_cloud(None, &[vec![0.0], vec![5.0], vec![10.0]], crate::metric::Norm::L1).unwrap();
        assert_eq!(asdim_at_scale(&sparse, 5.0, 0.0, 100).unwrap().dim, 0);
        assert!(asdim_at_scale(&x, 3.0, -1.0, 100).is_err());
    }

    #[test]
    fn asdim_matches_brute_force_on_small_spaces() {
        for (n, r, cap) in [(6, 2.0, 1.0), (7, 1.5, 2.0), (8, 3.0, 2.0), (6, 2.5, 0.0)] {
            let x = line(0, n - 1);
            let got = asdim_at_scale(&x, r, cap, DEFAULT_BUDGET).unwrap();
            assert_eq!(got.dim, brute_asdim(&x, r, cap), "n={n} r={r} cap={cap}");
        }
        let c6 = Space::cycle(6);
        assert_eq!(
            asdim_at_scale(&c6, 2.0, 1.0, DEFAULT_BUDGET).unwrap().dim,
            brute_asdim(&c6, 2.0, 1.0)
        );
    }

    #[test]
    fn apc_witness_examples() {
        let x = line(0, 9);
        match apc_witness(&x, &[2.0, 3.0], 3.0, DEFAULT_BUDGET).unwrap() {
            ApcOutcome::Found { witness, .. } => {
                assert!(witness.holds(&x));
                assert!(witness.mesh() <= 3.0);
            }
            other => panic!("expected a witness, got {other:?}"),
        }
        match apc_witness(&x, &[1.0], 0.0, DEFAULT_BUDGET).unwrap() {
            ApcOutcome::Found { witness, .. } => assert_eq!(witness.families[0].len(), 10),
            other => panic!("{other:?}"),
        }
        let long = line(0, 11);
        match apc_witness(&long, &[5.0, 6.0], 1.0, DEFAULT_BUDGET).unwrap() {
            ApcOutcome::Refused { reason, residue } => {
                assert_eq!(reason, RefusalReason::Impossible);
                assert!(!residue.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_distinguished() {
        let long = line(0, 11);
        match apc_witness(&long, &[5.0, 6.0], 1.0, 3).unwrap() {
            ApcOutcome::Refused { reason, .. } => assert_eq!(reason, RefusalReason::BudgetExhausted),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn level_scale_formula() {
        assert_eq!(level_scales(&[0, 0, 0], &[1.0, 2.0, 4.0]).unwrap(), vec![1.0, 3.0, 7.0]);
        assert_eq!(level_scales(&[1], &[2.0, 4.0]).unwrap(), vec![8.0]);
        assert!(level_scales(&[1, 1], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn normalize_single_level() {
        let x = line(0, 30);
        let w = DimSequenceWitness {
            dims: vec![1],
            families: vec![Family::new(vec![PointSet::range(0, 16), PointSet::range(16, 31)])],
        };
        assert_eq!(dim_at_scale(&x, &w.families[0], 8.0), 1);
        let out = apc_normalize(&x, &w, &[2.0, 4.0]).unwrap();
        assert_eq!(out.level_scales, vec![8.0]);
        assert_eq!(out.witness.families.len(), 2);
        assert!(out.witness.holds(&x));
        assert!(crate::covers::is_r_disjoint(&x, &out.witness.families[0], 4.0));
    }

    #[test]
    fn normalize_with_zero_dims_reindexes() {
        let x = line(0, 20);
        let w = DimSequenceWitness {
            dims: vec![0, 0],
            families: vec![
                Family::new(vec![PointSet::range(0, 5), PointSet::range(12, 17)]),
                Family::new(vec![PointSet::range(5, 12), PointSet::range(17, 21)]),
            ],
        };
        let out = apc_normalize(&x, &w, &[1.0, 2.0]).unwrap();
        assert_eq!(out.level_scales, vec![1.0, 3.0]);
        assert_eq!(out.witness.families.len(), 2);
        for (a, b) in out.witness.families.iter().zip(&w.families) {
            let mut a = a.sets.clone();
            a.sort();
            let mut b = b.sets.clone();
            b.sort();
            assert_eq!(a, b);
        }
        assert!(out.witness.holds(&x));
    }

    #[test]
    fn normalize_two_levels() {
        let x = line(0, 40);
        let w = DimSequenceWitness {
            dims: vec![1, 0],
            families: vec![
                Family::new(vec![PointSet::range(0, 21), PointSet::range(15, 35)]),
                Family::new(vec![PointSet::range(35, 41)]),
            ],
        };
        let out = apc_normalize(&x, &w, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(out.witness.families.len(), 3);
        assert!(out.witness.holds(&x));
    }

    #[test]
    fn pushforward_identity_is_identity() {
        let x = Arc::new(line(0, 20));
        let id = CoarseMap::identity(x.clone());
        let w = ApcWitness::certify(
            &x,
            vec![1.0, 2.0],
            vec![
                Family::new(vec![PointSet::range(0, 5), PointSet::range(10, 15)]),
                Family::new(vec![PointSet::range(5, 10), PointSet::range(15, 21)]),
            ],
        )
        .unwrap();
        let out = apc_pushforward(&id, 1, &Control::identity(), &w, &[1.0, 2.0]).unwrap();
        assert_eq!(out.witness.families, w.families);
        let back = apc_pullback(&id, &out.witness, &[1.0, 2.0], None).unwrap();
        assert_eq!(back.families, w.families);
    }

    #[test]
    fn pushforward_absolute_value() {
        let f = abs_map(20);
        let x = f.domain().clone();
        // reflected interval pairs, far apart
        let blocks: Vec<PointSet> = [(-20, -16), (-8, -4), (4, 8), (16, 20)]
            .iter()
            .map(|&(a, b)| ((a + 20) as usize..=(b + 20) as usize).collect())
            .collect();
        let rest: Vec<PointSet> = [(-15, -9), (-3, 3), (9, 15)]
            .iter()
            .map(|&(a, b)| ((a + 20) as usize..=(b + 20) as usize).collect())
            .collect();
        let w = ApcWitness::certify(&x, vec![5.0, 6.0], vec![Family::new(blocks), Family::new(rest)]).unwrap();
        assert!(w.holds(&x));
        let out = apc_pushforward(&f, 2, &Control::identity(), &w, &[0.5, 1.0, 1.25, 1.4]).unwrap();
        assert_eq!(out.witness.families.len(), 4);
        assert!(out.witness.holds(f.codomain()));
    }

    #[test]
    fn pushforward_rejects_close_families() {
        let f = abs_map(10);
        let x = f.domain().clone();
        let w = ApcWitness::certify(&x, vec![1.0], vec![Family::singletons(&x.all())]).unwrap();
        let res = apc_pushforward(&f, 2, &Control::identity(), &w, &[1.0, 2.0]);
        assert!(matches!(res, Err(Error::Scales(_))), "{res:?}");
    }

    #[test]
    fn pushforward_c6_quotient() {
        let q = group_quotient(Arc::new(Space::cycle(6)), &GroupAction::cyclic_rotation(6, 2)).unwrap();
        let x = q.symmetrized.clone();
        let w = ApcWitness::certify(
            &x,
            vec![1.0, 2.0],
            vec![Family::single(x.all()), Family::default()],
        )
        .unwrap();
        let out = apc_pushforward(&q.proj, 2, &Control::linear(2.0), &w, &[0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(out.witness.families.len(), 4);
        assert!(out.witness.holds(&q.space));
    }

    #[test]
    fn pullback_absolute_value() {
        let f = abs_map(10);
        let y = f.codomain().clone();
        let w = ApcWitness::certify(
            &y,
            vec![2.0, 3.0],
            vec![
                Family::new(vec![PointSet::range(0, 3), PointSet::range(6, 9)]),
                Family::new(vec![PointSet::range(3, 6), PointSet::range(9, 11)]),
            ],
        )
        .unwrap();
        let out = apc_pullback(&f, &w, &[2.0, 3.0], Some(30.0)).unwrap();
        assert!(out.holds(f.domain()));
        assert!(out.families[0].len() > w.families[0].len());
    }

    #[test]
    fn pullback_constant_map() {
        let x = Arc::new(line(0, 6));
        let pt = Arc::new(line(0, 0));
        let c = CoarseMap::new(x.clone(), pt.clone(), vec![0; 7]).unwrap();
        let w = ApcWitness::certify(&pt, vec![1.0], vec![Family::single(pt.all())]).unwrap();
        let out = apc_pullback(&c, &w, &[1.0], None).unwrap();
        assert_eq!(out.families[0].sets, vec![x.all()]);
        assert!(matches!(apc_pullback(&c, &w, &[1.0], Some(2.0)), Err(Error::Control(_))));
    }
}
