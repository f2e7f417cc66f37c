//! Leveled decomposition trees: checking, refinement to partitions, the
//! binary-split conversion, flattening to colored covers and transport along
//! maps.
//!
//! Levels are numbered from 1 in reports and from 0 in the vectors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::covers::{check_r_disjoint, make_disjoint_on, min_cross_distance, DisjointViolation, Family};
use crate::error::{Error, Result};
use crate::maps::{control_upper, control_upper_strict, CoarseMap, Control};
use crate::metric::{PointSet, Space};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeMode {
    Sfdc,
    #[default]
    Casdim,
}

/// Whether the subfamilies of an element must reassemble it exactly or only
/// cover it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Containment {
    #[default]
    Union,
    Cover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTree {
    pub levels: Vec<Family>,
    pub scales: Vec<f64>,
    pub branching: Vec<usize>,
    /// `splits[i][u]` lists the subfamilies of element `u` of level `i`, each
    /// as indices into level `i + 1`.
    pub splits: Vec<Vec<Vec<Vec<usize>>>>,
    pub terminal_mesh: f64,
    #[serde(default)]
    pub containment: Containment,
    #[serde(default)]
    pub mode: TreeMode,
}

impl DecompositionTree {
    /// The one-level tree `{X}`.
    pub fn trivial(space: &Space) -> Self {
        Self {
            levels: vec![Family::single(space.all())],
            scales: Vec::new(),
            branching: Vec::new(),
            splits: Vec::new(),
            terminal_mesh: space.diam_or_zero(&space.all()),
            containment: Containment::Union,
            mode: TreeMode::Sfdc,
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Subfamily `j` of element `u` of level `i`.
    pub fn subfamily(&self, i: usize, u: usize, j: usize) -> Family {
        Family::new(self.splits[i][u][j].iter().map(|&w| self.levels[i + 1].sets[w].clone()).collect())
    }

    pub fn level_mesh(&self, space: &Space, i: usize) -> f64 {
        level_mesh(space, &self.levels[i])
    }

    /// First level (0-based) whose mesh is at most the terminal mesh.
    pub fn bounded_level(&self, space: &Space) -> Option<usize> {
        (0..self.depth()).find(|&i| self.level_mesh(space, i) <= self.terminal_mesh)
    }

    /// Levels `0..=last` only.
    pub fn truncated(&self, last: usize) -> Self {
        let keep = last.min(self.depth().saturating_sub(1));
        Self {
            levels: self.levels[..=keep].to_vec(),
            scales: self.scales[..keep].to_vec(),
            branching: self.branching[..keep].to_vec(),
            splits: self.splits[..keep].to_vec(),
            ..self.clone()
        }
    }

    /// Union mode with every level a partition of the space.
    pub fn is_partition_tree(&self, space: &Space) -> bool {
        self.containment == Containment::Union && self.levels.iter().all(|l| is_partition(space, l))
    }
}

fn level_mesh(space: &Space, fam: &Family) -> f64 {
    fam.sets.iter().map(|s| space.diam_or_zero(s)).fold(0.0, f64::max)
}

fn is_partition(space: &Space, fam: &Family) -> bool {
    let mut seen = vec![false; space.len()];
    for s in &fam.sets {
        for x in s {
            if std::mem::replace(&mut seen[x], true) {
                return false;
            }
        }
    }
    seen.into_iter().all(|b| b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Shape,
    Root,
    Branching,
    Disjoint,
    Union,
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeViolation {
    /// 1-based level of the offending element.
    pub level: usize,
    pub element: Option<usize>,
    pub subfamily: Option<usize>,
    pub condition: Condition,
    pub detail: String,
    pub witness: Option<DisjointViolation>,
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at level {}", self.condition, self.level)?;
        if let Some(e) = self.element {
            write!(f, ", element {e}")?;
        }
        if let Some(j) = self.subfamily {
            write!(f, ", subfamily {j}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeCertificate {
    pub mode: TreeMode,
    pub depth: usize,
    /// 1-based.
    pub bounded_level: usize,
    pub level_meshes: Vec<f64>,
    /// Largest number of subfamilies used by an element, per split level.
    pub max_subfamilies: Vec<usize>,
    /// Smallest cross distance inside any subfamily, per split level.
    pub tightest: Vec<Option<f64>>,
}

fn violation(level: usize, element: Option<usize>, condition: Condition, detail: String) -> TreeViolation {
    TreeViolation {
        level: level + 1,
        element,
        subfamily: None,
        condition,
        detail,
        witness: None,
    }
}

/// Checks the root, the per-element split conditions and boundedness. In
/// `Sfdc` mode branching must be at most 2 and the last level bounded.
pub fn verify_tree(space: &Space, t: &DecompositionTree, mode: TreeMode) -> std::result::Result<TreeCertificate, TreeViolation> {
    check_shape(space, t)?;
    if t.levels[0].sets != [space.all()] {
        return Err(violation(0, None, Condition::Root, "the first level must be the single set X".into()));
    }
    let mut max_subfamilies = Vec::with_capacity(t.splits.len());
    let mut tightest = Vec::with_capacity(t.splits.len());
    for (i, row) in t.splits.iter().enumerate() {
        let cap = t.branching[i];
        if mode == TreeMode::Sfdc && cap > 2 {
            return Err(violation(i, None, Condition::Branching, format!("branching {cap} exceeds 2")));
        }
        let mut widest = 0;
        let mut tight: Option<f64> = None;
        for (u, subs) in row.iter().enumerate() {
            if subs.len() > cap {
                return Err(violation(
                    i,
                    Some(u),
                    Condition::Branching,
                    format!("{} subfamilies, branching {cap}", subs.len()),
                ));
            }
            widest = widest.max(subs.len());
            let mut covered = PointSet::new();
            for j in 0..subs.len() {
                let fam = t.subfamily(i, u, j);
                if let Some((d, _, _)) = min_cross_distance(space, &fam) {
                    tight = Some(tight.map_or(d, |t: f64| t.min(d)));
                }
                if let Err(w) = check_r_disjoint(space, &fam, t.scales[i]) {
                    return Err(TreeViolation {
                        level: i + 1,
                        element: Some(u),
                        subfamily: Some(j),
                        condition: Condition::Disjoint,
                        detail: format!("pair ({}, {}) at distance {} < {}", w.x, w.y, w.dist, t.scales[i]),
                        witness: Some(w),
                    });
                }
                covered = covered.union(&fam.union());
            }
            let parent = &t.levels[i].sets[u];
            let ok = match t.containment {
                Containment::Union => &covered == parent,
                Containment::Cover => parent.is_subset(&covered),
            };
            if !ok {
                let detail = match parent.iter().find(|&x| !covered.contains(x)) {
                    Some(x) => format!("point {x} of the element is not covered"),
                    None => "subfamilies reach outside the element".into(),
                };
                return Err(violation(i, Some(u), Condition::Union, detail));
            }
        }
        max_subfamilies.push(widest);
        tightest.push(tight);
    }
    let level_meshes: Vec<f64> = (0..t.depth()).map(|i| t.level_mesh(space, i)).collect();
    let bounded = match mode {
        TreeMode::Sfdc => {
            let last = t.depth() - 1;
            (level_meshes[last] <= t.terminal_mesh).then_some(last)
        }
        TreeMode::Casdim => t.bounded_level(space),
    };
    let Some(bounded) = bounded else {
        let last = t.depth() - 1;
        return Err(violation(
            last,
            None,
            Condition::Bounded,
            format!("mesh {} exceeds the terminal mesh {}", level_meshes[last], t.terminal_mesh),
        ));
    };
    Ok(TreeCertificate {
        mode,
        depth: t.depth(),
        bounded_level: bounded + 1,
        level_meshes,
        max_subfamilies,
        tightest,
    })
}

fn check_shape(space: &Space, t: &DecompositionTree) -> std::result::Result<(), TreeViolation> {
    let shape = |level: usize, detail: String| Err(violation(level, None, Condition::Shape, detail));
    let d = t.depth();
    if d == 0 {
        return shape(0, "no levels".into());
    }
    if t.scales.len() != d - 1 || t.branching.len() != d - 1 || t.splits.len() != d - 1 {
        return shape(
            0,
            format!(
                "{} levels need {} scales, branchings and split rows (got {}, {}, {})",
                d,
                d - 1,
                t.scales.len(),
                t.branching.len(),
                t.splits.len()
            ),
        );
    }
    if let Some(r) = t.scales.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return shape(0, format!("bad scale {r}"));
    }
    if !(t.terminal_mesh >= 0.0) {
        return shape(d - 1, format!("bad terminal mesh {}", t.terminal_mesh));
    }
    for (i, level) in t.levels.iter().enumerate() {
        if let Some(s) = level.sets.iter().find(|s| space.check_set(s).is_err()) {
            return shape(i, format!("set {:?} is not a subset of the space", s.as_slice()));
        }
    }
    for (i, row) in t.splits.iter().enumerate() {
        if row.len() != t.levels[i].len() {
            return shape(i, format!("{} split entries for {} elements", row.len(), t.levels[i].len()));
        }
        let next = t.levels[i + 1].len();
        for (u, subs) in row.iter().enumerate() {
            let mut seen = Vec::new();
            for w in subs.iter().flatten() {
                if *w >= next {
                    return Err(violation(i, Some(u), Condition::Shape, format!("child index {w} out of range {next}")));
                }
                if seen.contains(w) {
                    return Err(violation(i, Some(u), Condition::Shape, format!("child {w} listed twice")));
                }
                seen.push(*w);
            }
        }
    }
    Ok(())
}

fn require_valid(space: &Space, t: &DecompositionTree) -> Result<TreeCertificate> {
    verify_tree(space, t, TreeMode::Casdim).map_err(|v| Error::Tree(v.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub tree: DecompositionTree,
    /// `origins[i][k]`: the input element of level `i` containing output element `k`.
    pub origins: Vec<Vec<usize>>,
}

/// Turns every level into a partition. Within a parent the covering sets are
/// taken in subfamily order, then member order; each is cut down to the
/// parent and loses the points of its predecessors.
pub fn partition_refine(space: &Space, t: &DecompositionTree) -> Result<Refined> {
    require_valid(space, t)?;
    if t.is_partition_tree(space) {
        return Ok(Refined {
            tree: t.clone(),
            origins: t.levels.iter().map(|l| (0..l.len()).collect()).collect(),
        });
    }
    let mut levels = vec![Family::single(space.all())];
    let mut origins = vec![vec![0]];
    let mut splits = Vec::with_capacity(t.splits.len());
    for i in 0..t.splits.len() {
        let mut sets = Vec::new();
        let mut from = Vec::new();
        let mut row = Vec::with_capacity(levels[i].len());
        for (k, parent) in levels[i].sets.iter().enumerate() {
            let old = origins[i][k];
            let mut taken = PointSet::new();
            let mut subs = Vec::with_capacity(t.splits[i][old].len());
            for sub in &t.splits[i][old] {
                let mut idx = Vec::new();
                for &w in sub {
                    let piece = parent.intersection(&t.levels[i + 1].sets[w]).difference(&taken);
                    if piece.is_empty() {
                        continue;
                    }
                    taken = taken.union(&piece);
                    idx.push(sets.len());
                    sets.push(piece);
                    from.push(w);
                }
                subs.push(idx);
            }
            row.push(subs);
        }
        levels.push(Family::new(sets));
        origins.push(from);
        splits.push(row);
    }
    Ok(Refined {
        tree: DecompositionTree {
            levels,
            splits,
            containment: Containment::Union,
            ..t.clone()
        },
        origins,
    })
}

enum Pending {
    Split { u: usize, from: usize },
    Done(usize),
}

/// Rewrites a tree with binary branching. A level of branching `n_i > 2`
/// becomes `n_i − 1` levels: each step keeps one subfamily and carries the
/// union of the rest as a single set. Levels below the first bounded one are
/// dropped. With `targets`, the new levels use those scales, each at most the
/// scale of the level it came from.
pub fn casdim_to_sfdc(space: &Space, t: &DecompositionTree, targets: Option<&[f64]>) -> Result<DecompositionTree> {
    let cert = require_valid(space, t)?;
    let refined = partition_refine(space, t)?.tree.truncated(cert.bounded_level - 1);
    let steps: Vec<usize> = refined.branching.iter().map(|&n| n.saturating_sub(1).max(1)).collect();
    let total: usize = steps.iter().sum();
    if let Some(ts) = targets {
        if ts.len() != total {
            return Err(Error::Scales(format!("{} target scales for {total} binary levels", ts.len())));
        }
        let mut k = 0;
        for (i, &s) in steps.iter().enumerate() {
            for &r in &ts[k..k + s] {
                if !(r >= 0.0 && r <= refined.scales[i]) {
                    return Err(Error::Scales(format!(
                        "target {r} exceeds the scale {} of level {}",
                        refined.scales[i],
                        i + 1
                    )));
                }
            }
            k += s;
        }
    }
    if targets.is_none() && refined.branching.iter().all(|&n| n <= 2) {
        return Ok(DecompositionTree {
            mode: TreeMode::Sfdc,
            ..refined
        });
    }

    let mut levels = vec![Family::single(space.all())];
    let mut scales = Vec::with_capacity(total);
    let mut branching = Vec::with_capacity(total);
    let mut splits = Vec::with_capacity(total);
    let mut current: Vec<(PointSet, Pending)> = vec![(space.all(), Pending::Split { u: 0, from: 0 })];
    for (i, &s) in steps.iter().enumerate() {
        let row_splits = &refined.splits[i];
        let children = &refined.levels[i + 1].sets;
        for _ in 0..s {
            let mut next: Vec<(PointSet, Pending)> = Vec::new();
            let mut row = Vec::with_capacity(current.len());
            for (set, p) in &current {
                match *p {
                    Pending::Done(w) => {
                        row.push(vec![vec![next.len()]]);
                        next.push((set.clone(), Pending::Done(w)));
                    }
                    Pending::Split { u, from } => {
                        let subs = &row_splits[u];
                        let keep = |ws: &[usize], next: &mut Vec<(PointSet, Pending)>| -> Vec<usize> {
                            ws.iter()
                                .map(|&w| {
                                    next.push((children[w].clone(), Pending::Done(w)));
                                    next.len() - 1
                                })
                                .collect()
                        };
                        let mut out = Vec::new();
                        if subs.len().saturating_sub(from) <= 2 {
                            for sub in &subs[from.min(subs.len())..] {
                                out.push(keep(sub, &mut next));
                            }
                        } else {
                            out.push(keep(&subs[from], &mut next));
                            let rest = subs[from + 1..]
                                .iter()
                                .flatten()
                                .fold(PointSet::new(), |acc, &w| acc.union(&children[w]));
                            out.push(vec![next.len()]);
                            next.push((rest, Pending::Split { u, from: from + 1 }));
                        }
                        row.push(out);
                    }
                }
            }
            levels.push(Family::new(next.iter().map(|(s, _)| s.clone()).collect()));
            splits.push(row);
            scales.push(refined.scales[i]);
            branching.push(refined.branching[i].min(2));
            current = next;
        }
        current = current
            .into_iter()
            .map(|(set, p)| match p {
                Pending::Done(w) => Ok((set, Pending::Split { u: w, from: 0 })),
                Pending::Split { .. } => Err(Error::Tree(format!("level {} uses more subfamilies than its branching", i + 1))),
            })
            .collect::<Result<_>>()?;
    }
    Ok(DecompositionTree {
        levels,
        scales: targets.map_or(scales, <[f64]>::to_vec),
        branching,
        splits,
        terminal_mesh: refined.terminal_mesh,
        containment: Containment::Union,
        mode: TreeMode::Sfdc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeCover {
    /// The bounded level, colored by subfamily path.
    pub family: Family,
    /// Subfamily-index path from the root for each color.
    pub paths: Vec<Vec<usize>>,
    pub mesh: f64,
}

/// Flattens the tree down to its first bounded level. Sets sharing the path
/// of subfamily indices from the root form one color; two of them separate
/// inside the same subfamily of their last common ancestor, so each color is
/// `r`-disjoint whenever all scales are at least `r`.
pub fn tree_to_cover(space: &Space, t: &DecompositionTree, r: f64) -> Result<TreeCover> {
    let cert = require_valid(space, t)?;
    let b = cert.bounded_level - 1;
    if let Some(s) = t.scales[..b].iter().find(|&&s| s < r) {
        return Err(Error::Scales(format!("level scale {s} is below the requested {r}")));
    }
    let tree = partition_refine(space, t)?.tree.truncated(b);
    let mut paths: Vec<Vec<Option<Vec<usize>>>> = vec![vec![Some(Vec::new())]];
    for (i, row) in tree.splits.iter().enumerate() {
        let mut next = vec![None; tree.levels[i + 1].len()];
        for (u, subs) in row.iter().enumerate() {
            let Some(base) = paths[i][u].clone() else { continue };
            for (j, sub) in subs.iter().enumerate() {
                for &w in sub {
                    if next[w].is_none() {
                        let mut p = base.clone();
                        p.push(j);
                        next[w] = Some(p);
                    }
                }
            }
        }
        paths.push(next);
    }
    let mut color_of: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let leaves = &tree.levels[b].sets;
    let mut keep = Vec::new();
    for (w, p) in paths[b].iter().enumerate() {
        if let Some(p) = p {
            if !leaves[w].is_empty() {
                color_of.entry(p.clone()).or_insert(0);
                keep.push((w, p.clone()));
            }
        }
    }
    for (k, v) in color_of.values_mut().enumerate() {
        *v = k;
    }
    let family = Family::colored(
        keep.iter().map(|(w, _)| leaves[*w].clone()).collect(),
        keep.iter().map(|(_, p)| color_of[p]).collect(),
    )?;
    if let Some(x) = family.uncovered(&space.all()) {
        return Err(Error::Tree(format!("point {x} is not reached from the root")));
    }
    Ok(TreeCover {
        mesh: level_mesh(space, &family),
        paths: color_of.into_keys().collect(),
        family,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulledTree {
    pub tree: DecompositionTree,
    /// Per split level of the input: the gap its subfamilies had to exceed.
    pub required_gaps: Vec<f64>,
    /// Scale of the extra level, `max(R_max, D(b))`.
    pub fix_scale: f64,
    /// `n·D(b) + (n−1)·fix_scale`.
    pub piece_bound: f64,
}

/// Preimage tree of `t`, which lives on the codomain, with domain scales
/// `scales`. The last level splits each preimage of a bounded set into its
/// components at the fix-up scale; at most `n` are allowed.
pub fn tree_pullback(f: &CoarseMap, n: usize, control: &Control, t: &DecompositionTree, scales: &[f64]) -> Result<PulledTree> {
    let (x, y) = (f.domain(), f.codomain());
    let cert = require_valid(y, t)?;
    let b = cert.bounded_level - 1;
    let t = t.truncated(b);
    if scales.len() != b {
        return Err(Error::Scales(format!("{} domain scales for {b} split levels", scales.len())));
    }
    let mut required_gaps = Vec::with_capacity(b);
    for (i, &r) in scales.iter().enumerate() {
        let required = control_upper_strict(f, r);
        for (u, subs) in t.splits[i].iter().enumerate() {
            for j in 0..subs.len() {
                let fam = t.subfamily(i, u, j);
                let hit = Family::new(fam.sets.into_iter().filter(|s| !f.preimage(s).is_empty()).collect());
                if let Some((dist, a, c)) = min_cross_distance(y, &hit) {
                    if dist <= required {
                        return Err(Error::NotDisjoint {
                            x: a,
                            y: c,
                            dist,
                            required,
                        });
                    }
                }
            }
        }
        required_gaps.push(required);
    }

    // preimages, dropping empty ones and renumbering
    let mut index: Vec<Vec<Option<usize>>> = Vec::with_capacity(t.depth());
    let mut levels = Vec::with_capacity(t.depth() + 1);
    for level in &t.levels {
        let mut map = Vec::with_capacity(level.len());
        let mut sets = Vec::new();
        for s in &level.sets {
            let p = f.preimage(s);
            if p.is_empty() {
                map.push(None);
            } else {
                map.push(Some(sets.len()));
                sets.push(p);
            }
        }
        index.push(map);
        levels.push(Family::new(sets));
    }
    let mut splits = Vec::with_capacity(b + 1);
    for (i, row) in t.splits.iter().enumerate() {
        let mut out = vec![Vec::new(); levels[i].len()];
        for (u, subs) in row.iter().enumerate() {
            if let Some(k) = index[i][u] {
                out[k] = subs
                    .iter()
                    .map(|sub| sub.iter().filter_map(|&w| index[i + 1][w]).collect())
                    .collect();
            }
        }
        splits.push(out);
    }

    let d_b = control.eval(t.terminal_mesh);
    let fix_scale = scales.iter().copied().fold(d_b, f64::max);
    let piece_bound = n as f64 * d_b + n.saturating_sub(1) as f64 * fix_scale;
    let mut pieces = Vec::new();
    let mut row = Vec::with_capacity(levels[b].len());
    for p in &levels[b].sets {
        let comps = x.components(p, fix_scale);
        if comps.len() > n {
            return Err(Error::TooManyComponents {
                found: comps.len(),
                n,
                scale: fix_scale,
            });
        }
        let mut idx = Vec::with_capacity(comps.len());
        for c in comps {
            let d = x.diam_or_zero(&c);
            if d > piece_bound {
                return Err(Error::Control(format!("component of diameter {d} exceeds {piece_bound}")));
            }
            idx.push(pieces.len());
            pieces.push(c);
        }
        row.push(vec![idx]);
    }
    levels.push(Family::new(pieces));
    splits.push(row);
    let mut out_scales = scales.to_vec();
    out_scales.push(fix_scale);
    let mut branching = t.branching.clone();
    branching.push(1);
    Ok(PulledTree {
        tree: DecompositionTree {
            levels,
            scales: out_scales,
            branching,
            splits,
            terminal_mesh: piece_bound,
            containment: t.containment,
            mode: t.mode,
        },
        required_gaps,
        fix_scale,
        piece_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAudit {
    /// 1-based split level.
    pub level: usize,
    /// `n·n_i·R_i`, the scale handed to the disjointification.
    pub rho: f64,
    /// `L_i = L_{i−1} + rho`.
    pub slack: f64,
    /// `D(2·rho + 2·L_{i−1})`; input subfamilies must be farther apart.
    pub required_gap: f64,
    pub input_gap: Option<f64>,
    /// Output sets checked to lie in `B(f(W), L_i)` for their origin `W`.
    pub containments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushedTree {
    pub tree: DecompositionTree,
    pub audit: Vec<LevelAudit>,
    /// `origins[i][k]`: element of level `i` of the refined input tree whose
    /// image neighborhood contains output element `k`.
    pub origins: Vec<Vec<usize>>,
}

/// Image tree on the codomain of a surjective coarsely `n`-to-1 map with
/// control `control`, at target scales `targets` (one per split level down to
/// the bounded level of the refined input).
///
/// Each output element `V` with origin `U` is split by disjointifying the
/// cover `{B(f(W), L_{i−1}) ∩ V}` over the children `W` of `U` at scale
/// `n·n_i·R_i`.
pub fn tree_pushforward(f: &CoarseMap, n: usize, control: &Control, t: &DecompositionTree, targets: &[f64]) -> Result<PushedTree> {
    f.require_surjective()?;
    let (x, y) = (f.domain(), f.codomain());
    let cert = require_valid(x, t)?;
    let t = partition_refine(x, t)?.tree.truncated(cert.bounded_level - 1);
    let b = t.depth() - 1;
    if targets.len() != b {
        return Err(Error::Scales(format!("{} target scales for {b} split levels", targets.len())));
    }
    if targets.iter().any(|&r| !(r.is_finite() && r > 0.0)) || targets.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Scales("target scales must be positive and strictly increasing".into()));
    }
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }

    let mut levels = vec![Family::single(y.all())];
    let mut origins = vec![vec![0usize]];
    let mut splits = Vec::with_capacity(b);
    let mut branching = Vec::with_capacity(b);
    let mut audit = Vec::with_capacity(b);
    let mut slack = 0.0;
    for (i, &r) in targets.iter().enumerate() {
        let width = n * t.branching[i].max(1);
        let rho = width as f64 * r;
        let required = control.eval(2.0 * rho + 2.0 * slack);
        let mut input_gap: Option<f64> = None;
        for (u, subs) in t.splits[i].iter().enumerate() {
            for j in 0..subs.len() {
                if let Some((g, _, _)) = min_cross_distance(x, &t.subfamily(i, u, j)) {
                    input_gap = Some(input_gap.map_or(g, |h: f64| h.min(g)));
                }
            }
        }
        if let Some(g) = input_gap.filter(|&g| g <= required) {
            return Err(Error::Scales(format!(
                "input subfamilies at level {} have gap {g} but must exceed D(2ρ + 2L) = {required}",
                i + 1
            )));
        }
        let next_slack = slack + rho;
        let children = &t.levels[i + 1].sets;
        let mut sets = Vec::new();
        let mut from = Vec::new();
        let mut row = Vec::with_capacity(levels[i].len());
        let mut containments = 0;
        for (k, parent) in levels[i].sets.iter().enumerate() {
            if parent.is_empty() {
                row.push(Vec::new());
                continue;
            }
            let u = origins[i][k];
            let mut members: Vec<PointSet> = Vec::new();
            let mut member_origin = Vec::new();
            for &w in t.splits[i][u].iter().flatten() {
                let m = y.neighborhood(&f.image(&children[w]), slack).intersection(parent);
                if !m.is_empty() && !members.contains(&m) {
                    members.push(m);
                    member_origin.push(w);
                }
            }
            let out = make_disjoint_on(y, parent, &Family::new(members), rho, Some(width - 1))?;
            let mut by_color: Vec<Vec<usize>> = vec![Vec::new(); width];
            for (core, color) in out.trace.cores.iter().zip(out.family.colors.iter().flatten()) {
                let w = member_origin[core.key[0]];
                let reach = y.neighborhood(&f.image(&children[w]), next_slack);
                if !core.set.is_subset(&reach) {
                    return Err(Error::Tree(format!(
                        "output set at level {} leaves the {next_slack}-neighborhood of its origin",
                        i + 2
                    )));
                }
                containments += 1;
                by_color[*color].push(sets.len());
                sets.push(core.set.clone());
                from.push(w);
            }
            by_color.retain(|c| !c.is_empty());
            row.push(by_color);
        }
        levels.push(Family::new(sets));
        origins.push(from);
        splits.push(row);
        branching.push(width);
        audit.push(LevelAudit {
            level: i + 1,
            rho,
            slack: next_slack,
            required_gap: required,
            input_gap,
            containments,
        });
        slack = next_slack;
    }
    let terminal_mesh = control_upper(f).eval(t.terminal_mesh) + 2.0 * slack;
    let tree = DecompositionTree {
        levels,
        scales: targets.to_vec(),
        branching,
        splits,
        terminal_mesh,
        containment: Containment::Union,
        mode: t.mode,
    };
    let last = tree.level_mesh(y, b);
    if last > terminal_mesh {
        return Err(Error::Tree(format!("terminal level has mesh {last} above the bound {terminal_mesh}")));
    }
    Ok(PushedTree { tree, audit, origins })
}

/// Greedy `radius`-net of `points` in index order, as closed balls within `points`.
pub fn net_balls(space: &Space, points: &PointSet, radius: f64) -> Vec<PointSet> {
    let mut covered = PointSet::new();
    let mut balls = Vec::new();
    for c in points {
        if covered.contains(c) {
            continue;
        }
        let ball: PointSet = points.iter().filter(|&p| space.d(c, p) <= radius).collect();
        covered = covered.union(&ball);
        balls.push(ball);
    }
    balls
}

/// A partition tree built level by level: every element is covered by net
/// balls of radius `radii[i]`, the cover is disjointified at `scales[i]`, and
/// the color classes become the subfamilies. The recorded scale of a level is
/// the least `scales[i] / (n + 1)` over its elements.
pub fn net_tree(space: &Space, radii: &[f64], scales: &[f64]) -> Result<DecompositionTree> {
    if radii.len() != scales.len() {
        return Err(Error::Shape(format!("{} radii for {} scales", radii.len(), scales.len())));
    }
    let mut levels = vec![Family::single(space.all())];
    let mut splits = Vec::with_capacity(radii.len());
    let mut out_scales = Vec::with_capacity(radii.len());
    let mut branching = Vec::with_capacity(radii.len());
    for (&radius, &scale) in radii.iter().zip(scales) {
        let parents = levels.last().expect("root level").sets.clone();
        let mut sets = Vec::new();
        let mut row = Vec::with_capacity(parents.len());
        let mut level_scale = f64::INFINITY;
        let mut width = 1;
        for p in &parents {
            let balls = Family::new(net_balls(space, p, radius));
            let out = make_disjoint_on(space, p, &balls, scale, None)?;
            level_scale = level_scale.min(scale / (out.trace.n + 1) as f64);
            let mut subs = Vec::new();
            for class in out.family.classes() {
                if class.is_empty() {
                    continue;
                }
                let idx = (sets.len()..sets.len() + class.len()).collect();
                sets.extend(class.sets);
                subs.push(idx);
            }
            width = width.max(subs.len());
            row.push(subs);
        }
        levels.push(Family::new(sets));
        splits.push(row);
        out_scales.push(level_scale);
        branching.push(width);
    }
    let terminal_mesh = level_mesh(space, levels.last().expect("root level"));
    Ok(DecompositionTree {
        levels,
        scales: out_scales,
        branching,
        splits,
        terminal_mesh,
        containment: Containment::Union,
        mode: TreeMode::Casdim,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::covers::is_r_disjoint;
    use crate::maps::tests::abs_map;
    use crate::maps::{group_quotient, GroupAction};

    fn range(lo: usize, hi_incl: usize) -> PointSet {
        PointSet::range(lo, hi_incl + 1)
    }

    /// Depth-2 tree on `{0..15}`: `{{0..6},{9..15}}` and `{{7,8}}`.
    pub(crate) fn sixteen(scale: f64) -> DecompositionTree {
        DecompositionTree {
            levels: vec![
                Family::single(range(0, 15)),
                Family::new(vec![range(0, 6), range(9, 15), range(7, 8)]),
            ],
            scales: vec![scale],
            branching: vec![2],
            splits: vec![vec![vec![vec![0, 1], vec![2]]]],
            terminal_mesh: 6.0,
            containment: Containment::Union,
            mode: TreeMode::Sfdc,
        }
    }

    /// Two-level tree with `k` subfamilies, each a single block of a split of `{0..len-1}`.
    fn stacked(space: &Space, cuts: &[Vec<(usize, usize)>], scale: f64, mesh: f64) -> DecompositionTree {
        let mut sets = Vec::new();
        let mut subs = Vec::new();
        for sub in cuts {
            let mut idx = Vec::new();
            for &(lo, hi) in sub {
                idx.push(sets.len());
                sets.push(range(lo, hi));
            }
            subs.push(idx);
        }
        DecompositionTree {
            levels: vec![Family::single(space.all()), Family::new(sets)],
            scales: vec![scale],
            branching: vec![cuts.len()],
            splits: vec![vec![subs]],
            terminal_mesh: mesh,
            containment: Containment::Union,
            mode: TreeMode::Casdim,
        }
    }

    #[test]
    fn sixteen_is_a_valid_sfdc_tree() {
        let x = Space::integer_interval(0, 15);
        let cert = verify_tree(&x, &sixteen(2.0), TreeMode::Sfdc).unwrap();
        assert_eq!(cert.depth, 2);
        assert_eq!(cert.bounded_level, 2);
        assert_eq!(cert.tightest, vec![Some(3.0)]);
    }

    #[test]
    fn sixteen_at_scale_four_names_the_pair() {
        let x = Space::integer_interval(0, 15);
        let v = verify_tree(&x, &sixteen(4.0), TreeMode::Sfdc).unwrap_err();
        assert_eq!(v.condition, Condition::Disjoint);
        assert_eq!(v.level, 1);
        let w = v.witness.unwrap();
        assert_eq!((w.x, w.y, w.dist), (6, 9, 3.0));
    }

    #[test]
    fn single_point_tree() {
        let x = Space::integer_interval(0, 0);
        let cert = verify_tree(&x, &DecompositionTree::trivial(&x), TreeMode::Sfdc).unwrap();
        assert_eq!((cert.depth, cert.bounded_level), (1, 1));
    }

    #[test]
    fn violations_name_the_condition() {
        let x = Space::integer_interval(0, 15);
        let mut t = sixteen(2.0);
        t.levels[0] = Family::single(range(0, 14));
        assert_eq!(verify_tree(&x, &t, TreeMode::Casdim).unwrap_err().condition, Condition::Root);

        let mut t = sixteen(2.0);
        t.levels[1].sets[2] = range(7, 7);
        let v = verify_tree(&x, &t, TreeMode::Casdim).unwrap_err();
        assert_eq!((v.condition, v.element), (Condition::Union, Some(0)));

        let mut t = sixteen(2.0);
        t.terminal_mesh = 5.0;
        assert_eq!(verify_tree(&x, &t, TreeMode::Sfdc).unwrap_err().condition, Condition::Bounded);

        let mut t = sixteen(2.0);
        t.branching = vec![1];
        assert_eq!(verify_tree(&x, &t, TreeMode::Casdim).unwrap_err().condition, Condition::Branching);

        let t = stacked(&x, &[vec![(0, 3)], vec![(4, 7)], vec![(8, 15)]], 1.0, 7.0);
        assert!(verify_tree(&x, &t, TreeMode::Casdim).is_ok());
        assert_eq!(verify_tree(&x, &t, TreeMode::Sfdc).unwrap_err().condition, Condition::Branching);
    }

    #[test]
    fn refine_subtracts_predecessors() {
        let x = Space::integer_interval(0, 2);
        let t = DecompositionTree {
            levels: vec![Family::single(range(0, 2)), Family::new(vec![range(0, 1), range(1, 2)])],
            scales: vec![1.0],
            branching: vec![2],
            splits: vec![vec![vec![vec![0], vec![1]]]],
            terminal_mesh: 1.0,
            containment: Containment::Cover,
            mode: TreeMode::Casdim,
        };
        let r = partition_refine(&x, &t).unwrap();
        assert_eq!(r.tree.levels[1].sets, vec![range(0, 1), range(2, 2)]);
        assert_eq!(r.origins[1], vec![0, 1]);
        assert!(r.tree.is_partition_tree(&x));
    }

    #[test]
    fn refine_keeps_partition_trees() {
        let x = Space::integer_interval(0, 15);
        let t = sixteen(2.0);
        assert_eq!(partition_refine(&x, &t).unwrap().tree, t);
    }

    #[test]
    fn refine_overlapping_sixteen() {
        let x = Space::integer_interval(0, 15);
        let t = DecompositionTree {
            levels: vec![
                Family::single(range(0, 15)),
                Family::new(vec![range(0, 8), range(9, 15), range(6, 10)]),
            ],
            scales: vec![1.0],
            branching: vec![2],
            splits: vec![vec![vec![vec![0, 1], vec![2]]]],
            terminal_mesh: 8.0,
            containment: Containment::Cover,
            mode: TreeMode::Casdim,
        };
        verify_tree(&x, &t, TreeMode::Casdim).unwrap();
        let r = partition_refine(&x, &t).unwrap();
        assert!(r.tree.is_partition_tree(&x));
        verify_tree(&x, &r.tree, TreeMode::Casdim).unwrap();
        for (i, level) in r.tree.levels.iter().enumerate() {
            for (k, s) in level.sets.iter().enumerate() {
                assert!(s.is_subset(&t.levels[i].sets[r.origins[i][k]]));
            }
        }
        // {6..10} loses everything the first subfamily already took
        assert_eq!(r.tree.levels[1].sets.len(), 2);
    }

    #[test]
    fn binary_trees_pass_through() {
        let x = Space::integer_interval(0, 15);
        let t = sixteen(2.0);
        assert_eq!(casdim_to_sfdc(&x, &t, None).unwrap(), t);
    }

    #[test]
    fn three_subfamilies_become_two_binary_levels() {
        let x = Space::integer_interval(0, 20);
        let t = stacked(
            &x,
            &[vec![(0, 3), (12, 15)], vec![(5, 8), (17, 20)], vec![(4, 4), (9, 11), (16, 16)]],
            1.0,
            3.0,
        );
        verify_tree(&x, &t, TreeMode::Casdim).unwrap();
        let s = casdim_to_sfdc(&x, &t, None).unwrap();
        let cert = verify_tree(&x, &s, TreeMode::Sfdc).unwrap();
        assert_eq!(cert.depth, 3);
        // the remainder after peeling the first subfamily
        assert_eq!(s.levels[1].sets.len(), 3);
        assert_eq!(s.levels[2].sets.len(), 7);
    }

    #[test]
    fn targets_must_not_exceed_block_scales() {
        let x = Space::integer_interval(0, 20);
        let t = stacked(&x, &[vec![(0, 6)], vec![(7, 13)], vec![(14, 20)]], 1.0, 6.0);
        assert!(casdim_to_sfdc(&x, &t, Some(&[0.5, 1.0])).is_ok());
        assert!(matches!(casdim_to_sfdc(&x, &t, Some(&[0.5, 2.0])), Err(Error::Scales(_))));
        assert!(matches!(casdim_to_sfdc(&x, &t, Some(&[0.5])), Err(Error::Scales(_))));
    }

    #[test]
    fn sixteen_cover_has_two_colors() {
        let x = Space::integer_interval(0, 15);
        let c = tree_to_cover(&x, &sixteen(2.0), 2.0).unwrap();
        assert_eq!(c.paths, vec![vec![0], vec![1]]);
        let classes = c.family.classes();
        assert_eq!(classes[0].sets, vec![range(0, 6), range(9, 15)]);
        assert_eq!(classes[1].sets, vec![range(7, 8)]);
        assert!(classes.iter().all(|f| is_r_disjoint(&x, f, 2.0)));
        assert_eq!(c.mesh, 6.0);
        assert!(matches!(tree_to_cover(&x, &sixteen(2.0), 3.0), Err(Error::Scales(_))));
    }

    #[test]
    fn bounded_space_is_one_color() {
        let x = Space::integer_interval(0, 4);
        let c = tree_to_cover(&x, &DecompositionTree::trivial(&x), 10.0).unwrap();
        assert_eq!(c.family.sets, vec![range(0, 4)]);
        assert_eq!(c.family.used_colors(), 1);
    }

    /// Binary tree of depth 3 on `{0..30}`.
    fn binary_thirty() -> DecompositionTree {
        DecompositionTree {
            levels: vec![
                Family::single(range(0, 30)),
                Family::new(vec![range(0, 12), range(18, 30), range(13, 17)]),
                Family::new(vec![
                    range(0, 4),
                    range(8, 12),
                    range(5, 7),
                    range(18, 22),
                    range(26, 30),
                    range(23, 25),
                    range(13, 17),
                ]),
            ],
            scales: vec![2.0, 3.0],
            branching: vec![2, 2],
            splits: vec![
                vec![vec![vec![0, 1], vec![2]]],
                vec![vec![vec![0, 1], vec![2]], vec![vec![3, 4], vec![5]], vec![vec![6]]],
            ],
            terminal_mesh: 4.0,
            containment: Containment::Union,
            mode: TreeMode::Sfdc,
        }
    }

    #[test]
    fn depth_three_cover() {
        let x = Space::integer_interval(0, 30);
        let t = binary_thirty();
        verify_tree(&x, &t, TreeMode::Sfdc).unwrap();
        let c = tree_to_cover(&x, &t, 2.0).unwrap();
        assert!(c.family.used_colors() <= 4);
        assert!(c.family.classes().iter().all(|f| is_r_disjoint(&x, f, 2.0)));
        assert_eq!(c.family.uncovered(&x.all()), None);
        assert!(c.mesh <= 4.0);
    }

    #[test]
    fn identity_pullback_reproduces_levels() {
        let x = Arc::new(Space::integer_interval(0, 15));
        let f = CoarseMap::identity(x.clone());
        let t = sixteen(2.0);
        let p = tree_pullback(&f, 1, &Control::identity(), &t, &[2.0]).unwrap();
        assert_eq!(p.tree.levels[..2], t.levels[..]);
        verify_tree(&x, &p.tree, TreeMode::Sfdc).unwrap();
        assert_eq!(p.tree.levels[2].sets, t.levels[1].sets);
    }

    /// `{0..15}` split so that preimages under `|x|` stay far apart.
    fn reflected_base() -> DecompositionTree {
        DecompositionTree {
            levels: vec![
                Family::single(range(0, 15)),
                Family::new(vec![range(0, 4), range(11, 15), range(5, 10)]),
            ],
            scales: vec![2.0],
            branching: vec![2],
            splits: vec![vec![vec![vec![0, 1], vec![2]]]],
            terminal_mesh: 5.0,
            containment: Containment::Union,
            mode: TreeMode::Casdim,
        }
    }

    #[test]
    fn abs_pullback_splits_reflected_pairs() {
        let f = abs_map(15);
        let x = f.domain().clone();
        let y = f.codomain().clone();
        let t = reflected_base();
        verify_tree(&y, &t, TreeMode::Casdim).unwrap();
        let p = tree_pullback(&f, 2, &Control::identity(), &t, &[2.0]).unwrap();
        verify_tree(&x, &p.tree, TreeMode::Casdim).unwrap();
        // {0..4} pulls back to one piece, the others to mirror pairs
        let row = &p.tree.splits[1];
        assert_eq!(row.iter().map(|s| s[0].len()).collect::<Vec<_>>(), vec![1, 2, 2]);
        assert!(p.tree.level_mesh(&x, 2) <= p.piece_bound);
    }

    #[test]
    fn pullback_refuses_close_images() {
        let f = abs_map(15);
        // E⁻(6) = 5 but the subfamily has a gap of 3
        let r = tree_pullback(&f, 2, &Control::identity(), &sixteen(2.0), &[6.0]);
        assert!(matches!(r, Err(Error::NotDisjoint { .. })), "{r:?}");
    }

    #[test]
    fn quotient_pullback() {
        let x = Arc::new(Space::cycle(6));
        let q = group_quotient(x, &GroupAction::cyclic_rotation(6, 2)).unwrap();
        let f = q.proj.clone();
        let (dom, cod) = (f.domain().clone(), f.codomain().clone());
        let t = DecompositionTree {
            levels: vec![Family::single(cod.all()), Family::singletons(&cod.all())],
            scales: vec![2.0],
            branching: vec![1],
            splits: vec![vec![vec![vec![0, 1, 2]]]],
            terminal_mesh: 0.0,
            containment: Containment::Union,
            mode: TreeMode::Sfdc,
        };
        verify_tree(&cod, &t, TreeMode::Sfdc).unwrap();
        let p = tree_pullback(&f, 2, &Control::linear(2.0), &t, &[2.0]).unwrap();
        verify_tree(&dom, &p.tree, TreeMode::Sfdc).unwrap();
        assert!(p.tree.splits[1].iter().all(|s| s[0].len() <= 2));
    }

    #[test]
    fn identity_pushforward() {
        let x = Arc::new(Space::integer_interval(0, 30));
        let f = CoarseMap::identity(x.clone());
        let t = binary_thirty();
        // gaps 6 and 4 must exceed 2ρ_1 = 1 and 2ρ_2 + 2L_1 = 3
        let p = tree_pushforward(&f, 1, &Control::identity(), &t, &[0.25, 0.5]).unwrap();
        verify_tree(&x, &p.tree, TreeMode::Casdim).unwrap();
        assert_eq!(p.tree.branching, vec![2, 2]);
        assert_eq!(p.audit.iter().map(|a| a.required_gap).collect::<Vec<_>>(), vec![1.0, 3.0]);
        assert_eq!(p.audit[1].slack, 1.5);
        assert_eq!(p.tree.terminal_mesh, 4.0 + 3.0);
        assert!(tree_pushforward(&f, 1, &Control::identity(), &t, &[0.25, 1.0]).is_err());
    }

    #[test]
    fn pushforward_rejects_close_subfamilies() {
        let x = Arc::new(Space::integer_interval(0, 15));
        let f = CoarseMap::identity(x);
        let r = tree_pushforward(&f, 1, &Control::identity(), &sixteen(2.0), &[1.0]);
        assert!(matches!(r, Err(Error::Scales(_))), "{r:?}");
    }

    /// Partition tree on `{-15..15}` invariant under reflection.
    fn reflected_domain() -> DecompositionTree {
        let x = Space::integer_interval(-15, 15);
        let ix = |lo: i64, hi: i64| -> PointSet { ((lo + 15) as usize..=(hi + 15) as usize).collect() };
        DecompositionTree {
            levels: vec![
                Family::single(x.all()),
                Family::new(vec![ix(-15, -11), ix(-5, 5), ix(11, 15), ix(-10, -6), ix(6, 10)]),
            ],
            scales: vec![6.0],
            branching: vec![2],
            splits: vec![vec![vec![vec![0, 1, 2], vec![3, 4]]]],
            terminal_mesh: 10.0,
            containment: Containment::Union,
            mode: TreeMode::Casdim,
        }
    }

    #[test]
    fn abs_pushforward_doubles_branching() {
        let f = abs_map(15);
        let (x, y) = (f.domain().clone(), f.codomain().clone());
        let t = reflected_domain();
        verify_tree(&x, &t, TreeMode::Casdim).unwrap();
        let p = tree_pushforward(&f, 2, &Control::identity(), &t, &[0.5]).unwrap();
        let cert = verify_tree(&y, &p.tree, TreeMode::Casdim).unwrap();
        assert_eq!(p.tree.branching, vec![4]);
        assert!(cert.max_subfamilies[0] <= 4);
        assert_eq!(p.audit[0].containments, p.tree.levels[1].len());
        assert_eq!(p.audit[0].required_gap, 4.0);
    }

    #[test]
    fn quotient_pushforward() {
        let x = Arc::new(Space::cycle(6));
        let q = group_quotient(x, &GroupAction::cyclic_rotation(6, 2)).unwrap();
        let f = q.proj.clone();
        let (dom, cod) = (f.domain().clone(), f.codomain().clone());
        let pts = |v: &[usize]| -> PointSet { v.iter().copied().collect() };
        let t = DecompositionTree {
            levels: vec![
                Family::single(dom.all()),
                Family::new(vec![pts(&[0, 1]), pts(&[3, 4]), pts(&[2]), pts(&[5])]),
            ],
            scales: vec![4.0],
            branching: vec![2],
            splits: vec![vec![vec![vec![0, 1], vec![2, 3]]]],
            terminal_mesh: 2.0,
            containment: Containment::Union,
            mode: TreeMode::Sfdc,
        };
        verify_tree(&dom, &t, TreeMode::Sfdc).unwrap();
        let p = tree_pushforward(&f, 2, &Control::linear(2.0), &t, &[0.2]).unwrap();
        let cert = verify_tree(&cod, &p.tree, TreeMode::Casdim).unwrap();
        assert!(cert.max_subfamilies[0] <= 4);
    }

    /// Random two-level casdim tree on a line: blocks of width `w` are dealt
    /// round-robin to `k` subfamilies.
    fn dealt(len: usize, w: usize, k: usize) -> (Space, DecompositionTree) {
        let x = Space::integer_interval(0, len as i64 - 1);
        let mut cuts = vec![Vec::new(); k];
        let mut lo = 0;
        let mut c = 0;
        while lo < len {
            let hi = (lo + w - 1).min(len - 1);
            cuts[c % k].push((lo, hi));
            lo = hi + 1;
            c += 1;
        }
        cuts.retain(|s: &Vec<(usize, usize)>| !s.is_empty());
        let t = stacked(&x, &cuts, ((k - 1) * w + 1) as f64, (w - 1) as f64);
        (x, t)
    }

    #[test]
    fn net_trees_verify() {
        let x = Space::integer_interval(0, 40);
        let t = net_tree(&x, &[8.0, 3.0], &[4.0, 2.0]).unwrap();
        let cert = verify_tree(&x, &t, TreeMode::Casdim).unwrap();
        assert_eq!(cert.depth, 3);
        assert!(t.is_partition_tree(&x));
        assert!(t.terminal_mesh <= 3.0 * 2.0 + 2.0 * 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn conversion_passes_sfdc(len in 2usize..60, w in 1usize..6, k in 1usize..5) {
            let (x, t) = dealt(len, w, k);
            prop_assert!(verify_tree(&x, &t, TreeMode::Casdim).is_ok());
            let s = casdim_to_sfdc(&x, &t, None).unwrap();
            prop_assert!(verify_tree(&x, &s, TreeMode::Sfdc).is_ok());
            let r = partition_refine(&x, &t).unwrap();
            prop_assert!(r.tree.is_partition_tree(&x));
        }
    }
}
