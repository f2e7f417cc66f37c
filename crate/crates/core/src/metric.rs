//! Finite metric spaces and the set-level primitives everything else is built on.
//!
//! Three strictness conventions are used throughout the crate and never mixed:
//!
//! * neighborhoods are open: `B(A, R) = A ∪ {x : d(x, a) < R for some a ∈ A}`;
//! * a family is `R`-disjoint when members are at distance `≥ R`;
//! * `R`-chains (and hence `R`-components) use steps of length `≤ R`.
//!
//! All comparisons are exact comparisons on stored distances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::union_find::UnionFind;

/// Above this size the exhaustive triangle check is skipped for metrics that are
/// metrics by construction (point clouds and shortest-path graphs).
pub const TRIANGLE_CHECK_CAP: usize = 512;

/// Relative slack tolerated when re-checking the triangle inequality on metrics
/// computed from coordinates or path sums, where rounding can cost an ulp.
const DERIVED_TRIANGLE_SLACK: f64 = 1e-12;

/// A point label as it appears in JSON: either an integer or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Str(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(i) => write!(f, "{i}"),
            Label::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Label {
    fn from(v: i64) -> Self {
        Label::Int(v)
    }
}

impl From<&str> for Label {
    fn from(v: &str) -> Self {
        Label::Str(v.to_string())
    }
}

/// A finite set of points of some space, stored as sorted indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet(Vec<usize>);

impl PointSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn singleton(x: usize) -> Self {
        Self(vec![x])
    }

    /// Half-open index range `lo..hi`.
    pub fn range(lo: usize, hi: usize) -> Self {
        Self((lo..hi).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn insert(&mut self, x: usize) {
        if let Err(pos) = self.0.binary_search(&x) {
            self.0.insert(pos, x);
        }
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    v.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    v.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    v.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        v.extend_from_slice(&a[i..]);
        v.extend_from_slice(&b[j..]);
        PointSet(v)
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        self.iter().filter(|&x| other.contains(x)).collect()
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        self.iter().filter(|&x| !other.contains(x)).collect()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    pub fn intersects(&self, other: &PointSet) -> bool {
        self.iter().any(|x| other.contains(x))
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl FromIterator<usize> for PointSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PointSet(v)
    }
}

impl From<Vec<usize>> for PointSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = usize;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

/// Norm used to turn coordinates into distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 => diffs.map(|t| t * t).sum::<f64>().sqrt(),
            Norm::Linf => diffs.fold(0.0, f64::max),
        }
    }
}

/// Ingestion record for a space, mirroring the JSON schema
/// `{"kind": "matrix" | "cloud" | "graph", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceDescriptor {
    Matrix {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<Label>>,
        matrix: Vec<Vec<f64>>,
    },
    Cloud {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<Label>>,
        coords: Vec<Vec<f64>>,
        norm: Norm,
    },
    Graph {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<Label>>,
        edges: Vec<(usize, usize, f64)>,
    },
}

/// Where a space's distances came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Matrix,
    Cloud,
    Graph,
    Derived,
}

/// A finite metric space with a dense, verified distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    labels: Vec<Label>,
    dist: Vec<f64>,
    origin: Origin,
}

impl Space {
    /// Builds a space from a full distance matrix, checking every metric axiom.
    pub fn from_matrix(labels: Option<Vec<Label>>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Shape(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        let dist: Vec<f64> = rows.into_iter().flatten().collect();
        Self::validated(labels, n, dist, Origin::Matrix)
    }

    /// Builds a space from any supported descriptor. Point order is descriptor order.
    pub fn from_descriptor(desc: &SpaceDescriptor) -> Result<Self> {
        match desc {
            SpaceDescriptor::Matrix { labels, matrix } => {
                Self::from_matrix(labels.clone(), matrix.clone())
            }
            SpaceDescriptor::Cloud {
                labels,
                coords,
                norm,
            } => Self::from_cloud(labels.clone(), coords, *norm),
            SpaceDescriptor::Graph { labels, edges } => Self::from_graph(labels.clone(), edges),
        }
    }

    pub fn from_cloud(labels: Option<Vec<Label>>, coords: &[Vec<f64>], norm: Norm) -> Result<Self> {
        let n = coords.len();
        if let Some(dim) = coords.first().map(Vec::len) {
            if let Some(i) = coords.iter().position(|c| c.len() != dim) {
                return Err(Error::Shape(format!("point {i} has a different dimension")));
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = norm.dist(&coords[i], &coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::validated(labels, n, dist, Origin::Cloud)
    }

    /// Shortest-path metric of a connected undirected graph with positive weights.
    pub fn from_graph(labels: Option<Vec<Label>>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = match &labels {
            Some(l) => l.len(),
            None => edges.iter().map(|&(a, b, _)| a.max(b) + 1).max().unwrap_or(0),
        };
        let mut dist = vec![f64::INFINITY; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        for &(a, b, w) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::PointOutOfRange { index: v, len: n });
                }
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::BadDistance(a, b));
            }
            if a != b && w < dist[a * n + b] {
                dist[a * n + b] = w;
                dist[b * n + a] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + dist[k * n + j];
                    if cand < dist[i * n + j] {
                        dist[i * n + j] = cand;
                    }
                }
            }
        }
        if let Some(j) = (0..n).find(|&j| dist[j].is_infinite()) {
            return Err(Error::Disconnected(j));
        }
        Self::validated(labels, n, dist, Origin::Graph)
    }

    /// Builds a space from a matrix computed inside the crate (quotients,
    /// symmetrized metrics). Axioms are still verified.
    pub(crate) fn derived(labels: Vec<Label>, dist: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        Self::validated(Some(labels), n, dist, Origin::Derived)
    }

    fn validated(labels: Option<Vec<Label>>, n: usize, dist: Vec<f64>, origin: Origin) -> Result<Self> {
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::Shape(format!("{} labels for {n} points", l.len())))
            }
            Some(l) => l,
            None => (0..n as i64).map(Label::Int).collect(),
        };
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
        }
        let at = |i: usize, j: usize| dist[i * n + j];
        for i in 0..n {
            if at(i, i) != 0.0 {
                return Err(Error::NonZeroDiagonal(i));
            }
            for j in 0..n {
                let d = at(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::BadDistance(i, j));
                }
                if at(j, i) != d {
                    return Err(Error::Asymmetric(i.min(j), i.max(j)));
                }
                if i != j && d == 0.0 {
                    return Err(Error::ZeroDistance(i.min(j), i.max(j)));
                }
            }
        }
        let exact = matches!(origin, Origin::Matrix);
        if exact || n <= TRIANGLE_CHECK_CAP {
            let slack = if exact { 0.0 } else { DERIVED_TRIANGLE_SLACK };
            for x in 0..n {
                for z in 0..n {
                    let dxz = at(x, z);
                    for y in 0..n {
                        let via = at(x, y) + at(y, z);
                        if dxz > via + via * slack {
                            let mut t = [x, y, z];
                            t.sort_unstable();
                            return Err(Error::Triangle(t[0], t[1], t[2]));
                        }
                    }
                }
            }
        }
        Ok(Space {
            labels,
            dist,
            origin,
        })
    }

    /// Integer points `lo..=hi` on the real line.
    pub fn integer_interval(lo: i64, hi: i64) -> Self {
        let coords: Vec<Vec<f64>> = (lo..=hi).map(|v| vec![v as f64]).collect();
        let labels = (lo..=hi).map(Label::Int).collect();
        Self::from_cloud(Some(labels), &coords, Norm::L1).expect("integer interval is a metric")
    }

    /// Vertices of the unit-edge cycle graph on `n` vertices.
    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        let labels = (0..n as i64).map(Label::Int).collect();
        Self::from_graph(Some(labels), &edges).expect("cycle is connected")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.len() + y]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &Label {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn all(&self) -> PointSet {
        PointSet::range(0, self.len())
    }

    /// Full distance matrix as rows (for export).
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.len().max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Checks that every index of `a` is a point of this space.
    pub fn check_set(&self, a: &PointSet) -> Result<()> {
        match a.iter().find(|&x| x >= self.len()) {
            Some(index) => Err(Error::PointOutOfRange {
                index,
                len: self.len(),
            }),
            None => Ok(()),
        }
    }

    /// Sorted distinct positive distances realized between points of `a`.
    pub fn realized_distances(&self, a: &PointSet) -> Vec<f64> {
        let pts = a.as_slice();
        let mut v: Vec<f64> = Vec::new();
        for (i, &x) in pts.iter().enumerate() {
            for &y in &pts[i + 1..] {
                v.push(self.d(x, y));
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// `dist(x, A)`; `+∞` for the empty set.
    pub fn dist_to_set(&self, x: usize, a: &PointSet) -> f64 {
        a.iter().map(|u| self.d(x, u)).fold(f64::INFINITY, f64::min)
    }

    /// Smallest distance between the two sets with the lexicographically first
    /// pair attaining it; `None` if either set is empty.
    pub fn closest_pair(&self, a: &PointSet, b: &PointSet) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in a {
            for y in b {
                let d = self.d(x, y);
                let (lo, hi) = (x.min(y), x.max(y));
                let better = match best {
                    None => true,
                    Some((bd, bx, by)) => d < bd || (d == bd && (lo, hi) < (bx, by)),
                };
                if better {
                    best = Some((d, lo, hi));
                }
            }
        }
        best
    }

    /// Open neighborhood `B(A, r)`: `A` together with every point at distance `< r` from `A`.
    pub fn neighborhood(&self, a: &PointSet, r: f64) -> PointSet {
        if a.is_empty() {
            return PointSet::new();
        }
        (0..self.len())
            .filter(|&x| a.contains(x) || a.iter().any(|u| self.d(x, u) < r))
            .collect()
    }

    /// `{x ∈ A : B({x}, r) ⊆ A}`.
    pub fn inner_neighborhood(&self, a: &PointSet, r: f64) -> PointSet {
        a.iter()
            .filter(|&x| (0..self.len()).all(|y| a.contains(y) || self.d(x, y) >= r))
            .collect()
    }

    pub fn hausdorff(&self, a: &PointSet, b: &PointSet) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Empty("Hausdorff distance argument"));
        }
        let directed = |p: &PointSet, q: &PointSet| {
            p.iter()
                .map(|x| self.dist_to_set(x, q))
                .fold(0.0_f64, f64::max)
        };
        Ok(directed(a, b).max(directed(b, a)))
    }

    pub fn diameter(&self, a: &PointSet) -> Result<f64> {
        if a.is_empty() {
            return Err(Error::Empty("diameter argument"));
        }
        Ok(self.diam_or_zero(a))
    }

    /// Diameter with the empty set mapped to zero.
    pub(crate) fn diam_or_zero(&self, a: &PointSet) -> f64 {
        let pts = a.as_slice();
        let mut best = 0.0_f64;
        for (i, &x) in pts.iter().enumerate() {
            for &y in &pts[i + 1..] {
                best = best.max(self.d(x, y));
            }
        }
        best
    }

    /// `R`-components of `A` (chains with steps `≤ r`), ordered by least point.
    pub fn components(&self, a: &PointSet, r: f64) -> Vec<PointSet> {
        self.components_by(a, |d| d <= r)
    }

    /// Components under the strict relation `d < r`. Its classes are exactly the
    /// coarsest partition of `A` into `r`-disjoint pieces.
    pub fn strict_components(&self, a: &PointSet, r: f64) -> Vec<PointSet> {
        self.components_by(a, |d| d < r)
    }

    fn components_by(&self, a: &PointSet, linked: impl Fn(f64) -> bool) -> Vec<PointSet> {
        let pts = a.as_slice();
        let mut uf = UnionFind::new(pts.len());
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if linked(self.d(pts[i], pts[j])) {
                    uf.union(i, j);
                }
            }
        }
        uf.classes()
            .into_iter()
            .map(|c| c.into_iter().map(|i| pts[i]).collect())
            .collect()
    }

    /// The subspace on `a`, with points renumbered in ascending order of `a`.
    pub fn subspace(&self, a: &PointSet) -> Space {
        let pts = a.as_slice();
        let m = pts.len();
        let mut dist = vec![0.0; m * m];
        for (i, &x) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                dist[i * m + j] = self.d(x, y);
            }
        }
        Space {
            labels: pts.iter().map(|&x| self.labels[x].clone()).collect(),
            dist,
            origin: Origin::Derived,
        }
    }

    /// Same points with every distance replaced by `max(floor, d)` off the diagonal.
    pub fn floored(&self, floor: f64) -> Result<Space> {
        let n = self.len();
        let mut dist = self.dist.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    dist[i * n + j] = dist[i * n + j].max(floor);
                }
            }
        }
        Space::derived(self.labels.clone(), dist)
    }
}
