//! Maximal clique enumeration (Bron–Kerbosch with pivoting) on graphs of at
//! most 64 vertices, using `u64` adjacency masks.

/// Largest graph the bitset enumerator accepts.
pub const MAX_VERTICES: usize = 64;

/// Adjacency masks for a simple undirected graph on `0..len`.
#[derive(Debug, Clone)]
pub struct BitGraph {
    adj: Vec<u64>,
}

impl BitGraph {
    /// Builds the graph whose edges are the pairs accepted by `linked`.
    ///
    /// Panics if `len > MAX_VERTICES`.
    pub fn from_fn(len: usize, mut linked: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(len <= MAX_VERTICES, "bit graph limited to {MAX_VERTICES} vertices");
        let mut adj = vec![0u64; len];
        for i in 0..len {
            for j in (i + 1)..len {
                if linked(i, j) {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        Self { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// All maximal cliques, each sorted ascending, the list sorted lexicographically.
    pub fn maximal_cliques(&self) -> Vec<Vec<usize>> {
        if self.adj.is_empty() {
            return Vec::new();
        }
        let mut out: Vec<u64> = Vec::new();
        let all = if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        };
        self.expand(0, all, 0, &mut out);
        let mut cliques: Vec<Vec<usize>> = out.into_iter().map(bits).collect();
        cliques.sort();
        cliques
    }

    fn expand(&self, r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
        if p == 0 {
            if x == 0 {
                out.push(r);
            }
            return;
        }
        // pivot: vertex of P ∪ X with most neighbours in P
        let pivot = bits(p | x)
            .into_iter()
            .max_by_key(|&u| (self.adj[u] & p).count_ones())
            .expect("P is nonempty");
        for v in bits(p & !self.adj[pivot]) {
            let m = 1u64 << v;
            self.expand(r | m, p & self.adj[v], x & self.adj[v], out);
            p &= !m;
            x |= m;
        }
    }
}

fn bits(mut mask: u64) -> Vec<usize> {
    let mut v = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        v.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    v
}
