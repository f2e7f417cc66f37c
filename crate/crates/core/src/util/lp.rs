//! Dense tableau simplex for packing LPs `max cᵀy, My ≤ b, y ≥ 0` with `b ≥ 0`,
//! and the covering-game value built on it.

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    /// Primal optimum `y`.
    pub primal: Vec<f64>,
    /// Dual optimum, one entry per constraint row.
    pub dual: Vec<f64>,
}

/// Solves `max cᵀy` subject to `rows · y ≤ b`, `y ≥ 0`. Requires `b ≥ 0`, so the
/// origin is feasible. Returns `None` when the LP is unbounded.
pub fn maximize_packing(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Option<LpSolution> {
    let m = rows.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    assert!(b.iter().all(|&v| v >= 0.0), "right-hand side must be nonnegative");
    let width = n + m + 1;
    // rows 0..m constraints, row m objective (stored as -c)
    let mut t = vec![vec![0.0; width]; m + 1];
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), n);
        t[i][..n].copy_from_slice(row);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        // Bland: lowest-index improving column
        let Some(col) = (0..n + m).find(|&j| t[m][j] < -EPS) else {
            break;
        };
        let mut pivot: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][col] > EPS {
                let ratio = t[i][width - 1] / t[i][col];
                let better = match pivot {
                    None => true,
                    Some((r, best)) => ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[r]),
                };
                if better {
                    pivot = Some((i, ratio));
                }
            }
        }
        let (row, _) = pivot?;
        let p = t[row][col];
        for v in t[row].iter_mut() {
            *v /= p;
        }
        for i in 0..=m {
            if i != row && t[i][col].abs() > 0.0 {
                let f = t[i][col];
                for j in 0..width {
                    t[i][j] -= f * t[row][j];
                }
            }
        }
        basis[row] = col;
    }

    let mut primal = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            primal[bv] = t[i][width - 1];
        }
    }
    let dual = (0..m).map(|i| t[m][n + i].max(0.0)).collect();
    Some(LpSolution {
        value: t[m][width - 1],
        primal,
        dual,
    })
}

/// Value of the game where the minimizer picks a probability measure on
/// `0..points` and the maximizer a set from `sets`, payoff the measure of the
/// set. Equals `1 / τ*` with `τ*` the fractional covering number. Returns the
/// value and an optimal (worst-case) measure. Every point must lie in some set.
pub fn covering_game(points: usize, sets: &[Vec<usize>]) -> (f64, Vec<f64>) {
    // packing dual: max Σ y_p  s.t.  Σ_{p ∈ S} y_p ≤ 1 for every set S
    let rows: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| {
            let mut r = vec![0.0; points];
            for &p in s {
                r[p] = 1.0;
            }
            r
        })
        .collect();
    let sol = maximize_packing(&vec![1.0; points], &rows, &vec![1.0; sets.len()])
        .expect("bounded when every point is covered");
    let total: f64 = sol.primal.iter().sum();
    let measure = sol.primal.iter().map(|y| y / total).collect();
    (1.0 / sol.value, measure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → 36 at (2, 6)
        let s = maximize_packing(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((s.value - 36.0).abs() < 1e-9);
        assert!((s.primal[0] - 2.0).abs() < 1e-9 && (s.primal[1] - 6.0).abs() < 1e-9);
        // strong duality
        let dual_obj: f64 = s.dual.iter().zip([4.0, 12.0, 18.0]).map(|(a, b)| a * b).sum();
        assert!((dual_obj - 36.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize_packing(&[1.0], &[vec![-1.0]], &[1.0]).is_none());
    }

    #[test]
    fn singletons_give_uniform_worst_measure() {
        let (v, mu) = covering_game(4, &[vec![0], vec![1], vec![2], vec![3]]);
        assert!((v - 0.25).abs() < 1e-12);
        assert!(mu.iter().all(|w| (w - 0.25).abs() < 1e-12));
    }

    #[test]
    fn triangle_edges_have_value_two_thirds() {
        let (v, _) = covering_game(3, &[vec![0, 1], vec![1, 2], vec![0, 2]]);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn game_value_matches_grid_search_on_small_hypergraph() {
        let sets = vec![vec![0, 1], vec![2], vec![1, 3], vec![3]];
        let (v, mu) = covering_game(4, &sets);
        let best_response = |m: &[f64]| {
            sets.iter()
                .map(|s| s.iter().map(|&p| m[p]).sum::<f64>())
                .fold(0.0, f64::max)
        };
        assert!((best_response(&mu) - v).abs() < 1e-9);
        let steps = 24;
        let mut grid_min = f64::INFINITY;
        for a in 0..=steps {
            for b in 0..=steps - a {
                for c in 0..=steps - a - b {
                    let d = steps - a - b - c;
                    let m: Vec<f64> = [a, b, c, d].iter().map(|&k| k as f64 / steps as f64).collect();
                    grid_min = grid_min.min(best_response(&m));
                }
            }
        }
        assert!(v <= grid_min + 1e-9);
        assert!(grid_min - v < 0.05);
    }
}
