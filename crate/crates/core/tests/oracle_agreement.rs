//! Library searches against the independent exhaustive oracles, and a few
//! end-to-end pipelines across modules.

use coarse_kit::covers::{dim_at_scale, make_disjoint, mesh};
use coarse_kit::dimension::{apc_witness, asdim_at_scale, ApcOutcome, RefusalReason, DEFAULT_BUDGET};
use coarse_kit::gen::{instance_rng, random_measure, random_space, random_tree};
use coarse_kit::msp::{best_mass_family, MASS_EPS};
use coarse_kit::oracles::{families_exist, max_family_mass, min_partition_dim};
use coarse_kit::trees::{casdim_to_sfdc, tree_to_cover, verify_tree, TreeMode};
use coarse_kit::Space;
use proptest::prelude::*;
use rand::Rng;

fn small(seed: u64) -> (Space, f64) {
    let mut rng = instance_rng(seed, "oracle-agreement", 0);
    let x = random_space(&mut rng, 3, 10);
    let dists = x.realized_distances(&x.all());
    let r = dists[rng.gen_range(0..dists.len())];
    (x, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn asdim_matches_partition_oracle(seed in any::<u64>(), cap_mul in 0usize..4) {
        let (x, r) = small(seed);
        let cap = r * cap_mul as f64;
        let got = asdim_at_scale(&x, r, cap, DEFAULT_BUDGET).unwrap();
        prop_assert!(got.exact);
        prop_assert_eq!(got.dim, min_partition_dim(&x, r, cap));
        prop_assert_eq!(dim_at_scale(&x, &got.cover, r), got.dim);
        prop_assert!(mesh(&x, &got.cover).unwrap() <= cap);
    }

    #[test]
    fn best_mass_matches_family_oracle(seed in any::<u64>(), s_mul in 0usize..3) {
        let (x, r) = small(seed);
        let mut rng = instance_rng(seed, "oracle-agreement-measure", 0);
        let (_, mu) = random_measure(&mut rng, x.len());
        let s = r * s_mul as f64;
        let got = best_mass_family(&x, &mu, r, s).unwrap();
        prop_assert!(got.exact);
        let want = max_family_mass(&x, &mu.weights, r, s);
        prop_assert!((got.family.mass - want).abs() <= MASS_EPS, "{} vs {}", got.family.mass, want);
    }

    #[test]
    fn apc_agrees_with_existence_oracle(seed in any::<u64>(), k in 1usize..3) {
        let (x, r) = small(seed);
        let scales: Vec<f64> = (0..k).map(|i| r + i as f64).collect();
        let cap = r;
        let exists = families_exist(&x, &scales, cap);
        match apc_witness(&x, &scales, cap, DEFAULT_BUDGET).unwrap() {
            ApcOutcome::Found { witness, .. } => {
                prop_assert!(exists);
                prop_assert!(witness.holds(&x));
                prop_assert!(witness.mesh() <= cap);
            }
            ApcOutcome::Refused { reason, .. } => {
                prop_assert_eq!(reason, RefusalReason::Impossible);
                prop_assert!(!exists);
            }
        }
    }
}

#[test]
fn random_trees_convert_and_flatten() {
    for i in 0..30 {
        let mut rng = instance_rng(5, "tree-pipeline", i);
        let x = random_space(&mut rng, 8, 40);
        let t = random_tree(&mut rng, &x, 0.5).unwrap();
        verify_tree(&x, &t, TreeMode::Casdim).unwrap();
        let s = casdim_to_sfdc(&x, &t, None).unwrap();
        let cert = verify_tree(&x, &s, TreeMode::Sfdc).unwrap();
        let least = s.scales.iter().take(cert.bounded_level - 1).copied().fold(f64::INFINITY, f64::min);
        let r = if least.is_finite() { least } else { 0.0 };
        let tc = tree_to_cover(&x, &s, r).unwrap();
        assert!(tc.family.uncovered(&x.all()).is_none());
        for class in tc.family.classes() {
            assert!(coarse_kit::covers::is_r_disjoint(&x, &class, r), "instance {i}");
        }
    }
}

#[test]
fn disjointified_ball_covers_stay_within_mesh() {
    for i in 0..40 {
        let mut rng = instance_rng(9, "ball-pipeline", i);
        let x = random_space(&mut rng, 5, 60);
        let radius = rng.gen_range(1..4) as f64;
        let cover = coarse_kit::gen::ball_cover(&x, radius);
        let r = rng.gen_range(1..5) as f64;
        let n = dim_at_scale(&x, &cover, r).max(0) as usize;
        let out = make_disjoint(&x, &cover, r, Some(n)).unwrap();
        assert!(out.family.uncovered(&x.all()).is_none());
        assert!(mesh(&x, &out.family).unwrap() <= mesh(&x, &cover).unwrap() + 2.0 * r);
        assert!(coarse_kit::covers::classes_r_disjoint(&x, &out.family, r / (n + 1) as f64).is_ok());
    }
}
