use proptest::prelude::*;

use cvarloc::cvar::{cvar_topk, initial_cut, separate, CutPool, SEPARATION_TOL};
use cvarloc::instance::ScenarioSet;
use cvarloc::oracle::{best_subset_enumerate, cvar_enumerate, OracleBudget};

fn values_and_k() -> impl Strategy<Value = (Vec<f64>, usize)> {
    prop::collection::vec(0.0f64..1000.0, 1..=10).prop_flat_map(|v| {
        let n = v.len();
        (Just(v), 1..=n)
    })
}

proptest! {
    #[test]
    fn topk_mean_matches_subset_enumeration((v, k) in values_and_k()) {
        let direct = cvar_topk(&v, k).unwrap();
        let brute = cvar_enumerate(&v, k, &OracleBudget::default()).unwrap();
        prop_assert!((direct - brute).abs() <= 1e-9 * brute.abs().max(1.0));
    }

    #[test]
    fn topk_mean_lies_between_mean_and_max((v, k) in values_and_k()) {
        let c = cvar_topk(&v, k).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(c >= mean - 1e-9 && c <= max + 1e-9);
        prop_assert!((cvar_topk(&v, v.len()).unwrap() - mean).abs() <= 1e-9 * mean.max(1.0));
        prop_assert_eq!(cvar_topk(&v, 1).unwrap(), max);
    }

    #[test]
    fn topk_mean_is_nonincreasing_in_k((v, k) in values_and_k()) {
        prop_assume!(k < v.len());
        prop_assert!(cvar_topk(&v, k + 1).unwrap() <= cvar_topk(&v, k).unwrap() + 1e-9);
    }

    #[test]
    fn topk_mean_is_monotone_in_values((v, k) in values_and_k(), bump in 0.0f64..50.0, at in 0usize..10) {
        let mut w = v.clone();
        let i = at % w.len();
        w[i] += bump;
        prop_assert!(cvar_topk(&w, k).unwrap() >= cvar_topk(&v, k).unwrap() - 1e-9);
    }

    #[test]
    fn separation_agrees_with_enumeration((v, k) in values_and_k(), offset in -100.0f64..100.0) {
        let n = v.len();
        let (_, best) = best_subset_enumerate(&v, k, &OracleBudget::default()).unwrap();
        let rho_hat = best + offset;
        match separate(&v, n, k, rho_hat, SEPARATION_TOL).unwrap() {
            Some(s) => {
                prop_assert!(best > rho_hat + SEPARATION_TOL);
                prop_assert_eq!(s.len(), k);
                prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
                let sum: f64 = s.iter().map(|&i| v[i]).sum();
                prop_assert!((sum - best).abs() <= 1e-9 * best.abs().max(1.0));
            }
            None => prop_assert!(best <= rho_hat + SEPARATION_TOL),
        }
    }

    #[test]
    fn pool_never_holds_duplicates(subsets in prop::collection::vec(prop::collection::btree_set(0usize..8, 1..4), 0..30)) {
        let mut pool = CutPool::new();
        for s in &subsets {
            let mut v: Vec<usize> = s.iter().copied().collect();
            v.reverse();
            pool.insert(v);
        }
        let distinct: std::collections::BTreeSet<_> = subsets.iter().collect();
        prop_assert_eq!(pool.len(), distinct.len());
    }

    #[test]
    fn initial_cut_takes_largest_totals(rows in prop::collection::vec(prop::collection::vec(0u64..50, 3), 1..8), kk in 1usize..8) {
        let scen = ScenarioSet::new(rows).unwrap();
        let k = 1 + (kk - 1) % scen.len();
        let cut = initial_cut(&scen, k).unwrap();
        prop_assert_eq!(cut.len(), k);
        let smallest_in = cut.iter().map(|&s| scen.total(s)).min().unwrap();
        let largest_out = (0..scen.len()).filter(|s| !cut.contains(s)).map(|s| scen.total(s)).max();
        prop_assert!(largest_out.map_or(true, |o| o <= smallest_in));
    }
}

#[test]
fn invalid_tail_sizes_are_rejected() {
    assert!(cvar_topk(&[1.0, 2.0], 0).is_err());
    assert!(cvar_topk(&[1.0, 2.0], 3).is_err());
    assert!(cvar_topk(&[], 1).is_err());
    assert!(separate(&[1.0], 2, 1, 0.0, 0.0).is_err());
}
