//! Formulation-level checks: the lazily separated subset model, the fully
//! materialized one and the classical model agree, and second-stage values
//! match assignment enumeration.

mod common;

use proptest::prelude::*;

use cvarloc::cvar::{cvar_topk, delayed_cut_loop, CutLoopOptions, CutPool};
use cvarloc::formulation::{
    build_ma, build_mb, build_mb_full, evaluate_uncovered_vector, FirstStageSolution, RecourseCompletion,
};
use cvarloc::instance::RiskSpec;
use cvarloc::oracle::{second_stage_enumerate, OracleBudget};
use cvarloc_milp::{solve_mip, SolveStatus};

use common::fixture;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn second_stage_matches_enumeration(seed in 0u64..40, mask in 0u32..64) {
        let f = fixture(seed);
        let open: Vec<bool> = (0..f.instance.num_sites()).map(|j| mask >> j & 1 == 1).collect();
        let first = FirstStageSolution::new(&f.instance, open.clone()).unwrap();
        let unc = evaluate_uncovered_vector(&f.instance, &f.scenarios, &first).unwrap();
        for s in 0..f.n() {
            let brute = second_stage_enumerate(&f.instance, &f.scenarios, &open, s, &OracleBudget::default()).unwrap();
            prop_assert_eq!(unc[s], brute);
        }
    }

    #[test]
    fn more_open_sites_never_uncover_more(seed in 0u64..40, mask in 0u32..64, extra in 0usize..6) {
        let f = fixture(seed);
        let m = f.instance.num_sites();
        let open: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
        let mut more = open.clone();
        more[extra % m] = true;
        let a = evaluate_uncovered_vector(&f.instance, &f.scenarios, &FirstStageSolution::new(&f.instance, open).unwrap()).unwrap();
        let b = evaluate_uncovered_vector(&f.instance, &f.scenarios, &FirstStageSolution::new(&f.instance, more).unwrap()).unwrap();
        prop_assert!(a.iter().zip(&b).all(|(x, y)| y <= x));
    }

    #[test]
    fn lazy_full_and_classical_models_agree(seed in 0u64..20, kk in 0usize..3, budget_sites in 0u64..4) {
        let f = fixture(seed);
        let k = f.ks()[kk % f.ks().len()];
        let risk = RiskSpec::new(k, f.n()).unwrap();
        let budget = (budget_sites * 5000) as f64;

        let mut full = build_mb_full(&f.instance, &f.scenarios, risk).unwrap();
        full.set_budget(budget).unwrap();
        let mut ma = build_ma(&f.instance, &f.scenarios, risk.alpha()).unwrap();
        ma.set_budget(budget).unwrap();
        let (mut mb, family) = build_mb(&f.instance, &f.scenarios, risk).unwrap();
        mb.set_budget(budget).unwrap();

        let r_full = solve_mip(&full.model, None, None).unwrap();
        let r_ma = solve_mip(&ma.model, None, None).unwrap();
        let mut pool = CutPool::new();
        let opts = CutLoopOptions { separate: true, ..Default::default() };
        let lazy = delayed_cut_loop(&mb, &family, &mut pool, &opts, None).unwrap();
        let mut pool2 = CutPool::new();
        let mut completion = RecourseCompletion::new(&mb, &f.instance, &f.scenarios);
        let completed = delayed_cut_loop(&mb, &family, &mut pool2, &opts, Some(&mut completion)).unwrap();

        for r in [&r_full, &r_ma, &lazy.result, &completed.result] {
            prop_assert_eq!(r.status, SolveStatus::Optimal);
        }
        let tol = 1e-6 * r_full.objective.abs().max(1.0);
        prop_assert!((r_full.objective - r_ma.objective).abs() <= tol, "full {} ma {}", r_full.objective, r_ma.objective);
        prop_assert!((r_full.objective - lazy.result.objective).abs() <= tol);
        prop_assert!((r_full.objective - completed.result.objective).abs() <= tol);

        // the reported optimum is the exact CVaR of the chosen opening decision
        let open = mb.open_sites(&lazy.result.values);
        let unc = evaluate_uncovered_vector(&f.instance, &f.scenarios, &FirstStageSolution::new(&f.instance, open).unwrap()).unwrap();
        let exact = cvar_topk(&unc.iter().map(|&u| u as f64).collect::<Vec<_>>(), k).unwrap();
        prop_assert!((exact - lazy.result.objective).abs() <= tol);
        prop_assert!(pool.len() as u128 <= family.size());
    }
}

#[test]
fn complete_solution_is_feasible_for_every_model() {
    for seed in 0..10 {
        let f = fixture(seed);
        let risk = RiskSpec::new(f.ks()[1], f.n()).unwrap();
        let open: Vec<bool> = (0..f.instance.num_sites()).map(|j| j % 2 == 1).collect();
        for m in [
            build_ma(&f.instance, &f.scenarios, risk.alpha()).unwrap(),
            build_mb_full(&f.instance, &f.scenarios, risk).unwrap(),
        ] {
            let v = m.complete_solution(&f.instance, &f.scenarios, risk, &open).unwrap();
            assert!(m.model.max_violation(&v) <= 1e-7, "seed {seed}");
        }
    }
}
