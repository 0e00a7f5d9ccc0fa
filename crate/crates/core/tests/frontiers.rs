//! Driver-level checks on small fixtures against the enumeration oracle.

mod common;

use std::time::Duration;

use proptest::prelude::*;

use cvarloc::frontier::{
    balanced_box, epsilon_constraint, exact_risk, matheuristic, reevaluate_frontier, DriverOptions, Frontier,
    MatheuristicOptions, ModelFamily, Provenance,
};
use cvarloc::instance::RiskSpec;
use cvarloc::oracle::{exact_frontier, OracleBudget};
use cvarloc::Error;

use common::fixture;

fn case(seed: u64, kk: usize) -> (common::Fixture, RiskSpec) {
    let f = fixture(seed);
    let ks = f.ks();
    let risk = RiskSpec::new(ks[kk % ks.len()], f.n()).unwrap();
    (f, risk)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_drivers_match_enumeration(seed in 20u64..60, kk in 0usize..3) {
        let (f, risk) = case(seed, kk);
        let exact = exact_frontier(&f.instance, &f.scenarios, risk.k(), &OracleBudget::default()).unwrap();
        let opts = DriverOptions::default();
        for run in [
            epsilon_constraint(ModelFamily::Classical, &f.instance, &f.scenarios, risk, &opts).unwrap(),
            epsilon_constraint(ModelFamily::Subset, &f.instance, &f.scenarios, risk, &opts).unwrap(),
            balanced_box(ModelFamily::Subset, &f.instance, &f.scenarios, risk, &opts).unwrap(),
        ] {
            prop_assert!(run.frontier.validate().is_ok());
            prop_assert!(run.frontier.same_points(&exact, 1e-6), "{:?} vs {:?}", run.frontier.objectives(), exact.objectives());
            prop_assert!(run.frontier.points().iter().all(|p| p.provenance == Provenance::Exact));
            prop_assert!(!run.stats.hit_time_limit());
        }
    }

    #[test]
    fn frontier_points_carry_their_exact_values(seed in 0u64..40, kk in 0usize..3) {
        let (f, risk) = case(seed, kk);
        let run = epsilon_constraint(ModelFamily::Subset, &f.instance, &f.scenarios, risk, &DriverOptions::default()).unwrap();
        for p in run.frontier.points() {
            prop_assert_eq!(p.cost, f.instance.cost_of(&p.open));
            let r = exact_risk(ModelFamily::Subset, &f.instance, &f.scenarios, risk, &p.open).unwrap();
            prop_assert!((r - p.risk).abs() <= 1e-6);
        }
    }

    #[test]
    fn frozen_pool_bounds_from_below(seed in 0u64..40, kk in 0usize..3) {
        let (f, risk) = case(seed, kk);
        let opts = DriverOptions::default();
        let bar = epsilon_constraint(ModelFamily::SubsetFrozen, &f.instance, &f.scenarios, risk, &opts).unwrap();
        prop_assert_eq!(bar.stats.separator_calls_after_first_point(), 0);
        let re = reevaluate_frontier(&bar.frontier, &f.instance, &f.scenarios, risk).unwrap();
        prop_assert_eq!(re.len(), bar.frontier.len());
        for (b, r) in bar.frontier.points().iter().zip(re.points()) {
            prop_assert!(b.risk <= r.risk + 1e-6);
            prop_assert_eq!(r.provenance, Provenance::ReEvaluated);
        }
    }

    #[test]
    fn reusing_cuts_does_not_change_the_frontier(seed in 0u64..40, kk in 0usize..3) {
        let (f, risk) = case(seed, kk);
        let fresh = epsilon_constraint(ModelFamily::Subset, &f.instance, &f.scenarios, risk, &DriverOptions::default()).unwrap();
        let opts = DriverOptions { reuse_cuts: true, ..DriverOptions::default() };
        let reused = epsilon_constraint(ModelFamily::Subset, &f.instance, &f.scenarios, risk, &opts).unwrap();
        prop_assert!(fresh.frontier.same_points(&reused.frontier, 1e-6));
        // the reported pool is every cut generated, without duplicates
        let mut pool = fresh.stats.pool.clone();
        pool.sort();
        pool.dedup();
        prop_assert_eq!(pool.len(), fresh.stats.cuts());
    }

    #[test]
    fn risk_is_nonincreasing_in_tail_size(seed in 0u64..40) {
        // a larger tail averages over more scenarios, so the frontier drops
        let f = fixture(seed);
        let n = f.n();
        let mut prev: Option<Frontier> = None;
        for k in (1..=n).rev() {
            let fr = exact_frontier(&f.instance, &f.scenarios, k, &OracleBudget::default()).unwrap();
            if let Some(p) = &prev {
                // p has the larger k: its best risk at any budget is no higher
                for q in fr.points() {
                    let best = p.points().iter().filter(|x| x.cost <= q.cost).map(|x| x.risk).fold(f64::INFINITY, f64::min);
                    prop_assert!(best <= q.risk + 1e-9);
                }
            }
            prev = Some(fr);
        }
    }
}

#[test]
fn matheuristic_without_budget_is_exact() {
    let opts = MatheuristicOptions { per_point_budget: None, ..Default::default() };
    for seed in [3, 7, 11] {
        let (f, risk) = case(seed, 1);
        let mat = matheuristic(ModelFamily::Subset, &f.instance, &f.scenarios, risk, &opts).unwrap();
        let exact = exact_frontier(&f.instance, &f.scenarios, risk.k(), &OracleBudget::default()).unwrap();
        assert!(mat.frontier.same_points(&exact, 1e-6), "seed {seed}");
    }
}

#[test]
fn matheuristic_rejects_bad_options() {
    let (f, risk) = case(0, 0);
    let zero = MatheuristicOptions { kappa: 0, ..Default::default() };
    assert!(matches!(matheuristic(ModelFamily::Classical, &f.instance, &f.scenarios, risk, &zero), Err(Error::InvalidArgument(_))));
    let instant = MatheuristicOptions { per_point_budget: Some(Duration::ZERO), ..Default::default() };
    assert!(matheuristic(ModelFamily::Classical, &f.instance, &f.scenarios, risk, &instant).is_err());
}

#[test]
fn exhausted_total_budget_is_reported() {
    let (f, risk) = case(4, 1);
    let opts = DriverOptions { time_limit_per_point: None, time_limit_total: Some(Duration::ZERO), reuse_cuts: false };
    let run = epsilon_constraint(ModelFamily::Classical, &f.instance, &f.scenarios, risk, &opts).unwrap();
    assert!(run.stats.hit_time_limit());
    assert!(run.frontier.is_empty());
}

#[test]
fn frontier_json_round_trip() {
    let (f, risk) = case(5, 1);
    let run = epsilon_constraint(ModelFamily::Classical, &f.instance, &f.scenarios, risk, &DriverOptions::default()).unwrap();
    let back = Frontier::from_json(&run.frontier.to_json().unwrap()).unwrap();
    assert_eq!(back, run.frontier);
}
