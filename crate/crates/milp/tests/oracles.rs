//! Solver results checked against independent brute-force oracles.

use cvarloc_milp::{
    solve_lp, solve_mip, Constraint, LinExpr, MilpModel, ObjSense, Sense, Separation, SolveStatus,
    VarId, VarKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Vertex enumeration for a 2-variable LP `min c.x, A x <= b, x >= 0`.
fn vertex_enumeration_2d(c: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
    let mut lines: Vec<([f64; 2], f64)> = rows.to_vec();
    lines.push(([-1.0, 0.0], 0.0));
    lines.push(([0.0, -1.0], 0.0));
    let mut best: Option<f64> = None;
    for a in 0..lines.len() {
        for b in a + 1..lines.len() {
            let ([a1, a2], r1) = lines[a];
            let ([b1, b2], r2) = lines[b];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (r1 * b2 - a2 * r2) / det;
            let y = (a1 * r2 - r1 * b1) / det;
            if lines.iter().all(|&([p, q], r)| p * x + q * y <= r + 1e-9) {
                let v = c[0] * x + c[1] * y;
                best = Some(best.map_or(v, |bv: f64| bv.min(v)));
            }
        }
    }
    best
}

#[test]
fn lp_example_matches_vertex_enumeration() {
    let rows = [([1.0, 1.0], 4.0), ([1.0, 3.0], 6.0)];
    let oracle = vertex_enumeration_2d([-3.0, -2.0], &rows).unwrap();
    assert_eq!(oracle, -12.0);

    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
    let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
    for (k, ([a, b], r)) in rows.iter().enumerate() {
        m.add_row(format!("r{k}"), vec![(x, *a), (y, *b)], Sense::Le, *r).unwrap();
    }
    m.set_objective(ObjSense::Minimize, LinExpr::from_terms(vec![(x, -3.0), (y, -2.0)])).unwrap();
    let r = solve_lp(&m);
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - oracle).abs() < 1e-9);
    assert!((r.value(x) - 4.0).abs() < 1e-9 && r.value(y).abs() < 1e-9);
}

#[test]
fn lp_trivial_examples() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 1.0).unwrap();
    m.set_objective(ObjSense::Minimize, LinExpr::from_terms(vec![(x, 1.0)])).unwrap();
    assert_eq!(solve_lp(&m).objective, 0.0);

    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 1.0).unwrap();
    let y = m.add_continuous("y", 0.0, 1.0).unwrap();
    m.add_row("s", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0).unwrap();
    m.set_objective(ObjSense::Maximize, LinExpr::from_terms(vec![(x, 1.0), (y, 1.0)])).unwrap();
    assert!((solve_lp(&m).objective - 1.0).abs() < 1e-12);
}

#[test]
fn knapsack_matches_enumeration() {
    let values = [10.0, 6.0, 4.0];
    let weights = [5.0, 4.0, 3.0];
    let mut best = f64::NEG_INFINITY;
    for mask in 0..8u32 {
        let pick = |j: usize| f64::from((mask >> j) & 1);
        let w: f64 = (0..3).map(|j| weights[j] * pick(j)).sum();
        if w <= 7.0 {
            best = best.max((0..3).map(|j| values[j] * pick(j)).sum());
        }
    }
    assert_eq!(best, 10.0);

    let mut m = MilpModel::new();
    let vars: Vec<VarId> = (0..3).map(|j| m.add_binary(format!("b{j}"))).collect();
    m.add_row("w", vars.iter().zip(weights).map(|(&v, w)| (v, w)).collect(), Sense::Le, 7.0).unwrap();
    m.set_objective(ObjSense::Maximize, LinExpr::from_terms(vars.iter().zip(values).map(|(&v, c)| (v, c)).collect()))
        .unwrap();
    let r = solve_mip(&m, None, None).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - best).abs() < 1e-9);
}

#[test]
fn lazy_separator_contract() {
    // max x1 + x2 with a separator forbidding x1 = x2 = 1.
    let mut m = MilpModel::new();
    let x1 = m.add_binary("x1");
    let x2 = m.add_binary("x2");
    m.set_objective(ObjSense::Maximize, LinExpr::from_terms(vec![(x1, 1.0), (x2, 1.0)])).unwrap();
    let cut = Constraint::new("pair", vec![(x1, 1.0), (x2, 1.0)], Sense::Le, 1.0);
    let mut calls = 0;
    let mut sep = |v: &[f64]| {
        calls += 1;
        if v[0] + v[1] > 1.5 {
            Separation::Cut(cut.clone())
        } else {
            Separation::Accept
        }
    };
    let r = solve_mip(&m, None, Some(&mut sep)).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - 1.0).abs() < 1e-9);
    assert_eq!(r.cuts_added, 1);
    assert!(r.values[0] + r.values[1] <= 1.0 + 1e-9);
    // post-hoc: the separator accepts the final incumbent
    assert_eq!(sep(&r.values), Separation::Accept);
    assert!(calls >= 2);
}

/// Random pure-integer program with small domains.
#[derive(Debug, Clone)]
struct RandomIp {
    kinds: Vec<(VarKind, f64)>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
    obj: Vec<f64>,
    sense: ObjSense,
}

fn random_ip(seed: u64) -> RandomIp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=8);
    let kinds: Vec<(VarKind, f64)> = (0..n)
        .map(|_| if rng.gen_bool(0.75) { (VarKind::Binary, 1.0) } else { (VarKind::Integer, rng.gen_range(1..=3) as f64) })
        .collect();
    let rows = (0..rng.gen_range(1..=4))
        .map(|_| {
            let coefs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=6) as f64).collect();
            let sense = match rng.gen_range(0..5) {
                0 => Sense::Ge,
                1 => Sense::Eq,
                _ => Sense::Le,
            };
            let rhs = match sense {
                Sense::Ge => rng.gen_range(-2..=4) as f64,
                Sense::Eq => rng.gen_range(0..=6) as f64,
                Sense::Le => rng.gen_range(0..=12) as f64 + 0.5 * rng.gen_range(0..2) as f64,
            };
            (coefs, sense, rhs)
        })
        .collect();
    let obj = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let sense = if rng.gen_bool(0.5) { ObjSense::Minimize } else { ObjSense::Maximize };
    RandomIp { kinds, rows, obj, sense }
}

fn enumerate_ip(ip: &RandomIp) -> Option<f64> {
    let domains: Vec<usize> = ip.kinds.iter().map(|&(_, ub)| ub as usize + 1).collect();
    let total: usize = domains.iter().product();
    let mut best: Option<f64> = None;
    let mut point = vec![0.0; domains.len()];
    for code in 0..total {
        let mut c = code;
        for (j, &d) in domains.iter().enumerate() {
            point[j] = (c % d) as f64;
            c /= d;
        }
        let ok = ip.rows.iter().all(|(coefs, sense, rhs)| {
            let act: f64 = coefs.iter().zip(&point).map(|(a, x)| a * x).sum();
            match sense {
                Sense::Le => act <= rhs + 1e-9,
                Sense::Ge => act >= rhs - 1e-9,
                Sense::Eq => (act - rhs).abs() <= 1e-9,
            }
        });
        if ok {
            let v: f64 = ip.obj.iter().zip(&point).map(|(a, x)| a * x).sum();
            best = Some(match (best, ip.sense) {
                (None, _) => v,
                (Some(b), ObjSense::Minimize) => b.min(v),
                (Some(b), ObjSense::Maximize) => b.max(v),
            });
        }
    }
    best
}

fn build(ip: &RandomIp) -> MilpModel {
    let mut m = MilpModel::new();
    let vars: Vec<VarId> = ip
        .kinds
        .iter()
        .enumerate()
        .map(|(j, &(k, ub))| m.add_var(format!("v{j}"), 0.0, ub, k).unwrap())
        .collect();
    for (i, (coefs, sense, rhs)) in ip.rows.iter().enumerate() {
        m.add_row(format!("r{i}"), vars.iter().zip(coefs).map(|(&v, &a)| (v, a)).collect(), *sense, *rhs)
            .unwrap();
    }
    m.set_objective(ip.sense, LinExpr::from_terms(vars.iter().zip(&ip.obj).map(|(&v, &a)| (v, a)).collect()))
        .unwrap();
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn branch_and_bound_matches_enumeration(seed in any::<u64>()) {
        let ip = random_ip(seed);
        let model = build(&ip);
        let r = solve_mip(&model, None, None).unwrap();
        match enumerate_ip(&ip) {
            None => prop_assert_eq!(r.status, SolveStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(r.status, SolveStatus::Optimal);
                prop_assert!((r.objective - best).abs() < 1e-6, "bb {} vs enum {}", r.objective, best);
                prop_assert!(model.max_violation(&r.values) < 1e-6);
                // weak duality between reported bound and incumbent
                match ip.sense {
                    ObjSense::Minimize => prop_assert!(r.bound <= r.objective + 1e-6),
                    ObjSense::Maximize => prop_assert!(r.bound >= r.objective - 1e-6),
                }
            }
        }
    }

    #[test]
    fn random_2d_lps_match_vertex_enumeration(
        c0 in -5i32..=5, c1 in -5i32..=5,
        rows in proptest::collection::vec(((-4i32..=6, -4i32..=6), 1i32..=12), 1..5),
    ) {
        let rows: Vec<([f64; 2], f64)> = rows.iter().map(|&((a, b), r)| ([a as f64, b as f64], r as f64)).collect();
        let oracle = vertex_enumeration_2d([c0 as f64, c1 as f64], &rows);
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
        for (k, ([a, b], r)) in rows.iter().enumerate() {
            m.add_row(format!("r{k}"), vec![(x, *a), (y, *b)], Sense::Le, *r).unwrap();
        }
        m.set_objective(ObjSense::Minimize, LinExpr::from_terms(vec![(x, c0 as f64), (y, c1 as f64)])).unwrap();
        let r = solve_lp(&m);
        // rhs >= 1 keeps the origin feasible; enumeration misses unbounded rays
        prop_assert!(r.status == SolveStatus::Optimal || r.status == SolveStatus::Unbounded);
        if r.status == SolveStatus::Optimal {
            let o = oracle.unwrap();
            prop_assert!((r.objective - o).abs() < 1e-7, "lp {} vs vertices {}", r.objective, o);
        } else if let Some(o) = oracle {
            // unbounded: some vertex is feasible but the ray improves on it
            prop_assert!(o.is_finite());
        }
    }
}

#[test]
fn determinism_of_repeated_solves() {
    let ip = random_ip(42);
    let model = build(&ip);
    let a = solve_mip(&model, None, None).unwrap();
    let b = solve_mip(&model, None, None).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.nodes, b.nodes);
}
