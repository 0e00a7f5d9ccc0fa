//! Brute-force reference implementations for testing.
//!
//! Nothing here calls into the solver paths: risk values come from subset
//! enumeration, second stages from assignment enumeration and frontiers
//! from enumerating every opening decision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frontier::{Frontier, FrontierPoint, Provenance};
use crate::instance::{Instance, ScenarioSet};

/// Size limits beyond which the oracles refuse to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_scenarios: usize,
    pub max_sites: usize,
    pub max_demand_nodes: usize,
    /// Assignment patterns examined per second-stage enumeration.
    pub max_patterns: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_scenarios: 12, max_sites: 8, max_demand_nodes: 12, max_patterns: 5_000_000 }
    }
}

/// Largest mean over all `k`-subsets of `values`.
pub fn cvar_enumerate(values: &[f64], k: usize, budget: &OracleBudget) -> Result<f64> {
    let n = values.len();
    if n > budget.max_scenarios {
        return Err(Error::BudgetExceeded(format!("{n} scenarios > {}", budget.max_scenarios)));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} with {n} values")));
    }
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut sum = 0.0;
        for (s, v) in values.iter().enumerate() {
            if mask >> s & 1 == 1 {
                sum += v;
            }
        }
        best = best.max(sum / k as f64);
    }
    Ok(best)
}

/// Best subset (as a bitmask) and its sum, by enumeration.
pub fn best_subset_enumerate(values: &[f64], k: usize, budget: &OracleBudget) -> Result<(u32, f64)> {
    let n = values.len();
    if n > budget.max_scenarios {
        return Err(Error::BudgetExceeded(format!("{n} scenarios > {}", budget.max_scenarios)));
    }
    let mut best = (0u32, f64::NEG_INFINITY);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize == k {
            let sum: f64 = (0..n).filter(|&s| mask >> s & 1 == 1).map(|s| values[s]).sum();
            if sum > best.1 {
                best = (mask, sum);
            }
        }
    }
    Ok(best)
}

/// Minimal uncovered demand of one scenario, by enumerating assignments.
///
/// Every demand node with positive demand and at least one open site in
/// reach is assigned to one of those sites; leaving such a node unassigned
/// never helps, since adding demand to a site's pool cannot lower
/// `min(capacity, pool)`.
pub fn second_stage_enumerate(
    instance: &Instance,
    scenarios: &ScenarioSet,
    open: &[bool],
    s: usize,
    budget: &OracleBudget,
) -> Result<u64> {
    if instance.num_demand() > budget.max_demand_nodes {
        return Err(Error::BudgetExceeded(format!(
            "{} demand nodes > {}",
            instance.num_demand(),
            budget.max_demand_nodes
        )));
    }
    let q = scenarios.scenario(s);
    let total: u64 = q.iter().sum();
    let mut nodes: Vec<(u64, Vec<usize>)> = Vec::new();
    let mut patterns: u64 = 1;
    for (i, &d) in q.iter().enumerate() {
        let reach: Vec<usize> = (0..instance.num_sites())
            .filter(|&j| open[j] && instance.distance(i, j) <= instance.d_max())
            .collect();
        if d > 0 && !reach.is_empty() {
            patterns = patterns.saturating_mul(reach.len() as u64);
            nodes.push((d, reach));
        }
    }
    if patterns > budget.max_patterns {
        return Err(Error::BudgetExceeded(format!("{patterns} assignment patterns > {}", budget.max_patterns)));
    }
    let caps: Vec<u64> = (0..instance.num_sites()).map(|j| instance.capacity(j)).collect();
    let mut pool = vec![0u64; instance.num_sites()];
    let mut best = 0u64;
    fn walk(p: usize, nodes: &[(u64, Vec<usize>)], caps: &[u64], pool: &mut [u64], best: &mut u64) {
        if p == nodes.len() {
            let served: u64 = pool.iter().zip(caps).map(|(&a, &c)| a.min(c)).sum();
            *best = (*best).max(served);
            return;
        }
        let (d, reach) = &nodes[p];
        for &j in reach {
            pool[j] += d;
            walk(p + 1, nodes, caps, pool, best);
            pool[j] -= d;
        }
    }
    walk(0, &nodes, &caps, &mut pool, &mut best);
    Ok(total - best)
}

/// Risk measure applied to the uncovered-demand vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMeasure {
    /// Mean of the `k` largest values.
    TopK(usize),
    Mean,
    Max,
}

/// Exact frontier by enumerating all `2^|J|` opening decisions with the
/// top-`k` CVaR as risk.
pub fn exact_frontier(
    instance: &Instance,
    scenarios: &ScenarioSet,
    k: usize,
    budget: &OracleBudget,
) -> Result<Frontier> {
    exact_frontier_with(instance, scenarios, OracleMeasure::TopK(k), budget)
}

pub fn exact_frontier_with(
    instance: &Instance,
    scenarios: &ScenarioSet,
    measure: OracleMeasure,
    budget: &OracleBudget,
) -> Result<Frontier> {
    let m = instance.num_sites();
    if m > budget.max_sites {
        return Err(Error::BudgetExceeded(format!("{m} sites > {}", budget.max_sites)));
    }
    if scenarios.len() > budget.max_scenarios {
        return Err(Error::BudgetExceeded(format!("{} scenarios > {}", scenarios.len(), budget.max_scenarios)));
    }
    let mut cands: Vec<(u64, f64, Vec<bool>)> = Vec::with_capacity(1 << m);
    for mask in 0u32..(1u32 << m) {
        let open: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
        let mut cost = 0u64;
        for j in 0..m {
            if open[j] {
                cost += instance.opening_cost(j);
            }
        }
        let mut unc = Vec::with_capacity(scenarios.len());
        for s in 0..scenarios.len() {
            unc.push(second_stage_enumerate(instance, scenarios, &open, s, budget)? as f64);
        }
        let risk = match measure {
            OracleMeasure::TopK(k) => cvar_enumerate(&unc, k, budget)?,
            OracleMeasure::Mean => unc.iter().sum::<f64>() / unc.len() as f64,
            OracleMeasure::Max => unc.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        };
        cands.push((cost, risk, open));
    }
    // keep candidates no other candidate dominates
    let mut keep: Vec<(u64, f64, Vec<bool>)> = Vec::new();
    for (a, c) in cands.iter().enumerate() {
        let dominated = cands.iter().enumerate().any(|(b, d)| {
            let weakly = d.0 <= c.0 && d.1 <= c.1 + 1e-9;
            let strictly = d.0 < c.0 || d.1 < c.1 - 1e-9;
            weakly && (strictly || b < a)
        });
        if !dominated {
            keep.push(c.clone());
        }
    }
    Ok(Frontier::from_points(
        keep.into_iter()
            .map(|(cost, risk, open)| FrontierPoint { cost, risk, open, provenance: Provenance::Exact })
            .collect(),
    ))
}

/// Monte-Carlo hypervolume estimate and its standard error.
pub fn hypervolume_monte_carlo(points: &[(f64, f64)], reference: (f64, f64), samples: usize, seed: u64) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let lo_x = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let lo_y = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let area = (reference.0 - lo_x) * (reference.1 - lo_y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.gen_range(lo_x..reference.0);
        let y = rng.gen_range(lo_y..reference.1);
        if points.iter().any(|p| p.0 <= x && p.1 <= y) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (area * p, area * (p * (1.0 - p) / samples as f64).sqrt())
}
