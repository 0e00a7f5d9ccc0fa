//! Top-k CVaR, the subset separation oracle and cut bookkeeping.

use std::collections::BTreeSet;
use std::time::Duration;

use cvarloc_milp::{solve_mip_full, Constraint, MipOptions, NodeCompletion, Separation, SolveResult};

use crate::error::{invalid, Error, Result};
use crate::formulation::{CutFamily, FlpModel, RecourseCompletion};
use crate::instance::ScenarioSet;

/// Absolute tolerance of the separation test.
pub const SEPARATION_TOL: f64 = 1e-6;

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(invalid(format!("k must lie in [1, {n}], got {k}")));
    }
    Ok(())
}

/// Indices of the `k` largest values, ties to the lowest index.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Mean of the `k` largest values: the CVaR at level `1 - k/N` of equally
/// likely outcomes.
pub fn cvar_topk(values: &[f64], k: usize) -> Result<f64> {
    check_k(values.len(), k)?;
    let idx = top_k(values, k);
    Ok(idx.iter().map(|&s| values[s]).sum::<f64>() / k as f64)
}

/// Separation oracle for the subset cuts.
///
/// `values[s]` is scenario `s`'s contribution `uncovered_s / k`; returns the
/// `k` scenarios with the largest contributions (ascending ids) when their
/// sum exceeds `rho_hat + tol`.
pub fn separate(values: &[f64], n: usize, k: usize, rho_hat: f64, tol: f64) -> Result<Option<Vec<usize>>> {
    if values.len() != n {
        return Err(invalid(format!("expected {n} scenario values, got {}", values.len())));
    }
    check_k(n, k)?;
    let mut idx = top_k(values, k);
    let sum: f64 = idx.iter().map(|&s| values[s]).sum();
    if sum > rho_hat + tol {
        idx.sort_unstable();
        Ok(Some(idx))
    } else {
        Ok(None)
    }
}

/// Rule used to seed the cut pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialCutRule {
    /// The `k` scenarios with the largest total demand.
    #[default]
    LargestTotal,
    /// Per node, rank scenarios by descending demand (rank 1 = largest),
    /// sum the ranks per scenario, and take the `k` scenarios with the
    /// largest rank sums. This picks low-demand scenarios; kept for
    /// comparison only.
    RankSumDescending,
}

/// Scenario subset for the first cut, ascending ids.
pub fn initial_cut(scenarios: &ScenarioSet, k: usize) -> Result<Vec<usize>> {
    initial_cut_with(scenarios, k, InitialCutRule::LargestTotal)
}

pub fn initial_cut_with(scenarios: &ScenarioSet, k: usize, rule: InitialCutRule) -> Result<Vec<usize>> {
    let n = scenarios.len();
    check_k(n, k)?;
    let score: Vec<f64> = match rule {
        InitialCutRule::LargestTotal => scenarios.totals().iter().map(|&t| t as f64).collect(),
        InitialCutRule::RankSumDescending => {
            let mut sums = vec![0.0; n];
            for i in 0..scenarios.num_nodes() {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| scenarios.demand(b, i).cmp(&scenarios.demand(a, i)).then(a.cmp(&b)));
                for (rank, s) in order.into_iter().enumerate() {
                    sums[s] += (rank + 1) as f64;
                }
            }
            sums
        }
    };
    let mut idx = top_k(&score, k);
    idx.sort_unstable();
    Ok(idx)
}

/// A subset cut, identified by its scenario subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cut {
    pub subset: Vec<usize>,
}

/// Cuts generated so far, in generation order, without duplicates.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
    seen: BTreeSet<Vec<usize>>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a cut; returns false when its subset is already present.
    pub fn insert(&mut self, mut subset: Vec<usize>) -> bool {
        subset.sort_unstable();
        if !self.seen.insert(subset.clone()) {
            return false;
        }
        self.cuts.push(Cut { subset });
        true
    }

    pub fn contains(&self, subset: &[usize]) -> bool {
        let mut s = subset.to_vec();
        s.sort_unstable();
        self.seen.contains(&s)
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Model rows of every pooled cut.
    pub fn rows(&self, family: &CutFamily) -> Result<Vec<Constraint>> {
        self.cuts.iter().map(|c| family.row(&c.subset)).collect()
    }
}

/// Options of one delayed-cut solve.
#[derive(Debug, Clone, Default)]
pub struct CutLoopOptions {
    pub time_limit: Option<Duration>,
    /// When false the pool is used as-is and no separation happens.
    pub separate: bool,
    pub initial_solution: Option<Vec<f64>>,
}

/// Outcome of [`delayed_cut_loop`].
#[derive(Debug, Clone)]
pub struct CutLoopResult {
    pub result: SolveResult,
    /// Separator invocations during this solve.
    pub separator_calls: usize,
    /// Cuts added to the pool during this solve.
    pub new_cuts: usize,
}

/// Solves a subset model with the pooled cuts as rows and, when enabled,
/// the separation oracle as lazy-cut callback. New cuts are added to `pool`.
/// With a `completion` the search branches on the opening decisions only.
pub fn delayed_cut_loop(
    model: &FlpModel,
    family: &CutFamily,
    pool: &mut CutPool,
    opts: &CutLoopOptions,
    mut completion: Option<&mut RecourseCompletion<'_>>,
) -> Result<CutLoopResult> {
    let mut m = model.model.clone();
    for row in pool.rows(family)? {
        m.add_constraint(row)?;
    }
    let mip_opts = MipOptions {
        time_limit: opts.time_limit,
        initial_solution: opts.initial_solution.clone(),
        ..MipOptions::default()
    };
    let before = pool.len();
    let mut calls = 0usize;
    let mut failure: Option<Error> = None;
    let result = if opts.separate {
        let k = family.k();
        let n = family.n();
        let mut sep = |values: &[f64]| -> Separation {
            calls += 1;
            let contrib: Vec<f64> = family.uncovered(values).iter().map(|u| u / k as f64).collect();
            let rho_hat = values[family.rho().0];
            match separate(&contrib, n, k, rho_hat, SEPARATION_TOL) {
                Ok(Some(subset)) => match family.row(&subset) {
                    Ok(row) => {
                        pool.insert(subset);
                        Separation::Cut(row)
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        Separation::Accept
                    }
                },
                Ok(None) => Separation::Accept,
                Err(e) => {
                    failure.get_or_insert(e);
                    Separation::Accept
                }
            }
        };
        let comp = completion.as_deref_mut().map(|c| c as &mut dyn NodeCompletion);
        solve_mip_full(&m, &mip_opts, Some(&mut sep), comp)?
    } else {
        let comp = completion.as_deref_mut().map(|c| c as &mut dyn NodeCompletion);
        solve_mip_full(&m, &mip_opts, None, comp)?
    };
    if let Some(e) = failure.or_else(|| completion.and_then(|c| c.take_failure())) {
        return Err(e);
    }
    Ok(CutLoopResult { result, separator_calls: calls, new_cuts: pool.len() - before })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_examples() {
        let v = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(cvar_topk(&v, 2).unwrap(), 35.0);
        assert_eq!(cvar_topk(&v, 4).unwrap(), 25.0);
        assert_eq!(cvar_topk(&v, 1).unwrap(), 40.0);
        assert!(cvar_topk(&v, 0).is_err());
        assert!(cvar_topk(&v, 5).is_err());
    }

    #[test]
    fn separation_examples() {
        let halves = [5.0, 10.0, 15.0, 20.0];
        assert_eq!(separate(&halves, 4, 2, 30.0, SEPARATION_TOL).unwrap(), Some(vec![2, 3]));
        assert_eq!(separate(&halves, 4, 2, 35.0, SEPARATION_TOL).unwrap(), None);
        assert_eq!(separate(&halves, 4, 2, 100.0, SEPARATION_TOL).unwrap(), None);
        assert!(separate(&halves, 5, 2, 0.0, SEPARATION_TOL).is_err());
        // ties go to the lowest ids
        assert_eq!(separate(&[1.0, 1.0, 1.0], 3, 2, 0.0, 0.0).unwrap(), Some(vec![0, 1]));
    }

    #[test]
    fn initial_cut_examples() {
        let scen = ScenarioSet::new(vec![vec![5, 2], vec![3, 6], vec![1, 4]]).unwrap();
        assert_eq!(initial_cut(&scen, 1).unwrap(), vec![1]);
        assert_eq!(initial_cut(&scen, 3).unwrap(), vec![0, 1, 2]);
        let same = ScenarioSet::new(vec![vec![1, 1]; 3]).unwrap();
        assert_eq!(initial_cut(&same, 2).unwrap(), vec![0, 1]);
        // rank sums: s0 = 1+3, s1 = 2+1, s2 = 3+2 -> literal rule picks s2
        assert_eq!(initial_cut_with(&scen, 1, InitialCutRule::RankSumDescending).unwrap(), vec![2]);
    }

    #[test]
    fn pool_deduplicates() {
        let mut p = CutPool::new();
        assert!(p.insert(vec![2, 0]));
        assert!(!p.insert(vec![0, 2]));
        assert!(p.contains(&[2, 0]));
        assert_eq!(p.len(), 1);
        assert_eq!(p.cuts()[0].subset, vec![0, 2]);
    }
}
