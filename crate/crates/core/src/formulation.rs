//! MILP builders for the two-stage location model and its risk variants.
//!
//! Every builder shares the same first/second-stage block: binary opening
//! decisions `y_j`, and per scenario binary assignments `x_ij` (only for
//! pairs within reach, the others are forced to zero anyway) with integer
//! deliveries `u_j`. They differ in how the risk of the uncovered demand is
//! expressed.

use std::collections::HashMap;
use std::time::Duration;

use cvarloc_milp::{
    solve_mip, Constraint, LinExpr, MilpModel, NodeCompletion, ObjSense, Sense, SolveStatus, VarId,
};

use crate::error::{invalid, Error, Result};
use crate::instance::{Instance, RiskSpec, ScenarioSet};

/// How a model measures the risk of uncovered demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskModel {
    /// Subset-based CVaR: `rho` bounded below by lazily generated subset cuts.
    Subset,
    /// Classical CVaR with a value-at-risk auxiliary and per-scenario excess.
    Classical,
    /// Mean uncovered demand.
    Expected,
    /// Largest uncovered demand over all scenarios.
    WorstCase,
}

/// A built model plus the handles the frontier drivers need.
#[derive(Debug, Clone)]
pub struct FlpModel {
    pub model: MilpModel,
    pub kind: RiskModel,
    /// Opening decision per site position.
    pub y: Vec<VarId>,
    /// Delivered demand `u[s][j]`.
    pub u: Vec<Vec<VarId>>,
    /// Assignment variables per scenario: `(demand position, site position, var)`.
    pub x: Vec<Vec<(usize, usize, VarId)>>,
    /// Total opening cost as an expression of `y`.
    pub cost: LinExpr,
    /// Risk objective as a linear expression.
    pub risk: LinExpr,
    /// Row index of `cost <= budget`.
    pub budget_row: usize,
    /// Auxiliary risk variables (`rho`, or `eta` followed by the excesses).
    pub risk_vars: Vec<VarId>,
}

impl FlpModel {
    /// Sets the right-hand side of the budget row.
    pub fn set_budget(&mut self, budget: f64) -> Result<()> {
        Ok(self.model.set_rhs(self.budget_row, budget)?)
    }

    /// Opening decision read from a solution vector.
    pub fn open_sites(&self, values: &[f64]) -> Vec<bool> {
        self.y.iter().map(|v| values[v.0] > 0.5).collect()
    }

    /// Uncovered demand per scenario read from a solution vector.
    pub fn uncovered(&self, scenarios: &ScenarioSet, values: &[f64]) -> Vec<f64> {
        self.u
            .iter()
            .enumerate()
            .map(|(s, us)| scenarios.total(s) as f64 - us.iter().map(|v| values[v.0]).sum::<f64>())
            .collect()
    }

    /// A complete solution vector for the opening decision `open`, with
    /// exact second-stage values in every scenario and the risk auxiliaries
    /// set to their smallest feasible values (the subset model's `rho` is
    /// set to the exact top-k mean, which satisfies every subset cut).
    pub fn complete_solution(
        &self,
        instance: &Instance,
        scenarios: &ScenarioSet,
        risk: RiskSpec,
        open: &[bool],
    ) -> Result<Vec<f64>> {
        let (mut values, unc) = recourse_values(&self.y, &self.u, &self.x, self.model.num_vars(), instance, scenarios, open)?;
        match self.kind {
            RiskModel::Subset => {
                values[self.risk_vars[0].0] = crate::cvar::cvar_topk(&unc, risk.k())?;
            }
            RiskModel::Classical => {
                // eta at the k-th largest value is a minimiser.
                let mut sorted = unc.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                let eta = sorted[risk.k() - 1];
                values[self.risk_vars[0].0] = eta;
                for (s, v) in self.risk_vars[1..].iter().enumerate() {
                    values[v.0] = (unc[s] - eta).max(0.0);
                }
            }
            RiskModel::WorstCase => {
                values[self.risk_vars[0].0] = unc.iter().cloned().fold(0.0, f64::max);
            }
            RiskModel::Expected => {}
        }
        Ok(values)
    }
}

/// Integer part of a solution with the given opening decision and an
/// optimal recourse per scenario, plus the uncovered demands.
fn recourse_values(
    y: &[VarId],
    u: &[Vec<VarId>],
    x: &[Vec<(usize, usize, VarId)>],
    num_vars: usize,
    instance: &Instance,
    scenarios: &ScenarioSet,
    open: &[bool],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut values = vec![0.0; num_vars];
    for (j, v) in y.iter().enumerate() {
        values[v.0] = if open[j] { 1.0 } else { 0.0 };
    }
    let first = FirstStageSolution::new(instance, open.to_vec())?;
    let mut unc = Vec::with_capacity(scenarios.len());
    for s in 0..scenarios.len() {
        let out = solve_second_stage(instance, scenarios, &first, s, None)?;
        for (j, v) in u[s].iter().enumerate() {
            values[v.0] = out.delivered[j] as f64;
        }
        for &(i, j, v) in &x[s] {
            if out.assignment[i] == Some(j) {
                values[v.0] = 1.0;
            }
        }
        unc.push(out.uncovered as f64);
    }
    Ok((values, unc))
}

/// Completes nodes with fixed opening decisions by solving every scenario's
/// recourse exactly, so the search only branches on the opening decisions.
///
/// Valid for every builder here: each risk measure is nondecreasing in the
/// per-scenario uncovered demand, and the optimal recourse minimises all of
/// them at once. Completions are cached by opening decision and may be
/// reused across solves of models derived from the same build (same
/// variables, extra rows or bounds).
#[derive(Debug)]
pub struct RecourseCompletion<'a> {
    instance: &'a Instance,
    scenarios: &'a ScenarioSet,
    y: Vec<VarId>,
    u: Vec<Vec<VarId>>,
    x: Vec<Vec<(usize, usize, VarId)>>,
    num_vars: usize,
    cache: HashMap<Vec<bool>, Vec<f64>>,
    failure: Option<Error>,
}

impl<'a> RecourseCompletion<'a> {
    pub fn new(model: &FlpModel, instance: &'a Instance, scenarios: &'a ScenarioSet) -> Self {
        RecourseCompletion {
            instance,
            scenarios,
            y: model.y.clone(),
            u: model.u.clone(),
            x: model.x.clone(),
            num_vars: model.model.num_vars(),
            cache: HashMap::new(),
            failure: None,
        }
    }

    /// Distinct opening decisions completed so far.
    pub fn evaluated(&self) -> usize {
        self.cache.len()
    }

    /// First error raised inside a completion, if any.
    pub fn take_failure(&mut self) -> Option<Error> {
        self.failure.take()
    }
}

impl NodeCompletion for RecourseCompletion<'_> {
    fn leading_priority(&self) -> i32 {
        OPENING_PRIORITY
    }

    fn complete(&mut self, values: &[f64]) -> Option<Vec<f64>> {
        let open: Vec<bool> = self.y.iter().map(|v| values[v.0] > 0.5).collect();
        if let Some(v) = self.cache.get(&open) {
            return Some(v.clone());
        }
        match recourse_values(&self.y, &self.u, &self.x, self.num_vars, self.instance, self.scenarios, &open) {
            Ok((v, _)) => {
                self.cache.insert(open, v.clone());
                Some(v)
            }
            Err(e) => {
                // Cannot prune without an answer: report it and let the caller fail.
                self.failure.get_or_insert(e);
                None
            }
        }
    }
}

/// Branch priority of the opening decisions.
pub const OPENING_PRIORITY: i32 = 2;

/// The family of subset cuts `rho >= (1/k) sum_{s in S} uncovered_s`, one
/// per `k`-subset of scenarios, kept out of the model and emitted on demand.
#[derive(Debug, Clone)]
pub struct CutFamily {
    k: usize,
    rho: VarId,
    u: Vec<Vec<VarId>>,
    totals: Vec<u64>,
}

impl CutFamily {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.totals.len()
    }

    pub fn rho(&self) -> VarId {
        self.rho
    }

    /// Number of members, `C(N, k)` (saturating).
    pub fn size(&self) -> u128 {
        binomial(self.n(), self.k)
    }

    /// Uncovered demand per scenario for a solution vector.
    pub fn uncovered(&self, values: &[f64]) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.totals)
            .map(|(us, &t)| t as f64 - us.iter().map(|v| values[v.0]).sum::<f64>())
            .collect()
    }

    /// The cut row for a scenario subset, written as
    /// `rho + (1/k) sum_{s in S} sum_j u_j^s >= (1/k) sum_{s in S} total_s`.
    pub fn row(&self, subset: &[usize]) -> Result<Constraint> {
        if subset.len() != self.k {
            return Err(invalid(format!("subset has {} scenarios, expected {}", subset.len(), self.k)));
        }
        if let Some(&s) = subset.iter().find(|&&s| s >= self.n()) {
            return Err(invalid(format!("scenario {s} out of range")));
        }
        let w = 1.0 / self.k as f64;
        let mut terms = vec![(self.rho, 1.0)];
        let mut total = 0u64;
        for &s in subset {
            total += self.totals[s];
            terms.extend(self.u[s].iter().map(|&v| (v, w)));
        }
        let name = format!(
            "subset_{}",
            subset.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("_")
        );
        Ok(Constraint::new(name, terms, Sense::Ge, total as f64 * w))
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

fn check_dims(instance: &Instance, scenarios: &ScenarioSet) -> Result<()> {
    if scenarios.num_nodes() != instance.num_demand() {
        return Err(invalid(format!(
            "scenario rows have {} entries but the instance has {} demand nodes",
            scenarios.num_nodes(),
            instance.num_demand()
        )));
    }
    Ok(())
}

/// Builds the opening, assignment and delivery block with its budget row.
fn base_block(instance: &Instance, scenarios: &ScenarioSet, kind: RiskModel) -> Result<FlpModel> {
    check_dims(instance, scenarios)?;
    let mut m = MilpModel::new();
    let y: Vec<VarId> = (0..instance.num_sites()).map(|j| m.add_binary(format!("y_{j}"))).collect();
    // settle the opening decisions before the recourse
    for &v in &y {
        m.set_branch_priority(v, OPENING_PRIORITY)?;
    }
    let mut u = Vec::with_capacity(scenarios.len());
    let mut x = Vec::with_capacity(scenarios.len());
    for s in 0..scenarios.len() {
        let us: Vec<VarId> = (0..instance.num_sites())
            .map(|j| m.add_integer(format!("u_{s}_{j}"), 0.0, instance.capacity(j) as f64))
            .collect::<std::result::Result<_, _>>()?;
        let mut xs = Vec::new();
        for i in 0..instance.num_demand() {
            for &j in instance.covering_sites(i) {
                let v = m.add_binary(format!("x_{s}_{i}_{j}"));
                m.set_branch_priority(v, 1)?;
                xs.push((i, j, v));
            }
        }
        // each demand node served by at most one site
        for i in 0..instance.num_demand() {
            let terms: Vec<_> = xs.iter().filter(|e| e.0 == i).map(|e| (e.2, 1.0)).collect();
            if terms.len() > 1 {
                m.add_row(format!("single_{s}_{i}"), terms, Sense::Le, 1.0)?;
            }
        }
        for j in 0..instance.num_sites() {
            // delivery limited by capacity of an open site ...
            m.add_row(
                format!("cap_{s}_{j}"),
                vec![(us[j], 1.0), (y[j], -(instance.capacity(j) as f64))],
                Sense::Le,
                0.0,
            )?;
            // ... and by the demand assigned to it
            let mut terms = vec![(us[j], 1.0)];
            terms.extend(
                xs.iter()
                    .filter(|e| e.1 == j)
                    .map(|e| (e.2, -(scenarios.demand(s, e.0) as f64))),
            );
            m.add_row(format!("pool_{s}_{j}"), terms, Sense::Le, 0.0)?;
        }
        for &(i, j, v) in &xs {
            m.add_row(format!("open_{s}_{i}_{j}"), vec![(v, 1.0), (y[j], -1.0)], Sense::Le, 0.0)?;
        }
        u.push(us);
        x.push(xs);
    }
    let cost = LinExpr::from_terms(
        y.iter().enumerate().map(|(j, &v)| (v, instance.opening_cost(j) as f64)).collect(),
    );
    let all: u64 = instance.opening_costs().iter().sum();
    let budget_row = m.add_constraint(Constraint::from_expr("budget", &cost, Sense::Le, all as f64))?;
    Ok(FlpModel {
        model: m,
        kind,
        y,
        u,
        x,
        cost,
        risk: LinExpr::new(),
        budget_row,
        risk_vars: Vec::new(),
    })
}

fn finish(mut f: FlpModel, risk: LinExpr) -> Result<FlpModel> {
    f.model.set_objective(ObjSense::Minimize, risk.clone())?;
    f.risk = risk;
    Ok(f)
}

/// Subset-based CVaR model with the subset cuts left to a lazy separator.
pub fn build_mb(instance: &Instance, scenarios: &ScenarioSet, risk: RiskSpec) -> Result<(FlpModel, CutFamily)> {
    if risk.n() != scenarios.len() {
        return Err(invalid(format!("risk spec is for {} scenarios, set has {}", risk.n(), scenarios.len())));
    }
    let mut f = base_block(instance, scenarios, RiskModel::Subset)?;
    let rho = f.model.add_continuous("rho", 0.0, f64::INFINITY)?;
    f.risk_vars = vec![rho];
    let family = CutFamily { k: risk.k(), rho, u: f.u.clone(), totals: scenarios.totals().to_vec() };
    Ok((finish(f, LinExpr::from_terms(vec![(rho, 1.0)]))?, family))
}

/// Subset-based model with all `C(N, k)` cuts written out; only sensible
/// for small `N`.
pub fn build_mb_full(instance: &Instance, scenarios: &ScenarioSet, risk: RiskSpec) -> Result<FlpModel> {
    let (mut f, family) = build_mb(instance, scenarios, risk)?;
    if family.size() > 100_000 {
        return Err(invalid(format!("{} subset cuts are too many to materialize", family.size())));
    }
    for subset in k_subsets(scenarios.len(), risk.k()) {
        f.model.add_constraint(family.row(&subset)?)?;
    }
    Ok(f)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(p) = (0..k).rev().find(|&p| cur[p] < n - k + p) else {
            return out;
        };
        cur[p] += 1;
        for q in p + 1..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
}

/// Classical CVaR model at level `alpha`:
/// `min eta + 1/((1-alpha) N) sum_s excess_s`, `excess_s >= uncovered_s - eta`.
pub fn build_ma(instance: &Instance, scenarios: &ScenarioSet, alpha: f64) -> Result<FlpModel> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let mut f = base_block(instance, scenarios, RiskModel::Classical)?;
    let eta = f.model.add_continuous("eta", f64::NEG_INFINITY, f64::INFINITY)?;
    let w = 1.0 / ((1.0 - alpha) * scenarios.len() as f64);
    let mut risk = LinExpr::from_terms(vec![(eta, 1.0)]);
    f.risk_vars.push(eta);
    for s in 0..scenarios.len() {
        let e = f.model.add_continuous(format!("excess_{s}"), 0.0, f64::INFINITY)?;
        let mut terms = vec![(e, 1.0), (eta, 1.0)];
        terms.extend(f.u[s].iter().map(|&v| (v, 1.0)));
        f.model.add_row(format!("tail_{s}"), terms, Sense::Ge, scenarios.total(s) as f64)?;
        risk.add_term(e, w);
        f.risk_vars.push(e);
    }
    finish(f, risk)
}

/// Risk-neutral model: mean uncovered demand.
pub fn build_expected(instance: &Instance, scenarios: &ScenarioSet) -> Result<FlpModel> {
    let f = base_block(instance, scenarios, RiskModel::Expected)?;
    let n = scenarios.len() as f64;
    let total: u64 = scenarios.totals().iter().sum();
    let mut risk = LinExpr::new().with_constant(total as f64 / n);
    for us in &f.u {
        for &v in us {
            risk.add_term(v, -1.0 / n);
        }
    }
    finish(f, risk)
}

/// Worst-case model: largest uncovered demand over the scenarios.
pub fn build_worst_case(instance: &Instance, scenarios: &ScenarioSet) -> Result<FlpModel> {
    let mut f = base_block(instance, scenarios, RiskModel::WorstCase)?;
    let t = f.model.add_continuous("worst", 0.0, f64::INFINITY)?;
    for s in 0..scenarios.len() {
        let mut terms = vec![(t, 1.0)];
        terms.extend(f.u[s].iter().map(|&v| (v, 1.0)));
        f.model.add_row(format!("worst_{s}"), terms, Sense::Ge, scenarios.total(s) as f64)?;
    }
    f.risk_vars = vec![t];
    finish(f, LinExpr::from_terms(vec![(t, 1.0)]))
}

/// An opening decision with its exact cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstStageSolution {
    pub open: Vec<bool>,
    pub cost: u64,
}

impl FirstStageSolution {
    pub fn new(instance: &Instance, open: Vec<bool>) -> Result<Self> {
        if open.len() != instance.num_sites() {
            return Err(invalid(format!("{} opening flags for {} sites", open.len(), instance.num_sites())));
        }
        let cost = instance.cost_of(&open);
        Ok(FirstStageSolution { open, cost })
    }

    pub fn closed(instance: &Instance) -> Self {
        FirstStageSolution { open: vec![false; instance.num_sites()], cost: 0 }
    }
}

/// Optimal recourse in one scenario for a fixed opening decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioOutcome {
    pub scenario: usize,
    /// Serving site per demand position, if any.
    pub assignment: Vec<Option<usize>>,
    /// Delivered demand per site position.
    pub delivered: Vec<u64>,
    pub uncovered: u64,
}

/// Maximizes delivered demand in scenario `s` with the sites of `first` open.
pub fn solve_second_stage(
    instance: &Instance,
    scenarios: &ScenarioSet,
    first: &FirstStageSolution,
    s: usize,
    time_limit: Option<Duration>,
) -> Result<ScenarioOutcome> {
    check_dims(instance, scenarios)?;
    if s >= scenarios.len() {
        return Err(invalid(format!("scenario {s} out of range")));
    }
    if first.open.len() != instance.num_sites() {
        return Err(invalid("opening decision has the wrong length"));
    }
    let mut m = MilpModel::new();
    let open: Vec<usize> = (0..instance.num_sites()).filter(|&j| first.open[j]).collect();
    let u: Vec<VarId> = open
        .iter()
        .map(|&j| m.add_integer(format!("u_{j}"), 0.0, instance.capacity(j) as f64))
        .collect::<std::result::Result<_, _>>()?;
    let mut x = Vec::new();
    for i in 0..instance.num_demand() {
        if scenarios.demand(s, i) == 0 {
            continue;
        }
        let mut row = Vec::new();
        for (p, &j) in open.iter().enumerate() {
            if instance.covers(i, j) {
                let v = m.add_binary(format!("x_{i}_{j}"));
                x.push((i, p, v));
                row.push((v, 1.0));
            }
        }
        if row.len() > 1 {
            m.add_row(format!("single_{i}"), row, Sense::Le, 1.0)?;
        }
    }
    for (p, &uv) in u.iter().enumerate() {
        let mut terms = vec![(uv, 1.0)];
        terms.extend(x.iter().filter(|e| e.1 == p).map(|e| (e.2, -(scenarios.demand(s, e.0) as f64))));
        m.add_row(format!("pool_{p}"), terms, Sense::Le, 0.0)?;
    }
    m.set_objective(ObjSense::Maximize, LinExpr::from_terms(u.iter().map(|&v| (v, 1.0)).collect()))?;
    let res = solve_mip(&m, time_limit, None)?;
    if !res.status.has_solution() {
        return Err(Error::Solver(format!("second stage of scenario {s}: {}", res.status.as_str())));
    }
    if res.status != SolveStatus::Optimal {
        log::warn!("second stage of scenario {s} not proven optimal");
    }
    let mut delivered = vec![0u64; instance.num_sites()];
    for (p, &j) in open.iter().enumerate() {
        delivered[j] = res.values[u[p].0].round() as u64;
    }
    let mut assignment = vec![None; instance.num_demand()];
    for &(i, p, v) in &x {
        if res.values[v.0] > 0.5 {
            assignment[i] = Some(open[p]);
        }
    }
    let served: u64 = delivered.iter().sum();
    Ok(ScenarioOutcome { scenario: s, assignment, delivered, uncovered: scenarios.total(s) - served })
}

/// Minimal uncovered demand per scenario for a fixed opening decision.
pub fn evaluate_uncovered_vector(
    instance: &Instance,
    scenarios: &ScenarioSet,
    first: &FirstStageSolution,
) -> Result<Vec<u64>> {
    (0..scenarios.len())
        .map(|s| solve_second_stage(instance, scenarios, first, s, None).map(|o| o.uncovered))
        .collect()
}
