//! Pareto frontiers over (opening cost, risk) and the drivers that compute
//! them: epsilon-constraint, balanced box and the fixing/local-branching
//! matheuristic.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use cvarloc_milp::{
    solve_lp, solve_mip_full, Constraint, MipOptions, NodeCompletion, ObjSense, Sense, SolveResult, SolveStatus,
    VarId,
};
use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::cvar::{cvar_topk, delayed_cut_loop, initial_cut, CutLoopOptions, CutPool};
use crate::error::{invalid, Error, Result};
use crate::formulation::{
    build_expected, build_ma, build_mb, build_worst_case, evaluate_uncovered_vector, CutFamily,
    FirstStageSolution, FlpModel, RecourseCompletion,
};
use crate::instance::{Instance, RiskSpec, ScenarioSet};

/// Risk values closer than this are treated as equal.
pub const RISK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    Approximate,
    ReEvaluated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub cost: u64,
    pub risk: f64,
    pub open: Vec<bool>,
    pub provenance: Provenance,
}

impl FrontierPoint {
    /// Weak dominance in both objectives (minimization).
    pub fn dominates(&self, other: &FrontierPoint) -> bool {
        self.cost <= other.cost && self.risk <= other.risk + RISK_TOL
    }
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    cost: u64,
    risk: f64,
    y: Vec<u8>,
    provenance: Provenance,
}

/// Mutually non-dominated points, increasing in cost and decreasing in risk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frontier {
    points: Vec<FrontierPoint>,
}

impl Frontier {
    /// Sorts, drops dominated points and keeps one point per cost level.
    pub fn from_points(mut points: Vec<FrontierPoint>) -> Self {
        points.sort_by(|a, b| a.cost.cmp(&b.cost).then(a.risk.total_cmp(&b.risk)));
        let mut kept: Vec<FrontierPoint> = Vec::with_capacity(points.len());
        for p in points {
            match kept.last() {
                Some(last) if last.risk <= p.risk + RISK_TOL => {}
                _ => kept.push(p),
            }
        }
        Frontier { points: kept }
    }

    pub fn points(&self) -> &[FrontierPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// (cost, risk) pairs.
    pub fn objectives(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.cost as f64, p.risk)).collect()
    }

    /// Checks ordering and mutual non-dominance.
    pub fn validate(&self) -> Result<()> {
        for w in self.points.windows(2) {
            if !(w[0].cost < w[1].cost && w[0].risk > w[1].risk + RISK_TOL) {
                return Err(invalid(format!(
                    "frontier points ({}, {}) and ({}, {}) violate the ordering",
                    w[0].cost, w[0].risk, w[1].cost, w[1].risk
                )));
            }
        }
        if let Some(p) = self.points.iter().find(|p| !(p.risk >= -RISK_TOL)) {
            return Err(invalid(format!("negative risk {}", p.risk)));
        }
        Ok(())
    }

    /// Same costs and risks within `tol`.
    pub fn same_points(&self, other: &Frontier, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.cost == b.cost && (a.risk - b.risk).abs() <= tol)
    }

    pub fn to_json(&self) -> Result<String> {
        let recs: Vec<PointRecord> = self
            .points
            .iter()
            .map(|p| PointRecord {
                cost: p.cost,
                risk: p.risk,
                y: p.open.iter().map(|&o| o as u8).collect(),
                provenance: p.provenance,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&recs)?)
    }

    /// Parses a frontier file; points are re-filtered on load.
    pub fn from_json(text: &str) -> Result<Self> {
        let recs: Vec<PointRecord> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let points = recs
            .into_iter()
            .enumerate()
            .map(|(p, r)| {
                if let Some(v) = r.y.iter().find(|&&v| v > 1) {
                    return Err(Error::Parse(format!("[{p}].y: entry {v} is not 0/1")));
                }
                Ok(FrontierPoint {
                    cost: r.cost,
                    risk: r.risk,
                    open: r.y.into_iter().map(|v| v == 1).collect(),
                    provenance: r.provenance,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Frontier::from_points(points))
    }
}

/// Which formulation a driver solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    /// Classical CVaR with a value-at-risk auxiliary.
    Classical,
    /// Subset-based CVaR with separation at every solve.
    Subset,
    /// Subset-based CVaR separating only while computing the first point;
    /// the resulting cut pool is frozen afterwards. Yields a lower bound.
    SubsetFrozen,
    /// Mean uncovered demand.
    Expected,
    /// Largest uncovered demand.
    WorstCase,
}

impl ModelFamily {
    pub fn is_exact(self) -> bool {
        self != ModelFamily::SubsetFrozen
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Classical => "ma",
            ModelFamily::Subset => "mb",
            ModelFamily::SubsetFrozen => "mb-bar",
            ModelFamily::Expected => "expected",
            ModelFamily::WorstCase => "worst-case",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ma" => ModelFamily::Classical,
            "mb" | "mb-exact" => ModelFamily::Subset,
            "mb-bar" => ModelFamily::SubsetFrozen,
            "expected" => ModelFamily::Expected,
            "worst-case" => ModelFamily::WorstCase,
            other => return Err(Error::Usage(format!("unknown model '{other}'"))),
        })
    }
}

/// One lexicographic solve, for bookkeeping.
#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub label: String,
    pub status: SolveStatus,
    pub separator_calls: usize,
    pub new_cuts: usize,
    pub nodes: usize,
    pub seconds: f64,
}

/// Statistics of a frontier computation.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub solves: Vec<SolveRecord>,
    /// Subsets in the cut pool at the end (subset families only).
    pub pool: Vec<Vec<usize>>,
    pub seconds: f64,
    /// The total time limit stopped the driver before it finished.
    pub truncated: bool,
    /// Solves that failed, with the solver's message. The driver skipped
    /// past them.
    pub failures: Vec<String>,
}

impl RunStats {
    pub fn separator_calls(&self) -> usize {
        self.solves.iter().map(|s| s.separator_calls).sum()
    }

    /// Separator invocations outside the solves of the first point.
    pub fn separator_calls_after_first_point(&self) -> usize {
        self.solves.iter().filter(|s| !s.label.starts_with("point 0")).map(|s| s.separator_calls).sum()
    }

    pub fn cuts(&self) -> usize {
        self.pool.len()
    }

    /// Whether any time limit cut the run short.
    pub fn hit_time_limit(&self) -> bool {
        self.truncated
            || self
                .solves
                .iter()
                .any(|s| matches!(s.status, SolveStatus::TimeLimitFeasible | SolveStatus::TimeLimitNoSolution))
    }
}

#[derive(Debug, Clone)]
pub struct FrontierRun {
    pub frontier: Frontier,
    pub stats: RunStats,
}

/// Options shared by the drivers.
#[derive(Debug, Clone, Default)]
pub struct DriverOptions {
    /// Wall-clock limit per frontier point (both lexicographic phases).
    pub time_limit_per_point: Option<Duration>,
    /// Stop producing new points after this much time in total.
    pub time_limit_total: Option<Duration>,
    /// Exact subset family: keep the cuts of earlier solves. By default
    /// every solve starts again from the initial cut.
    pub reuse_cuts: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    Risk,
    Cost,
}

/// Extra restriction applied to a single solve.
#[derive(Debug, Clone, Default)]
struct Restriction {
    cost_cap: Option<u64>,
    risk_cap: Option<f64>,
    fix: BTreeMap<VarId, f64>,
    ball: Option<(Vec<(VarId, f64)>, usize)>,
}

#[derive(Debug, Clone)]
struct Solved {
    open: Vec<bool>,
    cost: u64,
    risk: f64,
    values: Vec<f64>,
    proven: bool,
}

enum Outcome {
    Solved(Solved),
    Infeasible,
    NoSolution,
    /// The solver failed; the failure is recorded in the run statistics.
    Failed,
}

/// Solves lexicographic single-objective problems for one formulation.
struct PointSolver<'a> {
    instance: &'a Instance,
    family: ModelFamily,
    base: FlpModel,
    cuts: Option<CutFamily>,
    pool: CutPool,
    initial: Vec<usize>,
    reuse_cuts: bool,
    /// Every cut generated so far, across pool restarts.
    generated: CutPool,
    frozen: bool,
    stats: RunStats,
    completion: RecourseCompletion<'a>,
}

impl<'a> PointSolver<'a> {
    fn new(
        family: ModelFamily,
        instance: &'a Instance,
        scenarios: &'a ScenarioSet,
        risk: RiskSpec,
        opts: &DriverOptions,
    ) -> Result<Self> {
        if risk.n() != scenarios.len() {
            return Err(invalid(format!("risk spec is for {} scenarios, set has {}", risk.n(), scenarios.len())));
        }
        let (base, cuts) = match family {
            ModelFamily::Classical => (build_ma(instance, scenarios, risk.alpha())?, None),
            ModelFamily::Subset | ModelFamily::SubsetFrozen => {
                let (m, f) = build_mb(instance, scenarios, risk)?;
                (m, Some(f))
            }
            ModelFamily::Expected => (build_expected(instance, scenarios)?, None),
            ModelFamily::WorstCase => (build_worst_case(instance, scenarios)?, None),
        };
        let mut pool = CutPool::new();
        let initial = if cuts.is_some() { initial_cut(scenarios, risk.k())? } else { Vec::new() };
        if cuts.is_some() {
            pool.insert(initial.clone());
        }
        let completion = RecourseCompletion::new(&base, instance, scenarios);
        Ok(PointSolver {
            instance,
            family,
            base,
            cuts,
            generated: pool.clone(),
            pool,
            initial,
            reuse_cuts: opts.reuse_cuts,
            frozen: false,
            stats: RunStats::default(),
            completion,
        })
    }

    /// Restarts the exact subset family from the initial cut, unless cuts
    /// are reused.
    fn restart_pool(&mut self) {
        if self.family != ModelFamily::Subset || self.reuse_cuts || self.pool.len() <= 1 {
            return;
        }
        for c in self.pool.cuts() {
            self.generated.insert(c.subset.clone());
        }
        self.pool = CutPool::new();
        self.pool.insert(self.initial.clone());
    }

    fn restricted(&self, r: &Restriction) -> Result<FlpModel> {
        let mut f = self.base.clone();
        if let Some(c) = r.cost_cap {
            f.set_budget(c as f64)?;
        }
        if let Some(cap) = r.risk_cap {
            f.model.add_constraint(Constraint::from_expr("risk_cap", &f.risk, Sense::Le, cap))?;
        }
        if !r.fix.is_empty() {
            f.model = f.model.fix_variables(&r.fix)?;
        }
        if let Some((center, radius)) = &r.ball {
            f.model = f.model.add_local_branching(center, *radius)?;
        }
        Ok(f)
    }

    fn run(&mut self, f: &FlpModel, label: &str, limit: Option<Duration>, seed: Option<Vec<f64>>) -> Result<SolveResult> {
        let start = Instant::now();
        let (res, calls, new_cuts) = match &self.cuts {
            Some(family) => {
                let opts = CutLoopOptions { time_limit: limit, separate: !self.frozen, initial_solution: seed };
                let out = delayed_cut_loop(f, family, &mut self.pool, &opts, Some(&mut self.completion))?;
                (out.result, out.separator_calls, out.new_cuts)
            }
            None => {
                let opts = MipOptions {
                    time_limit: limit,
                    initial_solution: seed,
                    ..MipOptions::default()
                };
                let res = solve_mip_full(&f.model, &opts, None, Some(&mut self.completion as &mut dyn NodeCompletion))?;
                if let Some(e) = self.completion.take_failure() {
                    return Err(e);
                }
                (res, 0, 0)
            }
        };
        debug!(
            "{label}: {} obj {} ({} nodes, {} LP iterations, {calls} separations)",
            res.status.as_str(),
            res.objective,
            res.nodes,
            res.lp_iterations
        );
        self.stats.solves.push(SolveRecord {
            label: label.to_string(),
            status: res.status,
            separator_calls: calls,
            new_cuts,
            nodes: res.nodes,
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(res)
    }

    /// [`Self::lexmin_strict`], recording solver failures instead of
    /// returning them.
    fn lexmin(
        &mut self,
        goal: Goal,
        r: &Restriction,
        label: &str,
        limit: Option<Duration>,
        seed: Option<Vec<f64>>,
    ) -> Result<Outcome> {
        match self.lexmin_strict(goal, r, label, limit, seed) {
            Err(e @ (Error::Milp(_) | Error::Solver(_))) => {
                warn!("{label}: {e}");
                self.stats.failures.push(format!("{label}: {e}"));
                Ok(Outcome::Failed)
            }
            other => other,
        }
    }

    /// Two-phase lexicographic minimization: optimize `goal`, bound it at its
    /// optimum, then optimize the other objective.
    fn lexmin_strict(
        &mut self,
        goal: Goal,
        r: &Restriction,
        label: &str,
        limit: Option<Duration>,
        seed: Option<Vec<f64>>,
    ) -> Result<Outcome> {
        let start = Instant::now();
        self.restart_pool();
        let mut f = self.restricted(r)?;
        let (first, second) = match goal {
            Goal::Risk => (f.risk.clone(), f.cost.clone()),
            Goal::Cost => (f.cost.clone(), f.risk.clone()),
        };
        f.model.set_objective(ObjSense::Minimize, first.clone())?;
        let seed = seed.filter(|s| f.model.max_violation(s) <= 1e-7);
        let res1 = self.run(&f, &format!("{label} phase 1"), limit, seed)?;
        match res1.status {
            SolveStatus::Infeasible => return Ok(Outcome::Infeasible),
            SolveStatus::Unbounded => return Err(Error::Solver(format!("{label}: unbounded"))),
            SolveStatus::TimeLimitNoSolution => return Ok(Outcome::NoSolution),
            _ => {}
        }
        let v1 = first.eval(&res1.values);
        let slack = match goal {
            Goal::Cost => 0.5,
            Goal::Risk => RISK_TOL * v1.abs().max(1.0) * 0.1,
        };
        f.model.add_constraint(Constraint::from_expr("lex_bound", &first, Sense::Le, v1 + slack))?;
        f.model.set_objective(ObjSense::Minimize, second)?;
        let left = limit.map(|l| l.saturating_sub(start.elapsed()));
        let res2 = self.run(&f, &format!("{label} phase 2"), left, Some(res1.values.clone()))?;
        let (values, proven2) = if res2.status.has_solution() {
            (res2.values, res2.status == SolveStatus::Optimal)
        } else {
            (res1.values, false)
        };
        let open = f.open_sites(&values);
        let risk = self.polished_risk(&values)?;
        Ok(Outcome::Solved(Solved {
            cost: self.instance.cost_of(&open),
            risk,
            open,
            values,
            proven: res1.status == SolveStatus::Optimal && proven2,
        }))
    }

    /// Smallest model risk for the integer part of `values`: the second
    /// lexicographic phase only bounds the risk, leaving the continuous risk
    /// variables up to the tolerance above their minimum.
    fn polished_risk(&self, values: &[f64]) -> Result<f64> {
        let fix: BTreeMap<VarId, f64> = self
            .base
            .model
            .vars()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind.is_integral())
            .map(|(j, _)| (VarId(j), values[j].round()))
            .collect();
        let mut m = self.base.model.fix_variables(&fix)?;
        if let Some(family) = &self.cuts {
            for row in self.pool.rows(family)? {
                m.add_constraint(row)?;
            }
        }
        m.set_objective(ObjSense::Minimize, self.base.risk.clone())?;
        let res = solve_lp(&m);
        if res.status != SolveStatus::Optimal {
            return Err(Error::Solver(format!("risk re-optimization: {}", res.status.as_str())));
        }
        Ok(res.objective.max(0.0))
    }

    fn point(&self, s: &Solved) -> FrontierPoint {
        let exact = s.proven && (self.family.is_exact() || !self.frozen_after_first());
        FrontierPoint {
            cost: s.cost,
            risk: s.risk,
            open: s.open.clone(),
            provenance: if exact { Provenance::Exact } else { Provenance::Approximate },
        }
    }

    fn frozen_after_first(&self) -> bool {
        self.family == ModelFamily::SubsetFrozen && self.frozen
    }

    /// Freezes the pool when the family asks for it.
    fn after_first_point(&mut self) {
        if self.family == ModelFamily::SubsetFrozen && !self.frozen {
            info!("freezing {} subset cuts", self.pool.len());
            self.frozen = true;
        }
    }

    fn finish(mut self, points: Vec<FrontierPoint>, start: Instant) -> FrontierRun {
        for c in self.pool.cuts() {
            self.generated.insert(c.subset.clone());
        }
        self.stats.pool = self.generated.cuts().iter().map(|c| c.subset.clone()).collect();
        self.stats.seconds = start.elapsed().as_secs_f64();
        FrontierRun { frontier: Frontier::from_points(points), stats: self.stats }
    }
}

fn total_exhausted(opts: &DriverOptions, start: Instant) -> bool {
    opts.time_limit_total.is_some_and(|t| start.elapsed() >= t)
}

fn point_limit(opts: &DriverOptions, start: Instant) -> Option<Duration> {
    let total_left = opts.time_limit_total.map(|t| t.saturating_sub(start.elapsed()));
    match (opts.time_limit_per_point, total_left) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Epsilon-constraint sweep: minimize risk (then cost) under a budget that
/// starts at the total opening cost and drops below each point found.
pub fn epsilon_constraint(
    family: ModelFamily,
    instance: &Instance,
    scenarios: &ScenarioSet,
    risk: RiskSpec,
    opts: &DriverOptions,
) -> Result<FrontierRun> {
    let start = Instant::now();
    let mut solver = PointSolver::new(family, instance, scenarios, risk, opts)?;
    let step = instance.cost_step();
    let mut eps: u64 = instance.opening_costs().iter().sum();
    let mut points = Vec::new();
    loop {
        if total_exhausted(opts, start) {
            solver.stats.truncated = true;
            break;
        }
        let r = Restriction { cost_cap: Some(eps), ..Restriction::default() };
        let label = format!("point {}", points.len());
        match solver.lexmin(Goal::Risk, &r, &label, point_limit(opts, start), None)? {
            Outcome::Solved(s) => {
                let p = solver.point(&s);
                info!("{label}: cost {} risk {:.6} ({:?})", p.cost, p.risk, p.provenance);
                points.push(p);
                solver.after_first_point();
                if s.cost < step {
                    break;
                }
                eps = s.cost - step;
            }
            Outcome::Failed if eps >= step => eps -= step,
            Outcome::Infeasible | Outcome::NoSolution | Outcome::Failed => break,
        }
    }
    Ok(solver.finish(points, start))
}

/// Balanced-box search: lexicographic extreme points, then rectangles split
/// at the midpoint of the risk range.
pub fn balanced_box(
    family: ModelFamily,
    instance: &Instance,
    scenarios: &ScenarioSet,
    risk: RiskSpec,
    opts: &DriverOptions,
) -> Result<FrontierRun> {
    let start = Instant::now();
    let mut solver = PointSolver::new(family, instance, scenarios, risk, opts)?;
    let step = instance.cost_step();
    let mut points: Vec<FrontierPoint> = Vec::new();

    let bottom = match solver.lexmin(Goal::Risk, &Restriction::default(), "point 0", point_limit(opts, start), None)? {
        Outcome::Solved(s) => s,
        _ => return Ok(solver.finish(points, start)),
    };
    points.push(solver.point(&bottom));
    solver.after_first_point();
    let top = match solver.lexmin(Goal::Cost, &Restriction::default(), "extreme cost", point_limit(opts, start), None)? {
        Outcome::Solved(s) => s,
        _ => return Ok(solver.finish(points, start)),
    };
    if top.cost == bottom.cost {
        return Ok(solver.finish(points, start));
    }
    points.push(solver.point(&top));

    let mut queue: VecDeque<((u64, f64), (u64, f64))> = VecDeque::new();
    queue.push_back(((top.cost, top.risk), (bottom.cost, bottom.risk)));
    let mut boxes = 0usize;
    while let Some((z1, z2)) = queue.pop_front() {
        if total_exhausted(opts, start) {
            solver.stats.truncated = true;
            break;
        }
        boxes += 1;
        let mid = 0.5 * (z1.1 + z2.1);
        // lowest cost with risk in the lower half
        let r = Restriction { cost_cap: Some(z2.0), risk_cap: Some(mid), ..Restriction::default() };
        let a = match solver.lexmin(Goal::Cost, &r, &format!("box {boxes} lower"), point_limit(opts, start), None)? {
            Outcome::Solved(s) => s,
            _ => continue,
        };
        if a.cost != z2.0 {
            points.push(solver.point(&a));
            queue.push_back(((a.cost, a.risk), z2));
        }
        // lowest risk strictly cheaper than that
        if a.cost < z1.0 + step {
            continue;
        }
        let r = Restriction { cost_cap: Some(a.cost - step), ..Restriction::default() };
        let b = match solver.lexmin(Goal::Risk, &r, &format!("box {boxes} upper"), point_limit(opts, start), None)? {
            Outcome::Solved(s) => s,
            _ => continue,
        };
        if b.cost != z1.0 {
            points.push(solver.point(&b));
            queue.push_back((z1, (b.cost, b.risk)));
        }
    }
    Ok(solver.finish(points, start))
}

/// Options of the matheuristic.
#[derive(Debug, Clone)]
pub struct MatheuristicOptions {
    /// Budget per frontier point; `None` is unlimited.
    pub per_point_budget: Option<Duration>,
    /// Radius of the local-branching neighbourhood.
    pub kappa: usize,
    /// Stop producing new points after this much time in total.
    pub time_limit_total: Option<Duration>,
}

impl Default for MatheuristicOptions {
    fn default() -> Self {
        MatheuristicOptions { per_point_budget: Some(Duration::from_secs(10)), kappa: 2, time_limit_total: None }
    }
}

fn share(limit: Option<Duration>, frac: f64) -> Option<Duration> {
    limit.map(|l| l.mul_f64(frac))
}

fn remaining(limit: Option<Duration>, since: Instant) -> Option<Duration> {
    limit.map(|l| l.saturating_sub(since.elapsed()))
}

/// Epsilon-constraint sweep where each new point is first searched near the
/// previous one: (a) fix opening decisions on which the LP relaxation and
/// the previous point agree, (b) otherwise search a local-branching ball
/// around the previous point, and (c) finish with an unrestricted solve
/// seeded with the best solution found, within the leftover budget. Points
/// whose final solve is not proven optimal are marked approximate.
pub fn matheuristic(
    family: ModelFamily,
    instance: &Instance,
    scenarios: &ScenarioSet,
    risk: RiskSpec,
    opts: &MatheuristicOptions,
) -> Result<FrontierRun> {
    if opts.kappa == 0 {
        return Err(invalid("kappa must be at least 1"));
    }
    if opts.per_point_budget.is_some_and(|b| b.is_zero()) {
        return Err(invalid("per-point budget must be positive"));
    }
    let start = Instant::now();
    let driver = DriverOptions {
        time_limit_per_point: opts.per_point_budget,
        time_limit_total: opts.time_limit_total,
        reuse_cuts: false,
    };
    let mut solver = PointSolver::new(family, instance, scenarios, risk, &driver)?;
    let step = instance.cost_step();
    let mut points = Vec::new();

    let first = match solver.lexmin(
        Goal::Risk,
        &Restriction::default(),
        "point 0",
        point_limit(&driver, start),
        None,
    )? {
        Outcome::Solved(s) => s,
        _ => return Ok(solver.finish(points, start)),
    };
    points.push(solver.point(&first));
    solver.after_first_point();
    let mut prev = first;

    while prev.cost >= step && !total_exhausted(&driver, start) {
        let eps = prev.cost - step;
        let label = format!("point {}", points.len());
        let budget = point_limit(&driver, start);
        let t0 = Instant::now();
        let cap = Restriction { cost_cap: Some(eps), ..Restriction::default() };
        let mut best: Option<Solved> = None;
        let consider = |s: Solved, best: &mut Option<Solved>| {
            let better = best.as_ref().map_or(true, |b| {
                s.risk < b.risk - RISK_TOL || (s.risk <= b.risk + RISK_TOL && s.cost < b.cost)
            });
            if better {
                *best = Some(s);
            }
        };

        // (a) relaxation-induced fixing
        let relaxed = {
            let mut f = solver.restricted(&cap)?;
            if let Some(family) = &solver.cuts {
                for row in solver.pool.rows(family)? {
                    f.model.add_constraint(row)?;
                }
            }
            solve_lp(&f.model.relaxed())
        };
        let mut fixed_ok = false;
        if relaxed.status == SolveStatus::Optimal {
            let mut fix = BTreeMap::new();
            for (j, &v) in solver.base.y.iter().enumerate() {
                let prev_v = prev.open[j] as u8 as f64;
                if (relaxed.values[v.0] - prev_v).abs() <= 1e-6 {
                    fix.insert(v, prev_v);
                }
            }
            let r = Restriction { fix, ..cap.clone() };
            match solver.lexmin(Goal::Risk, &r, &format!("{label} fixing"), share(budget, 0.4), None)? {
                Outcome::Solved(s) => {
                    fixed_ok = s.proven;
                    consider(s, &mut best);
                }
                Outcome::Infeasible | Outcome::NoSolution | Outcome::Failed => {}
            }
        }
        // (b) local branching around the previous point
        if !fixed_ok {
            let center: Vec<(VarId, f64)> =
                solver.base.y.iter().zip(&prev.open).map(|(&v, &o)| (v, o as u8 as f64)).collect();
            let r = Restriction { ball: Some((center, opts.kappa)), ..cap.clone() };
            let limit = remaining(budget, t0).map(|l| l.mul_f64(0.5));
            let seed = best.as_ref().map(|b| b.values.clone());
            match solver.lexmin(Goal::Risk, &r, &format!("{label} ball"), limit, seed)? {
                Outcome::Solved(s) => consider(s, &mut best),
                Outcome::Infeasible | Outcome::NoSolution | Outcome::Failed => {}
            }
        }
        // (c) unrestricted solve, seeded
        let seed = best.as_ref().map(|b| b.values.clone());
        let left = remaining(budget, t0);
        let final_solve = if left.is_some_and(|l| l.is_zero()) {
            None
        } else {
            match solver.lexmin(Goal::Risk, &cap, &format!("{label} full"), left, seed)? {
                Outcome::Solved(s) => Some(s),
                Outcome::Infeasible => break,
                Outcome::NoSolution | Outcome::Failed => None,
            }
        };
        let chosen = match final_solve {
            Some(s) if s.proven => s,
            Some(s) => {
                consider(s, &mut best);
                let mut b = best.take().expect("a candidate was just added");
                b.proven = false;
                b
            }
            None => match best.take() {
                Some(mut b) => {
                    b.proven = false;
                    b
                }
                None => break,
            },
        };
        let p = solver.point(&chosen);
        info!("{label}: cost {} risk {:.6} ({:?})", p.cost, p.risk, p.provenance);
        points.push(p);
        prev = chosen;
    }
    solver.stats.truncated |= prev.cost >= step && total_exhausted(&driver, start);
    Ok(solver.finish(points, start))
}

/// Replaces every point's risk with the exact CVaR of its opening decision.
pub fn reevaluate_frontier(
    frontier: &Frontier,
    instance: &Instance,
    scenarios: &ScenarioSet,
    risk: RiskSpec,
) -> Result<Frontier> {
    if risk.n() != scenarios.len() {
        return Err(invalid("risk spec does not match the scenario set"));
    }
    let points = frontier
        .points()
        .iter()
        .map(|p| {
            let first = FirstStageSolution::new(instance, p.open.clone())?;
            let unc: Vec<f64> = evaluate_uncovered_vector(instance, scenarios, &first)?
                .into_iter()
                .map(|u| u as f64)
                .collect();
            Ok(FrontierPoint {
                cost: first.cost,
                risk: cvar_topk(&unc, risk.k())?,
                open: p.open.clone(),
                provenance: Provenance::ReEvaluated,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Frontier::from_points(points))
}

/// Exact risk of an opening decision under a family's risk measure.
pub fn exact_risk(
    family: ModelFamily,
    instance: &Instance,
    scenarios: &ScenarioSet,
    risk: RiskSpec,
    open: &[bool],
) -> Result<f64> {
    let first = FirstStageSolution::new(instance, open.to_vec())?;
    let unc: Vec<f64> =
        evaluate_uncovered_vector(instance, scenarios, &first)?.into_iter().map(|u| u as f64).collect();
    match family {
        ModelFamily::Expected => Ok(unc.iter().sum::<f64>() / unc.len() as f64),
        ModelFamily::WorstCase => Ok(unc.iter().cloned().fold(0.0, f64::max)),
        _ => cvar_topk(&unc, risk.k()),
    }
}
