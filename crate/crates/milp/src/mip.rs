//! Branch-and-bound over the simplex relaxation, with a lazy-constraint
//! channel.
//!
//! Integer-feasible candidates are offered to an optional [`LazySeparator`]
//! before they may become the incumbent. Rows it returns are appended to the
//! relaxation globally and stay valid at every node.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::error::{MilpError, Result};
use crate::lp::{LpEngine, LpOutcome};
use crate::model::{Constraint, MilpModel, ObjSense, Sense, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimitFeasible,
    TimeLimitNoSolution,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::TimeLimitFeasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::TimeLimitFeasible => "time-limit-feasible",
            SolveStatus::TimeLimitNoSolution => "time-limit-no-solution",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective of the incumbent in the model's own sense; NaN without one.
    pub objective: f64,
    /// Incumbent assignment indexed by [`crate::VarId`]; empty without one.
    pub values: Vec<f64>,
    /// Best proven dual bound in the model's sense.
    pub bound: f64,
    pub cuts_added: usize,
    /// Rows accepted from the separator, in the order they were added.
    pub cuts: Vec<Constraint>,
    pub separator_calls: usize,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl SolveResult {
    fn empty(status: SolveStatus, bound: f64) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            bound,
            cuts_added: 0,
            cuts: Vec::new(),
            separator_calls: 0,
            nodes: 0,
            lp_iterations: 0,
        }
    }

    pub fn value(&self, var: crate::VarId) -> f64 {
        self.values[var.0]
    }
}

/// Verdict of a lazy separator on an integer-feasible candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Accept,
    Cut(Constraint),
}

/// Decides whether an integer-feasible candidate may become the incumbent.
///
/// A returned row must be violated by the candidate by more than the
/// feasibility tolerance. The separator must eventually accept every
/// candidate stream, which holds whenever its row family is finite.
pub trait LazySeparator {
    fn separate(&mut self, values: &[f64]) -> Separation;
}

impl<F> LazySeparator for F
where
    F: FnMut(&[f64]) -> Separation,
{
    fn separate(&mut self, values: &[f64]) -> Separation {
        self(values)
    }
}

/// Solves the rest of the problem once the leading variables are fixed.
///
/// Variables whose branch priority is at least [`leading_priority`] are
/// *leading*. When every leading variable is integral in a node's
/// relaxation, the search asks for a completion: values of all other
/// integer variables. The search fixes them, re-optimizes the continuous
/// variables and treats the result as a candidate. The implementor
/// guarantees that, with the continuous part re-optimized, no solution
/// sharing the leading values is better than its completion, and that
/// `None` means no such solution exists. Branching is then restricted to the
/// leading variables.
///
/// [`leading_priority`]: NodeCompletion::leading_priority
pub trait NodeCompletion {
    fn leading_priority(&self) -> i32;
    fn complete(&mut self, values: &[f64]) -> Option<Vec<f64>>;
}

#[derive(Debug, Clone)]
pub struct MipOptions {
    pub time_limit: Option<Duration>,
    pub integrality_tol: f64,
    pub feasibility_tol: f64,
    pub relative_gap: f64,
    pub absolute_gap: f64,
    /// A full assignment to try as the first incumbent.
    pub initial_solution: Option<Vec<f64>>,
    pub node_limit: Option<usize>,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self {
            time_limit: None,
            integrality_tol: 1e-6,
            feasibility_tol: 1e-7,
            relative_gap: 1e-6,
            absolute_gap: 1e-9,
            initial_solution: None,
            node_limit: None,
        }
    }
}

impl MipOptions {
    pub fn with_time_limit(time_limit: Option<Duration>) -> Self {
        Self { time_limit, ..Self::default() }
    }
}

/// Solves the continuous relaxation of `model`.
pub fn solve_lp(model: &MilpModel) -> SolveResult {
    solve_lp_with_deadline(model, None)
}

fn solve_lp_with_deadline(model: &MilpModel, deadline: Option<Instant>) -> SolveResult {
    let mut lp = LpEngine::new(model);
    let outcome = lp.solve(deadline);
    let mut res = match outcome {
        LpOutcome::Optimal => {
            let obj = lp.objective();
            SolveResult { objective: obj, values: lp.values(), ..SolveResult::empty(SolveStatus::Optimal, obj) }
        }
        LpOutcome::Infeasible => SolveResult::empty(SolveStatus::Infeasible, f64::NAN),
        LpOutcome::Unbounded => SolveResult::empty(SolveStatus::Unbounded, f64::NAN),
        LpOutcome::TimeLimit | LpOutcome::Stalled => {
            SolveResult::empty(SolveStatus::TimeLimitNoSolution, f64::NAN)
        }
    };
    res.lp_iterations = lp.iterations;
    res
}

/// Convenience wrapper around [`solve_mip_with`] using default tolerances.
pub fn solve_mip(
    model: &MilpModel,
    time_limit: Option<Duration>,
    separator: Option<&mut dyn LazySeparator>,
) -> Result<SolveResult> {
    solve_mip_with(model, &MipOptions::with_time_limit(time_limit), separator)
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    id: usize,
    depth: usize,
    changes: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: invert so the lowest bound pops first,
    // older nodes before younger ones on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    opts: &'a MipOptions,
    lp: LpEngine,
    /// Integral variables grouped by branching preference.
    groups: Vec<Vec<usize>>,
    cuts: Vec<Constraint>,
    separator_calls: usize,
    incumbent: Option<(f64, Vec<f64>)>,
    applied: Vec<usize>,
    /// Integer variables fixed by a completion.
    trailing: Vec<usize>,
    leading: Vec<usize>,
    /// Objective of each completed leading assignment; infinite when none
    /// exists.
    completed: HashMap<Vec<i64>, f64>,
    /// +1 to minimize, -1 to maximize.
    sign: f64,
}

impl<'a> Search<'a> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((obj, _)) => obj - self.gap(*obj),
            None => f64::INFINITY,
        }
    }

    fn gap(&self, obj: f64) -> f64 {
        self.opts.absolute_gap.max(self.opts.relative_gap * obj.abs())
    }

    fn apply_node(&mut self, node: &Node) {
        for &j in &self.applied {
            let v = &self.model.vars()[j];
            self.lp.set_bounds(j, v.lower, v.upper);
        }
        self.applied.clear();
        for &(j, lo, hi) in &node.changes {
            self.lp.set_bounds(j, lo, hi);
            self.applied.push(j);
        }
    }

    fn rebuild_lp(&mut self, node: &Node) {
        let mut lp = LpEngine::new(self.model);
        for c in &self.cuts {
            lp.add_row(&c.terms.iter().map(|&(v, a)| (v.0, a)).collect::<Vec<_>>(), c.sense, c.rhs);
        }
        self.lp = lp;
        self.applied.clear();
        self.apply_node(node);
    }

    fn branching_candidate(&self) -> Option<(usize, f64)> {
        let tol = self.opts.integrality_tol;
        for set in &self.groups {
            let mut best: Option<(usize, f64, f64)> = None;
            for &j in set.iter() {
                let v = self.lp.value(j);
                let frac = v - v.floor();
                let dist = frac.min(1.0 - frac);
                if dist > tol && best.map_or(true, |(_, _, d)| dist > d + 1e-12) {
                    best = Some((j, v, dist));
                }
            }
            if let Some((j, v, _)) = best {
                return Some((j, v));
            }
        }
        None
    }

    fn rounded_values(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.model.vars())
            .map(|(&x, v)| if v.kind.is_integral() { x.round() } else { x })
            .collect()
    }

    /// Completes the current node: fixes every integer (leading ones at their
    /// relaxation values, the others from `completion`), optimizes the
    /// continuous variables in a reduced LP and offers the result. Returns
    /// the completed objective, infinite when no completion exists, or `None`
    /// on the time limit.
    fn complete(
        &mut self,
        node: &Node,
        completion: &mut dyn NodeCompletion,
        separator: &mut Option<&mut dyn LazySeparator>,
        deadline: Option<Instant>,
    ) -> Result<Option<f64>> {
        let relaxed = self.lp.values();
        let Some(vals) = completion.complete(&relaxed) else {
            return Ok(Some(f64::INFINITY));
        };
        let n = self.model.num_vars();
        if vals.len() != n {
            return Err(MilpError::InvalidArgument(format!("completion has {} values for {n} variables", vals.len())));
        }
        let mut full = relaxed;
        for &j in &self.leading {
            full[j] = full[j].round();
        }
        for &j in &self.trailing {
            let v = &self.model.vars()[j];
            let x = vals[j].round();
            if x < v.lower || x > v.upper {
                return Err(MilpError::InvalidArgument(format!(
                    "completion sets {} to {x}, outside [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            full[j] = x;
        }
        // reduced LP over the continuous variables
        let mut map = vec![usize::MAX; n];
        let mut reduced = MilpModel::new();
        let mut cont = Vec::new();
        for (j, v) in self.model.vars().iter().enumerate() {
            if !v.kind.is_integral() {
                map[j] = reduced.add_continuous(v.name.clone(), v.lower, v.upper)?.0;
                cont.push(j);
            }
        }
        let tol = self.opts.feasibility_tol;
        let reduce = |reduced: &mut MilpModel, c: &Constraint, full: &[f64]| -> Result<bool> {
            let mut fixed = 0.0;
            let mut terms = Vec::new();
            for &(v, a) in &c.terms {
                if map[v.0] == usize::MAX {
                    fixed += a * full[v.0];
                } else {
                    terms.push((crate::VarId(map[v.0]), a));
                }
            }
            if terms.is_empty() {
                let slack = match c.sense {
                    Sense::Le => c.rhs - fixed,
                    Sense::Ge => fixed - c.rhs,
                    Sense::Eq => -(fixed - c.rhs).abs(),
                };
                return Ok(slack >= -tol.max(1e-9 * c.rhs.abs()));
            }
            reduced.add_row(c.name.clone(), terms, c.sense, c.rhs - fixed)?;
            Ok(true)
        };
        for c in self.model.constraints().iter().chain(&self.cuts) {
            if !reduce(&mut reduced, c, &full)? {
                return Ok(Some(f64::INFINITY));
            }
        }
        let obj = &self.model.objective().expr;
        let mut expr = crate::LinExpr::new().with_constant(obj.constant);
        for &(v, a) in &obj.terms {
            if map[v.0] == usize::MAX {
                expr.constant += a * full[v.0];
            } else {
                expr.add_term(crate::VarId(map[v.0]), a);
            }
        }
        reduced.set_objective(self.model.objective().sense, expr)?;
        loop {
            let res = solve_lp_with_deadline(&reduced, deadline);
            match res.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => return Ok(Some(f64::INFINITY)),
                SolveStatus::Unbounded => {
                    return Err(MilpError::InvalidArgument("completed relaxation is unbounded".into()))
                }
                _ => return Ok(None),
            }
            for (k, &j) in cont.iter().enumerate() {
                full[j] = res.values[k];
            }
            let obj = self.sign * self.model.objective_value(&full);
            if obj >= self.cutoff() {
                return Ok(Some(obj));
            }
            if self.offer(&full, separator)? {
                if self.incumbent.as_ref().map_or(true, |(inc, _)| obj < *inc) {
                    debug!("incumbent {obj} from completion at node {}", node.id);
                    self.incumbent = Some((obj, full));
                }
                return Ok(Some(obj));
            }
            let cut = self.cuts.last().expect("offer added a cut").clone();
            if !reduce(&mut reduced, &cut, &full)? {
                return Ok(Some(f64::INFINITY));
            }
        }
    }

    /// Offers a candidate to the separator; returns true when accepted.
    fn offer(&mut self, values: &[f64], separator: &mut Option<&mut dyn LazySeparator>) -> Result<bool> {
        let Some(sep) = separator.as_mut() else {
            return Ok(true);
        };
        self.separator_calls += 1;
        match sep.separate(values) {
            Separation::Accept => Ok(true),
            Separation::Cut(row) => {
                if row.violation(values) <= self.opts.feasibility_tol {
                    return Err(MilpError::NonViolatedCut(row.name));
                }
                let terms: Vec<(usize, f64)> = row.terms.iter().map(|&(v, a)| (v.0, a)).collect();
                for &(v, _) in &terms {
                    if v >= self.model.num_vars() {
                        return Err(MilpError::UnknownVariable { owner: row.name.clone(), var: v });
                    }
                }
                self.lp.add_row(&terms, row.sense, row.rhs);
                debug!("lazy cut {} added ({} total)", row.name, self.cuts.len() + 1);
                self.cuts.push(row);
                Ok(false)
            }
        }
    }
}

/// Solves `model` by LP-based branch-and-bound.
///
/// Branches on the most fractional binary (then general integer), lowest
/// index on ties; nodes are selected best-bound first with depth-first
/// plunging. On a time limit the best incumbent and bound are returned
/// rather than an error.
pub fn solve_mip_with(
    model: &MilpModel,
    opts: &MipOptions,
    separator: Option<&mut dyn LazySeparator>,
) -> Result<SolveResult> {
    solve_mip_full(model, opts, separator, None)
}

/// [`solve_mip_with`] with an optional [`NodeCompletion`].
pub fn solve_mip_full(
    model: &MilpModel,
    opts: &MipOptions,
    mut separator: Option<&mut dyn LazySeparator>,
    mut completion: Option<&mut dyn NodeCompletion>,
) -> Result<SolveResult> {
    let start = Instant::now();
    let deadline = opts.time_limit.map(|t| start + t);
    let sign = match model.objective().sense {
        ObjSense::Minimize => 1.0,
        ObjSense::Maximize => -1.0,
    };
    let lead_from = completion.as_ref().map(|c| c.leading_priority());
    let is_leading = |j: usize| lead_from.map_or(true, |p| model.branch_priority(crate::VarId(j)) >= p);
    let integral: Vec<usize> = (0..model.num_vars()).filter(|&j| model.vars()[j].kind.is_integral()).collect();
    let leading: Vec<usize> = integral.iter().copied().filter(|&j| is_leading(j)).collect();
    let trailing: Vec<usize> = integral.iter().copied().filter(|&j| !is_leading(j)).collect();
    // higher priority first; within a priority binaries before general integers
    let mut keyed: Vec<(i32, bool, usize)> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|&(j, v)| v.kind.is_integral() && is_leading(j))
        .map(|(j, v)| (-model.branch_priority(crate::VarId(j)), v.kind != VarKind::Binary, j))
        .collect();
    keyed.sort();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last_key = None;
    for (p, int, j) in keyed {
        if last_key != Some((p, int)) {
            groups.push(Vec::new());
            last_key = Some((p, int));
        }
        groups.last_mut().expect("pushed").push(j);
    }

    let mut search = Search {
        model,
        opts,
        lp: LpEngine::new(model),
        groups,
        cuts: Vec::new(),
        separator_calls: 0,
        incumbent: None,
        applied: Vec::new(),
        trailing,
        leading,
        completed: HashMap::new(),
        sign,
    };

    if let Some(init) = &opts.initial_solution {
        if init.len() == model.num_vars() {
            let values = search.rounded_values(init);
            let integral = model
                .vars()
                .iter()
                .zip(init)
                .all(|(v, &x)| !v.kind.is_integral() || (x - x.round()).abs() <= opts.integrality_tol);
            if integral && model.max_violation(&values) <= 1e-6 && search.offer(&values, &mut separator)? {
                let obj = sign * model.objective_value(&values);
                search.incumbent = Some((obj, values));
            }
        }
    }

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id = 1usize;
    let mut current = Some(Node { bound: f64::NEG_INFINITY, id: 0, depth: 0, changes: Vec::new() });
    let mut nodes = 0usize;
    let mut pruned_bound = f64::INFINITY;
    let mut timed_out = false;
    let mut unbounded = false;
    let mut rebuilt_for: Option<usize> = None;

    'outer: loop {
        let node = match current.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => {
                    if n.bound >= search.cutoff() {
                        pruned_bound = pruned_bound.min(n.bound);
                        for rest in heap.drain() {
                            pruned_bound = pruned_bound.min(rest.bound);
                        }
                        break;
                    }
                    n
                }
                None => break,
            },
        };
        if let Some(d) = deadline {
            if Instant::now() >= d {
                heap.push(node);
                timed_out = true;
                break;
            }
        }
        if opts.node_limit.is_some_and(|lim| nodes >= lim) {
            heap.push(node);
            timed_out = true;
            break;
        }
        nodes += 1;
        search.apply_node(&node);

        loop {
            match search.lp.solve(deadline) {
                LpOutcome::Optimal => {}
                LpOutcome::Infeasible => continue 'outer,
                LpOutcome::Unbounded => {
                    if node.depth == 0 && search.incumbent.is_none() {
                        unbounded = true;
                        break 'outer;
                    }
                    warn!("unbounded relaxation at node {}; node dropped", node.id);
                    continue 'outer;
                }
                LpOutcome::TimeLimit => {
                    heap.push(node);
                    timed_out = true;
                    break 'outer;
                }
                LpOutcome::Stalled => {
                    if rebuilt_for == Some(node.id) {
                        warn!("simplex stalled twice at node {}; node dropped", node.id);
                        continue 'outer;
                    }
                    rebuilt_for = Some(node.id);
                    search.rebuild_lp(&node);
                    continue;
                }
            }
            let obj = search.lp.min_objective();
            if obj >= search.cutoff() {
                pruned_bound = pruned_bound.min(obj);
                continue 'outer;
            }
            match search.branching_candidate() {
                None if completion.is_some() => {
                    let comp = completion.as_deref_mut().expect("checked");
                    let key: Vec<i64> = search.leading.iter().map(|&j| search.lp.value(j).round() as i64).collect();
                    let value = match search.completed.get(&key) {
                        Some(&v) => v,
                        None => match search.complete(&node, comp, &mut separator, deadline)? {
                            Some(v) => {
                                search.completed.insert(key.clone(), v);
                                v
                            }
                            None => {
                                heap.push(node);
                                timed_out = true;
                                break 'outer;
                            }
                        },
                    };
                    let unfixed = search.leading.iter().position(|&j| {
                        let (lo, hi) = search.lp.bounds(j);
                        lo < hi
                    });
                    let Some(p) = unfixed else {
                        pruned_bound = pruned_bound.min(value);
                        continue 'outer;
                    };
                    // branch on an integral leading variable, keeping its
                    // current value in the first child
                    let j = search.leading[p];
                    let v = key[p] as f64;
                    let (lo, hi) = search.lp.bounds(j);
                    let (a, b) = if v < hi { ((lo, v), (v + 1.0, hi)) } else { ((v, hi), (lo, v - 1.0)) };
                    let mut first = node.changes.clone();
                    first.push((j, a.0, a.1));
                    let mut second = node.changes;
                    second.push((j, b.0, b.1));
                    heap.push(Node { bound: obj, id: next_id + 1, depth: node.depth + 1, changes: second });
                    current = Some(Node { bound: obj, id: next_id, depth: node.depth + 1, changes: first });
                    next_id += 2;
                    continue 'outer;
                }
                None => {
                    let values = search.rounded_values(&search.lp.values());
                    if search.offer(&values, &mut separator)? {
                        if search.incumbent.as_ref().map_or(true, |(inc, _)| obj < *inc) {
                            debug!("incumbent {obj} at node {}", node.id);
                            search.incumbent = Some((obj, values));
                        }
                        continue 'outer;
                    }
                    // Cut added; re-solve this node.
                }
                Some((j, v)) => {
                    let (lo, hi) = search.lp.bounds(j);
                    let mut down = node.changes.clone();
                    down.push((j, lo, v.floor()));
                    let mut up = node.changes;
                    up.push((j, v.ceil(), hi));
                    let down = Node { bound: obj, id: next_id, depth: node.depth + 1, changes: down };
                    let up = Node { bound: obj, id: next_id + 1, depth: node.depth + 1, changes: up };
                    next_id += 2;
                    let (first, second) = if v - v.floor() >= 0.5 { (up, down) } else { (down, up) };
                    heap.push(second);
                    current = Some(first);
                    continue 'outer;
                }
            }
        }
    }

    let lp_iterations = search.lp.iterations;
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let cuts_added = search.cuts.len();
    let finish = |status: SolveStatus, objective: f64, values: Vec<f64>, bound: f64| SolveResult {
        status,
        objective,
        values,
        bound,
        cuts_added,
        cuts: search.cuts.clone(),
        separator_calls: search.separator_calls,
        nodes,
        lp_iterations,
    };

    if unbounded {
        return Ok(finish(SolveStatus::Unbounded, f64::NAN, Vec::new(), f64::NAN));
    }
    match search.incumbent.clone() {
        Some((obj, values)) => {
            let objective = sign * obj;
            if timed_out {
                let b = open_bound.min(pruned_bound).min(obj);
                Ok(finish(SolveStatus::TimeLimitFeasible, objective, values, sign * b))
            } else {
                let b = pruned_bound.min(obj);
                Ok(finish(SolveStatus::Optimal, objective, values, sign * b))
            }
        }
        None => {
            if timed_out {
                let b = open_bound.min(pruned_bound);
                Ok(finish(SolveStatus::TimeLimitNoSolution, f64::NAN, Vec::new(), sign * b))
            } else {
                Ok(finish(SolveStatus::Infeasible, f64::NAN, Vec::new(), f64::NAN))
            }
        }
    }
}
