//! Bounded-variable simplex.
//!
//! Every row `i` gets a logical variable `r_i` equal to the row activity, so
//! the system is `A x - r = 0` with all right-hand sides moved into the
//! bounds of `r`. Nonbasic variables sit at a finite bound (or at zero when
//! free). The primal simplex handles cold starts; the dual simplex
//! re-optimizes after bound changes and appended rows, which keep the basis
//! dual feasible.

use std::time::Instant;

use crate::factor::Factor;
use crate::model::{MilpModel, ObjSense, Sense};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const BLAND_AFTER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VStat {
    Basic,
    Lower,
    Upper,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    /// Iteration cap reached; numerical trouble.
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LpTolerances {
    pub primal: f64,
    pub dual: f64,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self { primal: 1e-7, dual: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LpEngine {
    n_struct: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    obj_constant: f64,
    obj_sign: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    stat: Vec<VStat>,
    head: Vec<usize>,
    factor: Factor,
    tol: LpTolerances,
    pub iterations: usize,
}

impl LpEngine {
    pub fn new(model: &MilpModel) -> Self {
        let n_struct = model.num_vars();
        let obj = model.objective();
        let obj_sign = match obj.sense {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n_struct];
        for &(v, c) in &obj.expr.terms {
            cost[v.0] += obj_sign * c;
        }
        let mut lo = Vec::with_capacity(n_struct + model.num_constraints());
        let mut hi = Vec::with_capacity(n_struct + model.num_constraints());
        for v in model.vars() {
            lo.push(v.lower);
            hi.push(v.upper);
        }
        let mut engine = LpEngine {
            n_struct,
            m: 0,
            cols: vec![Vec::new(); n_struct],
            cost,
            obj_constant: obj.expr.constant,
            obj_sign,
            lo,
            hi,
            x: vec![0.0; n_struct],
            stat: vec![VStat::Lower; n_struct],
            head: Vec::new(),
            factor: Factor::default(),
            tol: LpTolerances::default(),
            iterations: 0,
        };
        for j in 0..n_struct {
            engine.place_nonbasic(j);
        }
        for c in model.constraints() {
            engine.push_row(&c.terms.iter().map(|&(v, a)| (v.0, a)).collect::<Vec<_>>(), c.sense, c.rhs);
        }
        engine.refactor();
        engine
    }

    fn push_row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let i = self.m;
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(j, a) in terms {
            match merged.iter_mut().find(|(jj, _)| *jj == j) {
                Some(e) => e.1 += a,
                None => merged.push((j, a)),
            }
        }
        for (j, a) in merged {
            if a != 0.0 {
                self.cols[j].push((i, a));
            }
        }
        let (l, h) = match sense {
            Sense::Le => (f64::NEG_INFINITY, rhs),
            Sense::Ge => (rhs, f64::INFINITY),
            Sense::Eq => (rhs, rhs),
        };
        self.lo.push(l);
        self.hi.push(h);
        self.x.push(0.0);
        self.stat.push(VStat::Basic);
        self.head.push(self.n_struct + i);
        self.m += 1;
    }

    /// Appends a row whose logical enters the basis; the basis stays dual
    /// feasible.
    pub fn add_row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        self.push_row(terms, sense, rhs);
        self.refactor();
    }

    fn place_nonbasic(&mut self, j: usize) {
        let (l, h) = (self.lo[j], self.hi[j]);
        let s = match self.stat[j] {
            VStat::Upper if h.is_finite() => VStat::Upper,
            _ if l.is_finite() => VStat::Lower,
            _ if h.is_finite() => VStat::Upper,
            _ => VStat::Zero,
        };
        self.stat[j] = s;
        self.x[j] = match s {
            VStat::Lower => l,
            VStat::Upper => h,
            _ => 0.0,
        };
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Changes the bounds of a structural variable. Basic values are
    /// recomputed lazily by the next [`LpEngine::solve`].
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        if self.stat[j] != VStat::Basic {
            self.place_nonbasic(j);
        }
    }

    fn column_into(&self, j: usize, w: &mut [f64]) {
        w.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n_struct {
            for &(i, a) in &self.cols[j] {
                w[i] = a;
            }
        } else {
            w[j - self.n_struct] = -1.0;
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n_struct {
            self.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
        } else {
            -y[j - self.n_struct]
        }
    }

    fn cost_of(&self, j: usize) -> f64 {
        if j < self.n_struct {
            self.cost[j]
        } else {
            0.0
        }
    }

    fn refactor(&mut self) {
        let r = Factor::reinvert(self.m, self.n_struct, &self.cols, &self.head);
        for &j in &r.rejected {
            self.stat[j] = VStat::Lower;
            self.place_nonbasic(j);
        }
        let mut in_head = vec![false; self.n_struct + self.m];
        for &j in &r.head {
            self.stat[j] = VStat::Basic;
            in_head[j] = true;
        }
        // Logicals pushed out by the repair (none expected) become nonbasic.
        for i in 0..self.m {
            let j = self.n_struct + i;
            if self.stat[j] == VStat::Basic && !in_head[j] {
                self.place_nonbasic(j);
            }
        }
        self.head = r.head;
        self.factor = r.factor;
        self.compute_primal();
    }

    fn compute_primal(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n_struct + self.m {
            if self.stat[j] == VStat::Basic {
                continue;
            }
            let v = self.x[j];
            if v == 0.0 {
                continue;
            }
            if j < self.n_struct {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * v;
                }
            } else {
                rhs[j - self.n_struct] += v;
            }
        }
        self.factor.ftran(&mut rhs);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    fn duals(&self, phase1: bool) -> Vec<f64> {
        let mut y: Vec<f64> = self
            .head
            .iter()
            .map(|&j| {
                if phase1 {
                    self.infeasibility_sign(j)
                } else {
                    self.cost_of(j)
                }
            })
            .collect();
        self.factor.btran(&mut y);
        y
    }

    fn infeasibility_sign(&self, j: usize) -> f64 {
        if self.x[j] < self.lo[j] - self.tol.primal {
            -1.0
        } else if self.x[j] > self.hi[j] + self.tol.primal {
            1.0
        } else {
            0.0
        }
    }

    fn primal_infeasibility(&self, j: usize) -> f64 {
        (self.lo[j] - self.x[j]).max(self.x[j] - self.hi[j]).max(0.0)
    }

    pub fn objective(&self) -> f64 {
        let s: f64 = (0..self.n_struct).map(|j| self.cost[j] * self.x[j]).sum();
        self.obj_sign * s + self.obj_constant
    }

    /// Objective in internal minimization form.
    pub fn min_objective(&self) -> f64 {
        self.obj_sign * self.objective()
    }

    pub fn values(&self) -> Vec<f64> {
        self.x[..self.n_struct].to_vec()
    }

    pub fn value(&self, j: usize) -> f64 {
        self.x[j]
    }

    fn is_dual_feasible_after_flips(&mut self) -> bool {
        let y = self.duals(false);
        let mut ok = true;
        let mut flipped = false;
        for j in 0..self.n_struct + self.m {
            let d = match self.stat[j] {
                VStat::Basic => continue,
                _ => self.cost_of(j) - self.col_dot(j, &y),
            };
            let bad = match self.stat[j] {
                VStat::Lower => d < -self.tol.dual && self.lo[j] < self.hi[j],
                VStat::Upper => d > self.tol.dual && self.lo[j] < self.hi[j],
                VStat::Zero => d.abs() > self.tol.dual,
                VStat::Basic => false,
            };
            if bad {
                if self.lo[j].is_finite() && self.hi[j].is_finite() {
                    if d < 0.0 {
                        self.stat[j] = VStat::Upper;
                        self.x[j] = self.hi[j];
                    } else {
                        self.stat[j] = VStat::Lower;
                        self.x[j] = self.lo[j];
                    }
                    flipped = true;
                } else {
                    ok = false;
                }
            }
        }
        if flipped {
            self.compute_primal();
        }
        ok
    }

    /// Optimizes from the current basis.
    pub fn solve(&mut self, deadline: Option<Instant>) -> LpOutcome {
        for j in 0..self.n_struct + self.m {
            if self.stat[j] != VStat::Basic {
                self.place_nonbasic(j);
            }
        }
        self.compute_primal();
        let mut attempt = 0;
        loop {
            let outcome = if self.is_dual_feasible_after_flips() {
                match self.dual_simplex(deadline) {
                    LpOutcome::Optimal => self.primal_simplex(deadline, false),
                    other => other,
                }
            } else {
                match self.primal_simplex(deadline, true) {
                    LpOutcome::Optimal => self.primal_simplex(deadline, false),
                    other => other,
                }
            };
            if outcome != LpOutcome::Optimal {
                if outcome == LpOutcome::Stalled && attempt == 0 {
                    attempt += 1;
                    self.refactor();
                    continue;
                }
                return outcome;
            }
            // Verify on a fresh factorization.
            self.refactor();
            let worst = (0..self.m).map(|p| self.primal_infeasibility(self.head[p])).fold(0.0, f64::max);
            if worst <= self.tol.primal || attempt >= 2 {
                return LpOutcome::Optimal;
            }
            attempt += 1;
        }
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.n_struct + 2 * self.m) + 10_000
    }

    fn primal_simplex(&mut self, deadline: Option<Instant>, phase1: bool) -> LpOutcome {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        let mut degenerate = 0usize;
        let cap = self.iteration_cap();
        let mut iters = 0usize;
        loop {
            if self.factor.updates() >= REFACTOR_EVERY {
                self.refactor();
            }
            iters += 1;
            if iters > cap {
                return LpOutcome::Stalled;
            }
            if iters % 64 == 0 {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return LpOutcome::TimeLimit;
                    }
                }
            }
            if phase1 && (0..m).all(|p| self.infeasibility_sign(self.head[p]) == 0.0) {
                return LpOutcome::Optimal;
            }
            let bland = degenerate >= BLAND_AFTER;
            let y = self.duals(phase1);

            let mut entering: Option<(usize, f64, f64)> = None; // (j, dir, score)
            for j in 0..self.n_struct + m {
                let st = self.stat[j];
                if st == VStat::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let c = if phase1 { 0.0 } else { self.cost_of(j) };
                let d = c - self.col_dot(j, &y);
                let dir = match st {
                    VStat::Lower if d < -self.tol.dual => 1.0,
                    VStat::Upper if d > self.tol.dual => -1.0,
                    VStat::Zero if d.abs() > self.tol.dual => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.map_or(true, |(_, _, s)| d.abs() > s) {
                    entering = Some((j, dir, d.abs()));
                }
            }
            let Some((q, dir, _)) = entering else {
                if phase1 {
                    return LpOutcome::Infeasible;
                }
                return LpOutcome::Optimal;
            };

            self.column_into(q, &mut alpha);
            self.factor.ftran(&mut alpha);

            // Ratio test: x_B changes by -dir * t * alpha.
            let mut t_best = if self.lo[q].is_finite() && self.hi[q].is_finite() {
                self.hi[q] - self.lo[q]
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, bool)> = None; // (position, to_upper)
            let mut best_piv = 0.0;
            for p in 0..m {
                let a = alpha[p];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.head[p];
                let rate = -dir * a;
                let xj = self.x[j];
                let (limit, to_upper) = if rate < 0.0 {
                    if phase1 && xj > self.hi[j] + self.tol.primal {
                        ((xj - self.hi[j]) / -rate, true)
                    } else if phase1 && xj < self.lo[j] - self.tol.primal {
                        continue;
                    } else if self.lo[j].is_finite() {
                        (((xj - self.lo[j]) / -rate).max(0.0), false)
                    } else {
                        continue;
                    }
                } else if phase1 && xj < self.lo[j] - self.tol.primal {
                    ((self.lo[j] - xj) / rate, false)
                } else if phase1 && xj > self.hi[j] + self.tol.primal {
                    continue;
                } else if self.hi[j].is_finite() {
                    (((self.hi[j] - xj) / rate).max(0.0), true)
                } else {
                    continue;
                };
                let better = if bland {
                    limit < t_best - 1e-12
                        || (limit <= t_best + 1e-12 && leave.map_or(true, |(lp, _)| j < self.head[lp]))
                } else {
                    limit < t_best - 1e-12 || (limit <= t_best + 1e-12 && a.abs() > best_piv)
                };
                if better {
                    t_best = limit;
                    leave = Some((p, to_upper));
                    best_piv = a.abs();
                }
            }
            if t_best.is_infinite() {
                return LpOutcome::Unbounded;
            }
            self.iterations += 1;
            if t_best < 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            let step = dir * t_best;
            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= step * alpha[p];
                }
            }
            self.x[q] += step;
            match leave {
                None => {
                    // Bound flip of the entering variable.
                    if dir > 0.0 {
                        self.stat[q] = VStat::Upper;
                        self.x[q] = self.hi[q];
                    } else {
                        self.stat[q] = VStat::Lower;
                        self.x[q] = self.lo[q];
                    }
                }
                Some((p, to_upper)) => {
                    let out = self.head[p];
                    if to_upper {
                        self.stat[out] = VStat::Upper;
                        self.x[out] = self.hi[out];
                    } else {
                        self.stat[out] = VStat::Lower;
                        self.x[out] = self.lo[out];
                    }
                    self.stat[q] = VStat::Basic;
                    self.head[p] = q;
                    self.factor.update(p, &alpha);
                }
            }
        }
    }

    /// Reduced costs of every variable for the current basis (zero for
    /// basic ones).
    fn reduced_costs(&self) -> Vec<f64> {
        let y = self.duals(false);
        (0..self.n_struct + self.m)
            .map(|j| if self.stat[j] == VStat::Basic { 0.0 } else { self.cost_of(j) - self.col_dot(j, &y) })
            .collect()
    }

    fn dual_simplex(&mut self, deadline: Option<Instant>) -> LpOutcome {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        let mut rho = vec![0.0; m];
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut degenerate = 0usize;
        let cap = self.iteration_cap();
        let mut iters = 0usize;
        // maintained by the dual update, refreshed on every refactorization
        let mut d = self.reduced_costs();
        loop {
            if self.factor.updates() >= REFACTOR_EVERY {
                self.refactor();
                d = self.reduced_costs();
            }
            iters += 1;
            if iters > cap {
                return LpOutcome::Stalled;
            }
            if iters % 64 == 0 {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return LpOutcome::TimeLimit;
                    }
                }
            }
            let bland = degenerate >= BLAND_AFTER;

            let mut leave: Option<(usize, f64)> = None;
            for p in 0..m {
                let inf = self.primal_infeasibility(self.head[p]);
                if inf > self.tol.primal {
                    if bland {
                        if leave.map_or(true, |(lp, _)| self.head[p] < self.head[lp]) {
                            leave = Some((p, inf));
                        }
                    } else if leave.map_or(true, |(_, s)| inf > s) {
                        leave = Some((p, inf));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return LpOutcome::Optimal;
            };
            let out = self.head[r];
            let below = self.x[out] < self.lo[out];
            let target = if below { self.lo[out] } else { self.hi[out] };

            rho.iter_mut().for_each(|v| *v = 0.0);
            rho[r] = 1.0;
            self.factor.btran(&mut rho);

            // x_r = ... - sum alpha_rj x_j; to raise x_r move x_j against alpha_rj.
            let mut enter: Option<(usize, f64, f64)> = None; // (j, ratio, |alpha|)
            row.clear();
            for j in 0..self.n_struct + m {
                let st = self.stat[j];
                if st == VStat::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let a = self.col_dot(j, &rho);
                if a != 0.0 {
                    row.push((j, a));
                }
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let sa = if below { a } else { -a };
                let eligible = match st {
                    VStat::Lower => sa < 0.0,
                    VStat::Upper => sa > 0.0,
                    VStat::Zero => true,
                    VStat::Basic => false,
                };
                if !eligible {
                    continue;
                }
                let dj = d[j];
                let dd = match st {
                    VStat::Lower => dj.max(0.0),
                    VStat::Upper => (-dj).max(0.0),
                    _ => dj.abs(),
                };
                let ratio = dd / a.abs();
                let better = match enter {
                    None => true,
                    Some((bj, br, ba)) => {
                        if bland {
                            ratio < br - 1e-12 || (ratio <= br + 1e-12 && j < bj)
                        } else {
                            ratio < br - 1e-12 || (ratio <= br + 1e-12 && a.abs() > ba)
                        }
                    }
                };
                if better {
                    enter = Some((j, ratio, a.abs()));
                }
            }
            let Some((q, ratio, _)) = enter else {
                return LpOutcome::Infeasible;
            };
            self.iterations += 1;
            if ratio < 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            self.column_into(q, &mut alpha);
            self.factor.ftran(&mut alpha);
            if alpha[r].abs() < PIVOT_TOL {
                // Row and column computations disagree; refresh and retry.
                self.refactor();
                continue;
            }
            let arq = row.iter().find(|e| e.0 == q).map_or(alpha[r], |e| e.1);
            let theta_d = d[q] / arq;
            for &(j, a) in &row {
                d[j] -= theta_d * a;
            }
            d[q] = 0.0;
            d[out] = -theta_d;
            let theta = (self.x[out] - target) / alpha[r];
            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= theta * alpha[p];
                }
            }
            self.x[q] += theta;
            self.stat[out] = if below { VStat::Lower } else { VStat::Upper };
            self.x[out] = target;
            self.stat[q] = VStat::Basic;
            self.head[r] = q;
            self.factor.update(r, &alpha);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinExpr, MilpModel, ObjSense, Sense};

    #[test]
    fn tiny_lp_from_cold_start() {
        // min -3x - 2y, x + y <= 4, x + 3y <= 6
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
        m.add_row("a", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0).unwrap();
        m.add_row("b", vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0).unwrap();
        m.set_objective(ObjSense::Minimize, LinExpr::from_terms(vec![(x, -3.0), (y, -2.0)])).unwrap();
        let mut lp = LpEngine::new(&m);
        assert_eq!(lp.solve(None), LpOutcome::Optimal);
        assert!((lp.objective() + 12.0).abs() < 1e-9);
        assert!((lp.value(0) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn bound_change_reoptimizes_with_dual_simplex() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        let y = m.add_continuous("y", 0.0, 10.0).unwrap();
        m.add_row("a", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 3.0).unwrap();
        m.set_objective(ObjSense::Minimize, LinExpr::from_terms(vec![(x, 1.0), (y, 2.0)])).unwrap();
        let mut lp = LpEngine::new(&m);
        assert_eq!(lp.solve(None), LpOutcome::Optimal);
        assert!((lp.objective() - 3.0).abs() < 1e-9);
        lp.set_bounds(0, 0.0, 1.0);
        assert_eq!(lp.solve(None), LpOutcome::Optimal);
        assert!((lp.objective() - 5.0).abs() < 1e-9);
        lp.add_row(&[(1, 1.0)], Sense::Le, 1.0);
        assert_eq!(lp.solve(None), LpOutcome::Infeasible);
    }

    #[test]
    fn equality_rows_and_free_variables() {
        // min x + y, x - y = 1, x free, y in [0, 5]
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, 5.0).unwrap();
        m.add_row("e", vec![(x, 1.0), (y, -1.0)], Sense::Eq, 1.0).unwrap();
        m.set_objective(ObjSense::Minimize, LinExpr::from_terms(vec![(x, 1.0), (y, 1.0)])).unwrap();
        let mut lp = LpEngine::new(&m);
        assert_eq!(lp.solve(None), LpOutcome::Optimal);
        assert!((lp.objective() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.set_objective(ObjSense::Maximize, LinExpr::from_terms(vec![(x, 1.0)])).unwrap();
        let mut lp = LpEngine::new(&m);
        assert_eq!(lp.solve(None), LpOutcome::Unbounded);
    }
}
