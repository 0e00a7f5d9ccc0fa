//! Model representation: variables, linear rows and an objective.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{MilpError, Result};

/// Index of a variable inside a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

/// A sparse linear expression `sum(coef * var) + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<(VarId, f64)>) -> Self {
        Self { terms, constant: 0.0 }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) -> &mut Self {
        self.terms.push((var, coef));
        self
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    /// Evaluates the expression at a full assignment.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.0])
                .sum::<f64>()
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn compact(&self) -> LinExpr {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *merged.entry(v).or_insert(0.0) += c;
        }
        LinExpr {
            terms: merged.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            constant: self.constant,
        }
    }
}

/// A linear row `terms (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { name: name.into(), terms, sense, rhs }
    }

    /// Builds `expr (sense) rhs`, moving the expression constant to the right-hand side.
    pub fn from_expr(name: impl Into<String>, expr: &LinExpr, sense: Sense, rhs: f64) -> Self {
        let compact = expr.compact();
        Self::new(name, compact.terms, sense, rhs - compact.constant)
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    pub expr: LinExpr,
}

impl Default for Objective {
    fn default() -> Self {
        Self { sense: ObjSense::Minimize, expr: LinExpr::new() }
    }
}

/// A mixed-integer linear program.
///
/// Built append-only: variables and rows are added through the checked
/// `add_*` methods, which validate bounds and variable references.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    priority: Vec<i32>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvalidArgument(format!(
                "variable {name}: invalid bounds [{lower}, {upper}]"
            )));
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(MilpError::InvalidArgument(format!(
                "binary variable {name}: bounds [{lower}, {upper}] not within [0, 1]"
            )));
        }
        let id = VarId(self.vars.len());
        self.vars.push(Variable { name, lower, upper, kind });
        self.priority.push(0);
        Ok(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable { name: name.into(), lower: 0.0, upper: 1.0, kind: VarKind::Binary });
        self.priority.push(0);
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_var(name, lower, upper, VarKind::Integer)
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<usize> {
        self.check_terms(&constraint.name, &constraint.terms)?;
        if !constraint.rhs.is_finite() {
            return Err(MilpError::InvalidArgument(format!(
                "constraint {}: non-finite right-hand side",
                constraint.name
            )));
        }
        self.constraints.push(constraint);
        Ok(self.constraints.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize> {
        self.add_constraint(Constraint::new(name, terms, sense, rhs))
    }

    pub fn set_objective(&mut self, sense: ObjSense, expr: LinExpr) -> Result<()> {
        self.check_terms("objective", &expr.terms)?;
        self.objective = Objective { sense, expr };
        Ok(())
    }

    fn check_terms(&self, owner: &str, terms: &[(VarId, f64)]) -> Result<()> {
        for &(v, c) in terms {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVariable { owner: owner.to_string(), var: v.0 });
            }
            if !c.is_finite() {
                return Err(MilpError::InvalidArgument(format!(
                    "{owner}: non-finite coefficient on {}",
                    self.vars[v.0].name
                )));
            }
        }
        Ok(())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Overwrites the bounds of one variable.
    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<()> {
        let var = self
            .vars
            .get_mut(id.0)
            .ok_or_else(|| MilpError::UnknownVariable { owner: "set_bounds".into(), var: id.0 })?;
        if lower > upper {
            return Err(MilpError::InvalidArgument(format!(
                "variable {}: invalid bounds [{lower}, {upper}]",
                var.name
            )));
        }
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }

    /// Sets the branching priority of a variable (default 0). Fractional
    /// variables of a higher priority are branched on first.
    pub fn set_branch_priority(&mut self, id: VarId, priority: i32) -> Result<()> {
        let p = self
            .priority
            .get_mut(id.0)
            .ok_or_else(|| MilpError::UnknownVariable { owner: "branch priority".into(), var: id.0 })?;
        *p = priority;
        Ok(())
    }

    pub fn branch_priority(&self, id: VarId) -> i32 {
        self.priority[id.0]
    }

    /// Overwrites the right-hand side of row `row`.
    pub fn set_rhs(&mut self, row: usize, rhs: f64) -> Result<()> {
        if !rhs.is_finite() {
            return Err(MilpError::InvalidArgument(format!("row {row}: non-finite rhs {rhs}")));
        }
        let c = self
            .constraints
            .get_mut(row)
            .ok_or_else(|| MilpError::InvalidArgument(format!("row {row} does not exist")))?;
        c.rhs = rhs;
        Ok(())
    }

    /// Copy of the model with every integrality mark dropped.
    pub fn relaxed(&self) -> MilpModel {
        let mut out = self.clone();
        for v in &mut out.vars {
            v.kind = VarKind::Continuous;
        }
        out
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.kind.is_integral())
    }

    /// Returns a copy in which every listed variable has `lower = upper = value`.
    pub fn fix_variables(&self, fixings: &BTreeMap<VarId, f64>) -> Result<MilpModel> {
        let mut out = self.clone();
        for (&id, &value) in fixings {
            let var = out
                .vars
                .get_mut(id.0)
                .ok_or_else(|| MilpError::UnknownVariable { owner: "fixing".into(), var: id.0 })?;
            if value < var.lower - 1e-9 || value > var.upper + 1e-9 {
                return Err(MilpError::InvalidArgument(format!(
                    "cannot fix {} to {value}: outside [{}, {}]",
                    var.name, var.lower, var.upper
                )));
            }
            if var.kind.is_integral() && (value - value.round()).abs() > 1e-9 {
                return Err(MilpError::InvalidArgument(format!(
                    "cannot fix integer variable {} to fractional value {value}",
                    var.name
                )));
            }
            let value = if var.kind.is_integral() { value.round() } else { value };
            var.lower = value;
            var.upper = value;
        }
        Ok(out)
    }

    /// Returns a copy with the local-branching row
    /// `sum_{c_j = 0} y_j + sum_{c_j = 1} (1 - y_j) <= radius` appended.
    pub fn add_local_branching(&self, center: &[(VarId, f64)], radius: usize) -> Result<MilpModel> {
        let mut terms = Vec::with_capacity(center.len());
        let mut ones = 0.0;
        for &(id, value) in center {
            let var = self
                .vars
                .get(id.0)
                .ok_or_else(|| MilpError::UnknownVariable { owner: "local branching".into(), var: id.0 })?;
            if var.kind != VarKind::Binary {
                return Err(MilpError::InvalidArgument(format!(
                    "local branching center references non-binary variable {}",
                    var.name
                )));
            }
            if value == 0.0 {
                terms.push((id, 1.0));
            } else if value == 1.0 {
                terms.push((id, -1.0));
                ones += 1.0;
            } else {
                return Err(MilpError::InvalidArgument(format!(
                    "local branching center value {value} for {} is not binary",
                    var.name
                )));
            }
        }
        let mut out = self.clone();
        out.add_row("local_branching", terms, Sense::Le, radius as f64 - ones)?;
        Ok(out)
    }

    /// Largest row violation and bound violation of an assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.expr.eval(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_binaries() -> (MilpModel, Vec<VarId>) {
        let mut m = MilpModel::new();
        let ids = (0..3).map(|j| m.add_binary(format!("y{j}"))).collect();
        (m, ids)
    }

    #[test]
    fn binary_bounds_are_checked() {
        let mut m = MilpModel::new();
        assert!(m.add_var("b", 0.0, 2.0, VarKind::Binary).is_err());
        assert!(m.add_var("c", 3.0, 2.0, VarKind::Continuous).is_err());
    }

    #[test]
    fn rows_must_reference_existing_variables() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        assert!(m.add_row("ok", vec![(x, 1.0)], Sense::Le, 1.0).is_ok());
        let err = m.add_row("bad", vec![(VarId(7), 1.0)], Sense::Le, 1.0).unwrap_err();
        assert!(matches!(err, MilpError::UnknownVariable { var: 7, .. }));
    }

    #[test]
    fn fixing_sets_both_bounds_and_leaves_original_alone() {
        let (m, ids) = three_binaries();
        let fixed = m.fix_variables(&BTreeMap::from([(ids[0], 1.0)])).unwrap();
        assert_eq!(fixed.var(ids[0]).lower, 1.0);
        assert_eq!(fixed.var(ids[0]).upper, 1.0);
        assert_eq!(m.var(ids[0]).lower, 0.0);
        assert_eq!(m.fix_variables(&BTreeMap::new()).unwrap(), m);
    }

    #[test]
    fn fixing_out_of_bounds_is_rejected() {
        let (m, ids) = three_binaries();
        assert!(m.fix_variables(&BTreeMap::from([(ids[1], 2.0)])).is_err());
        assert!(m.fix_variables(&BTreeMap::from([(ids[1], 0.5)])).is_err());
    }

    #[test]
    fn local_branching_row_measures_hamming_distance() {
        let (m, ids) = three_binaries();
        let center = [(ids[0], 1.0), (ids[1], 0.0), (ids[2], 0.0)];
        let lb = m.add_local_branching(&center, 1).unwrap();
        let row = lb.constraints().last().unwrap();
        // (1,1,0) is at distance 1, (0,1,1) at distance 3.
        assert_eq!(row.violation(&[1.0, 1.0, 0.0]), 0.0);
        assert!(row.violation(&[0.0, 1.0, 1.0]) > 0.0);
        let exact = m.add_local_branching(&center, 0).unwrap();
        let row = exact.constraints().last().unwrap();
        assert_eq!(row.violation(&[1.0, 0.0, 0.0]), 0.0);
        assert!(row.violation(&[1.0, 1.0, 0.0]) > 0.0);
    }

    #[test]
    fn local_branching_rejects_fractional_center() {
        let (m, ids) = three_binaries();
        assert!(m.add_local_branching(&[(ids[0], 0.5)], 1).is_err());
    }
}
