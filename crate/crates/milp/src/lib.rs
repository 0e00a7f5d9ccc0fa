//! A small mixed-integer linear programming engine.
//!
//! The relaxation is solved by a bounded-variable simplex (primal for cold
//! starts, dual for re-optimization) over a product-form basis inverse.
//! [`solve_mip`] runs LP-based branch-and-bound and accepts a
//! [`LazySeparator`] that may reject integer-feasible candidates by returning
//! a violated row.
//!
//! ```
//! use cvarloc_milp::{solve_mip, LinExpr, MilpModel, ObjSense, Sense, SolveStatus};
//!
//! let mut m = MilpModel::new();
//! let a = m.add_binary("a");
//! let b = m.add_binary("b");
//! m.add_row("cap", vec![(a, 5.0), (b, 4.0)], Sense::Le, 7.0).unwrap();
//! m.set_objective(ObjSense::Maximize, LinExpr::from_terms(vec![(a, 10.0), (b, 6.0)])).unwrap();
//! let r = solve_mip(&m, None, None).unwrap();
//! assert_eq!(r.status, SolveStatus::Optimal);
//! assert_eq!(r.objective, 10.0);
//! ```

mod error;
mod factor;
mod lp;
pub mod lp_format;
mod mip;
mod model;

pub use error::{MilpError, Result};
pub use mip::{
    solve_lp, solve_mip, solve_mip_full, solve_mip_with, LazySeparator, NodeCompletion, MipOptions, Separation, SolveResult,
    SolveStatus,
};
pub use model::{Constraint, LinExpr, MilpModel, ObjSense, Objective, Sense, VarId, VarKind, Variable};
