//! Exact rational linear constraints and the convex polyhedra domain.
//!
//! All arithmetic is over [`Rat`] (arbitrary precision). Variables of CHC
//! programs are integer-valued; the `*_integral` variants exploit that by
//! tightening strict and fractional bounds, and are what the solver uses.
//! The plain operations decide the rational relaxation exactly.

mod expr;
pub(crate) mod fm;
pub(crate) mod lp;
mod polyhedron;

pub use expr::{rat, vars_of, Constraint, LinExpr, Rat, Rel, Triviality, Var};
pub use polyhedron::{Feasibility, Polyhedron};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("variable {0} is not a dimension of the polyhedron")]
    UnknownVariable(Var),
}
