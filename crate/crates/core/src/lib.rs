//! Solving non-linear constrained Horn clauses with a linear solver.
//!
//! A program `P` is under-approximated by its at-most-`k`-dimension program
//! (derivation trees of tree dimension at most `k`), which is linear for
//! `k = 0`. Each level is solved by a polyhedral fixpoint engine; the model,
//! with dimension indices erased, is checked for inductiveness against `P`,
//! and otherwise plugged into level `k + 1` to linearize it.

pub mod chc;
pub mod dimension;
pub mod driver;
pub mod kdim;
pub mod linconstr;
pub mod linsolve;
pub mod model;

pub use chc::{parse_program, Program};
pub use driver::{solve, Config, SolveOutcome, SolveStatus};
