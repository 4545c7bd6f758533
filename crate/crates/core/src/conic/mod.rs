//! Second-order-cone subproblems: representation, solving and assembly.

pub mod analytic;
pub mod assemble;
pub mod program;
pub mod solver;

pub use program::{Affine, ClassCounts, ConeKind, ConicProgram, ConstraintClass};
pub use solver::{certify, solve, Certificate, SolveOptions, SolveResult, SolveStatus};
