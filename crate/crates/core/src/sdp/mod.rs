//! Affine matrix expressions over named decision blocks and a dense
//! primal-dual interior-point solver for the resulting semidefinite programs.

mod expr;
mod problem;
mod solver;
mod space;

pub use expr::{evaluate, AffineMat, AffineMatrixExpr};
pub use problem::{LmiConstraint, LmiSense, SdpProblem, SdpSolution, Sense, SolveStatus};
pub use solver::{feasibility, solve, strict_margin, SdpSettings};
pub use space::{BlockKind, VarBlock, VarId, VarSpace};
