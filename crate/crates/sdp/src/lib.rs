//! A small dense primal-dual interior-point solver for multi-block
//! semidefinite programs.
//!
//! Problems are stated in primal standard form
//!
//! ```text
//! minimize    <C, X>
//! subject to  <A_i, X> = b_i,   i = 1..m
//!             X = (X_1, ..., X_p),  each X_k in one of
//!                 { n x n positive semidefinite, R^n_+, R^n }
//! ```
//!
//! and solved with an infeasible-start Mehrotra predictor-corrector method
//! using Nesterov-Todd scaling on the semidefinite blocks. All storage is
//! dense; the solver targets problems with a few thousand scalar unknowns at
//! most.

mod error;
mod export;
mod problem;
mod solver;

pub use error::SdpError;
pub use export::{read_triplets, write_triplets};
pub use problem::{Block, Entry, LinearForm, StandardSdp};
pub use solver::{solve, BlockValue, SdpSolution, SolveOptions, Status};
