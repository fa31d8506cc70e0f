//! Worst-case performance estimation for first-order methods.
//!
//! A method run against an unknown function (or operator, linear map, or
//! network matrix) is described symbolically with [`gram`]. The unknown
//! object is replaced by interpolation constraints from [`classes`], the
//! resulting problem is lifted to a semidefinite program and solved by
//! [`sdp`], and [`recover`] turns the optimal Gram matrix back into a
//! concrete worst-case instance and checks it.
//!
//! ```
//! use pep_forge::algos::{build_gradient_method, MethodSpec, Representation};
//! use pep_forge::sdp::solve_pep;
//!
//! let spec = MethodSpec::gradient(1, 1.0);
//! let problem = build_gradient_method(&spec, Representation::Tight).unwrap();
//! let result = solve_pep(&problem, &Default::default()).unwrap();
//! assert!((result.value - 1.0 / 6.0).abs() < 1e-6);
//! ```

pub mod algos;
pub mod classes;
pub mod commands;
mod error;
pub mod gram;
mod linalg;
pub mod recover;
pub mod scenario;
pub mod sdp;

pub use error::PepError;
pub use gram::{
    BasisId, BasisKind, BasisLabel, Constraint, ConstraintBody, ConstraintKind, PepBuilder,
    PepProblem, QuadExpr, ScalarVar, VectorExpr,
};
