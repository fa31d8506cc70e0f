//! Builders that assemble complete problems for specific methods.

mod custom;
mod dgd;
mod gradient;

use serde::{Deserialize, Serialize};

pub use custom::{
    build_custom_method, Condition, ExprSpec, OracleDecl, SchemeConfig, SchemeStep, TermSpec,
};
pub use dgd::{
    build_dgd_fixed_matrix, build_dgd_spectral, default_network_matrix,
    network_matrix_with_spectrum, project_network_matrix, validate_network_matrix, DgdInit,
    DgdSpec,
};
pub use gradient::{build_gradient_method, classical_bound, Criterion, MethodSpec, Steps};

/// How the objective's function class enters the problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// The class's interpolation constraints.
    #[default]
    Tight,
    /// Convexity plus a Lipschitz-gradient bound on the data points.
    Relaxed,
}

impl Representation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::Tight => "tight",
            Representation::Relaxed => "relaxed",
        }
    }
}
