//! Scenario files: a JSON description of one problem, an optional sweep
//! and the tolerances to solve it with.
//!
//! ```json
//! {
//!   "method": { "kind": "gradient", "N": 10, "h": 1.0 },
//!   "family": { "family": "smooth-strongly-convex", "mu": 0, "L": 1 },
//!   "representation": "tight",
//!   "sweep": { "axis": "h", "from": 0.002, "to": 1.998, "step": 0.002 },
//!   "output": { "path": "out/sweep.csv" },
//!   "tolerances": { "gap": 1e-7, "feas": 1e-7 }
//! }
//! ```
//!
//! Only `method` is required. Unknown keys are rejected, and parse errors
//! carry the JSON path and line of the offending field.

use std::path::Path;

use nalgebra::DMatrix;
use pep_sdp::SolveOptions;
use serde::{Deserialize, Serialize};

use crate::algos::{
    build_custom_method, build_dgd_fixed_matrix, build_dgd_spectral, build_gradient_method,
    default_network_matrix, network_matrix_with_spectrum, Criterion, DgdInit, DgdSpec, MethodSpec,
    Representation, SchemeConfig, Steps,
};
use crate::classes::ClassSpec;
use crate::gram::PepProblem;
use crate::PepError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub method: MethodConfig,
    /// Function class for `gradient` and `dgd`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ClassSpec>,
    #[serde(default)]
    pub representation: Representation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// One step size or one per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepList {
    One(f64),
    Many(Vec<f64>),
}

impl StepList {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            StepList::One(v) => vec![*v],
            StepList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodConfig {
    /// Fixed-step gradient descent; exactly one of `h` (normalized by `L`)
    /// and `alpha` unless an `h` sweep supplies the step.
    Gradient {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<StepList>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<StepList>,
        #[serde(default)]
        criterion: Criterion,
        #[serde(default = "one")]
        radius: f64,
    },
    /// Distributed gradient descent; `alpha` defaults to `1/sqrt(N)` and
    /// `lambda` may be supplied by a `lambda` sweep.
    Dgd {
        #[serde(rename = "N")]
        n: usize,
        agents: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<StepList>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        init: DgdInit,
        #[serde(default)]
        network: NetworkConfig,
    },
    Custom {
        scheme: SchemeConfig,
    },
    /// Two-point feasibility scan, no SDP involved.
    Region {
        #[serde(default)]
        anchor: Anchor,
        #[serde(default)]
        grid: RegionGrid,
    },
}

fn one() -> f64 {
    1.0
}

/// Which consensus model a DGD solve uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetworkConfig {
    /// Every symmetric stochastic matrix with the spectral bound.
    #[default]
    Spectral,
    /// The built-in matrix with spectrum `{1, lam, -lam, ...}`.
    Default,
    /// Like `Default` with complement eigenvalues `s_k lam`, one factor in
    /// `[-1, 1]` per agent beyond the first.
    Signs(Vec<f64>),
    /// One explicit matrix.
    Matrix(Vec<Vec<f64>>),
}

/// Known data of the first point in the region scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub x1: f64,
    pub x2: f64,
    pub g1: f64,
    pub f1: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl Default for Anchor {
    fn default() -> Self {
        Self {
            x1: 0.0,
            x2: 1.0,
            g1: 1.0,
            f1: 0.0,
            l: 1.0,
        }
    }
}

/// Grid over `(g2, f2)`; both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionGrid {
    pub g_min: f64,
    pub g_max: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub step: f64,
}

impl Default for RegionGrid {
    fn default() -> Self {
        Self {
            g_min: -0.5,
            g_max: 2.5,
            f_min: -0.5,
            f_max: 2.5,
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    H,
    Lambda,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::H => "h",
            Axis::Lambda => "lambda",
        }
    }
}

/// Either `from`/`to`/`step` (both ends inclusive) or explicit `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepConfig {
    /// Grid points, rounded to 12 significant digits so that `from + k step`
    /// does not carry accumulated noise.
    pub fn points(&self) -> Result<Vec<f64>, PepError> {
        let pts = match (&self.values, self.from, self.to, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(s)) => {
                if !(s > 0.0 && s.is_finite() && a.is_finite() && b.is_finite() && b >= a) {
                    return Err(sweep_error(format!(
                        "need from <= to and a positive step, got from={a} to={b} step={s}"
                    )));
                }
                let count = ((b - a) / s + 1e-9).floor() as usize + 1;
                (0..count).map(|k| round_sig(a + k as f64 * s)).collect()
            }
            _ => {
                return Err(sweep_error(
                    "give either `values` or all of `from`, `to`, `step`".into(),
                ))
            }
        };
        if pts.is_empty() {
            return Err(sweep_error("empty grid".into()));
        }
        let inside = |v: f64| match self.axis {
            Axis::H => v > 0.0 && v < 2.0,
            Axis::Lambda => (0.0..1.0).contains(&v),
        };
        if let Some(bad) = pts.iter().find(|v| !inside(**v)) {
            let range = match self.axis {
                Axis::H => "(0, 2)",
                Axis::Lambda => "[0, 1)",
            };
            return Err(sweep_error(format!(
                "grid point {bad} outside {range} for axis {}",
                self.axis.as_str()
            )));
        }
        Ok(pts)
    }
}

fn sweep_error(msg: String) -> PepError {
    PepError::Parse {
        path: "sweep".into(),
        msg,
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Main output file; overridden by `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default = "default_feas")]
    pub feas: f64,
    /// Residual tolerance for instance verification.
    #[serde(default = "default_verify")]
    pub verify: f64,
    /// Relative eigenvalue cutoff for Gram factorization.
    #[serde(default = "default_rank")]
    pub rank: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_gap() -> f64 {
    1e-7
}
fn default_feas() -> f64 {
    1e-7
}
fn default_verify() -> f64 {
    1e-6
}
fn default_rank() -> f64 {
    1e-7
}
fn default_max_iter() -> usize {
    200
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap: default_gap(),
            feas: default_feas(),
            verify: default_verify(),
            rank: default_rank(),
            max_iter: default_max_iter(),
        }
    }
}

impl Tolerances {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            gap_tol: self.gap,
            feas_tol: self.feas,
            max_iter: self.max_iter,
            ..SolveOptions::default()
        }
    }
}

impl Scenario {
    /// Parses and validates. `origin` names the source in error messages.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, PepError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            PepError::Parse {
                path: origin.to_string(),
                msg: if path == "." {
                    e.into_inner().to_string()
                } else {
                    format!("at `{path}`: {}", e.into_inner())
                },
            }
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, PepError> {
        let text = std::fs::read_to_string(path).map_err(|source| PepError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scenario serializes")
    }

    fn invalid(field: &str, msg: impl Into<String>) -> PepError {
        PepError::Parse {
            path: field.to_string(),
            msg: msg.into(),
        }
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> Result<(), PepError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("gap", t.gap),
            ("feas", t.feas),
            ("verify", t.verify),
            ("rank", t.rank),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Self::invalid(
                    &format!("tolerances.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if let Some(f) = &self.family {
            f.validate()?;
        }
        let sweep_axis = self.sweep.as_ref().map(|s| s.axis);
        if let Some(s) = &self.sweep {
            s.points()?;
        }
        match &self.method {
            MethodConfig::Gradient { h, alpha, .. } => {
                if sweep_axis == Some(Axis::Lambda) {
                    return Err(Self::invalid(
                        "sweep.axis",
                        "lambda sweeps need a dgd method",
                    ));
                }
                match (h, alpha, sweep_axis) {
                    (Some(_), Some(_), _) => {
                        return Err(Self::invalid("method", "give `h` or `alpha`, not both"))
                    }
                    (None, None, None) => {
                        return Err(Self::invalid("method", "missing `h` or `alpha`"))
                    }
                    (_, Some(_), Some(Axis::H)) => {
                        return Err(Self::invalid("method.alpha", "an h sweep sets the step"))
                    }
                    _ => {}
                }
            }
            MethodConfig::Dgd {
                lambda,
                network,
                agents,
                ..
            } => {
                if let NetworkConfig::Signs(signs) = network {
                    if signs.len() + 1 != *agents || signs.iter().any(|s| !(-1.0..=1.0).contains(s))
                    {
                        return Err(Self::invalid(
                            "method.network.signs",
                            "need agents - 1 factors, each in [-1, 1]",
                        ));
                    }
                }
                if self.representation == Representation::Relaxed {
                    return Err(Self::invalid("representation", "dgd has no relaxed form"));
                }
                match sweep_axis {
                    Some(Axis::H) => {
                        return Err(Self::invalid(
                            "sweep.axis",
                            "h sweeps need a gradient method",
                        ))
                    }
                    Some(Axis::Lambda) => {
                        if matches!(network, NetworkConfig::Matrix(_)) {
                            return Err(Self::invalid(
                                "method.network",
                                "an explicit matrix is tied to one lambda; use a single solve",
                            ));
                        }
                    }
                    None if lambda.is_none() => {
                        return Err(Self::invalid("method.lambda", "missing"))
                    }
                    None => {}
                }
            }
            MethodConfig::Custom { .. } | MethodConfig::Region { .. } => {
                if self.family.is_some() {
                    return Err(Self::invalid(
                        "family",
                        "not used by this method; classes are declared inline",
                    ));
                }
                if self.sweep.is_some() {
                    return Err(Self::invalid("sweep", "not supported for this method"));
                }
                if self.representation == Representation::Relaxed {
                    return Err(Self::invalid("representation", "only tight is available"));
                }
            }
        }
        if let MethodConfig::Region { anchor, grid } = &self.method {
            if !(anchor.l > 0.0 && anchor.l.is_finite()) {
                return Err(Self::invalid("method.anchor.L", "must be positive"));
            }
            if !(grid.step > 0.0 && grid.g_max >= grid.g_min && grid.f_max >= grid.f_min) {
                return Err(Self::invalid(
                    "method.grid",
                    "empty grid or non-positive step",
                ));
            }
        }
        Ok(())
    }

    pub fn method_name(&self) -> &'static str {
        match self.method {
            MethodConfig::Gradient { .. } => "gradient",
            MethodConfig::Dgd { .. } => "dgd",
            MethodConfig::Custom { .. } => "custom",
            MethodConfig::Region { .. } => "region",
        }
    }

    /// Gradient method spec, with `h` replacing the configured step.
    pub fn gradient_spec(&self, h: Option<f64>) -> Result<MethodSpec, PepError> {
        let MethodConfig::Gradient {
            n,
            h: h_cfg,
            alpha,
            criterion,
            radius,
        } = &self.method
        else {
            return Err(Self::invalid("method.kind", "expected gradient"));
        };
        let steps = match (h, h_cfg, alpha) {
            (Some(h), _, _) => Steps::Normalized(vec![h]),
            (None, Some(h), _) => Steps::Normalized(h.to_vec()),
            (None, None, Some(a)) => Steps::Absolute(a.to_vec()),
            (None, None, None) => return Err(Self::invalid("method", "missing `h` or `alpha`")),
        };
        Ok(MethodSpec {
            n: *n,
            steps,
            family: self
                .family
                .clone()
                .unwrap_or_else(|| ClassSpec::smooth_convex(1.0)),
            criterion: *criterion,
            radius: *radius,
        })
    }

    /// DGD spec, with `lam` replacing the configured spectral bound.
    pub fn dgd_spec(&self, lam: Option<f64>) -> Result<DgdSpec, PepError> {
        let MethodConfig::Dgd {
            n,
            agents,
            alpha,
            lambda,
            radius,
            init,
            ..
        } = &self.method
        else {
            return Err(Self::invalid("method.kind", "expected dgd"));
        };
        let lam = lam
            .or(*lambda)
            .ok_or_else(|| Self::invalid("method.lambda", "missing"))?;
        let mut spec = DgdSpec::new(*n, *agents, lam);
        if let Some(a) = alpha {
            spec.steps = a.to_vec();
        }
        if let Some(f) = &self.family {
            spec.family = f.clone();
        }
        spec.radius = *radius;
        spec.init = *init;
        Ok(spec)
    }

    /// The network matrix a fixed-matrix DGD solve uses at `lam`, or `None`
    /// for the spectral model.
    pub fn network_matrix(&self, lam: f64) -> Result<Option<DMatrix<f64>>, PepError> {
        let MethodConfig::Dgd {
            agents, network, ..
        } = &self.method
        else {
            return Err(Self::invalid("method.kind", "expected dgd"));
        };
        Ok(match network {
            NetworkConfig::Spectral => None,
            NetworkConfig::Default => Some(default_network_matrix(*agents, lam)),
            NetworkConfig::Signs(signs) => {
                let eig: Vec<f64> = signs.iter().map(|s| s * lam).collect();
                Some(network_matrix_with_spectrum(&eig))
            }
            NetworkConfig::Matrix(rows) => {
                let a = rows.len();
                if rows.iter().any(|r| r.len() != a) {
                    return Err(PepError::InvalidMatrix(
                        "network matrix is not square".into(),
                    ));
                }
                Some(DMatrix::from_fn(a, a, |i, j| rows[i][j]))
            }
        })
    }

    /// The single problem described by the scenario, ignoring any sweep.
    pub fn build_problem(&self) -> Result<PepProblem, PepError> {
        match &self.method {
            MethodConfig::Gradient { .. } => {
                build_gradient_method(&self.gradient_spec(None)?, self.representation)
            }
            MethodConfig::Dgd { .. } => {
                let spec = self.dgd_spec(None)?;
                match self.network_matrix(spec.lam)? {
                    None => build_dgd_spectral(&spec),
                    Some(w) => build_dgd_fixed_matrix(&spec, &w),
                }
            }
            MethodConfig::Custom { scheme } => build_custom_method(scheme),
            MethodConfig::Region { .. } => Err(Self::invalid(
                "method.kind",
                "region scans have no semidefinite program",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_gradient() {
        let s = Scenario::from_json(r#"{"method": {"kind": "gradient", "N": 3, "h": 1}}"#, "t")
            .unwrap();
        let spec = s.gradient_spec(None).unwrap();
        assert_eq!(spec.step_sizes().unwrap(), vec![1.0; 3]);
        assert_eq!(s.tolerances, Tolerances::default());
        assert_eq!(s.build_problem().unwrap().constraints().len(), 21);
    }

    #[test]
    fn error_carries_path() {
        let err = Scenario::from_json(
            r#"{"method": {"kind": "gradient", "N": "ten", "h": 1}}"#,
            "file.json",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("file.json: at `method`"), "{msg}");
        assert!(msg.contains("\"ten\""), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err =
            Scenario::from_json(r#"{"method": {"kind": "region"}, "colour": 1}"#, "x").unwrap_err();
        assert!(err.to_string().contains("colour"));
    }

    #[test]
    fn grid_points() {
        let s = SweepConfig {
            axis: Axis::H,
            from: Some(0.1),
            to: Some(0.3),
            step: Some(0.1),
            values: None,
        };
        assert_eq!(s.points().unwrap(), vec![0.1, 0.2, 0.3]);
        let s = SweepConfig { to: Some(2.0), ..s };
        assert!(s.points().is_err());
    }

    #[test]
    fn lambda_sweep_needs_dgd() {
        let text = r#"{"method": {"kind": "gradient", "N": 3},
                       "sweep": {"axis": "lambda", "values": [0.5]}}"#;
        assert!(Scenario::from_json(text, "x").is_err());
    }

    #[test]
    fn dgd_defaults() {
        let text = r#"{"method": {"kind": "dgd", "N": 4, "agents": 3, "lambda": 0.5,
                                  "network": "default"}}"#;
        let s = Scenario::from_json(text, "x").unwrap();
        let spec = s.dgd_spec(None).unwrap();
        assert_eq!(spec.step_sizes().unwrap(), vec![0.5; 4]);
        assert!(s.network_matrix(0.5).unwrap().is_some());
        let text = r#"{"method": {"kind": "dgd", "N": 4, "agents": 2, "lambda": 0.5,
                                  "network": {"matrix": [[0.75, 0.25], [0.25, 0.75]]}}}"#;
        let s = Scenario::from_json(text, "x").unwrap();
        assert_eq!(s.network_matrix(0.5).unwrap().unwrap()[(0, 1)], 0.25);
        let text = r#"{"method": {"kind": "dgd", "N": 4, "agents": 3, "lambda": 0.5,
                                  "network": {"signs": [-1, -1]}}}"#;
        let s = Scenario::from_json(text, "x").unwrap();
        let w = s.network_matrix(0.5).unwrap().unwrap();
        assert!((w[(0, 0)] - (-0.5 + 1.5 / 3.0)).abs() < 1e-14);
        let text = r#"{"method": {"kind": "dgd", "N": 4, "agents": 3, "lambda": 0.5,
                                  "network": {"signs": [-1]}}}"#;
        assert!(Scenario::from_json(text, "x").is_err());
    }

    #[test]
    fn round_trip() {
        let text = r#"{"method": {"kind": "gradient", "N": 2, "h": [1.0, 1.5]},
                       "family": {"family": "smooth-strongly-convex", "mu": 0.1, "L": 2}}"#;
        let s = Scenario::from_json(text, "x").unwrap();
        let back = Scenario::from_json(&s.to_json().to_string(), "y").unwrap();
        assert_eq!(s, back);
    }
}
