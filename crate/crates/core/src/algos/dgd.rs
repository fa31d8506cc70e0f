use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::gradient::expand_steps;
use crate::classes::{ClassSpec, ConsensusData, ConsensusStep, FunctionData, Interpolation};
use crate::gram::{BasisKind, Constraint, PepBuilder, PepProblem, QuadExpr, VectorExpr};
use crate::PepError;

/// Starting points of the agents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgdInit {
    /// Independent `x_{a,0}` with `|x_{a,0} - x*|^2 <= R^2` for each agent.
    #[default]
    PerAgent,
    /// One shared `x_0` with `|x_0 - x*|^2 <= R^2`.
    Common,
}

/// Distributed gradient descent
///
/// ```text
/// y_{a,i}   = sum_b w_ab x_{b,i}
/// x_{a,i+1} = y_{a,i} - alpha_i grad f_a(x_{a,i})
/// ```
///
/// measured by `(1/A) sum_a f_a(xbar_N) - f_a(x*)` where `xbar_N` is the
/// agent average after `N` iterations and `x*` minimizes the average of
/// the local functions.
#[derive(Debug, Clone, PartialEq)]
pub struct DgdSpec {
    pub n: usize,
    pub agents: usize,
    /// One step size, or one per iteration.
    pub steps: Vec<f64>,
    pub lam: f64,
    pub family: ClassSpec,
    pub radius: f64,
    pub init: DgdInit,
}

impl DgdSpec {
    /// Step `1/sqrt(N)`, local functions convex with subgradients bounded
    /// by 1, unit radius per agent.
    pub fn new(n: usize, agents: usize, lam: f64) -> Self {
        Self {
            n,
            agents,
            steps: vec![1.0 / (n.max(1) as f64).sqrt()],
            lam,
            family: ClassSpec::ConvexBoundedGrad { m: 1.0 },
            radius: 1.0,
            init: DgdInit::PerAgent,
        }
    }

    pub fn step_sizes(&self) -> Result<Vec<f64>, PepError> {
        expand_steps(&self.steps, self.n)
    }

    fn validate(&self) -> Result<(), PepError> {
        if self.agents < 2 {
            return Err(PepError::InvalidParameter(format!(
                "DGD needs at least 2 agents, got {}",
                self.agents
            )));
        }
        if !(0.0..1.0).contains(&self.lam) {
            return Err(PepError::InvalidParameter(format!(
                "lambda must lie in [0, 1), got {}",
                self.lam
            )));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(PepError::InvalidParameter(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        self.family.validate()?;
        if self.family.is_operator_family() {
            return Err(PepError::WrongFamily {
                expected: "a function family with function values".into(),
                found: self.family.family().into(),
            });
        }
        Ok(())
    }
}

/// Checks symmetry, unit row sums and that every eigenvalue on the
/// complement of the all-ones vector lies in `[-lam, lam]`, all within
/// `1e-9`.
pub fn validate_network_matrix(w: &DMatrix<f64>, lam: f64) -> Result<(), PepError> {
    const TOL: f64 = 1e-9;
    let a = w.nrows();
    if w.ncols() != a || a < 2 {
        return Err(PepError::InvalidMatrix(format!(
            "network matrix must be square with at least 2 rows, got {}x{}",
            a,
            w.ncols()
        )));
    }
    let asym = (w - w.transpose()).abs().max();
    if asym > TOL {
        return Err(PepError::InvalidMatrix(format!(
            "not symmetric (max asymmetry {asym:e})"
        )));
    }
    for (i, row) in w.row_iter().enumerate() {
        let s: f64 = row.sum();
        if (s - 1.0).abs() > TOL {
            return Err(PepError::InvalidMatrix(format!("row {i} sums to {s}")));
        }
    }
    let proj = DMatrix::identity(a, a) - DMatrix::from_element(a, a, 1.0 / a as f64);
    let reduced = &proj * w * &proj;
    let eig = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5).eigenvalues;
    if let Some(bad) = eig.iter().find(|e| e.abs() > lam + TOL) {
        return Err(PepError::InvalidMatrix(format!(
            "eigenvalue {bad} on the consensus complement exceeds lambda = {lam}"
        )));
    }
    Ok(())
}

/// A symmetric matrix with row sums 1 and spectrum `{1, lam, -lam, lam,
/// ...}`, built on the Helmert basis.
pub fn default_network_matrix(agents: usize, lam: f64) -> DMatrix<f64> {
    let eig: Vec<f64> = (1..agents)
        .map(|k| if k % 2 == 1 { lam } else { -lam })
        .collect();
    network_matrix_with_spectrum(&eig)
}

/// A symmetric matrix with row sums 1 whose eigenvalues on the complement
/// of the all-ones vector are `eig`, one per Helmert direction. The number
/// of agents is `eig.len() + 1`.
pub fn network_matrix_with_spectrum(eig: &[f64]) -> DMatrix<f64> {
    let a = eig.len() + 1;
    let mut q = DMatrix::zeros(a, a);
    for r in 0..a {
        q[(r, 0)] = 1.0 / (a as f64).sqrt();
    }
    for k in 1..a {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for r in 0..k {
            q[(r, k)] = 1.0 / norm;
        }
        q[(k, k)] = -(k as f64) / norm;
    }
    let d = DMatrix::from_fn(a, a, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (i, j) if i == j => eig[i - 1],
        _ => 0.0,
    });
    let w = &q * d * q.transpose();
    (&w + w.transpose()) * 0.5
}

/// Nearest matrix (in Frobenius norm) with the same eigenvectors whose
/// spectrum on the complement of the all-ones vector is clipped to
/// `[-lam, lam]`. Used to clean up recovered matrices whose eigenvalues
/// overshoot the bound by solver noise.
pub fn project_network_matrix(w: &DMatrix<f64>, lam: f64) -> DMatrix<f64> {
    let a = w.nrows();
    let j = DMatrix::from_element(a, a, 1.0 / a as f64);
    let p = DMatrix::<f64>::identity(a, a) - &j;
    let rest = &p * (w + w.transpose()) * 0.5 * &p;
    let e = SymmetricEigen::new(rest.clone());
    let ones = nalgebra::DVector::from_element(a, 1.0 / (a as f64).sqrt());
    let mut out = j;
    for k in 0..a {
        let v = e.eigenvectors.column(k);
        // the all-ones direction carries eigenvalue 0 of `rest`
        if v.dot(&ones).abs() > 0.5 {
            continue;
        }
        let lk = e.eigenvalues[k].clamp(-lam, lam);
        out += lk * v * v.transpose();
    }
    (&out + out.transpose()) * 0.5
}

/// Spectral version: consensus outputs are fresh labels tied to the inputs
/// by the network-matrix interpolation constraints.
pub fn build_dgd_spectral(spec: &DgdSpec) -> Result<PepProblem, PepError> {
    build(spec, None)
}

/// Exact version for one given network matrix.
pub fn build_dgd_fixed_matrix(spec: &DgdSpec, w: &DMatrix<f64>) -> Result<PepProblem, PepError> {
    spec.validate()?;
    if w.nrows() != spec.agents {
        return Err(PepError::InvalidMatrix(format!(
            "{}x{} matrix for {} agents",
            w.nrows(),
            w.ncols(),
            spec.agents
        )));
    }
    validate_network_matrix(w, spec.lam)?;
    build(spec, Some(w))
}

fn build(spec: &DgdSpec, w: Option<&DMatrix<f64>>) -> Result<PepProblem, PepError> {
    spec.validate()?;
    let alphas = spec.step_sizes()?;
    let a_n = spec.agents;
    let mut b = PepBuilder::new();

    let starts: Vec<VectorExpr> = match spec.init {
        DgdInit::PerAgent => (0..a_n)
            .map(|a| b.vector(BasisKind::IterateSeed, format!("x{a}_0")))
            .collect(),
        DgdInit::Common => vec![b.vector(BasisKind::IterateSeed, "x_0"); a_n],
    };
    let mut data: Vec<FunctionData> = (0..a_n)
        .map(|a| FunctionData::new(format!("f{a}")))
        .collect();
    let mut consensus = ConsensusData::new("W", a_n, spec.lam);
    let mut x = starts.clone();
    for (i, &alpha) in alphas.iter().enumerate() {
        let mut g = Vec::with_capacity(a_n);
        for (a, d) in data.iter_mut().enumerate() {
            let gi = b.vector(BasisKind::Gradient, format!("g{a}_{i}"));
            let fi = b.scalar(format!("f{a}_{i}"));
            d.push(i.to_string(), x[a].clone(), gi.clone(), fi);
            g.push(gi);
        }
        let y: Vec<VectorExpr> = match w {
            Some(w) => (0..a_n)
                .map(|a| {
                    x.iter()
                        .enumerate()
                        .fold(VectorExpr::zero(), |acc, (c, xc)| acc + w[(a, c)] * xc)
                })
                .collect(),
            None => {
                // the last output is fixed by average preservation
                let mut y: Vec<VectorExpr> = (0..a_n - 1)
                    .map(|a| b.vector(BasisKind::OperatorOutput, format!("y{a}_{i}")))
                    .collect();
                let last = &VectorExpr::sum(&x) - &VectorExpr::sum(&y);
                y.push(last);
                consensus.steps.push(ConsensusStep {
                    x: x.clone(),
                    y: y.clone(),
                });
                y
            }
        };
        x = (0..a_n).map(|a| &y[a] - &(alpha * &g[a])).collect();
    }

    let xbar = VectorExpr::sum(&x) * (1.0 / a_n as f64);
    let mut objective = QuadExpr::default();
    for (a, d) in data.iter_mut().enumerate() {
        let g = b.vector(BasisKind::Gradient, format!("g{a}_bar"));
        let f = b.scalar(format!("f{a}_bar"));
        d.push("bar", xbar.clone(), g, f);
        objective += &QuadExpr::from(f);
    }
    // stationarity of the average function at the origin
    let mut g_star: Vec<VectorExpr> = (0..a_n - 1)
        .map(|a| b.vector(BasisKind::Gradient, format!("g{a}_*")))
        .collect();
    g_star.push(-VectorExpr::sum(&g_star));
    for (a, d) in data.iter_mut().enumerate() {
        let f = b.scalar(format!("f{a}_*"));
        d.push("*", VectorExpr::zero(), g_star[a].clone(), f);
        objective -= &QuadExpr::from(f);
    }
    let r2 = spec.radius * spec.radius;
    match spec.init {
        DgdInit::PerAgent => {
            for (a, s) in starts.iter().enumerate() {
                b.constrain(Constraint::le0(
                    s.norm_sq() - r2,
                    format!("init:dist(x{a}_0,x*)"),
                ));
            }
        }
        DgdInit::Common => {
            b.constrain(Constraint::le0(
                starts[0].norm_sq() - r2,
                "init:dist(x_0,x*)",
            ));
        }
    }
    for d in data {
        b.interpolate(Interpolation::Function {
            data: d,
            spec: spec.family.clone(),
        });
    }
    if !consensus.steps.is_empty() {
        b.interpolate(Interpolation::Consensus(consensus));
    }
    b.maximize(objective * (1.0 / a_n as f64));
    b.meta("method", "dgd");
    b.meta("network", if w.is_some() { "fixed" } else { "spectral" });
    b.meta("criterion", "average-gap-at-mean");
    b.meta(
        "init",
        match spec.init {
            DgdInit::PerAgent => "per-agent",
            DgdInit::Common => "common",
        },
    );
    b.meta("N", spec.n.to_string());
    b.meta("agents", a_n.to_string());
    b.meta("lambda", spec.lam.to_string());
    b.build()
}
