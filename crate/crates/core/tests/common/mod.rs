//! Random data generators and solve checks shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pep_forge::algos::{
    build_custom_method, build_gradient_method, Criterion, MethodSpec, Representation,
    SchemeConfig, Steps,
};
use pep_forge::classes::{check_numeric, ClassSpec, NumericData, NumericPoint, NumericStep};
use pep_forge::sdp::PepSolution;
use pep_forge::PepProblem;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

/// Optimal solves must have duality gap, complementarity and feasibility
/// residuals below `tol (1 + |value|)`.
pub fn kkt_ok(sol: &PepSolution, tol: f64) -> bool {
    let s = &sol.sdp;
    let bound = tol * (1.0 + sol.value.abs());
    s.gap <= bound
        && s.complementarity.abs() <= bound
        && s.primal_residual <= bound
        && s.dual_residual <= bound
}

pub fn assert_kkt(sol: &PepSolution) {
    assert!(sol.is_optimal(), "status {}", sol.status);
    assert!(kkt_ok(sol, 1e-7), "kkt above tolerance: {:?}", sol.sdp);
}

/// Exact worst case of `N` steps of gradient descent with step `1/L` from
/// `x0 = R`: the Huber function with kink at `R/(2N+1)`, run literally.
pub fn huber_worst_case(n: usize, l: f64, r: f64) -> f64 {
    let delta = r / (2 * n + 1) as f64;
    let f = |x: f64| {
        if x.abs() >= delta {
            l * delta * x.abs() - l * delta * delta / 2.0
        } else {
            l * x * x / 2.0
        }
    };
    let g = |x: f64| {
        if x.abs() >= delta {
            l * delta * x.signum()
        } else {
            l * x
        }
    };
    let mut x = r;
    for _ in 0..n {
        x -= g(x) / l;
    }
    f(x) - f(0.0)
}

pub fn matrix(rows: usize, cols: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_iterator(
        rows,
        cols,
        entries.iter().copied().cycle().take(rows * cols),
    )
}

/// Square matrix with largest singular value `shrink * l`.
pub fn scaled_matrix(d: usize, entries: &[f64], l: f64, shrink: f64) -> DMatrix<f64> {
    let m = matrix(d, d, entries);
    let s = m.clone().svd(false, false).singular_values.max();
    if s < 1e-12 {
        DMatrix::zeros(d, d)
    } else {
        m * (shrink * l / s)
    }
}

/// Symmetric matrix with `W 1 = 1` and the given eigenvalues on the
/// complement of the all-ones vector; `basis` seeds a random orthonormal
/// complement.
pub fn network_matrix(eig: &[f64], basis: &[f64]) -> DMatrix<f64> {
    let a = eig.len() + 1;
    let mut m = matrix(a, a, basis);
    m.column_mut(0).fill(1.0);
    let q = m.qr().q();
    let mut d = DVector::zeros(a);
    d[0] = 1.0;
    for (k, e) in eig.iter().enumerate() {
        d[k + 1] = *e;
    }
    &q * DMatrix::from_diagonal(&d) * q.transpose()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// One consensus step `y_a = sum_b w_ab x_b` on `dim`-dimensional vectors.
pub fn consensus_step(w: &DMatrix<f64>, dim: usize, entries: &[f64]) -> NumericStep {
    let a = w.nrows();
    let x = matrix(a, dim, entries);
    let y = w * &x;
    NumericStep {
        x: rows(&x),
        y: rows(&y),
    }
}

/// `L`-smooth convex function on the line: a scaled mixture of a quadratic,
/// a Huber function and a softplus with randomized centers.
#[derive(Debug, Clone)]
pub struct Convex1d {
    pub weights: [f64; 3],
    pub centers: [f64; 3],
    pub delta: f64,
    pub slope: f64,
}

impl Convex1d {
    /// Curvature bound of the unscaled mixture.
    fn curvature(&self) -> f64 {
        let [a, b, c] = self.weights;
        a + b / self.delta + c * self.slope * self.slope / 4.0
    }

    fn raw(&self, x: f64) -> (f64, f64) {
        let [a, b, c] = self.weights;
        let [p, q, r] = self.centers;
        let (u, v, w) = (x - p, x - q, self.slope * (x - r));
        let quad = (a * u * u / 2.0, a * u);
        let huber = if v.abs() <= self.delta {
            (v * v / (2.0 * self.delta), v / self.delta)
        } else {
            (v.abs() - self.delta / 2.0, v.signum())
        };
        // softplus(w) = log(1 + e^w), written to avoid overflow
        let sp = w.max(0.0) + (-w.abs()).exp().ln_1p();
        let sig = 1.0 / (1.0 + (-w).exp());
        (
            quad.0 + b * huber.0 + c * sp,
            quad.1 + b * huber.1 + c * self.slope * sig,
        )
    }

    /// Value and derivative of the mixture rescaled to curvature at most `l`.
    pub fn eval(&self, x: f64, l: f64) -> (f64, f64) {
        let k = l / self.curvature().max(1e-12);
        let (f, g) = self.raw(x);
        (k * f, k * g)
    }

    pub fn points(&self, xs: &[f64], l: f64) -> Vec<NumericPoint> {
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let (f, g) = self.eval(x, l);
                NumericPoint::new(i.to_string(), vec![x], vec![g], f)
            })
            .collect()
    }
}

pub fn convex_1d() -> impl Strategy<Value = Convex1d> {
    (
        [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64],
        [-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64],
        0.05..2.0f64,
        0.1..4.0f64,
    )
        .prop_filter("nonzero mixture", |(w, ..)| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|(weights, centers, delta, slope)| Convex1d {
            weights,
            centers,
            delta,
            slope,
        })
}

pub fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n)
}

pub const NECESSITY_CASES: u32 = 200;
pub const NECESSITY_TOL: f64 = 1e-9;

fn runner() -> TestRunner {
    let config = Config {
        cases: NECESSITY_CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn expect_feasible(data: &NumericData) -> Result<(), TestCaseError> {
    let r = check_numeric(data, NECESSITY_TOL).map_err(|e| TestCaseError::fail(e.to_string()))?;
    if r.feasible {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!(
            "violations {:?}",
            r.violations
        )))
    }
}

/// Forward and adjoint products of random matrices with `sigma_max <= L`.
pub fn linear_map_suite() -> Result<u32, String> {
    let strategy = (
        1usize..=4,
        entries(16),
        entries(12),
        entries(12),
        0.05..1.0f64,
        0.1..3.0f64,
    );
    runner()
        .run(&strategy, |(d, m, x, u, shrink, l)| {
            let m = scaled_matrix(d, &m, l, shrink);
            let (k, j) = (1 + x.len() % 3, 1 + u.len() % 2);
            let x = matrix(d, k, &x);
            let u = matrix(d, j, &u);
            let (y, v) = (&m * &x, m.transpose() * &u);
            let cols = |a: &DMatrix<f64>| -> Vec<Vec<f64>> {
                (0..a.ncols())
                    .map(|c| a.column(c).iter().copied().collect())
                    .collect()
            };
            let data = NumericData::LinearMap {
                name: "M".into(),
                l,
                forward: cols(&x).into_iter().zip(cols(&y)).collect(),
                adjoint: cols(&u).into_iter().zip(cols(&v)).collect(),
            };
            expect_feasible(&data)
        })
        .map(|_| NECESSITY_CASES)
        .map_err(|e| e.to_string())
}

/// Consensus steps with random symmetric `W`, `W 1 = 1`, complement
/// spectrum inside `[-lam, lam]`.
pub fn consensus_suite() -> Result<u32, String> {
    let strategy = (
        2usize..=5,
        0.0..0.99f64,
        proptest::collection::vec(-1.0..=1.0f64, 4),
        entries(25),
        1usize..=3,
        1usize..=3,
        entries(45),
    );
    runner()
        .run(&strategy, |(a, lam, signs, basis, dim, nsteps, xs)| {
            let eig: Vec<f64> = signs[..a - 1].iter().map(|s| s * lam).collect();
            let w = network_matrix(&eig, &basis);
            let steps = (0..nsteps)
                .map(|s| {
                    let mut seed = xs.clone();
                    seed.rotate_left(7 * s);
                    consensus_step(&w, dim, &seed)
                })
                .collect();
            expect_feasible(&NumericData::Consensus {
                name: "W".into(),
                lam,
                steps,
            })
        })
        .map(|_| NECESSITY_CASES)
        .map_err(|e| e.to_string())
}

/// Points of random smooth convex functions on the line.
pub fn convex_1d_suite() -> Result<u32, String> {
    let strategy = (
        convex_1d(),
        proptest::collection::vec(-5.0..5.0f64, 2..=6),
        0.1..5.0f64,
    );
    runner()
        .run(&strategy, |(f, xs, l)| {
            expect_feasible(&NumericData::Function {
                name: "f".into(),
                spec: ClassSpec::smooth_convex(l),
                points: f.points(&xs, l),
            })
        })
        .map(|_| NECESSITY_CASES)
        .map_err(|e| e.to_string())
}

/// Five tight problems whose values scale with the square of `radius`.
pub fn homogeneity_scenarios(radius: f64) -> Vec<PepProblem> {
    let gradient = |spec: MethodSpec| {
        build_gradient_method(&spec.with_radius(radius), Representation::Tight).unwrap()
    };
    let scheme: SchemeConfig = serde_json::from_value(serde_json::json!({
        "oracles": [{"kind": "operator", "name": "Q", "class": {"family": "cocoercive", "beta": 1.0}}],
        "steps": [
            {"op": "register", "oracle": "Q", "at": "x*", "grad": {"x*": 0}},
            {"op": "point", "name": "x0"},
            {"op": "apply", "oracle": "Q", "at": "x0", "name": "q0"},
            {"op": "let", "name": "x1", "expr": {"x0": 1, "q0": -1.5}},
            {"op": "apply", "oracle": "Q", "at": "x1", "name": "q1"}
        ],
        "initial": [{"dist_sq": "x0", "radius": radius}],
        "objective": [{"norm_sq": "q1"}]
    }))
    .unwrap();
    vec![
        gradient(MethodSpec::gradient(3, 1.0)),
        gradient(
            MethodSpec::gradient(4, 1.5).with_family(ClassSpec::smooth_strongly_convex(0.1, 1.0)),
        ),
        gradient(MethodSpec::gradient(3, 1.0).with_criterion(Criterion::GradientNormSq)),
        gradient(MethodSpec {
            steps: Steps::Normalized(vec![0.5, 1.0, 1.7]),
            ..MethodSpec::gradient(3, 1.0).with_criterion(Criterion::MinIterateGap)
        }),
        build_custom_method(&scheme).unwrap(),
    ]
}
