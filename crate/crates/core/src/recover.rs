//! From an optimal Gram matrix back to a concrete worst-case instance.

use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::classes::{check_numeric, CheckReport, NumericData, NumericStep, Residual};
use crate::gram::PepProblem;
use crate::sdp::PepSolution;
use crate::PepError;

/// Vectors whose pairwise inner products reproduce a Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor {
    pub dimension: usize,
    /// One row per Gram index, each of length `dimension`.
    pub vectors: Vec<Vec<f64>>,
    /// Largest entrywise deviation of the reconstructed Gram matrix.
    pub reconstruction_error: f64,
    /// Eigenvalues of the symmetrized input, in decreasing order.
    pub eigenvalues: Vec<f64>,
}

/// Factors `G = V V^T` keeping the eigenvalues above `rank_tol * |G|`.
///
/// Fails when `G` has an eigenvalue below `-rank_tol * |G|`.
pub fn factor_gram(g: &DMatrix<f64>, rank_tol: f64) -> Result<GramFactor, PepError> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(PepError::InvalidMatrix(format!(
            "Gram matrix is {}x{}",
            n,
            g.ncols()
        )));
    }
    if n == 0 {
        return Ok(GramFactor {
            dimension: 0,
            vectors: Vec::new(),
            reconstruction_error: 0.0,
            eigenvalues: Vec::new(),
        });
    }
    let sym = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let scale = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min = eigenvalues[n - 1];
    if min < -rank_tol * scale {
        return Err(PepError::InvalidMatrix(format!(
            "Gram matrix is not positive semidefinite: eigenvalue {min:e} against norm {scale:e}"
        )));
    }
    let kept: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| eig.eigenvalues[k] > rank_tol * scale)
        .collect();
    let mut vectors = vec![Vec::with_capacity(kept.len()); n];
    for &k in &kept {
        let col = eig.eigenvectors.column(k);
        // fix the sign so the factor is deterministic
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let root = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            vectors[i].push(sign * root * col[i]);
        }
    }
    let mut err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
            err = err.max((v - sym[(i, j)]).abs());
        }
    }
    Ok(GramFactor {
        dimension: kept.len(),
        vectors,
        reconstruction_error: err,
        eigenvalues,
    })
}

/// Three-valued outcome of verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certification {
    /// The instance satisfies exact interpolation constraints and attains
    /// the bound.
    CertifiedTight,
    /// The bound is valid but the constraints used are only necessary.
    UpperBoundOnly,
    NumericalFailure,
}

impl Certification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Certification::CertifiedTight => "certified-tight",
            Certification::UpperBoundOnly => "upper-bound-only",
            Certification::NumericalFailure => "numerical-failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "certified-tight" => Some(Certification::CertifiedTight),
            "upper-bound-only" => Some(Certification::UpperBoundOnly),
            "numerical-failure" => Some(Certification::NumericalFailure),
            _ => None,
        }
    }
}

impl fmt::Display for Certification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Numeric vectors and values for every label of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseInstance {
    pub dimension: usize,
    /// `(tag, vector)` in Gram index order.
    pub vectors: Vec<(String, Vec<f64>)>,
    /// `(tag, value)` in scalar index order.
    pub fvals: Vec<(String, f64)>,
    /// Optimal value reported by the solver.
    pub value: f64,
    pub reconstruction_error: f64,
}

impl WorstCaseInstance {
    fn raw_vectors(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|(_, v)| v.clone()).collect()
    }

    fn raw_fvals(&self) -> Vec<f64> {
        self.fvals.iter().map(|(_, v)| *v).collect()
    }

    pub fn vector(&self, tag: &str) -> Option<&[f64]> {
        self.vectors
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, v)| v.as_slice())
    }

    pub fn fval(&self, tag: &str) -> Option<f64> {
        self.fvals.iter().find(|(t, _)| t == tag).map(|(_, v)| *v)
    }
}

/// Factors the optimal Gram matrix of `sol` into an instance of `p`.
pub fn extract_instance(
    p: &PepProblem,
    sol: &PepSolution,
    rank_tol: f64,
) -> Result<WorstCaseInstance, PepError> {
    let f = factor_gram(&sol.gram, rank_tol)?;
    Ok(WorstCaseInstance {
        dimension: f.dimension,
        vectors: p
            .basis()
            .iter()
            .zip(f.vectors)
            .map(|(b, v)| (b.tag.clone(), v))
            .collect(),
        fvals: p
            .scalars()
            .iter()
            .zip(&sol.fvals)
            .map(|(s, v)| (s.tag.clone(), *v))
            .collect(),
        value: sol.value,
        reconstruction_error: f.reconstruction_error,
    })
}

/// Least-squares network matrix and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRecovery {
    pub w: DMatrix<f64>,
    /// `sum_i sum_a |y_{a,i} - sum_b w_ab x_{b,i}|^2` at the solution.
    pub residual: f64,
    /// Eigenvalues on the complement of the all-ones vector, decreasing.
    pub eigenvalues: Vec<f64>,
    /// The data does not determine `W`; the minimum-norm solution is given.
    pub underdetermined: bool,
    pub success: bool,
    pub message: String,
}

/// Fits a symmetric `W` with `W 1 = 1` to consensus data and checks its
/// spectrum against `lam`.
pub fn recover_network_matrix(
    steps: &[NumericStep],
    lam: f64,
    tol: f64,
) -> Result<NetworkRecovery, PepError> {
    let agents = steps.first().map_or(0, |s| s.x.len());
    if agents < 2 {
        return Err(PepError::EmptyHandle("consensus data".into()));
    }
    let dim = steps[0].x[0].len();
    for s in steps {
        if s.x.len() != agents
            || s.y.len() != agents
            || s.x.iter().chain(&s.y).any(|v| v.len() != dim)
        {
            return Err(PepError::DimensionMismatch(
                "consensus steps differ in shape".into(),
            ));
        }
    }
    // unknowns: w_ab for a <= b
    let idx = |a: usize, b: usize| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a * agents - a * (a + 1) / 2 + b
    };
    let p = agents * (agents + 1) / 2;
    let rows = steps.len() * agents * dim;
    let mut design = DMatrix::<f64>::zeros(rows, p);
    let mut target = DVector::zeros(rows);
    let mut r = 0;
    for s in steps {
        for a in 0..agents {
            for k in 0..dim {
                for b in 0..agents {
                    design[(r, idx(a, b))] += s.x[b][k];
                }
                target[r] = s.y[a][k];
                r += 1;
            }
        }
    }
    let mut cons = DMatrix::zeros(agents, p);
    for a in 0..agents {
        for b in 0..agents {
            cons[(a, idx(a, b))] += 1.0;
        }
    }
    // particular solution and null space of the row-sum constraints; the
    // constraint matrix is padded to square so the SVD exposes its kernel
    let mut padded = DMatrix::<f64>::zeros(p, p);
    padded.view_mut((0, 0), (agents, p)).copy_from(&cons);
    let mut ones = DVector::zeros(p);
    ones.rows_mut(0, agents).fill(1.0);
    let csvd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn> = SVD::new(padded, true, true);
    let p0 = csvd
        .solve(&ones, 1e-12)
        .map_err(|e| PepError::InvalidMatrix(e.to_string()))?;
    let vt = csvd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| csvd.singular_values[b].total_cmp(&csvd.singular_values[a]));
    let rank_c = csvd.singular_values.iter().filter(|s| **s > 1e-12).count();
    let null: Vec<usize> = order[rank_c..].to_vec();
    let z = DMatrix::from_fn(p, null.len(), |i, j| vt[(null[j], i)]);
    let dz = &design * &z;
    let rhs = &target - &design * &p0;
    let dsvd = SVD::new(dz.clone(), true, true);
    let smax = dsvd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    let cut = 1e-10 * smax.max(1e-300);
    let rank_d = dsvd.singular_values.iter().filter(|s| **s > cut).count();
    let zsol = if null.is_empty() {
        DVector::zeros(0)
    } else {
        dsvd.solve(&rhs, cut)
            .map_err(|e| PepError::InvalidMatrix(e.to_string()))?
    };
    let params = &p0 + &z * &zsol;
    let w = DMatrix::from_fn(agents, agents, |a, b| params[idx(a, b)]);
    let resid = &design * &params - &target;
    let residual = resid.norm_squared();

    let proj = DMatrix::identity(agents, agents)
        - DMatrix::from_element(agents, agents, 1.0 / agents as f64);
    let reduced = &proj * &w * &proj;
    let mut eig: Vec<f64> = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    // drop the zero eigenvalue that belongs to the all-ones direction
    if let Some(pos) = eig
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
    {
        eig.remove(pos);
    }
    let underdetermined = rank_d < null.len();
    let spectrum_ok = eig.iter().all(|e| e.abs() <= lam + tol);
    let success = residual <= tol && spectrum_ok;
    let message = if success {
        "network matrix recovered".to_string()
    } else if residual > tol {
        format!("least-squares residual {residual:e} exceeds {tol:e}")
    } else {
        format!("eigenvalues {eig:?} leave [-{lam}, {lam}]")
    };
    Ok(NetworkRecovery {
        w,
        residual,
        eigenvalues: eig,
        underdetermined,
        success,
        message,
    })
}

/// Outcome of [`verify_instance`].
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub certification: Certification,
    /// Largest residual over all constraints of the problem.
    pub max_residual: f64,
    /// The problem's constraints above tolerance.
    pub violations: Vec<Residual>,
    /// Independent numeric check of each interpolation group.
    pub groups: Vec<(String, CheckReport)>,
    pub objective_at_instance: f64,
    pub value: f64,
    /// Every interpolation group is exact (or its network matrix was
    /// recovered).
    pub exact: bool,
    pub networks: Vec<(String, NetworkRecovery)>,
    pub reason: String,
}

/// Re-evaluates every constraint of `p` on the instance and decides
/// whether the bound is certified.
///
/// Residuals are compared to `tol` times the larger of 1 and the largest
/// squared vector norm, so the verdict does not depend on the scale of the
/// problem.
pub fn verify_instance(inst: &WorstCaseInstance, p: &PepProblem, tol: f64) -> VerificationReport {
    let vectors = inst.raw_vectors();
    let fvals = inst.raw_fvals();
    let mismatch = vectors.len() != p.basis().len() || fvals.len() != p.scalars().len();
    if mismatch {
        return VerificationReport {
            certification: Certification::NumericalFailure,
            max_residual: f64::INFINITY,
            violations: Vec::new(),
            groups: Vec::new(),
            objective_at_instance: f64::NAN,
            value: inst.value,
            exact: false,
            networks: Vec::new(),
            reason: "instance does not match the problem's labels".into(),
        };
    }
    let scale = vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>())
        .fold(1.0f64, f64::max);
    let abs_tol = tol * scale;
    let gram = |i: usize, j: usize| -> f64 {
        vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum()
    };
    let mut max_residual = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for c in p.constraints() {
        let r = c.residual(gram, &fvals);
        max_residual = max_residual.max(r);
        if !(r <= abs_tol) {
            violations.push(Residual {
                label: c.label.clone(),
                value: r,
            });
        }
    }
    if p.constraints().is_empty() {
        max_residual = 0.0;
    }
    let objective_at_instance = p.objective().eval(gram, &fvals);

    let mut groups = Vec::new();
    let mut networks = Vec::new();
    let mut exact = true;
    let mut check_failed = false;
    for g in p.groups() {
        let data = g.to_numeric(&vectors, &fvals, inst.dimension);
        match check_numeric(&data, abs_tol) {
            Ok(rep) => {
                check_failed |= !rep.feasible;
                groups.push((g.name().to_string(), rep));
            }
            Err(_) => check_failed = true,
        }
        if !g.is_exact() {
            match &data {
                NumericData::Consensus { lam, steps, .. } => {
                    match recover_network_matrix(steps, *lam, 1e-5 * scale) {
                        Ok(rec) => {
                            exact &= rec.success;
                            networks.push((g.name().to_string(), rec));
                        }
                        Err(_) => exact = false,
                    }
                }
                _ => exact = false,
            }
        }
    }
    let objective_ok =
        (objective_at_instance - inst.value).abs() <= tol * (1.0 + inst.value.abs()) * scale;
    let (certification, reason) = if !violations.is_empty() || check_failed {
        (
            Certification::NumericalFailure,
            format!(
                "{} constraint(s) violated on the recovered instance",
                violations.len().max(1)
            ),
        )
    } else if !objective_ok {
        (
            Certification::NumericalFailure,
            format!(
                "objective on the instance {objective_at_instance} differs from the bound {}",
                inst.value
            ),
        )
    } else if !exact {
        let why = if networks.iter().any(|(_, n)| !n.success) {
            "network matrix not recovered"
        } else {
            "relaxation in use"
        };
        (
            Certification::UpperBoundOnly,
            format!("upper bound only: {why}"),
        )
    } else {
        (
            Certification::CertifiedTight,
            "instance satisfies exact interpolation constraints and attains the bound".into(),
        )
    };
    VerificationReport {
        certification,
        max_residual,
        violations,
        groups,
        objective_at_instance,
        value: inst.value,
        exact,
        networks,
        reason,
    }
}

/// Runs the DGD recurrence with the given network matrix, the recovered
/// starting points and the recovered gradients, and returns the largest
/// deviation from the recovered iterates (consensus outputs and the final
/// average).
pub fn replay_dgd(
    p: &PepProblem,
    inst: &WorstCaseInstance,
    w: &DMatrix<f64>,
    alphas: &[f64],
) -> Result<f64, PepError> {
    let vectors = inst.raw_vectors();
    let fvals = inst.raw_fvals();
    let consensus = p
        .groups()
        .iter()
        .find_map(|g| match g.to_numeric(&vectors, &fvals, inst.dimension) {
            NumericData::Consensus { steps, .. } => Some(steps),
            _ => None,
        })
        .ok_or_else(|| PepError::EmptyHandle("problem has no consensus steps".into()))?;
    let agents = consensus[0].x.len();
    let n = consensus.len();
    if alphas.len() != n {
        return Err(PepError::DimensionMismatch(format!(
            "{} step sizes for {n} consensus steps",
            alphas.len()
        )));
    }
    let lookup = |tag: &str| {
        inst.vector(tag)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| PepError::UnregisteredLabel(tag.to_string()))
    };
    let dim = inst.dimension;
    let mut x: Vec<Vec<f64>> = consensus[0].x.clone();
    let mut dev = 0.0f64;
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0f64, f64::max)
    };
    for (i, step) in consensus.iter().enumerate() {
        dev = dev.max(
            x.iter()
                .zip(&step.x)
                .map(|(a, b)| diff(a, b))
                .fold(0.0, f64::max),
        );
        let y: Vec<Vec<f64>> = (0..agents)
            .map(|a| {
                let mut out = vec![0.0; dim];
                for (b, xb) in x.iter().enumerate() {
                    for k in 0..dim {
                        out[k] += w[(a, b)] * xb[k];
                    }
                }
                out
            })
            .collect();
        dev = dev.max(
            y.iter()
                .zip(&step.y)
                .map(|(a, b)| diff(a, b))
                .fold(0.0, f64::max),
        );
        x = (0..agents)
            .map(|a| {
                let g = lookup(&format!("g{a}_{i}"))?;
                Ok(y[a]
                    .iter()
                    .zip(&g)
                    .map(|(v, gk)| v - alphas[i] * gk)
                    .collect())
            })
            .collect::<Result<_, PepError>>()?;
    }
    // the final average was queried by every local function
    let mut mean = vec![0.0; dim];
    for xa in &x {
        for k in 0..dim {
            mean[k] += xa[k] / agents as f64;
        }
    }
    for g in p.groups() {
        if let NumericData::Function { points, .. } = g.to_numeric(&vectors, &fvals, dim) {
            if let Some(bar) = points.iter().find(|pt| pt.tag == "bar") {
                dev = dev.max(diff(&bar.x, &mean));
            }
        }
    }
    Ok(dev)
}

/// Text export of an instance and its verification outcome.
pub fn write_instance(inst: &WorstCaseInstance, report: Option<&VerificationReport>) -> String {
    let clean = |t: &str| t.split_whitespace().collect::<Vec<_>>().join("_");
    let mut s = String::from("# pep-forge instance v1\n");
    let _ = writeln!(s, "dimension {}", inst.dimension);
    let _ = writeln!(s, "value {:.17e}", inst.value);
    let _ = writeln!(s, "reconstruction {:.17e}", inst.reconstruction_error);
    if let Some(r) = report {
        let _ = writeln!(s, "certification {}", r.certification);
        let _ = writeln!(s, "max-residual {:.17e}", r.max_residual);
        for v in &r.violations {
            let _ = writeln!(s, "residual {} {:.17e}", clean(&v.label), v.value);
        }
    }
    for (tag, v) in &inst.vectors {
        let _ = write!(s, "vector {}", clean(tag));
        for x in v {
            let _ = write!(s, " {x:.17e}");
        }
        s.push('\n');
    }
    for (tag, v) in &inst.fvals {
        let _ = writeln!(s, "fval {} {v:.17e}", clean(tag));
    }
    s
}

/// Parses [`write_instance`] output. Verification lines are returned as the
/// recorded certification, if any.
pub fn read_instance(text: &str) -> Result<(WorstCaseInstance, Option<Certification>), PepError> {
    let err = |line: usize, msg: String| PepError::Parse {
        path: format!("line {line}"),
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "# pep-forge instance v1")) => {}
        _ => return Err(err(1, "missing `# pep-forge instance v1` header".into())),
    }
    let num = |line: usize, s: &str| {
        s.parse::<f64>()
            .map_err(|e| err(line, format!("bad number `{s}`: {e}")))
    };
    let mut inst = WorstCaseInstance {
        dimension: 0,
        vectors: Vec::new(),
        fvals: Vec::new(),
        value: f64::NAN,
        reconstruction_error: 0.0,
    };
    let mut cert = None;
    for (ln, l) in lines {
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut parts = l.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let want = |n: usize| {
            if rest.len() == n {
                Ok(())
            } else {
                Err(err(
                    ln,
                    format!("`{key}` expects {n} field(s), got {}", rest.len()),
                ))
            }
        };
        match key {
            "dimension" => {
                want(1)?;
                inst.dimension = rest[0]
                    .parse()
                    .map_err(|e| err(ln, format!("bad dimension: {e}")))?;
            }
            "value" => {
                want(1)?;
                inst.value = num(ln, rest[0])?;
            }
            "reconstruction" => {
                want(1)?;
                inst.reconstruction_error = num(ln, rest[0])?;
            }
            "certification" => {
                want(1)?;
                cert = Some(
                    Certification::parse(rest[0])
                        .ok_or_else(|| err(ln, format!("unknown certification `{}`", rest[0])))?,
                );
            }
            "max-residual" | "residual" => {}
            "vector" => {
                if rest.is_empty() {
                    return Err(err(ln, "vector without a tag".into()));
                }
                let v = rest[1..]
                    .iter()
                    .map(|s| num(ln, s))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.len() != inst.dimension {
                    return Err(err(
                        ln,
                        format!(
                            "vector of length {} in dimension {}",
                            v.len(),
                            inst.dimension
                        ),
                    ));
                }
                inst.vectors.push((rest[0].to_string(), v));
            }
            "fval" => {
                want(2)?;
                inst.fvals.push((rest[0].to_string(), num(ln, rest[1])?));
            }
            other => return Err(err(ln, format!("unknown record `{other}`"))),
        }
    }
    Ok((inst, cert))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_identity() {
        let f = factor_gram(&DMatrix::identity(3, 3), 1e-7).unwrap();
        assert_eq!(f.dimension, 3);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = f.vectors[i]
                    .iter()
                    .zip(&f.vectors[j])
                    .map(|(a, b)| a * b)
                    .sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_rank_one() {
        let f = factor_gram(&DMatrix::from_element(3, 3, 1.0), 1e-7).unwrap();
        assert_eq!(f.dimension, 1);
        for v in &f.vectors {
            assert!((v[0].abs() - 1.0).abs() < 1e-12);
            assert_eq!(v[0].signum(), f.vectors[0][0].signum());
        }
        assert!(f.reconstruction_error < 1e-12);
    }

    #[test]
    fn factor_rejects_indefinite() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(factor_gram(&g, 1e-7).is_err());
    }

    fn two_agent(lam: f64, v: [f64; 2]) -> Vec<NumericStep> {
        vec![NumericStep {
            x: vec![v.to_vec(), vec![-v[0], -v[1]]],
            y: vec![vec![lam * v[0], lam * v[1]], vec![-lam * v[0], -lam * v[1]]],
        }]
    }

    #[test]
    fn recovers_two_agent_matrix() {
        let lam = 0.3;
        let rec = recover_network_matrix(&two_agent(lam, [1.0, 0.5]), lam, 1e-9).unwrap();
        assert!(rec.success, "{}", rec.message);
        assert!(rec.residual < 1e-20);
        let expected = [(1.0 + lam) / 2.0, (1.0 - lam) / 2.0];
        assert!((rec.w[(0, 0)] - expected[0]).abs() < 1e-12);
        assert!((rec.w[(0, 1)] - expected[1]).abs() < 1e-12);
        assert!((rec.eigenvalues[0] - lam).abs() < 1e-12);
    }

    #[test]
    fn broken_average_leaves_a_residual() {
        let eps = 1e-2;
        let mut steps = two_agent(0.3, [1.0, 0.0]);
        steps[0].y[0][0] += eps;
        let rec = recover_network_matrix(&steps, 0.3, 1e-9).unwrap();
        assert!(rec.residual >= eps * eps / 2.0 * (1.0 - 1e-9));
        assert!(!rec.success);
    }

    #[test]
    fn single_step_three_agents_is_underdetermined() {
        let steps = vec![NumericStep {
            x: vec![vec![1.0], vec![0.0], vec![-1.0]],
            y: vec![vec![0.5], vec![0.0], vec![-0.5]],
        }];
        let rec = recover_network_matrix(&steps, 0.9, 1e-9).unwrap();
        assert!(rec.underdetermined);
        assert!(rec.residual < 1e-20);
    }

    #[test]
    fn instance_round_trip() {
        let inst = WorstCaseInstance {
            dimension: 2,
            vectors: vec![
                ("x0".into(), vec![1.0, -0.25]),
                ("g0".into(), vec![0.1, 1e-17]),
            ],
            fvals: vec![("f0".into(), 0.5), ("f*".into(), 0.0)],
            value: 1.0 / 42.0,
            reconstruction_error: 1e-12,
        };
        let text = write_instance(&inst, None);
        let (back, cert) = read_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert!(cert.is_none());
        assert!(read_instance("dimension 2\n").is_err());
        let bad = text.replace("vector g0 ", "vector g0 1.0 ");
        assert!(read_instance(&bad).is_err());
    }
}
