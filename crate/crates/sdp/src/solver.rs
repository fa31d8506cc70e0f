use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Block, SdpError, StandardSdp};

/// Termination status of [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
    NumericalFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal-infeasible",
            Status::DualInfeasible => "dual-infeasible",
            Status::MaxIter => "max-iter",
            Status::NumericalFailure => "numerical-failure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative duality-gap tolerance, measured against `1 + |objective|`.
    pub gap_tol: f64,
    /// Relative primal and dual residual tolerance.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Threshold for accepting Farkas-type infeasibility certificates.
    pub infeas_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            feas_tol: 1e-7,
            max_iter: 200,
            infeas_tol: 1e-8,
        }
    }
}

/// Value of one block of a primal or dual-slack variable.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockValue {
    Matrix(DMatrix<f64>),
    Vector(DVector<f64>),
}

impl BlockValue {
    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            BlockValue::Matrix(m) => Some(m),
            BlockValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            BlockValue::Vector(v) => Some(v),
            BlockValue::Matrix(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: Status,
    /// Primal variable, one value per block.
    pub x: Vec<BlockValue>,
    /// Dual slack, one value per block (zero for free blocks).
    pub z: Vec<BlockValue>,
    /// Dual multipliers, one per equality.
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal_objective - dual_objective|`.
    pub gap: f64,
    /// `<X, Z>` summed over the cone blocks.
    pub complementarity: f64,
    /// `||b - A x|| / (1 + ||b||)`.
    pub primal_residual: f64,
    /// `||c - A^T y - z|| / (1 + ||c||)`.
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn objective(&self) -> f64 {
        self.primal_objective
    }

    /// Largest of the relative primal residual, dual residual, gap and
    /// complementarity, the last two divided by `1 + |objective|`.
    pub fn max_kkt_residual(&self) -> f64 {
        let scale = 1.0 + self.primal_objective.abs();
        self.primal_residual
            .max(self.dual_residual)
            .max(self.gap / scale)
            .max(self.complementarity.abs() / scale)
    }
}

/// Solves `sdp` with a Mehrotra predictor-corrector method using
/// Nesterov-Todd scaling. Deterministic: the same input always produces the
/// same iterate sequence.
///
/// A run that stalls is retried on a diagonally rescaled copy of the problem
/// whose variables are normalized by the magnitudes reached in the stalled
/// run; the result is mapped back to the original variables.
pub fn solve(sdp: &StandardSdp, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    sdp.validate()?;
    let mut sol = Ipm::new(&Data::new(sdp), opts).run();
    let mut scales: Vec<DVector<f64>> = sdp
        .blocks
        .iter()
        .map(|b| DVector::from_element(b.size(), 1.0))
        .collect();
    for _ in 0..RESCALE_ROUNDS {
        if !matches!(sol.status, Status::NumericalFailure | Status::MaxIter) {
            break;
        }
        let Some(step) = variable_scales(sdp, &sol) else {
            break;
        };
        for (s, t) in scales.iter_mut().zip(&step) {
            s.component_mul_assign(t);
        }
        let scaled = rescale_problem(sdp, &scales);
        let mut retry = Ipm::new(&Data::new(&scaled), opts).run();
        unscale_solution(&mut retry, &scales);
        let better =
            retry.status == Status::Optimal || retry.max_kkt_residual() < sol.max_kkt_residual();
        if !better {
            break;
        }
        sol = retry;
    }
    Ok(sol)
}

const RESCALE_ROUNDS: usize = 2;

const REFINE_STEPS: usize = 2;

/// Relative floor on a variable scale; keeps scales bounded when the
/// solution has (near) zero entries.
const SCALE_FLOOR: f64 = 1e-4;

/// Per-block scale factors taken from the square roots of the diagonal of
/// each semidefinite block and the magnitudes of free variables. Nonnegative
/// blocks are left alone since active slacks vanish at the solution.
/// Each block is normalized to unit geometric mean.
fn variable_scales(sdp: &StandardSdp, sol: &SdpSolution) -> Option<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(sdp.blocks.len());
    let mut changed = false;
    for (b, x) in sdp.blocks.iter().zip(&sol.x) {
        let raw: DVector<f64> = match (b, x) {
            (Block::Psd(_), BlockValue::Matrix(m)) => m.diagonal().map(|v| v.max(0.0).sqrt()),
            (Block::Free(_), BlockValue::Vector(v)) => v.abs(),
            _ => DVector::from_element(b.size(), 1.0),
        };
        if !raw.iter().all(|v| v.is_finite()) {
            return None;
        }
        let top = raw.max();
        let s = if matches!(b, Block::NonNeg(_)) || top <= 0.0 {
            DVector::from_element(b.size(), 1.0)
        } else {
            let floored = raw.map(|v| v.max(SCALE_FLOOR * top));
            let log_mean = floored.iter().map(|v| v.ln()).sum::<f64>() / floored.len() as f64;
            floored / log_mean.exp()
        };
        changed |= s.iter().any(|v| (v - 1.0).abs() > 0.5);
        out.push(s);
    }
    changed.then_some(out)
}

/// Substitutes `X = D X' D` on semidefinite blocks and `x = s x'` on vector
/// blocks.
fn rescale_problem(sdp: &StandardSdp, scales: &[DVector<f64>]) -> StandardSdp {
    let scale_form = |f: &crate::LinearForm| crate::LinearForm {
        entries: f
            .entries
            .iter()
            .map(|e| {
                let s = &scales[e.block];
                let factor = match sdp.blocks[e.block] {
                    Block::Psd(_) => s[e.row] * s[e.col],
                    _ => s[e.row],
                };
                crate::Entry::new(e.block, e.row, e.col, e.value * factor)
            })
            .collect(),
    };
    StandardSdp {
        blocks: sdp.blocks.clone(),
        objective: scale_form(&sdp.objective),
        equalities: sdp
            .equalities
            .iter()
            .map(|(f, b)| (scale_form(f), *b))
            .collect(),
    }
}

/// Inverse of [`rescale_problem`]: `X = D X' D`, `Z = D^-1 Z' D^-1`.
/// Multipliers and objective values are invariant.
fn unscale_solution(sol: &mut SdpSolution, scales: &[DVector<f64>]) {
    for ((x, z), s) in sol.x.iter_mut().zip(sol.z.iter_mut()).zip(scales) {
        match (x, z) {
            (BlockValue::Matrix(xm), BlockValue::Matrix(zm)) => {
                let n = s.len();
                for i in 0..n {
                    for j in 0..n {
                        xm[(i, j)] *= s[i] * s[j];
                        zm[(i, j)] /= s[i] * s[j];
                    }
                }
            }
            (BlockValue::Vector(xv), BlockValue::Vector(zv)) => {
                xv.component_mul_assign(s);
                zv.component_div_assign(s);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Pos {
    Psd(usize),
    Lp(usize),
    Free(usize),
}

#[derive(Debug, Clone, Default)]
struct Row {
    psd: Vec<(usize, Vec<(usize, usize, f64)>)>,
    lp: Vec<(usize, f64)>,
    free: Vec<(usize, f64)>,
}

/// Preprocessed, row-scaled problem data.
struct Data {
    blocks: Vec<Block>,
    pos: Vec<Pos>,
    psd_sizes: Vec<usize>,
    n_lp: usize,
    n_free: usize,
    rows: Vec<Row>,
    /// Original equality index for each kept row.
    row_origin: Vec<usize>,
    /// Scaled row = original row / row_norm.
    row_norm: Vec<f64>,
    b: DVector<f64>,
    b_orig_norm: f64,
    c_psd: Vec<DMatrix<f64>>,
    c_lp: DVector<f64>,
    c_free: DVector<f64>,
    c_norm: f64,
    /// Per semidefinite block: (row, index into `rows[row].psd`).
    psd_rows: Vec<Vec<(usize, usize)>>,
    /// Per LP variable: (row, coefficient).
    lp_rows: Vec<Vec<(usize, f64)>>,
    /// Free variables that appear in some row.
    free_active: Vec<usize>,
    /// Dense `m x n_free_active` coefficient matrix of the free variables.
    af: DMatrix<f64>,
    m_total: usize,
    /// A row with no coefficients but nonzero right-hand side.
    trivially_infeasible: bool,
    /// A free variable with nonzero cost that appears in no row.
    trivially_unbounded: bool,
}

impl Data {
    fn new(sdp: &StandardSdp) -> Self {
        let mut pos = Vec::with_capacity(sdp.blocks.len());
        let mut psd_sizes = Vec::new();
        let (mut n_lp, mut n_free) = (0, 0);
        for b in &sdp.blocks {
            match *b {
                Block::Psd(n) => {
                    pos.push(Pos::Psd(psd_sizes.len()));
                    psd_sizes.push(n);
                }
                Block::NonNeg(n) => {
                    pos.push(Pos::Lp(n_lp));
                    n_lp += n;
                }
                Block::Free(n) => {
                    pos.push(Pos::Free(n_free));
                    n_free += n;
                }
            }
        }

        let to_row = |form: &crate::LinearForm| -> Row {
            let form = form.canonical();
            let mut row = Row::default();
            for e in &form.entries {
                match pos[e.block] {
                    Pos::Psd(k) => {
                        let (r, c) = (e.row.min(e.col), e.row.max(e.col));
                        match row.psd.iter_mut().find(|(kk, _)| *kk == k) {
                            Some((_, v)) => v.push((r, c, e.value)),
                            None => row.psd.push((k, vec![(r, c, e.value)])),
                        }
                    }
                    Pos::Lp(off) => row.lp.push((off + e.row, e.value)),
                    Pos::Free(off) => row.free.push((off + e.row, e.value)),
                }
            }
            row.psd.sort_by_key(|(k, _)| *k);
            row
        };

        let objective = to_row(&sdp.objective);
        let mut c_psd: Vec<DMatrix<f64>> =
            psd_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut c_lp = DVector::zeros(n_lp);
        let mut c_free = DVector::zeros(n_free);
        for (k, ents) in &objective.psd {
            for &(p, q, v) in ents {
                c_psd[*k][(p, q)] += v;
                if p != q {
                    c_psd[*k][(q, p)] += v;
                }
            }
        }
        for &(l, v) in &objective.lp {
            c_lp[l] += v;
        }
        for &(f, v) in &objective.free {
            c_free[f] += v;
        }

        let mut rows = Vec::new();
        let mut row_origin = Vec::new();
        let mut row_norm = Vec::new();
        let mut b = Vec::new();
        let mut trivially_infeasible = false;
        let mut b_orig_sq = 0.0;
        for (i, (form, rhs)) in sdp.equalities.iter().enumerate() {
            b_orig_sq += rhs * rhs;
            let mut row = to_row(form);
            let mut sq = 0.0;
            for (_, ents) in &row.psd {
                for &(p, q, v) in ents {
                    sq += if p == q { v * v } else { 2.0 * v * v };
                }
            }
            sq += row.lp.iter().map(|(_, v)| v * v).sum::<f64>();
            sq += row.free.iter().map(|(_, v)| v * v).sum::<f64>();
            let norm = sq.sqrt();
            if norm == 0.0 {
                if *rhs != 0.0 {
                    trivially_infeasible = true;
                }
                continue;
            }
            let s = 1.0 / norm;
            for (_, ents) in row.psd.iter_mut() {
                for e in ents.iter_mut() {
                    e.2 *= s;
                }
            }
            for e in row.lp.iter_mut() {
                e.1 *= s;
            }
            for e in row.free.iter_mut() {
                e.1 *= s;
            }
            rows.push(row);
            row_origin.push(i);
            row_norm.push(norm);
            b.push(rhs * s);
        }
        let m = rows.len();

        let mut psd_rows = vec![Vec::new(); psd_sizes.len()];
        let mut lp_rows = vec![Vec::new(); n_lp];
        let mut free_used = vec![false; n_free];
        for (i, row) in rows.iter().enumerate() {
            for (idx, (k, _)) in row.psd.iter().enumerate() {
                psd_rows[*k].push((i, idx));
            }
            for &(l, v) in &row.lp {
                lp_rows[l].push((i, v));
            }
            for &(f, _) in &row.free {
                free_used[f] = true;
            }
        }
        let free_active: Vec<usize> = (0..n_free).filter(|&f| free_used[f]).collect();
        let trivially_unbounded = (0..n_free).any(|f| !free_used[f] && c_free[f] != 0.0);
        let mut col_of = vec![usize::MAX; n_free];
        for (j, &f) in free_active.iter().enumerate() {
            col_of[f] = j;
        }
        let mut af = DMatrix::zeros(m, free_active.len());
        for (i, row) in rows.iter().enumerate() {
            for &(f, v) in &row.free {
                af[(i, col_of[f])] += v;
            }
        }

        let c_sq: f64 = c_psd.iter().map(|c| c.norm_squared()).sum::<f64>()
            + c_lp.norm_squared()
            + c_free.norm_squared();
        let c_norm = c_sq.sqrt();

        Data {
            blocks: sdp.blocks.clone(),
            pos,
            psd_sizes,
            n_lp,
            n_free,
            m_total: sdp.equalities.len(),
            rows,
            row_origin,
            row_norm,
            b: DVector::from_vec(b),
            b_orig_norm: b_orig_sq.sqrt(),
            c_psd,
            c_lp,
            c_free,
            c_norm,
            psd_rows,
            lp_rows,
            free_active,
            af,
            trivially_infeasible,
            trivially_unbounded,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn nu(&self) -> f64 {
        (self.psd_sizes.iter().sum::<usize>() + self.n_lp) as f64
    }

    fn apply_a(&self, v: &Cone) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for (i, row) in self.rows.iter().enumerate() {
            let mut s = 0.0;
            for (k, ents) in &row.psd {
                let x = &v.psd[*k];
                for &(p, q, a) in ents {
                    s += if p == q {
                        a * x[(p, p)]
                    } else {
                        2.0 * a * x[(p, q)]
                    };
                }
            }
            for &(l, a) in &row.lp {
                s += a * v.lp[l];
            }
            for &(f, a) in &row.free {
                s += a * v.free[f];
            }
            out[i] = s;
        }
        out
    }

    fn apply_at(&self, y: &DVector<f64>) -> Cone {
        let mut out = Cone::zeros(self);
        for (i, row) in self.rows.iter().enumerate() {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (k, ents) in &row.psd {
                let s = &mut out.psd[*k];
                for &(p, q, a) in ents {
                    s[(p, q)] += yi * a;
                    if p != q {
                        s[(q, p)] += yi * a;
                    }
                }
            }
            for &(l, a) in &row.lp {
                out.lp[l] += yi * a;
            }
            for &(f, a) in &row.free {
                out.free[f] += yi * a;
            }
        }
        out
    }

    fn cost(&self) -> Cone {
        Cone {
            psd: self.c_psd.clone(),
            lp: self.c_lp.clone(),
            free: self.c_free.clone(),
        }
    }
}

/// A point in the (product) variable space.
#[derive(Debug, Clone)]
struct Cone {
    psd: Vec<DMatrix<f64>>,
    lp: DVector<f64>,
    free: DVector<f64>,
}

impl Cone {
    fn zeros(d: &Data) -> Self {
        Cone {
            psd: d.psd_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            lp: DVector::zeros(d.n_lp),
            free: DVector::zeros(d.n_free),
        }
    }

    fn dot(&self, other: &Cone) -> f64 {
        self.psd
            .iter()
            .zip(&other.psd)
            .map(|(a, b)| a.dot(b))
            .sum::<f64>()
            + self.lp.dot(&other.lp)
            + self.free.dot(&other.free)
    }

    fn cone_dot(&self, other: &Cone) -> f64 {
        self.psd
            .iter()
            .zip(&other.psd)
            .map(|(a, b)| a.dot(b))
            .sum::<f64>()
            + self.lp.dot(&other.lp)
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, alpha: f64, dir: &Cone) {
        for (a, b) in self.psd.iter_mut().zip(&dir.psd) {
            *a += b * alpha;
            symmetrize(a);
        }
        self.lp += &dir.lp * alpha;
        self.free += &dir.free * alpha;
    }

    fn sub(&self, other: &Cone) -> Cone {
        Cone {
            psd: self
                .psd
                .iter()
                .zip(&other.psd)
                .map(|(a, b)| a - b)
                .collect(),
            lp: &self.lp - &other.lp,
            free: &self.free - &other.free,
        }
    }
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Nesterov-Todd scaling data for one semidefinite block:
/// `W = G G^T`, `G^{-1} X G^{-T} = G^T Z G = diag(d)`.
struct NtScaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    d: DVector<f64>,
    lx_inv: DMatrix<f64>,
    lz_inv: DMatrix<f64>,
}

fn lower_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<NtScaling> {
    let lx = x.clone().cholesky()?.l();
    let lz = z.clone().cholesky()?.l();
    let svd = (lz.transpose() * &lx).svd(true, true);
    let v = svd.v_t?.transpose();
    let d = svd.singular_values;
    if d.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return None;
    }
    let n = x.nrows();
    let lx_inv = lower_inverse(&lx)?;
    let lz_inv = lower_inverse(&lz)?;
    let mut g = &lx * &v;
    let mut g_inv = v.transpose() * &lx_inv;
    for j in 0..n {
        let s = d[j].sqrt();
        for i in 0..n {
            g[(i, j)] /= s;
            g_inv[(j, i)] *= s;
        }
    }
    let mut w = &g * g.transpose();
    symmetrize(&mut w);
    Some(NtScaling {
        g,
        g_inv,
        w,
        d,
        lx_inv,
        lz_inv,
    })
}

/// Largest step `a` with `L^{-1}(X + a dX)L^{-T}` still positive semidefinite
/// (returned as `f64::INFINITY` when unbounded).
fn max_step_psd(l_inv: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    if dx.nrows() == 0 {
        return f64::INFINITY;
    }
    let mut m = l_inv * dx * l_inv.transpose();
    symmetrize(&mut m);
    let lam = SymmetricEigen::new(m).eigenvalues.min();
    if lam < 0.0 {
        -1.0 / lam
    } else {
        f64::INFINITY
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    let mut a = f64::INFINITY;
    for (xi, di) in x.iter().zip(dx.iter()) {
        if *di < 0.0 {
            a = a.min(-xi / di);
        }
    }
    a
}

struct Iterate {
    x: Cone,
    y: DVector<f64>,
    z: Cone,
}

struct Metrics {
    pobj: f64,
    dobj: f64,
    gap: f64,
    compl: f64,
    pinf: f64,
    dinf: f64,
}

impl Metrics {
    fn score(&self) -> f64 {
        let scale = 1.0 + self.pobj.abs();
        self.pinf
            .max(self.dinf)
            .max(self.gap / scale)
            .max(self.compl.abs() / scale)
    }
}

struct Ipm<'a> {
    d: &'a Data,
    opts: &'a SolveOptions,
}

struct Factored {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k: DMatrix<f64>,
}

impl<'a> Ipm<'a> {
    fn new(d: &'a Data, opts: &'a SolveOptions) -> Self {
        Self { d, opts }
    }

    fn initial(&self) -> Iterate {
        let d = self.d;
        let n_max = d.psd_sizes.iter().copied().max().unwrap_or(1).max(1) as f64;
        // rows have unit norm after scaling, so ||A_i|| = 1 below
        let b_max = d.b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let xi = 10.0_f64
            .max(n_max.sqrt())
            .max(n_max.sqrt() * (1.0 + b_max) / 2.0);
        let eta = 10.0_f64.max(n_max.sqrt()).max(d.c_norm);
        let mut x = Cone::zeros(d);
        let mut z = Cone::zeros(d);
        for (k, &n) in d.psd_sizes.iter().enumerate() {
            x.psd[k] = DMatrix::identity(n, n) * xi;
            z.psd[k] = DMatrix::identity(n, n) * eta;
        }
        x.lp.fill(xi);
        z.lp.fill(eta);
        Iterate {
            x,
            y: DVector::zeros(d.m()),
            z,
        }
    }

    fn metrics(&self, it: &Iterate) -> (Metrics, DVector<f64>, Cone) {
        let d = self.d;
        let rp = &d.b - d.apply_a(&it.x);
        let aty = d.apply_at(&it.y);
        let mut rd = d.cost().sub(&aty).sub(&it.z);
        // only active free variables carry a dual equation
        let mut active = vec![false; d.n_free];
        for &f in &d.free_active {
            active[f] = true;
        }
        for f in 0..d.n_free {
            if !active[f] {
                rd.free[f] = 0.0;
            }
        }
        let rp_orig: f64 = rp
            .iter()
            .zip(&d.row_norm)
            .map(|(r, n)| (r * n) * (r * n))
            .sum::<f64>()
            .sqrt();
        let pobj = d.cost().dot(&it.x);
        let dobj = d.b.dot(&it.y);
        let compl = it.x.cone_dot(&it.z);
        let m = Metrics {
            pobj,
            dobj,
            gap: (pobj - dobj).abs(),
            compl,
            pinf: rp_orig / (1.0 + d.b_orig_norm),
            dinf: rd.norm() / (1.0 + d.c_norm),
        };
        (m, rp, rd)
    }

    fn schur(&self, nt: &[NtScaling], wl: &DVector<f64>) -> DMatrix<f64> {
        let d = self.d;
        let m = d.m();
        let mut mm = DMatrix::<f64>::zeros(m, m);
        for (k, sc) in nt.iter().enumerate() {
            let n = d.psd_sizes[k];
            if n == 0 {
                continue;
            }
            // row-major copy of W for tight loops (W is symmetric)
            let w: Vec<f64> = sc.w.as_slice().to_vec();
            let list = &d.psd_rows[k];
            let mut t = vec![0.0; n * n];
            let mut b = vec![0.0; n * n];
            let mut nzrow = vec![false; n];
            let mut rows_used = Vec::with_capacity(n);
            for (jj, &(j, jidx)) in list.iter().enumerate() {
                let ents_j = &d.rows[j].psd[jidx].1;
                // T = A_j W
                for r in rows_used.drain(..) {
                    t[r * n..(r + 1) * n].iter_mut().for_each(|v| *v = 0.0);
                    nzrow[r] = false;
                }
                for &(p, q, v) in ents_j {
                    for c in 0..n {
                        t[p * n + c] += v * w[q * n + c];
                    }
                    if !nzrow[p] {
                        nzrow[p] = true;
                        rows_used.push(p);
                    }
                    if p != q {
                        for c in 0..n {
                            t[q * n + c] += v * w[p * n + c];
                        }
                        if !nzrow[q] {
                            nzrow[q] = true;
                            rows_used.push(q);
                        }
                    }
                }
                rows_used.sort_unstable();
                // B = W T (upper triangle)
                for a in 0..n {
                    let brow = &mut b[a * n..(a + 1) * n];
                    brow[a..].iter_mut().for_each(|v| *v = 0.0);
                    for &r in &rows_used {
                        let war = w[a * n + r];
                        if war == 0.0 {
                            continue;
                        }
                        let trow = &t[r * n..(r + 1) * n];
                        for c in a..n {
                            brow[c] += war * trow[c];
                        }
                    }
                }
                for &(i, iidx) in &list[jj..] {
                    let ents_i = &d.rows[i].psd[iidx].1;
                    let mut s = 0.0;
                    for &(p, q, v) in ents_i {
                        s += if p == q {
                            v * b[p * n + p]
                        } else {
                            2.0 * v * b[p * n + q]
                        };
                    }
                    mm[(i, j)] += s;
                    if i != j {
                        mm[(j, i)] += s;
                    }
                }
            }
        }
        for (l, entries) in d.lp_rows.iter().enumerate() {
            let wl = wl[l];
            for (a, &(i, vi)) in entries.iter().enumerate() {
                for &(j, vj) in &entries[a..] {
                    let s = wl * vi * vj;
                    mm[(i, j)] += s;
                    if i != j {
                        mm[(j, i)] += s;
                    }
                }
            }
        }
        mm
    }

    fn factor(&self, mm: DMatrix<f64>) -> Option<Factored> {
        let d = self.d;
        let m = d.m();
        let nf = d.free_active.len();
        let mut k = DMatrix::<f64>::zeros(m + nf, m + nf);
        k.view_mut((0, 0), (m, m)).copy_from(&mm);
        k.view_mut((0, m), (m, nf)).copy_from(&d.af);
        k.view_mut((m, 0), (nf, m)).copy_from(&d.af.transpose());
        let scale = (0..m).map(|i| mm[(i, i)].abs()).fold(1.0, f64::max);
        let delta = 1e-14 * scale;
        let mut kr = k.clone();
        for i in 0..m {
            kr[(i, i)] += delta;
        }
        for i in m..(m + nf) {
            kr[(i, i)] -= delta;
        }
        let lu = kr.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Factored { lu, k })
    }

    fn solve_kkt(&self, f: &Factored, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = f.lu.solve(rhs)?;
        for _ in 0..2 {
            let r = rhs - &f.k * &sol;
            let corr = f.lu.solve(&r)?;
            sol += corr;
        }
        if sol.iter().all(|v| v.is_finite()) {
            Some(sol)
        } else {
            None
        }
    }

    /// Solves the Newton system for a given complementarity right-hand side
    /// `rc` (so that `dX + W dZ W = rc` and `dx + (x/z) dz = rc`).
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        f: &Factored,
        nt: &[NtScaling],
        wl: &DVector<f64>,
        rp: &DVector<f64>,
        rd: &Cone,
        rc: &Cone,
    ) -> Option<(Cone, DVector<f64>, Cone)> {
        let (mut dx, mut dy, mut dz) = self.reduced_direction(f, nt, wl, rp, rd, rc)?;
        // refinement against the unreduced Newton system
        let mut err = self.newton_residual(nt, wl, rp, rd, rc, &dx, &dy, &dz);
        for _ in 0..REFINE_STEPS {
            if err.0 == 0.0 {
                break;
            }
            let (ep, ed, ec) = (&err.1, &err.2, &err.3);
            let Some((cx, cy, cz)) = self.reduced_direction(f, nt, wl, ep, ed, ec) else {
                break;
            };
            let (mut nx, mut nz) = (dx.clone(), dz.clone());
            nx.axpy(1.0, &cx);
            nz.axpy(1.0, &cz);
            let ny = &dy + &cy;
            let next = self.newton_residual(nt, wl, rp, rd, rc, &nx, &ny, &nz);
            if next.0 >= err.0 {
                break;
            }
            (dx, dy, dz, err) = (nx, ny, nz, next);
        }
        Some((dx, dy, dz))
    }

    /// Residual of the Newton equations `A dx = rp`, `A^T dy + dz = rd`,
    /// `dx + W dz W = rc`, with its scaled norm first.
    #[allow(clippy::too_many_arguments)]
    fn newton_residual(
        &self,
        nt: &[NtScaling],
        wl: &DVector<f64>,
        rp: &DVector<f64>,
        rd: &Cone,
        rc: &Cone,
        dx: &Cone,
        dy: &DVector<f64>,
        dz: &Cone,
    ) -> (f64, DVector<f64>, Cone, Cone) {
        let d = self.d;
        let ep = rp - d.apply_a(dx);
        let ed = rd.sub(&d.apply_at(dy)).sub(dz);
        let mut ec = Cone::zeros(d);
        for (k, sc) in nt.iter().enumerate() {
            let mut r = &rc.psd[k] - &dx.psd[k] - &sc.w * &dz.psd[k] * &sc.w;
            symmetrize(&mut r);
            ec.psd[k] = r;
        }
        for l in 0..d.n_lp {
            ec.lp[l] = rc.lp[l] - dx.lp[l] - wl[l] * dz.lp[l];
        }
        let mut ed = ed;
        let mut active = vec![false; d.n_free];
        for &fi in &d.free_active {
            active[fi] = true;
        }
        for (fi, a) in active.iter().enumerate() {
            if !a {
                ed.free[fi] = 0.0;
            }
        }
        ec.free.fill(0.0);
        let norm = ep.norm() / (1.0 + rp.norm())
            + ed.norm() / (1.0 + rd.norm())
            + ec.norm() / (1.0 + rc.norm());
        (norm, ep, ed, ec)
    }

    #[allow(clippy::too_many_arguments)]
    fn reduced_direction(
        &self,
        f: &Factored,
        nt: &[NtScaling],
        wl: &DVector<f64>,
        rp: &DVector<f64>,
        rd: &Cone,
        rc: &Cone,
    ) -> Option<(Cone, DVector<f64>, Cone)> {
        let d = self.d;
        let m = d.m();
        // U = rc - E(rd)
        let mut u = Cone::zeros(d);
        for (k, sc) in nt.iter().enumerate() {
            u.psd[k] = &rc.psd[k] - &sc.w * &rd.psd[k] * &sc.w;
        }
        for l in 0..d.n_lp {
            u.lp[l] = rc.lp[l] - wl[l] * rd.lp[l];
        }
        let au = d.apply_a(&u);
        let nf = d.free_active.len();
        let mut rhs = DVector::zeros(m + nf);
        rhs.rows_mut(0, m).copy_from(&(rp - au));
        for (j, &fi) in d.free_active.iter().enumerate() {
            rhs[m + j] = rd.free[fi];
        }
        let sol = self.solve_kkt(f, &rhs)?;
        let dy = sol.rows(0, m).into_owned();
        let aty = d.apply_at(&dy);
        let mut dz = Cone::zeros(d);
        let mut dx = Cone::zeros(d);
        for (k, sc) in nt.iter().enumerate() {
            let mut z = &rd.psd[k] - &aty.psd[k];
            symmetrize(&mut z);
            let mut x = &rc.psd[k] - &sc.w * &z * &sc.w;
            symmetrize(&mut x);
            dz.psd[k] = z;
            dx.psd[k] = x;
        }
        for l in 0..d.n_lp {
            dz.lp[l] = rd.lp[l] - aty.lp[l];
            dx.lp[l] = rc.lp[l] - wl[l] * dz.lp[l];
        }
        for (j, &fi) in d.free_active.iter().enumerate() {
            dx.free[fi] = sol[m + j];
        }
        Some((dx, dy, dz))
    }

    fn step_lengths(&self, it: &Iterate, nt: &[NtScaling], dx: &Cone, dz: &Cone) -> (f64, f64) {
        let mut ap = max_step_lp(&it.x.lp, &dx.lp);
        let mut ad = max_step_lp(&it.z.lp, &dz.lp);
        for (k, sc) in nt.iter().enumerate() {
            ap = ap.min(max_step_psd(&sc.lx_inv, &dx.psd[k]));
            ad = ad.min(max_step_psd(&sc.lz_inv, &dz.psd[k]));
        }
        (ap, ad)
    }

    fn finish(&self, it: Iterate, status: Status, iterations: usize) -> SdpSolution {
        let d = self.d;
        let (m, _, _) = self.metrics(&it);
        let mut y = vec![0.0; d.m_total];
        for (i, &orig) in d.row_origin.iter().enumerate() {
            y[orig] = it.y[i] / d.row_norm[i];
        }
        let mut xs = Vec::with_capacity(d.blocks.len());
        let mut zs = Vec::with_capacity(d.blocks.len());
        for (bi, blk) in d.blocks.iter().enumerate() {
            match (d.pos[bi], blk) {
                (Pos::Psd(k), _) => {
                    xs.push(BlockValue::Matrix(it.x.psd[k].clone()));
                    zs.push(BlockValue::Matrix(it.z.psd[k].clone()));
                }
                (Pos::Lp(off), b) => {
                    let n = b.size();
                    xs.push(BlockValue::Vector(it.x.lp.rows(off, n).into_owned()));
                    zs.push(BlockValue::Vector(it.z.lp.rows(off, n).into_owned()));
                }
                (Pos::Free(off), b) => {
                    let n = b.size();
                    xs.push(BlockValue::Vector(it.x.free.rows(off, n).into_owned()));
                    zs.push(BlockValue::Vector(DVector::zeros(n)));
                }
            }
        }
        SdpSolution {
            status,
            x: xs,
            z: zs,
            y,
            primal_objective: m.pobj,
            dual_objective: m.dobj,
            gap: m.gap,
            complementarity: m.compl,
            primal_residual: m.pinf,
            dual_residual: m.dinf,
            iterations,
        }
    }

    fn run(&self) -> SdpSolution {
        let d = self.d;
        let opts = self.opts;
        let mut it = self.initial();
        if d.trivially_infeasible {
            return self.finish(it, Status::PrimalInfeasible, 0);
        }
        if d.trivially_unbounded {
            return self.finish(it, Status::DualInfeasible, 0);
        }
        let nu = d.nu();
        let mut best: Option<(f64, Iterate, usize)> = None;
        let mut gamma = 0.9;
        let mut stalls = 0;
        let mut failed = false;

        for iter in 0..opts.max_iter {
            let (met, rp, rd) = self.metrics(&it);
            let scale = 1.0 + met.pobj.abs();
            if met.pinf <= opts.feas_tol
                && met.dinf <= opts.feas_tol
                && met.gap <= opts.gap_tol * scale
                && met.compl.abs() <= opts.gap_tol * scale
            {
                return self.finish(it, Status::Optimal, iter);
            }
            // Farkas-type certificates
            let c_minus_rd = d.cost().sub(&rd).norm();
            if met.dobj > 0.0 && c_minus_rd <= opts.infeas_tol * met.dobj {
                return self.finish(it, Status::PrimalInfeasible, iter);
            }
            let ax_norm = (&d.b - &rp).norm();
            if met.pobj < 0.0 && ax_norm <= opts.infeas_tol * (-met.pobj) {
                return self.finish(it, Status::DualInfeasible, iter);
            }
            let score = met.score();
            if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                best = Some((
                    score,
                    Iterate {
                        x: it.x.clone(),
                        y: it.y.clone(),
                        z: it.z.clone(),
                    },
                    iter,
                ));
            }
            if !met.pobj.is_finite() || !met.dobj.is_finite() {
                failed = true;
                break;
            }

            let mu = if nu > 0.0 { met.compl / nu } else { 0.0 };
            let mut nt = Vec::with_capacity(d.psd_sizes.len());
            let mut ok = true;
            for k in 0..d.psd_sizes.len() {
                match nt_scaling(&it.x.psd[k], &it.z.psd[k]) {
                    Some(s) => nt.push(s),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                failed = true;
                break;
            }
            let wl = it.x.lp.component_div(&it.z.lp);
            let Some(fac) = self.factor(self.schur(&nt, &wl)) else {
                failed = true;
                break;
            };

            // predictor
            let mut rc = Cone::zeros(d);
            for k in 0..d.psd_sizes.len() {
                rc.psd[k] = -&it.x.psd[k];
            }
            rc.lp = -&it.x.lp;
            let Some((dxa, _dya, dza)) = self.direction(&fac, &nt, &wl, &rp, &rd, &rc) else {
                failed = true;
                break;
            };
            let (apa, ada) = self.step_lengths(&it, &nt, &dxa, &dza);
            let (apa, ada) = (apa.min(1.0), ada.min(1.0));
            let sigma = if nu > 0.0 && mu > 0.0 {
                let mut xa = it.x.clone();
                xa.axpy(apa, &dxa);
                let mut za = it.z.clone();
                za.axpy(ada, &dza);
                let mu_aff = xa.cone_dot(&za) / nu;
                (mu_aff / mu).max(0.0).powi(3).min(1.0)
            } else {
                0.0
            };

            // corrector
            let mut rc = Cone::zeros(d);
            for (k, sc) in nt.iter().enumerate() {
                let n = d.psd_sizes[k];
                let dxh = &sc.g_inv * &dxa.psd[k] * sc.g_inv.transpose();
                let dzh = sc.g.transpose() * &dza.psd[k] * &sc.g;
                let prod = &dxh * &dzh;
                let mut r = DMatrix::<f64>::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let h = 0.5 * (prod[(i, j)] + prod[(j, i)]);
                        let mut v = -h;
                        if i == j {
                            v += sigma * mu - sc.d[i] * sc.d[i];
                        }
                        r[(i, j)] = 2.0 * v / (sc.d[i] + sc.d[j]);
                    }
                }
                let mut q = &sc.g * r * sc.g.transpose();
                symmetrize(&mut q);
                rc.psd[k] = q;
            }
            for l in 0..d.n_lp {
                rc.lp[l] =
                    (sigma * mu - it.x.lp[l] * it.z.lp[l] - dxa.lp[l] * dza.lp[l]) / it.z.lp[l];
            }
            let Some((dx, dy, dz)) = self.direction(&fac, &nt, &wl, &rp, &rd, &rc) else {
                failed = true;
                break;
            };
            let (apm, adm) = self.step_lengths(&it, &nt, &dx, &dz);
            let ap = (gamma * apm).min(1.0);
            let ad = (gamma * adm).min(1.0);
            it.x.axpy(ap, &dx);
            it.y += &dy * ad;
            it.z.axpy(ad, &dz);
            gamma = 0.9 + 0.09 * ap.min(ad);

            if ap < 1e-9 && ad < 1e-9 {
                stalls += 1;
                if stalls >= 3 {
                    failed = true;
                    break;
                }
            } else {
                stalls = 0;
            }
        }

        let status = if failed {
            Status::NumericalFailure
        } else {
            Status::MaxIter
        };
        match best {
            Some((best_score, b, iter)) => {
                let (met, _, _) = self.metrics(&it);
                if met.pobj.is_finite() && met.score() <= best_score {
                    self.finish(it, status, opts.max_iter)
                } else {
                    self.finish(b, status, iter)
                }
            }
            None => self.finish(it, Status::NumericalFailure, 0),
        }
    }
}
