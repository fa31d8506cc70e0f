//! Lifting a [`PepProblem`] to a standard-form SDP and solving it.
//!
//! Block layout, with empty blocks omitted:
//!
//! ```text
//! Psd(n)     Gram matrix of the n basis labels
//! Free(s)    function values
//! NonNeg(k)  one slack per `le0` constraint
//! Psd(m_i)   one auxiliary block per LMI
//! ```
//!
//! `le0` rows read `expr + slack = -constant`, `eq0` rows `expr = -constant`
//! and each LMI contributes `S[i, j] - expr_ij = constant_ij` for `i <= j`.
//! The SDP minimizes the negated objective.

use nalgebra::DMatrix;
use pep_sdp::{Block, LinearForm, SdpSolution, SolveOptions, StandardSdp, Status};

use crate::gram::{ConstraintBody, PepProblem, QuadExpr};
use crate::PepError;

/// Where an SDP equality row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowOrigin {
    /// Index into [`PepProblem::constraints`].
    pub constraint: usize,
    /// Entry of the LMI for LMI rows.
    pub entry: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct CompiledSdp {
    pub sdp: StandardSdp,
    /// Constant term of the objective, not representable in the SDP.
    pub objective_constant: f64,
    pub rows: Vec<RowOrigin>,
    pub gram_block: Option<usize>,
    pub fval_block: Option<usize>,
    pub slack_block: Option<usize>,
    /// Slack position for each `le0` constraint and SDP block for each LMI.
    pub aux: Vec<Option<usize>>,
}

fn add_expr(form: &mut LinearForm, e: &QuadExpr, gram: Option<usize>, fvals: Option<usize>) {
    for (a, b, c) in e.gram_terms() {
        let (i, j) = (a.index(), b.index());
        let v = if i == j { c } else { c / 2.0 };
        form.push(gram.expect("gram block"), i.min(j), i.max(j), v);
    }
    for (s, c) in e.fval_terms() {
        form.push(fvals.expect("fval block"), s.index(), 0, c);
    }
}

/// Compiles a problem. The ordering is fully determined by registration
/// order, so the output is reproducible bit for bit.
pub fn compile(p: &PepProblem) -> CompiledSdp {
    let n = p.basis().len();
    let s = p.scalars().len();
    let n_le = p
        .constraints()
        .iter()
        .filter(|c| matches!(c.body, ConstraintBody::Le0(_)))
        .count();
    let mut blocks = Vec::new();
    let mut push_block = |b: Block| {
        if b.size() == 0 {
            None
        } else {
            blocks.push(b);
            Some(blocks.len() - 1)
        }
    };
    let gram_block = push_block(Block::Psd(n));
    let fval_block = push_block(Block::Free(s));
    let slack_block = push_block(Block::NonNeg(n_le));
    let mut aux = Vec::with_capacity(p.constraints().len());
    let mut next_slack = 0;
    for c in p.constraints() {
        aux.push(match &c.body {
            ConstraintBody::Le0(_) => {
                next_slack += 1;
                Some(next_slack - 1)
            }
            ConstraintBody::Eq0(_) => None,
            ConstraintBody::Lmi(m) => push_block(Block::Psd(m.len())),
        });
    }

    let mut sdp = StandardSdp::new(blocks);
    let mut rows = Vec::new();
    for (ci, c) in p.constraints().iter().enumerate() {
        match &c.body {
            ConstraintBody::Le0(e) => {
                let mut form = LinearForm::default();
                add_expr(&mut form, e, gram_block, fval_block);
                form.push(slack_block.expect("slack block"), aux[ci].unwrap(), 0, 1.0);
                sdp.add_equality(form, -e.constant_term());
                rows.push(RowOrigin {
                    constraint: ci,
                    entry: None,
                });
            }
            ConstraintBody::Eq0(e) => {
                let mut form = LinearForm::default();
                add_expr(&mut form, e, gram_block, fval_block);
                sdp.add_equality(form, -e.constant_term());
                rows.push(RowOrigin {
                    constraint: ci,
                    entry: None,
                });
            }
            ConstraintBody::Lmi(m) => {
                let blk = aux[ci].unwrap();
                for i in 0..m.len() {
                    for j in i..m.len() {
                        let mut form = LinearForm::default();
                        form.push(blk, i, j, if i == j { 1.0 } else { 0.5 });
                        add_expr(&mut form, &(-m[i][j].clone()), gram_block, fval_block);
                        sdp.add_equality(form, m[i][j].constant_term());
                        rows.push(RowOrigin {
                            constraint: ci,
                            entry: Some((i, j)),
                        });
                    }
                }
            }
        }
    }
    let mut objective = LinearForm::default();
    add_expr(
        &mut objective,
        &(-p.objective().clone()),
        gram_block,
        fval_block,
    );
    sdp.objective = objective;
    CompiledSdp {
        sdp,
        objective_constant: p.objective().constant_term(),
        rows,
        gram_block,
        fval_block,
        slack_block,
        aux,
    }
}

/// A solved PEP.
#[derive(Debug, Clone)]
pub struct PepSolution {
    pub status: Status,
    /// Worst-case value from the primal iterate.
    pub value: f64,
    /// Upper bound from the dual iterate.
    pub dual_value: f64,
    pub gram: DMatrix<f64>,
    pub fvals: Vec<f64>,
    pub sdp: SdpSolution,
    pub compiled: CompiledSdp,
}

impl PepSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Largest of the solver's relative residuals and relative gap.
    pub fn max_kkt_residual(&self) -> f64 {
        self.sdp.max_kkt_residual()
    }
}

/// Compiles and solves. Any solver status is returned; callers decide
/// whether a non-optimal status is an error.
pub fn solve_pep(p: &PepProblem, opts: &SolveOptions) -> Result<PepSolution, PepError> {
    let compiled = compile(p);
    let sol = pep_sdp::solve(&compiled.sdp, opts)?;
    let n = p.basis().len();
    let gram = match compiled.gram_block {
        Some(b) => sol.x[b]
            .as_matrix()
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(n, n)),
        None => DMatrix::zeros(0, 0),
    };
    let fvals = match compiled.fval_block {
        Some(b) => sol.x[b]
            .as_vector()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default(),
        None => Vec::new(),
    };
    Ok(PepSolution {
        status: sol.status,
        value: -sol.primal_objective + compiled.objective_constant,
        dual_value: -sol.dual_objective + compiled.objective_constant,
        gram,
        fvals,
        sdp: sol,
        compiled,
    })
}

/// Solves and fails unless the solver reports an optimal status.
pub fn solve_pep_optimal(p: &PepProblem, opts: &SolveOptions) -> Result<PepSolution, PepError> {
    let s = solve_pep(p, opts)?;
    if s.is_optimal() {
        Ok(s)
    } else {
        Err(PepError::NotOptimal(s.status))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Multiplier {
    /// Nonnegative for `le0` constraints, either sign for `eq0`.
    Scalar(f64),
    /// Positive semidefinite multiplier of an LMI.
    Matrix(DMatrix<f64>),
}

impl Multiplier {
    pub fn magnitude(&self) -> f64 {
        match self {
            Multiplier::Scalar(v) => v.abs(),
            Multiplier::Matrix(m) => m.abs().max(),
        }
    }
}

/// Multipliers keyed by constraint label, in constraint order.
pub fn dual_report(
    sol: &PepSolution,
    p: &PepProblem,
) -> Result<Vec<(String, Multiplier)>, PepError> {
    if !sol.is_optimal() {
        return Err(PepError::NotOptimal(sol.status));
    }
    let mut y_of = vec![0.0; p.constraints().len()];
    for (row, origin) in sol.compiled.rows.iter().enumerate() {
        if origin.entry.is_none() {
            y_of[origin.constraint] = sol.sdp.y[row];
        }
    }
    Ok(p.constraints()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let m = match c.body {
                ConstraintBody::Le0(_) => Multiplier::Scalar(-y_of[i]),
                ConstraintBody::Eq0(_) => Multiplier::Scalar(y_of[i]),
                ConstraintBody::Lmi(_) => {
                    let blk = sol.compiled.aux[i].expect("lmi block");
                    Multiplier::Matrix(sol.sdp.z[blk].as_matrix().cloned().unwrap_or_default())
                }
            };
            (c.label.clone(), m)
        })
        .collect())
}

/// Text triplet export of the compiled SDP.
pub fn export_sdp(p: &PepProblem) -> String {
    pep_sdp::write_triplets(&compile(p).sdp)
}
