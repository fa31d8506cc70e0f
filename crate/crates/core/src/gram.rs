//! Symbolic layer for building performance estimation problems.
//!
//! Unknown vectors (iterates, gradients, operator outputs) are never
//! materialized. Each one is a registered [`BasisLabel`], every vector that
//! appears in a method is a [`VectorExpr`] (a linear combination of labels),
//! and every scalar quantity is a [`QuadExpr`]: an affine function of the
//! Gram matrix entries `G[a, b] = <a, b>` and of the function-value symbols.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::atomic::{AtomicU32, Ordering};

use crate::classes::Interpolation;
use crate::PepError;

static NEXT_PROBLEM: AtomicU32 = AtomicU32::new(1);

/// Identifies a basis vector: the owning problem and its Gram index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisId {
    problem: u32,
    index: u32,
}

impl BasisId {
    /// Position of the label in the Gram matrix.
    pub fn index(&self) -> usize {
        self.index as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasisKind {
    IterateSeed,
    Gradient,
    OperatorOutput,
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisLabel {
    pub id: BasisId,
    pub kind: BasisKind,
    pub tag: String,
}

/// A function-value (or other scalar) unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarVar {
    problem: u32,
    index: u32,
}

impl ScalarVar {
    pub fn index(&self) -> usize {
        self.index as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarInfo {
    pub id: ScalarVar,
    pub tag: String,
}

/// A formal linear combination of basis vectors. The empty combination is
/// the origin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorExpr {
    coeffs: BTreeMap<BasisId, f64>,
}

impl VectorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(id: BasisId) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(id, 1.0);
        Self { coeffs }
    }

    pub fn coeff(&self, id: BasisId) -> f64 {
        self.coeffs.get(&id).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (BasisId, f64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, id: BasisId, c: f64) {
        let e = self.coeffs.entry(id).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.coeffs.remove(&id);
        }
    }

    /// Symbolic inner product `<self, other>` as a Gram expression.
    pub fn dot(&self, other: &VectorExpr) -> QuadExpr {
        let mut q = QuadExpr::default();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                q.add_gram(a, b, ca * cb);
            }
        }
        q
    }

    pub fn norm_sq(&self) -> QuadExpr {
        self.dot(self)
    }

    /// Evaluates the combination given numeric vectors indexed by Gram index.
    pub fn eval(&self, vectors: &[Vec<f64>], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (id, c) in self.terms() {
            for (o, v) in out.iter_mut().zip(&vectors[id.index()]) {
                *o += c * v;
            }
        }
        out
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a VectorExpr>) -> VectorExpr {
        let mut out = VectorExpr::zero();
        for v in items {
            out += v;
        }
        out
    }
}

impl From<BasisId> for VectorExpr {
    fn from(id: BasisId) -> Self {
        VectorExpr::basis(id)
    }
}

impl AddAssign<&VectorExpr> for VectorExpr {
    fn add_assign(&mut self, rhs: &VectorExpr) {
        for (id, c) in rhs.terms() {
            self.add_term(id, c);
        }
    }
}

impl SubAssign<&VectorExpr> for VectorExpr {
    fn sub_assign(&mut self, rhs: &VectorExpr) {
        for (id, c) in rhs.terms() {
            self.add_term(id, -c);
        }
    }
}

impl Add<&VectorExpr> for &VectorExpr {
    type Output = VectorExpr;
    fn add(self, rhs: &VectorExpr) -> VectorExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&VectorExpr> for &VectorExpr {
    type Output = VectorExpr;
    fn sub(self, rhs: &VectorExpr) -> VectorExpr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for VectorExpr {
    type Output = VectorExpr;
    fn add(mut self, rhs: VectorExpr) -> VectorExpr {
        self += &rhs;
        self
    }
}

impl Sub for VectorExpr {
    type Output = VectorExpr;
    fn sub(mut self, rhs: VectorExpr) -> VectorExpr {
        self -= &rhs;
        self
    }
}

impl Mul<f64> for &VectorExpr {
    type Output = VectorExpr;
    fn mul(self, s: f64) -> VectorExpr {
        if s == 0.0 {
            return VectorExpr::zero();
        }
        VectorExpr {
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, v)| (*k, v * s))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }
}

impl Mul<f64> for VectorExpr {
    type Output = VectorExpr;
    fn mul(self, s: f64) -> VectorExpr {
        &self * s
    }
}

impl Mul<&VectorExpr> for f64 {
    type Output = VectorExpr;
    fn mul(self, v: &VectorExpr) -> VectorExpr {
        v * self
    }
}

impl Mul<VectorExpr> for f64 {
    type Output = VectorExpr;
    fn mul(self, v: VectorExpr) -> VectorExpr {
        &v * self
    }
}

impl Neg for &VectorExpr {
    type Output = VectorExpr;
    fn neg(self) -> VectorExpr {
        self * -1.0
    }
}

impl Neg for VectorExpr {
    type Output = VectorExpr;
    fn neg(self) -> VectorExpr {
        &self * -1.0
    }
}

/// An affine expression in Gram entries and scalar symbols.
///
/// Gram coefficients are keyed by unordered pairs, so `(a, b)` and `(b, a)`
/// are the same term: the coefficient multiplies `G[a, b]` once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadExpr {
    gram: BTreeMap<(BasisId, BasisId), f64>,
    fvals: BTreeMap<ScalarVar, f64>,
    constant: f64,
}

impl QuadExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    pub fn scalar(v: ScalarVar) -> Self {
        let mut q = Self::default();
        q.add_scalar(v, 1.0);
        q
    }

    fn add_gram(&mut self, a: BasisId, b: BasisId, c: f64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        let e = self.gram.entry(key).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.gram.remove(&key);
        }
    }

    fn add_scalar(&mut self, v: ScalarVar, c: f64) {
        let e = self.fvals.entry(v).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.fvals.remove(&v);
        }
    }

    pub fn gram_coeff(&self, a: BasisId, b: BasisId) -> f64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.gram.get(&key).copied().unwrap_or(0.0)
    }

    pub fn fval_coeff(&self, v: ScalarVar) -> f64 {
        self.fvals.get(&v).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn gram_terms(&self) -> impl Iterator<Item = (BasisId, BasisId, f64)> + '_ {
        self.gram.iter().map(|((a, b), c)| (*a, *b, *c))
    }

    pub fn fval_terms(&self) -> impl Iterator<Item = (ScalarVar, f64)> + '_ {
        self.fvals.iter().map(|(v, c)| (*v, *c))
    }

    /// True when the expression has no Gram or scalar terms.
    pub fn is_constant(&self) -> bool {
        self.gram.is_empty() && self.fvals.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.constant == 0.0
    }

    /// Evaluates against a Gram matrix (`gram(i, j)` by Gram index) and
    /// scalar values (by scalar index).
    pub fn eval(&self, gram: impl Fn(usize, usize) -> f64, fvals: &[f64]) -> f64 {
        let mut s = self.constant;
        for ((a, b), c) in &self.gram {
            s += c * gram(a.index(), b.index());
        }
        for (v, c) in &self.fvals {
            s += c * fvals[v.index()];
        }
        s
    }

    fn labels(&self) -> impl Iterator<Item = BasisId> + '_ {
        self.gram.keys().flat_map(|(a, b)| [*a, *b])
    }

    /// Same terms, compared with a relative tolerance.
    pub fn approx_eq(&self, other: &QuadExpr, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        let keys: BTreeSet<_> = self.gram.keys().chain(other.gram.keys()).collect();
        let vars: BTreeSet<_> = self.fvals.keys().chain(other.fvals.keys()).collect();
        close(self.constant, other.constant)
            && keys.into_iter().all(|k| {
                close(
                    self.gram.get(k).copied().unwrap_or(0.0),
                    other.gram.get(k).copied().unwrap_or(0.0),
                )
            })
            && vars.into_iter().all(|k| {
                close(
                    self.fvals.get(k).copied().unwrap_or(0.0),
                    other.fvals.get(k).copied().unwrap_or(0.0),
                )
            })
    }
}

impl From<ScalarVar> for QuadExpr {
    fn from(v: ScalarVar) -> Self {
        QuadExpr::scalar(v)
    }
}

impl AddAssign<&QuadExpr> for QuadExpr {
    fn add_assign(&mut self, rhs: &QuadExpr) {
        for ((a, b), c) in &rhs.gram {
            self.add_gram(*a, *b, *c);
        }
        for (v, c) in &rhs.fvals {
            self.add_scalar(*v, *c);
        }
        self.constant += rhs.constant;
    }
}

impl SubAssign<&QuadExpr> for QuadExpr {
    fn sub_assign(&mut self, rhs: &QuadExpr) {
        *self += &(rhs * -1.0);
    }
}

impl Add<&QuadExpr> for &QuadExpr {
    type Output = QuadExpr;
    fn add(self, rhs: &QuadExpr) -> QuadExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&QuadExpr> for &QuadExpr {
    type Output = QuadExpr;
    fn sub(self, rhs: &QuadExpr) -> QuadExpr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for QuadExpr {
    type Output = QuadExpr;
    fn add(mut self, rhs: QuadExpr) -> QuadExpr {
        self += &rhs;
        self
    }
}

impl Sub for QuadExpr {
    type Output = QuadExpr;
    fn sub(mut self, rhs: QuadExpr) -> QuadExpr {
        self -= &rhs;
        self
    }
}

impl Add<f64> for QuadExpr {
    type Output = QuadExpr;
    fn add(mut self, c: f64) -> QuadExpr {
        self.constant += c;
        self
    }
}

impl Sub<f64> for QuadExpr {
    type Output = QuadExpr;
    fn sub(mut self, c: f64) -> QuadExpr {
        self.constant -= c;
        self
    }
}

impl Mul<f64> for &QuadExpr {
    type Output = QuadExpr;
    fn mul(self, s: f64) -> QuadExpr {
        if s == 0.0 {
            return QuadExpr::default();
        }
        QuadExpr {
            gram: self
                .gram
                .iter()
                .map(|(k, v)| (*k, v * s))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
            fvals: self
                .fvals
                .iter()
                .map(|(k, v)| (*k, v * s))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
            constant: self.constant * s,
        }
    }
}

impl Mul<f64> for QuadExpr {
    type Output = QuadExpr;
    fn mul(self, s: f64) -> QuadExpr {
        &self * s
    }
}

impl Mul<QuadExpr> for f64 {
    type Output = QuadExpr;
    fn mul(self, q: QuadExpr) -> QuadExpr {
        &q * self
    }
}

impl Neg for QuadExpr {
    type Output = QuadExpr;
    fn neg(self) -> QuadExpr {
        &self * -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Eq0,
    Le0,
    Lmi,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintBody {
    /// `expr = 0`
    Eq0(QuadExpr),
    /// `expr <= 0`
    Le0(QuadExpr),
    /// The matrix of evaluated entries is positive semidefinite.
    Lmi(Vec<Vec<QuadExpr>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub body: ConstraintBody,
    /// Provenance: which rule and which data points produced it.
    pub label: String,
}

impl Constraint {
    pub fn eq0(expr: QuadExpr, label: impl Into<String>) -> Self {
        Self {
            body: ConstraintBody::Eq0(expr),
            label: label.into(),
        }
    }

    pub fn le0(expr: QuadExpr, label: impl Into<String>) -> Self {
        Self {
            body: ConstraintBody::Le0(expr),
            label: label.into(),
        }
    }

    pub fn lmi(entries: Vec<Vec<QuadExpr>>, label: impl Into<String>) -> Self {
        Self {
            body: ConstraintBody::Lmi(entries),
            label: label.into(),
        }
    }

    /// Builds a symmetric LMI from a generator called on `i <= j` only.
    pub fn lmi_sym(
        n: usize,
        label: impl Into<String>,
        mut entry: impl FnMut(usize, usize) -> QuadExpr,
    ) -> Self {
        let mut m = vec![vec![QuadExpr::default(); n]; n];
        for i in 0..n {
            for j in i..n {
                let e = entry(i, j);
                if i != j {
                    m[j][i] = e.clone();
                }
                m[i][j] = e;
            }
        }
        Self::lmi(m, label)
    }

    pub fn kind(&self) -> ConstraintKind {
        match self.body {
            ConstraintBody::Eq0(_) => ConstraintKind::Eq0,
            ConstraintBody::Le0(_) => ConstraintKind::Le0,
            ConstraintBody::Lmi(_) => ConstraintKind::Lmi,
        }
    }

    /// Violation measure on numeric values: the expression for `le0`, its
    /// absolute value for `eq0`, minus the smallest eigenvalue for `lmi`.
    /// Nonpositive (or tiny) means satisfied.
    pub fn residual(&self, gram: impl Fn(usize, usize) -> f64, fvals: &[f64]) -> f64 {
        match &self.body {
            ConstraintBody::Eq0(e) => e.eval(&gram, fvals).abs(),
            ConstraintBody::Le0(e) => e.eval(&gram, fvals),
            ConstraintBody::Lmi(m) => {
                let n = m.len();
                let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j].eval(&gram, fvals));
                crate::linalg::lmi_residual(&mat)
            }
        }
    }

    fn exprs(&self) -> Box<dyn Iterator<Item = &QuadExpr> + '_> {
        match &self.body {
            ConstraintBody::Eq0(e) | ConstraintBody::Le0(e) => Box::new(std::iter::once(e)),
            ConstraintBody::Lmi(m) => Box::new(m.iter().flatten()),
        }
    }
}

/// Incrementally registers labels, scalars, constraints and interpolation
/// groups, then validates everything into an immutable [`PepProblem`].
#[derive(Debug)]
pub struct PepBuilder {
    id: u32,
    basis: Vec<BasisLabel>,
    scalars: Vec<ScalarInfo>,
    constraints: Vec<Constraint>,
    groups: Vec<Interpolation>,
    objective: Option<QuadExpr>,
    meta: BTreeMap<String, String>,
}

impl Default for PepBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl PepBuilder {
    pub fn new() -> Self {
        Self {
            id: NEXT_PROBLEM.fetch_add(1, Ordering::Relaxed),
            basis: Vec::new(),
            scalars: Vec::new(),
            constraints: Vec::new(),
            groups: Vec::new(),
            objective: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn label(&mut self, kind: BasisKind, tag: impl Into<String>) -> BasisId {
        let id = BasisId {
            problem: self.id,
            index: self.basis.len() as u32,
        };
        self.basis.push(BasisLabel {
            id,
            kind,
            tag: tag.into(),
        });
        id
    }

    /// Registers a fresh basis label and returns it as an expression.
    pub fn vector(&mut self, kind: BasisKind, tag: impl Into<String>) -> VectorExpr {
        VectorExpr::basis(self.label(kind, tag))
    }

    pub fn scalar(&mut self, tag: impl Into<String>) -> ScalarVar {
        let id = ScalarVar {
            problem: self.id,
            index: self.scalars.len() as u32,
        };
        self.scalars.push(ScalarInfo {
            id,
            tag: tag.into(),
        });
        id
    }

    pub fn basis(&self) -> &[BasisLabel] {
        &self.basis
    }

    fn check_label(&self, id: BasisId) -> Result<(), PepError> {
        if id.problem == self.id && id.index() < self.basis.len() {
            Ok(())
        } else {
            Err(PepError::UnregisteredLabel(format!(
                "basis vector #{} of problem {}",
                id.index, id.problem
            )))
        }
    }

    fn check_scalar(&self, v: ScalarVar) -> Result<(), PepError> {
        if v.problem == self.id && v.index() < self.scalars.len() {
            Ok(())
        } else {
            Err(PepError::UnregisteredLabel(format!(
                "scalar #{} of problem {}",
                v.index, v.problem
            )))
        }
    }

    /// `<u, v>` with a check that every label belongs to this problem.
    pub fn inner(&self, u: &VectorExpr, v: &VectorExpr) -> Result<QuadExpr, PepError> {
        for (id, _) in u.terms().chain(v.terms()) {
            self.check_label(id)?;
        }
        Ok(u.dot(v))
    }

    pub fn constrain(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    /// Adds an interpolation group. Its constraints are generated at
    /// [`build`](Self::build) time, once every basis label is known.
    pub fn interpolate(&mut self, group: Interpolation) {
        self.groups.push(group);
    }

    pub fn maximize(&mut self, objective: QuadExpr) {
        self.objective = Some(objective);
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    pub fn build(mut self) -> Result<PepProblem, PepError> {
        let objective = self.objective.take().ok_or(PepError::MissingObjective)?;
        let mut constraints = Vec::new();
        for g in &self.groups {
            constraints.extend(g.constraints(&self.basis)?);
        }
        constraints.append(&mut self.constraints);
        if constraints.is_empty() {
            return Err(PepError::NoConstraints);
        }
        let check_expr = |e: &QuadExpr| -> Result<(), PepError> {
            for id in e.labels() {
                self.check_label(id)?;
            }
            for (v, _) in e.fval_terms() {
                self.check_scalar(v)?;
            }
            Ok(())
        };
        check_expr(&objective)?;
        for c in &constraints {
            for e in c.exprs() {
                check_expr(e)?;
            }
            if let ConstraintBody::Lmi(m) = &c.body {
                let n = m.len();
                if n == 0 || m.iter().any(|r| r.len() != n) {
                    return Err(PepError::NonSquareLmi(c.label.clone()));
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        if !m[i][j].approx_eq(&m[j][i], 1e-12) {
                            return Err(PepError::AsymmetricLmi(c.label.clone()));
                        }
                    }
                }
            }
        }
        for g in &self.groups {
            for v in g.vectors() {
                for (id, _) in v.terms() {
                    self.check_label(id)?;
                }
            }
            for s in g.scalars() {
                self.check_scalar(s)?;
            }
        }
        Ok(PepProblem {
            basis: self.basis,
            scalars: self.scalars,
            constraints,
            objective,
            groups: self.groups,
            meta: self.meta,
        })
    }
}

/// A validated performance estimation problem (always a maximization).
#[derive(Debug, Clone)]
pub struct PepProblem {
    basis: Vec<BasisLabel>,
    scalars: Vec<ScalarInfo>,
    constraints: Vec<Constraint>,
    objective: QuadExpr,
    groups: Vec<Interpolation>,
    meta: BTreeMap<String, String>,
}

impl PepProblem {
    pub fn basis(&self) -> &[BasisLabel] {
        &self.basis
    }

    pub fn scalars(&self) -> &[ScalarInfo] {
        &self.scalars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &QuadExpr {
        &self.objective
    }

    pub fn groups(&self) -> &[Interpolation] {
        &self.groups
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn find_label(&self, tag: &str) -> Option<&BasisLabel> {
        self.basis.iter().find(|b| b.tag == tag)
    }

    pub fn find_scalar(&self, tag: &str) -> Option<&ScalarInfo> {
        self.scalars.iter().find(|s| s.tag == tag)
    }
}

impl fmt::Display for PepProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PEP: {} basis vectors, {} scalars, {} constraints",
            self.basis.len(),
            self.scalars.len(),
            self.constraints.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_of_single_label() {
        let mut b = PepBuilder::new();
        let x0 = b.label(BasisKind::IterateSeed, "x0");
        let q = b.inner(&x0.into(), &x0.into()).unwrap();
        assert_eq!(q.gram_coeff(x0, x0), 1.0);
        assert_eq!(q.gram_terms().count(), 1);
        assert!(q.fval_terms().next().is_none());
    }

    #[test]
    fn inner_with_zero_is_empty() {
        let mut b = PepBuilder::new();
        let u = b.vector(BasisKind::IterateSeed, "u");
        let q = b.inner(&u, &VectorExpr::zero()).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn gradient_step_difference() {
        let mut b = PepBuilder::new();
        let x0 = b.vector(BasisKind::IterateSeed, "x0");
        let g0 = b.label(BasisKind::Gradient, "g0");
        let alpha = 0.7;
        let x1 = &x0 - &(alpha * VectorExpr::basis(g0));
        let d = &x0 - &x1;
        let q = b.inner(&d, &d).unwrap();
        assert_eq!(q.gram_terms().count(), 1);
        assert!((q.gram_coeff(g0, g0) - alpha * alpha).abs() < 1e-15);
    }

    #[test]
    fn unordered_pair_key() {
        let mut b = PepBuilder::new();
        let u = b.label(BasisKind::IterateSeed, "u");
        let v = b.label(BasisKind::Gradient, "v");
        let q = VectorExpr::from(u).dot(&VectorExpr::from(v))
            + VectorExpr::from(v).dot(&VectorExpr::from(u));
        assert_eq!(q.gram_terms().count(), 1);
        assert_eq!(q.gram_coeff(v, u), 2.0);
    }

    #[test]
    fn foreign_label_is_rejected() {
        let mut a = PepBuilder::new();
        let mut b = PepBuilder::new();
        let x = a.vector(BasisKind::IterateSeed, "x");
        let _ = b.vector(BasisKind::IterateSeed, "y");
        assert!(matches!(
            b.inner(&x, &x),
            Err(PepError::UnregisteredLabel(_))
        ));
        b.constrain(Constraint::le0(x.norm_sq() - 1.0, "foreign"));
        b.maximize(QuadExpr::constant(0.0));
        assert!(matches!(b.build(), Err(PepError::UnregisteredLabel(_))));
    }

    #[test]
    fn build_requires_objective_and_constraints() {
        let mut b = PepBuilder::new();
        let x = b.vector(BasisKind::IterateSeed, "x");
        b.maximize(x.norm_sq());
        assert!(matches!(b.build(), Err(PepError::NoConstraints)));

        let mut b = PepBuilder::new();
        let x = b.vector(BasisKind::IterateSeed, "x");
        b.constrain(Constraint::le0(x.norm_sq() - 1.0, "radius"));
        assert!(matches!(b.build(), Err(PepError::MissingObjective)));
    }

    #[test]
    fn duplicate_scalar_tags_are_fine() {
        let mut b = PepBuilder::new();
        let f1 = b.scalar("f");
        let f2 = b.scalar("f");
        assert_ne!(f1, f2);
        let x = b.vector(BasisKind::IterateSeed, "x");
        b.constrain(Constraint::le0(x.norm_sq() - 1.0, "radius"));
        b.constrain(Constraint::le0(
            QuadExpr::from(f1) - QuadExpr::from(f2),
            "order",
        ));
        b.maximize(QuadExpr::from(f1));
        let p = b.build().unwrap();
        assert_eq!(p.scalars().len(), 2);
    }

    #[test]
    fn asymmetric_lmi_is_rejected() {
        let mut b = PepBuilder::new();
        let x = b.vector(BasisKind::IterateSeed, "x");
        let y = b.vector(BasisKind::IterateSeed, "y");
        let m = vec![vec![x.norm_sq(), x.dot(&y)], vec![y.norm_sq(), x.norm_sq()]];
        b.constrain(Constraint::lmi(m, "bad"));
        b.maximize(x.norm_sq());
        assert!(matches!(b.build(), Err(PepError::AsymmetricLmi(_))));
    }
}
