use nalgebra::{DMatrix, SymmetricEigen};

/// Smallest eigenvalue of the symmetric part of `m`.
pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Violation of `m >= 0`: zero or negative when satisfied.
pub(crate) fn lmi_residual(m: &DMatrix<f64>) -> f64 {
    -min_eigenvalue(m)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}
