//! Small complex linear-algebra helpers.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

pub type C = Complex64;
pub type Mat2 = Matrix2<C>;

pub const ZERO: C = C::new(0.0, 0.0);
pub const ONE: C = C::new(1.0, 0.0);
pub const I: C = C::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// The symplectic unit `J = [[0,-1],[1,0]]`.
pub fn j_matrix() -> Mat2 {
    Mat2::new(ZERO, -ONE, ONE, ZERO)
}

pub fn norm2(m: &Mat2) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm.
pub fn fro(m: &DMatrix<C>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Numerical rank with threshold `rel * sigma_max`.
pub fn numerical_rank(m: &DMatrix<C>, rel: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * smax).count()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}
