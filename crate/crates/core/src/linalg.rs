//! Small dense complex linear algebra helpers shared by the simulator.
//!
//! Everything here operates on matrices no larger than 100x100, so dense
//! routines from `nalgebra` are used throughout.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// i as a complex number.
pub const IM: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// a*b - b*a.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// (m + m^dagger)/2.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Column-major vectorization.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`] for an n x n matrix.
pub fn unvectorize(v: &CVec, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry magnitude.
pub fn norm_max(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(m: &CMat) -> CMat {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let norm = norm_inf(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = c(0.5_f64.powi(squarings as i32));
    let a = m.map(|z| z * scale);
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..=64 {
        term = (&term * &a).map(|z| z / c(k as f64));
        sum += &term;
        if norm_max(&term) < 1e-18 * norm_max(&sum).max(1.0) {
            break;
        }
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = nalgebra::SymmetricEigen::new(hermitize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut v = nalgebra::SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect::<Vec<f64>>();
    v.sort_by(f64::total_cmp);
    v
}

/// Trace norm (sum of absolute eigenvalues) of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// Solve (g + shift*I) x = b for Hermitian positive semidefinite g.
/// Falls back to LU if the Cholesky factorization fails.
pub fn solve_shifted_hpd(g: &CMat, shift: f64, b: &CVec) -> Option<CVec> {
    let n = g.nrows();
    let mut shifted = g.clone();
    for i in 0..n {
        shifted[(i, i)] += c(shift);
    }
    if let Some(chol) = Cholesky::new(shifted.clone()) {
        return Some(chol.solve(b));
    }
    shifted.lu().solve(b)
}
