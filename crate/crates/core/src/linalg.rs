//! Small dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// One draw from CN(0, 1): real and imaginary parts each have variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// `(A + A^H) / 2`; the result is Hermitian bit-for-bit.
pub fn hermitian_part(a: &CMat) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Largest entry of `|A - A^H|`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `A A^H`, symmetrized.
pub fn gram(a: &CMat) -> CMat {
    hermitian_part(&(a * a.adjoint()))
}

/// Eigenvalues (ascending) and matching unit eigenvectors of a Hermitian
/// matrix. Only the lower triangle of `a` is read.
pub fn hermitian_eigen(a: &CMat) -> (alloc::vec::Vec<f64>, CMat) {
    let eig = a.clone().symmetric_eigen();
    let mut order: alloc::vec::Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(a.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Natural-log determinant of a Hermitian positive definite matrix.
pub fn ln_det_hpd(a: &CMat) -> Option<f64> {
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    Some((0..a.nrows()).map(|i| 2.0 * libm::log(l[(i, i)].re)).sum())
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}
