//! Dense complex linear algebra for small Hilbert spaces (d ≲ 64).
//!
//! Everything is built on [`CMatrix`] (row-major complex matrices) and
//! [`RMatrix`] (real matrices, used for Fisher information). The Hermitian
//! eigensolver is a cyclic Jacobi iteration with a deterministic sweep order,
//! so results are bit-stable per platform.

mod cmatrix;
mod eigh;
mod rmatrix;

pub use cmatrix::{kron, kron_vec, CMatrix, C64};
pub use eigh::{eigh, expm, psd_ge, HermEig};
pub use rmatrix::RMatrix;

/// Relative tolerance for Hermiticity checks and eigendecomposition residuals.
pub const T_EIG: f64 = 1e-10;
/// Tolerance for positive-semidefinite ordering tests.
pub const T_PSD: f64 = 1e-9;
/// Relative rank cutoff for pseudo-inverses and support restrictions.
pub const T_RANK: f64 = 1e-12;

/// Pairwise (cascade) summation. Deterministic for a fixed input order and
/// independent of any parallel chunking used to produce the slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Mean via pairwise summation.
pub fn pairwise_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = pairwise_mean(xs);
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}
