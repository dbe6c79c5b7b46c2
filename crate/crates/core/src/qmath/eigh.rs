use num_complex::Complex64 as C64;

use super::cmatrix::CMatrix;
use super::T_EIG;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Result of a Hermitian eigendecomposition: `H = V Λ V†` with eigenvalues
/// ascending and the columns of `V` the corresponding eigenvectors.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let lam = CMatrix::diag_real(&self.eigenvalues);
        &(v * &lam) * &v.dagger()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// The sweep order is fixed (row-major over the strict upper triangle), so
/// the result is deterministic. Rejects inputs whose relative Frobenius
/// asymmetry exceeds [`T_EIG`].
pub fn eigh(h: &CMatrix) -> Result<HermEig> {
    let n = h.require_square()?;
    let asym = h.hermitian_asymmetry();
    if asym > T_EIG {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }

    let mut a = h.hermitized();
    let mut v = CMatrix::identity(n);
    let hnorm = a.frobenius_norm();
    let target = f64::EPSILON * hnorm.max(f64::MIN_POSITIVE) * n as f64;

    let mut converged = false;
    let mut last_off = 0.0;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        last_off = off.sqrt();
        if last_off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        // one final check after the last sweep
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        last_off = off.sqrt();
        if last_off > target.max(1e-13 * hnorm.max(1.0)) {
            return Err(Error::EighNoConvergence {
                sweeps: MAX_SWEEPS,
                off: last_off,
            });
        }
    }
    let _ = last_off;

    // sort ascending, permuting eigenvector columns accordingly
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)].re, i)).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|(l, _)| *l).collect();
    let mut vec_sorted = CMatrix::zeros(n, n);
    for (new_j, (_, old_j)) in pairs.iter().enumerate() {
        for i in 0..n {
            vec_sorted[(i, new_j)] = v[(i, *old_j)];
        }
    }

    Ok(HermEig {
        eigenvalues,
        eigenvectors: vec_sorted,
    })
}

/// One complex Jacobi rotation zeroing A[p,q]; updates A ← U†AU, V ← VU.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let abs = apq.norm();
    if abs == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // phase factor making the 2x2 pivot block real symmetric
    let e = apq / abs;
    let tau = (app - aqq) / (2.0 * abs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // U restricted to (p,q): U_pp = e*c, U_pq = -e*s, U_qp = s, U_qq = c
    let upp = e * c;
    let upq = -e * s;
    let uqp = C64::new(s, 0.0);
    let uqq = C64::new(c, 0.0);

    let n = a.rows();
    // A ← A·U (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * upp + akq * uqp;
        a[(k, q)] = akp * upq + akq * uqq;
    }
    // A ← U†·A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
        a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // V ← V·U
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * upp + vkq * uqp;
        v[(k, q)] = vkp * upq + vkq * uqq;
    }
}

/// Tests the Loewner ordering A ⪰ B: true iff λ_min(A − B) ≥ −tol.
pub fn psd_ge(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool> {
    let n = a.require_square()?;
    if b.rows() != n || b.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.rows(),
        });
    }
    let diff = a - b;
    let eig = eigh(&diff)?;
    Ok(eig.min_eigenvalue() >= -tol)
}

/// Matrix exponential by scaling-and-squaring with a Taylor series on the
/// scaled matrix. Adequate for the tiny dense Hamiltonians used here.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.require_square()?;
    let norm = a.frobenius_norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(1.0 / 2f64.powi(s as i32));
    let mut result = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=24 {
        term = &term * &scaled;
        term = term.scale(1.0 / k as f64);
        result = &result + &term;
        if term.frobenius_norm() < 1e-18 * result.frobenius_norm().max(1.0) {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_hermitian, random_unitary, stream_rng};
    use crate::qmath::T_RANK;

    #[test]
    fn eigh_identity() {
        let eig = eigh(&CMatrix::identity(4)).unwrap();
        for l in &eig.eigenvalues {
            assert!((l - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigh_pauli_z() {
        let z = CMatrix::diag_real(&[1.0, -1.0]);
        let eig = eigh(&z).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
        // eigenvector of -1 is |1⟩, of +1 is |0⟩
        assert!((eig.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((eig.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = stream_rng(7, 0, 1);
        let h = random_hermitian(8, &mut rng);
        let eig = eigh(&h).unwrap();
        let gap = (&eig.reconstruct() - &h).frobenius_norm();
        assert!(gap <= 1e-10 * h.frobenius_norm().max(1.0), "gap {gap}");
        // unitarity of eigenvectors
        let v = &eig.eigenvectors;
        let vv = &v.dagger() * v;
        assert!((&vv - &CMatrix::identity(8)).frobenius_norm() < 1e-10);
        // ascending
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] <= w[1] + 1e-14);
        }
    }

    #[test]
    fn eigh_handles_larger_dimensions() {
        // the experiments stay at d ≤ 16; leave headroom
        let mut rng = stream_rng(8, 0, 3);
        let h = random_hermitian(48, &mut rng);
        let eig = eigh(&h).unwrap();
        let gap = (&eig.reconstruct() - &h).frobenius_norm();
        assert!(gap <= 1e-10 * h.frobenius_norm().max(1.0), "gap {gap}");
        let vv = &eig.eigenvectors.dagger() * &eig.eigenvectors;
        assert!((&vv - &CMatrix::identity(48)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let mut m = CMatrix::identity(3);
        m[(0, 1)] = C64::new(0.5, 0.0);
        match eigh(&m) {
            Err(Error::NotHermitian { asymmetry }) => assert!(asymmetry > 0.1),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eigenvalues_invariant_under_unitary_conjugation() {
        let mut rng = stream_rng(11, 0, 2);
        let h = random_hermitian(6, &mut rng);
        let u = random_unitary(6, &mut rng);
        let h2 = &(&u * &h) * &u.dagger();
        let e1 = eigh(&h).unwrap().eigenvalues;
        let e2 = eigh(&h2.hermitized()).unwrap().eigenvalues;
        for (a, b) in e1.iter().zip(e2.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn psd_ge_cases() {
        let id = CMatrix::identity(2);
        assert!(psd_ge(&id, &id, 1e-12).unwrap());
        assert!(psd_ge(&id.scale(2.0), &id, 1e-12).unwrap());
        // Pauli X vs identity: eig(X - 1) = {0, -2}
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = C64::new(1.0, 0.0);
        x[(1, 0)] = C64::new(1.0, 0.0);
        assert!(!psd_ge(&x, &id, 1e-12).unwrap());
    }

    #[test]
    fn psd_ge_both_ways_implies_close() {
        let mut rng = stream_rng(3, 0, 5);
        let h = random_hermitian(4, &mut rng);
        let tol = 1e-9;
        let mut h2 = h.clone();
        h2[(0, 0)] += C64::new(tol / 10.0, 0.0);
        assert!(psd_ge(&h, &h2, tol).unwrap() && psd_ge(&h2, &h, tol).unwrap());
        assert!((&h - &h2).frobenius_norm() <= 4.0 * tol * h.frobenius_norm().max(1.0));
    }

    #[test]
    fn expm_diagonal() {
        let d = CMatrix::diag_real(&[0.0, 1.0, -2.0]);
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((e[(1, 1)].re - 1.0f64.exp()).abs() < 1e-12);
        assert!((e[(2, 2)].re - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn expm_skew_hermitian_is_unitary() {
        let mut rng = stream_rng(5, 0, 9);
        let h = random_hermitian(5, &mut rng);
        let u = expm(&h.scale_c(C64::new(0.0, -1.0))).unwrap();
        let gap = (&(&u.dagger() * &u) - &CMatrix::identity(5)).frobenius_norm();
        assert!(gap < 1e-11, "gap {gap}");
        let _ = T_RANK;
    }
}
