//! Seeded, splittable randomness.
//!
//! All experiment randomness derives from a single master seed through
//! counter-based ChaCha streams: stream id = (domain << 48) | index. Workers
//! processing shot `i` use the same stream regardless of scheduling, so
//! results are independent of the worker count.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::qmath::CMatrix;

/// Stream domains; keeps independent uses of the master seed disjoint.
pub mod domain {
    pub const SHOT: u64 = 1;
    pub const BATCH: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const POVM: u64 = 4;
    pub const FAMILY: u64 = 5;
    pub const HAAR: u64 = 6;
    pub const INPUT: u64 = 7;
    pub const CHANNEL: u64 = 8;
    pub const PROBE: u64 = 9;
}

/// RNG for (master seed, domain, index).
pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << 48));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) | index);
    rng
}

/// Standard complex Gaussian (unit variance per real component).
pub fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random pure state of dimension d.
pub fn haar_state<R: Rng>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d).map(|_| gaussian_c64(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Random Hermitian matrix (G + G†)/2 with Gaussian entries.
pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_c64(rng));
    g.hermitized()
}

/// Haar-random unitary via modified Gram–Schmidt on a Gaussian matrix.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = CMatrix::from_fn(d, d, |_, _| gaussian_c64(rng));
        if let Some(q) = gram_schmidt_columns(&g) {
            return q;
        }
    }
}

fn gram_schmidt_columns(m: &CMatrix) -> Option<CMatrix> {
    let d = m.rows();
    let mut cols: Vec<Vec<C64>> = (0..d).map(|j| m.column(j)).collect();
    for j in 0..d {
        for _ in 0..2 {
            // re-orthogonalize once for numerical safety
            for k in 0..j {
                let proj: C64 = cols[k]
                    .iter()
                    .zip(cols[j].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let ck = cols[k].clone();
                for (x, y) in cols[j].iter_mut().zip(ck.iter()) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return None;
        }
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    Some(CMatrix::from_fn(d, d, |i, j| cols[j][i]))
}

/// Random full-rank density matrix: normalized G G† + ε·1.
pub fn random_density<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_c64(rng));
    let mut m = &g * &g.dagger();
    for i in 0..d {
        m[(i, i)] += C64::new(0.05, 0.0);
    }
    let tr = m.trace().re;
    m.scale(1.0 / tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::CMatrix;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a1 = stream_rng(42, domain::SHOT, 7);
        let mut a2 = stream_rng(42, domain::SHOT, 7);
        let mut b = stream_rng(42, domain::SHOT, 8);
        let x1: u64 = a1.random();
        let x2: u64 = a2.random();
        let y: u64 = b.random();
        assert_eq!(x1, x2);
        assert_ne!(x1, y);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = stream_rng(1, domain::HAAR, 0);
        let u = random_unitary(5, &mut rng);
        let gap = (&(&u.dagger() * &u) - &CMatrix::identity(5)).frobenius_norm();
        assert!(gap < 1e-10, "gap {gap}");
    }

    #[test]
    fn haar_state_normalized() {
        let mut rng = stream_rng(2, domain::HAAR, 0);
        let s = haar_state(8, &mut rng);
        let n: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}
