//! Multi-qubit Pauli operators in the symplectic binary representation.
//!
//! A label holds x- and z-bit masks; bit `i` refers to qubit `i`, and qubit
//! `i` acts on bit `i` of the computational basis index (bit 0 least
//! significant). The dense operator of a label is the Hermitian Pauli
//! `i^{|x∧z|} X^x Z^z`, so (1,0) = X, (0,1) = Z, (1,1) = Y per qubit.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qmath::CMatrix;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliLabel {
    pub n: usize,
    pub x: u32,
    pub z: u32,
}

impl PauliLabel {
    pub fn new(n: usize, x: u32, z: u32) -> Self {
        debug_assert!(n <= 16);
        let mask = (1u32 << n) - 1;
        PauliLabel {
            n,
            x: x & mask,
            z: z & mask,
        }
    }

    pub fn identity(n: usize) -> Self {
        PauliLabel { n, x: 0, z: 0 }
    }

    /// Packed index k = x | (z << n); k = 0 is the identity.
    pub fn index(&self) -> usize {
        (self.x as usize) | ((self.z as usize) << self.n)
    }

    pub fn from_index(n: usize, k: usize) -> Self {
        let mask = (1usize << n) - 1;
        PauliLabel {
            n,
            x: (k & mask) as u32,
            z: ((k >> n) & mask) as u32,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of Pauli Y factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// True iff the two Paulis commute.
    pub fn commutes_with(&self, other: &PauliLabel) -> bool {
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        s.is_multiple_of(2)
    }

    /// Dense matrix of the Hermitian Pauli.
    pub fn dense(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        let phase = C64::i().powu(self.y_count());
        for b in 0..d as u32 {
            let sign = if (self.z & b).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            m[(((b ^ self.x) as usize), b as usize)] = phase * sign;
        }
        m
    }

    /// Dense matrix acting on the first factor of probe ⊗ ancilla: P ⊗ 1.
    pub fn dense_with_ancilla(&self, ancilla_dim: usize) -> CMatrix {
        crate::qmath::kron(&self.dense(), &CMatrix::identity(ancilla_dim))
    }

    /// Applies the Hermitian Pauli to a state vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim();
        assert_eq!(v.len(), d);
        let phase = C64::i().powu(self.y_count());
        let mut out = vec![C64::new(0.0, 0.0); d];
        for b in 0..d as u32 {
            let sign = if (self.z & b).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            out[(b ^ self.x) as usize] = phase * sign * v[b as usize];
        }
        out
    }
}

/// Product P_a · P_b = phase · P_{a⊕b}, phase ∈ {±1, ±i}.
pub fn pauli_mul(a: &PauliLabel, b: &PauliLabel) -> Result<(PauliLabel, C64)> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            got: b.n,
        });
    }
    let c = PauliLabel::new(a.n, a.x ^ b.x, a.z ^ b.z);
    let e = a.y_count() as i64 + b.y_count() as i64 + 2 * (a.z & b.x).count_ones() as i64
        - c.y_count() as i64;
    let phase = C64::i().powi((e.rem_euclid(4)) as i32);
    Ok((c, phase))
}

/// P M P for a Hermitian Pauli P. O(d²); no phases survive.
pub fn pauli_conjugate(m: &CMatrix, p: &PauliLabel) -> CMatrix {
    let d = p.dim();
    assert_eq!(m.rows(), d);
    CMatrix::from_fn(d, d, |a, b| {
        let sign = if (p.z & ((a ^ b) as u32)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        m[((a ^ p.x as usize), (b ^ p.x as usize))] * sign
    })
}

/// P M P on probe ⊗ ancilla (P acts on the probe factor only).
pub fn pauli_conjugate_probe(m: &CMatrix, p: &PauliLabel, ancilla_dim: usize) -> CMatrix {
    let dp = p.dim();
    let d = dp * ancilla_dim;
    assert_eq!(m.rows(), d);
    CMatrix::from_fn(d, d, |a, b| {
        let (ap, aa) = (a / ancilla_dim, a % ancilla_dim);
        let (bp, ba) = (b / ancilla_dim, b % ancilla_dim);
        let sign = if (p.z & ((ap ^ bp) as u32)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        m[(
            (ap ^ p.x as usize) * ancilla_dim + aa,
            (bp ^ p.x as usize) * ancilla_dim + ba,
        )] * sign
    })
}

/// All 4ⁿ labels in index order (identity first).
pub fn all_labels(n: usize) -> Vec<PauliLabel> {
    (0..(1usize << (2 * n)))
        .map(|k| PauliLabel::from_index(n, k))
        .collect()
}

/// The 4ⁿ − 1 non-identity labels in index order.
pub fn non_identity_labels(n: usize) -> Vec<PauliLabel> {
    all_labels(n).into_iter().filter(|p| !p.is_identity()).collect()
}
