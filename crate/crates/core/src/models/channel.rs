//! Pauli channels: rate vectors over the 4ⁿ Pauli labels.

use crate::error::{Error, Result};
use crate::qmath::CMatrix;

use super::pauli::{pauli_conjugate, PauliLabel};

/// A Pauli channel ρ ↦ Σ_k q_k P_k ρ P_k with Σ q_k = 1.
#[derive(Clone, Debug)]
pub struct PauliChannel {
    n: usize,
    rates: Vec<f64>,
}

impl PauliChannel {
    pub fn new(n: usize, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != 1 << (2 * n) {
            return Err(Error::DimensionMismatch {
                expected: 1 << (2 * n),
                got: rates.len(),
            });
        }
        if rates.iter().any(|q| *q < 0.0) {
            return Err(Error::InvalidArgument("negative Pauli rate".into()));
        }
        let total: f64 = rates.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "Pauli rates sum to {total}, expected 1"
            )));
        }
        Ok(PauliChannel { n, rates })
    }

    /// Global depolarizing channel: q₀ = 1 − q, q_k = q/(4ⁿ − 1) otherwise.
    pub fn depolarizing(n: usize, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain("q", format!("q = {q} outside [0, 1]")));
        }
        let count = 1usize << (2 * n);
        let each = q / (count as f64 - 1.0);
        let mut rates = vec![each; count];
        rates[0] = 1.0 - q;
        PauliChannel::new(n, rates)
    }

    /// Identity channel (q₀ = 1).
    pub fn identity(n: usize) -> Self {
        let count = 1usize << (2 * n);
        let mut rates = vec![0.0; count];
        rates[0] = 1.0;
        PauliChannel { n, rates }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, label: &PauliLabel) -> f64 {
        self.rates[label.index()]
    }

    /// Total noise rate q = 1 − q₀.
    pub fn total_noise(&self) -> f64 {
        1.0 - self.rates[0]
    }
}

/// Applies the channel to a density operator on the probe space.
pub fn apply_pauli_channel(rho: &CMatrix, ch: &PauliChannel) -> Result<CMatrix> {
    let d = 1usize << ch.n_qubits();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.rows(),
        });
    }
    let mut out = CMatrix::zeros(d, d);
    for (k, q) in ch.rates().iter().enumerate() {
        if *q == 0.0 {
            continue;
        }
        let p = PauliLabel::from_index(ch.n_qubits(), k);
        out.add_scaled(&pauli_conjugate(rho, &p), crate::qmath::C64::new(*q, 0.0));
    }
    Ok(out)
}

/// Applies the channel to the probe factor of probe ⊗ ancilla.
pub fn apply_pauli_channel_probe(
    rho: &CMatrix,
    ch: &PauliChannel,
    ancilla_dim: usize,
) -> Result<CMatrix> {
    let d = (1usize << ch.n_qubits()) * ancilla_dim;
    if rho.rows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.rows(),
        });
    }
    let mut out = CMatrix::zeros(d, d);
    for (k, q) in ch.rates().iter().enumerate() {
        if *q == 0.0 {
            continue;
        }
        let p = PauliLabel::from_index(ch.n_qubits(), k);
        out.add_scaled(
            &super::pauli::pauli_conjugate_probe(rho, &p, ancilla_dim),
            crate::qmath::C64::new(*q, 0.0),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_density, stream_rng};

    #[test]
    fn identity_channel_is_identity() {
        let mut rng = stream_rng(61, 0, 0);
        let rho = random_density(4, &mut rng);
        let out = apply_pauli_channel(&rho, &PauliChannel::identity(2)).unwrap();
        assert!((&out - &rho).frobenius_norm() < 1e-14);
    }

    #[test]
    fn full_depolarizing_gives_maximally_mixed() {
        // q_x = q_y = q_z = q_0 = 1/4 sends any qubit state to 1/2
        let ch = PauliChannel::new(1, vec![0.25; 4]).unwrap();
        let mut rng = stream_rng(62, 0, 0);
        let rho = random_density(2, &mut rng);
        let out = apply_pauli_channel(&rho, &ch).unwrap();
        assert!((&out - &CMatrix::identity(2).scale(0.5)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn channel_preserves_trace_and_hermiticity() {
        let ch = PauliChannel::depolarizing(2, 0.13).unwrap();
        let mut rng = stream_rng(63, 0, 0);
        let rho = random_density(4, &mut rng);
        let out = apply_pauli_channel(&rho, &ch).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        assert!(out.hermitian_asymmetry() < 1e-12);
    }

    #[test]
    fn invalid_rates_rejected() {
        assert!(PauliChannel::new(1, vec![0.5, 0.1, 0.1, 0.1]).is_err());
        assert!(PauliChannel::new(1, vec![1.2, -0.2, 0.0, 0.0]).is_err());
    }
}
