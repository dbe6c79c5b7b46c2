//! Parameterized state families ρ_θ with derivatives ∂_i ρ_θ.

mod families;

pub use families::{
    ghz_fidelity, DepolarizedFidelityFamily, FidelityPureFamily, GHZMixFamily, PhaseQubitFamily,
    StabilizerMixFamily,
};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qmath::{eigh, CMatrix};

/// Default central-difference step (balances truncation vs roundoff at f64).
pub const FD_STEP: f64 = 1e-4;

/// A d×d Hermitian, positive semidefinite, trace-one matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates the density-matrix invariants: Hermitian (relative 1e-10),
    /// trace 1 (1e-10), PSD down to -1e-10.
    pub fn new(mat: CMatrix) -> Result<Self> {
        mat.require_square()?;
        let asym = mat.hermitian_asymmetry();
        if asym > 1e-10 {
            return Err(Error::InvalidState {
                reason: format!("not Hermitian (asymmetry {asym:.3e})"),
            });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidState {
                reason: format!("trace {} != 1", tr),
            });
        }
        let eig = eigh(&mat)?;
        if eig.min_eigenvalue() < -1e-10 {
            return Err(Error::InvalidState {
                reason: format!("negative eigenvalue {:.3e}", eig.min_eigenvalue()),
            });
        }
        Ok(DensityMatrix { mat })
    }

    /// Skips validation; for internal constructions that are valid by form.
    pub fn new_unchecked(mat: CMatrix) -> Self {
        DensityMatrix { mat }
    }

    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState {
                reason: format!("pure state norm² = {norm}"),
            });
        }
        Ok(DensityMatrix {
            mat: CMatrix::projector(psi),
        })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            mat: CMatrix::identity(d).scale(1.0 / d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.mat
    }
}

/// Derivative evaluation mode of a family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivMode {
    Analytic,
    CentralDifference { step: f64 },
}

/// A map θ → (ρ_θ, {∂_i ρ_θ}). Families are immutable after construction and
/// evaluation is pure, so they are safe to share across threads.
pub trait StateFamily: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn n_params(&self) -> usize;

    fn state(&self, theta: &[f64]) -> Result<DensityMatrix>;

    /// Analytic derivatives where the family provides them; the default is a
    /// central difference with step [`FD_STEP`].
    fn derivs(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        central_difference_derivs(self, theta, FD_STEP)
    }

    fn deriv_mode(&self) -> DerivMode {
        DerivMode::CentralDifference { step: FD_STEP }
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: theta.len(),
            });
        }
        Ok(())
    }
}

/// Central-difference derivatives (∂_i ρ ≈ (ρ(θ+h eᵢ) − ρ(θ−h eᵢ)) / 2h).
///
/// Fails with a domain error if a probe point leaves the family domain; use
/// analytic derivatives or shrink the domain in that case.
pub fn central_difference_derivs<F: StateFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    step: f64,
) -> Result<Vec<CMatrix>> {
    family.check_len(theta)?;
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[i] += step;
        tm[i] -= step;
        let boundary = |e: Error| {
            Error::domain(
                &format!("theta[{i}]"),
                format!(
                    "central difference at step {step} leaves the domain ({e}); \
                     use analytic derivatives or shrink the domain"
                ),
            )
        };
        let rp = family.state(&tp).map_err(boundary)?;
        let rm = family.state(&tm).map_err(boundary)?;
        out.push((rp.mat() - rm.mat()).scale(0.5 / step));
    }
    Ok(out)
}

/// Descriptor used by config files to construct a family by name.
#[derive(Clone, Debug)]
pub struct FamilySpec {
    pub kind: String,
    pub n_qubits: usize,
    pub dim: usize,
    pub target: Vec<f64>,
}

/// Registry mapping config names to families.
///
/// Known names: `phase-qubit`, `ghz-mix`, `fidelity-pure`,
/// `depolarized-fidelity`, `stabilizer-mix`.
pub fn family_by_name(spec: &FamilySpec) -> Result<Box<dyn StateFamily>> {
    match spec.kind.as_str() {
        "phase-qubit" => Ok(Box::new(PhaseQubitFamily::new())),
        "ghz-mix" => Ok(Box::new(GHZMixFamily::new(spec.n_qubits)?)),
        "stabilizer-mix" => Ok(Box::new(StabilizerMixFamily::z_group(spec.n_qubits)?)),
        "fidelity-pure" => {
            let target = default_target(spec.dim);
            Ok(Box::new(FidelityPureFamily::new(&target)?))
        }
        "depolarized-fidelity" => {
            let target = default_target(spec.dim);
            Ok(Box::new(DepolarizedFidelityFamily::new(&target)?))
        }
        other => Err(Error::config(
            "family.type",
            format!("unknown family `{other}`"),
        )),
    }
}

/// Fixed fiducial target |φ⟩ ∝ (1, 1, …, 1)/√d used when a config names a
/// fidelity family without an explicit target vector. At d = 2 this is the
/// symmetric Bloch point direction only after a basis change; the no-go
/// experiment builds its own target explicitly.
fn default_target(d: usize) -> Vec<C64> {
    let a = 1.0 / (d as f64).sqrt();
    vec![C64::new(a, 0.0); d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_matrix_rejects_bad_trace() {
        let m = CMatrix::identity(2);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn density_matrix_accepts_mixed() {
        let m = CMatrix::diag_real(&[0.25, 0.75]);
        assert!(DensityMatrix::new(m).is_ok());
    }
}
