//! Concrete state families used by the experiments.

use num_complex::Complex64 as C64;

use super::{DensityMatrix, DerivMode, StateFamily};
use crate::error::{Error, Result};
use crate::models::pauli::PauliLabel;
use crate::qmath::CMatrix;

fn zero(d: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); d]
}

fn pure_rho(psi: &[C64]) -> CMatrix {
    CMatrix::projector(psi)
}

/// ∂(|ψ⟩⟨ψ|) = |∂ψ⟩⟨ψ| + |ψ⟩⟨∂ψ|.
fn pure_deriv(psi: &[C64], dpsi: &[C64]) -> CMatrix {
    &CMatrix::outer(dpsi, psi) + &CMatrix::outer(psi, dpsi)
}

fn normalized(v: &[C64]) -> Result<Vec<C64>> {
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n < 1e-12 {
        return Err(Error::InvalidArgument("zero target vector".into()));
    }
    Ok(v.iter().map(|z| z / n).collect())
}

// ---------------------------------------------------------------------------
// Phase qubit: |ψ_θ⟩ = (|0⟩ + e^{iθ}|1⟩)/√2
// ---------------------------------------------------------------------------

pub struct PhaseQubitFamily {
    name: String,
}

impl PhaseQubitFamily {
    pub fn new() -> Self {
        PhaseQubitFamily {
            name: "phase-qubit".into(),
        }
    }

    pub fn psi(theta: f64) -> Vec<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![C64::new(s, 0.0), C64::from_polar(s, theta)]
    }
}

impl Default for PhaseQubitFamily {
    fn default() -> Self {
        Self::new()
    }
}

impl StateFamily for PhaseQubitFamily {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        2
    }
    fn n_params(&self) -> usize {
        1
    }

    fn state(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_len(theta)?;
        Ok(DensityMatrix::new_unchecked(pure_rho(&Self::psi(theta[0]))))
    }

    fn derivs(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        self.check_len(theta)?;
        let psi = Self::psi(theta[0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dpsi = vec![
            C64::new(0.0, 0.0),
            C64::i() * C64::from_polar(s, theta[0]),
        ];
        Ok(vec![pure_deriv(&psi, &dpsi)])
    }

    fn deriv_mode(&self) -> DerivMode {
        DerivMode::Analytic
    }
}

// ---------------------------------------------------------------------------
// Pure fidelity family: |ψ_{f,g}⟩ = √f|φ⟩ + √(1−f)|φ⊥_g⟩
// ---------------------------------------------------------------------------

/// The orthogonal direction |φ⊥_g⟩ is parameterized by real-sphere
/// coordinates over a fixed Gram–Schmidt basis of the complement of |φ⟩,
/// with d−2 angles. Parameters: θ = (f, g_1, …, g_{d−2}).
pub struct FidelityPureFamily {
    name: String,
    target: Vec<C64>,
    complement: Vec<Vec<C64>>,
}

impl FidelityPureFamily {
    pub fn new(target: &[C64]) -> Result<Self> {
        let d = target.len();
        if d < 2 {
            return Err(Error::InvalidArgument("dimension must be ≥ 2".into()));
        }
        let target = normalized(target)?;
        let complement = orthogonal_complement_basis(&target);
        Ok(FidelityPureFamily {
            name: "fidelity-pure".into(),
            target,
            complement,
        })
    }

    pub fn target(&self) -> &[C64] {
        &self.target
    }

    /// Unit coordinates on the real sphere S^{d−2} and their derivatives.
    fn sphere_coords(&self, g: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let m = g.len(); // = d − 2
        let nc = m + 1;
        let mut a = vec![0.0; nc];
        for k in 0..nc {
            let mut v = 1.0;
            for gj in g.iter().take(k) {
                v *= gj.sin();
            }
            if k < m {
                v *= g[k].cos();
            }
            a[k] = v;
        }
        // da[i][k] = ∂a_k/∂g_i
        let mut da = vec![vec![0.0; nc]; m];
        for (i, row) in da.iter_mut().enumerate() {
            for (k, slot) in row.iter_mut().enumerate() {
                if k < i {
                    continue;
                }
                let mut v = 1.0;
                for (j, gj) in g.iter().enumerate().take(k) {
                    v *= if j == i { gj.cos() } else { gj.sin() };
                }
                if k < m {
                    v *= if k == i { -g[k].sin() } else { g[k].cos() };
                }
                *slot = v;
            }
        }
        (a, da)
    }

    fn psi_parts(&self, theta: &[f64]) -> Result<(f64, Vec<C64>, Vec<C64>)> {
        let f = theta[0];
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::domain("f", format!("f = {f} must lie in (0, 1)")));
        }
        let (a, _) = self.sphere_coords(&theta[1..]);
        let d = self.dim();
        let mut perp = zero(d);
        for (k, bk) in self.complement.iter().enumerate() {
            for (p, b) in perp.iter_mut().zip(bk.iter()) {
                *p += C64::new(a[k], 0.0) * b;
            }
        }
        let mut psi = zero(d);
        for i in 0..d {
            psi[i] = C64::new(f.sqrt(), 0.0) * self.target[i]
                + C64::new((1.0 - f).sqrt(), 0.0) * perp[i];
        }
        Ok((f, psi, perp))
    }
}

impl StateFamily for FidelityPureFamily {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.target.len()
    }
    fn n_params(&self) -> usize {
        self.target.len() - 1
    }

    fn state(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_len(theta)?;
        let (_, psi, _) = self.psi_parts(theta)?;
        Ok(DensityMatrix::new_unchecked(pure_rho(&psi)))
    }

    fn derivs(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        self.check_len(theta)?;
        let (f, psi, perp) = self.psi_parts(theta)?;
        let d = self.dim();
        let (_, da) = self.sphere_coords(&theta[1..]);
        let mut out = Vec::with_capacity(self.n_params());
        // ∂_f ψ = |φ⟩/(2√f) − |φ⊥⟩/(2√(1−f))
        let mut dpsi_f = zero(d);
        for i in 0..d {
            dpsi_f[i] = self.target[i] * C64::new(0.5 / f.sqrt(), 0.0)
                - perp[i] * C64::new(0.5 / (1.0 - f).sqrt(), 0.0);
        }
        out.push(pure_deriv(&psi, &dpsi_f));
        for row in &da {
            let mut dperp = zero(d);
            for (k, bk) in self.complement.iter().enumerate() {
                for (p, b) in dperp.iter_mut().zip(bk.iter()) {
                    *p += C64::new(row[k], 0.0) * b;
                }
            }
            let dpsi: Vec<C64> = dperp
                .iter()
                .map(|z| z * C64::new((1.0 - f).sqrt(), 0.0))
                .collect();
            out.push(pure_deriv(&psi, &dpsi));
        }
        Ok(out)
    }

    fn deriv_mode(&self) -> DerivMode {
        DerivMode::Analytic
    }
}

/// Deterministic orthonormal basis of the complement of |φ⟩: Gram–Schmidt of
/// the standard basis against |φ⟩, keeping the first d−1 independent vectors.
fn orthogonal_complement_basis(target: &[C64]) -> Vec<Vec<C64>> {
    let d = target.len();
    let mut basis: Vec<Vec<C64>> = vec![target.to_vec()];
    for j in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = zero(d);
        v[j] = C64::new(1.0, 0.0);
        for b in &basis {
            let proj: C64 = b.iter().zip(v.iter()).map(|(a, x)| a.conj() * x).sum();
            for (x, bb) in v.iter_mut().zip(b.iter()) {
                *x -= proj * bb;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    basis.remove(0);
    basis
}

// ---------------------------------------------------------------------------
// GHZ mixture family
// ---------------------------------------------------------------------------

/// n-qubit pure family |ψ_φ⟩ = √φ₀|Φ⟩ + Σᵢ √φᵢ|Φᵢ⟩ with φ₀ = 1 − Σφᵢ,
/// |Φ⟩ the GHZ state and |Φᵢ⟩ its single-bit-flip on qubit i.
pub struct GHZMixFamily {
    name: String,
    n: usize,
}

impl GHZMixFamily {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            // at n = 2 the two single-bit-flip states coincide
            return Err(Error::InvalidArgument(
                "GHZ mixture family needs n ≥ 3 (bit-flip states must be orthogonal)".into(),
            ));
        }
        Ok(GHZMixFamily {
            name: "ghz-mix".into(),
            n,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// The n+1 orthonormal basis states |Φ⟩, |Φ₁⟩, …, |Φ_n⟩.
    pub fn basis_states(&self) -> Vec<Vec<C64>> {
        let d = 1usize << self.n;
        let all = d - 1;
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut out = Vec::with_capacity(self.n + 1);
        let mut ghz = zero(d);
        ghz[0] = amp;
        ghz[all] = amp;
        out.push(ghz);
        for i in 0..self.n {
            let flip = 1usize << i;
            let mut v = zero(d);
            v[flip] = amp;
            v[all ^ flip] = amp;
            out.push(v);
        }
        out
    }

    /// Full weight vector (φ₀, φ₁, …, φ_n) from the n free parameters.
    pub fn weights(&self, phis: &[f64]) -> Result<Vec<f64>> {
        if phis.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: phis.len(),
            });
        }
        for (i, p) in phis.iter().enumerate() {
            if *p < 0.0 {
                return Err(Error::domain(
                    &format!("phi[{}]", i + 1),
                    format!("negative weight {p}"),
                ));
            }
        }
        let sum: f64 = phis.iter().sum();
        let phi0 = 1.0 - sum;
        if phi0 < -1e-12 {
            return Err(Error::domain("phi", format!("Σφᵢ = {sum} exceeds 1")));
        }
        let mut w = vec![phi0.max(0.0)];
        w.extend_from_slice(phis);
        Ok(w)
    }

    pub fn psi(&self, phis: &[f64]) -> Result<Vec<C64>> {
        let w = self.weights(phis)?;
        let basis = self.basis_states();
        let d = 1usize << self.n;
        let mut psi = zero(d);
        for (wk, bk) in w.iter().zip(basis.iter()) {
            let c = C64::new(wk.sqrt(), 0.0);
            for (p, b) in psi.iter_mut().zip(bk.iter()) {
                *p += c * b;
            }
        }
        Ok(psi)
    }
}

impl StateFamily for GHZMixFamily {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        1 << self.n
    }
    fn n_params(&self) -> usize {
        self.n
    }

    fn state(&self, theta: &[f64]) -> Result<DensityMatrix> {
        Ok(DensityMatrix::new_unchecked(pure_rho(&self.psi(theta)?)))
    }

    fn derivs(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let w = self.weights(theta)?;
        if w[0] <= 0.0 {
            return Err(Error::domain("phi", "derivatives need φ₀ > 0"));
        }
        for (i, p) in theta.iter().enumerate() {
            if *p <= 0.0 {
                return Err(Error::domain(
                    &format!("phi[{}]", i + 1),
                    "derivatives need φᵢ > 0",
                ));
            }
        }
        let psi = self.psi(theta)?;
        let basis = self.basis_states();
        let d = self.dim();
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            // ∂ᵢψ = −|Φ⟩/(2√φ₀) + |Φᵢ⟩/(2√φᵢ)
            let c0 = C64::new(-0.5 / w[0].sqrt(), 0.0);
            let ci = C64::new(0.5 / w[i + 1].sqrt(), 0.0);
            let mut dpsi = zero(d);
            for k in 0..d {
                dpsi[k] = c0 * basis[0][k] + ci * basis[i + 1][k];
            }
            out.push(pure_deriv(&psi, &dpsi));
        }
        Ok(out)
    }

    fn deriv_mode(&self) -> DerivMode {
        DerivMode::Analytic
    }
}

/// Overlap fidelity |⟨ψ_a|ψ_b⟩|² = (Σ_k √(a_k b_k))² between two GHZ-mixture
/// states given by their free parameter vectors.
pub fn ghz_fidelity(n: usize, target: &[f64], state: &[f64]) -> Result<f64> {
    let fam = GHZMixFamily::new(n)?;
    let a = fam.weights(target)?;
    let b = fam.weights(state)?;
    let s: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x * y).sqrt()).sum();
    Ok(s * s)
}

// ---------------------------------------------------------------------------
// Depolarized fidelity family
// ---------------------------------------------------------------------------

/// ρ_f = f|φ⟩⟨φ| + (1−f)(1 − |φ⟩⟨φ|)/(d−1); single parameter f ∈ [0, 1].
pub struct DepolarizedFidelityFamily {
    name: String,
    target: Vec<C64>,
}

impl DepolarizedFidelityFamily {
    pub fn new(target: &[C64]) -> Result<Self> {
        if target.len() < 2 {
            return Err(Error::InvalidArgument("dimension must be ≥ 2".into()));
        }
        Ok(DepolarizedFidelityFamily {
            name: "depolarized-fidelity".into(),
            target: normalized(target)?,
        })
    }

    pub fn target(&self) -> &[C64] {
        &self.target
    }
}

impl StateFamily for DepolarizedFidelityFamily {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.target.len()
    }
    fn n_params(&self) -> usize {
        1
    }

    fn state(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_len(theta)?;
        let f = theta[0];
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::domain("f", format!("f = {f} must lie in [0, 1]")));
        }
        let d = self.dim();
        let proj = pure_rho(&self.target);
        let mut rho = proj.scale(f);
        let rest = (&CMatrix::identity(d) - &proj).scale((1.0 - f) / (d as f64 - 1.0));
        rho = &rho + &rest;
        Ok(DensityMatrix::new_unchecked(rho))
    }

    fn derivs(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        self.check_len(theta)?;
        let d = self.dim();
        let proj = pure_rho(&self.target);
        let rest = (&CMatrix::identity(d) - &proj).scale(1.0 / (d as f64 - 1.0));
        Ok(vec![&proj - &rest])
    }

    fn deriv_mode(&self) -> DerivMode {
        DerivMode::Analytic
    }
}

// ---------------------------------------------------------------------------
// Stabilizer mixture family
// ---------------------------------------------------------------------------

/// ρ_θ = (1 + Σᵢ θᵢ Pᵢ)/2ⁿ over a commuting Pauli set (a stabilizer group
/// minus the identity), estimated at θ = 0.
pub struct StabilizerMixFamily {
    name: String,
    n: usize,
    paulis: Vec<PauliLabel>,
}

impl StabilizerMixFamily {
    /// Builds the family from independent commuting generators; the Pauli set
    /// is the generated group minus the identity (2^k − 1 elements).
    pub fn new(n: usize, generators: &[PauliLabel]) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument("no generators".into()));
        }
        for g in generators {
            if g.n != n || g.is_identity() {
                return Err(Error::InvalidArgument(
                    "generators must be non-identity n-qubit Paulis".into(),
                ));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in generators.iter().skip(i + 1) {
                if !a.commutes_with(b) {
                    return Err(Error::InvalidArgument(
                        "generators must pairwise commute".into(),
                    ));
                }
            }
        }
        // independence over GF(2)
        let mut rows: Vec<u64> = generators
            .iter()
            .map(|g| (g.x as u64) | ((g.z as u64) << n))
            .collect();
        let mut rank = 0;
        for bit in (0..2 * n).rev() {
            if let Some(pos) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) {
                rows.swap(rank, pos);
                for r in 0..rows.len() {
                    if r != rank && rows[r] >> bit & 1 == 1 {
                        rows[r] ^= rows[rank];
                    }
                }
                rank += 1;
            }
        }
        if rank != generators.len() {
            return Err(Error::InvalidArgument(
                "generators must be independent".into(),
            ));
        }
        // group = XOR closure of generators, minus identity, in index order
        let k = generators.len();
        let mut paulis = Vec::with_capacity((1 << k) - 1);
        for mask in 1usize..(1 << k) {
            let mut x = 0u32;
            let mut z = 0u32;
            for (j, g) in generators.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    x ^= g.x;
                    z ^= g.z;
                }
            }
            paulis.push(PauliLabel::new(n, x, z));
        }
        paulis.sort_by_key(|p| p.index());
        Ok(StabilizerMixFamily {
            name: "stabilizer-mix".into(),
            n,
            paulis,
        })
    }

    /// All-Z stabilizer group ⟨Z₁, …, Z_n⟩ minus identity (2ⁿ − 1 Paulis).
    pub fn z_group(n: usize) -> Result<Self> {
        let gens: Vec<PauliLabel> = (0..n).map(|i| PauliLabel::new(n, 0, 1 << i)).collect();
        Self::new(n, &gens)
    }

    pub fn paulis(&self) -> &[PauliLabel] {
        &self.paulis
    }
}

impl StateFamily for StabilizerMixFamily {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        1 << self.n
    }
    fn n_params(&self) -> usize {
        self.paulis.len()
    }

    fn state(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_len(theta)?;
        let d = self.dim();
        let mut m = CMatrix::identity(d);
        for (t, p) in theta.iter().zip(self.paulis.iter()) {
            m.add_scaled(&p.dense(), C64::new(*t, 0.0));
        }
        m = m.scale(1.0 / d as f64);
        // PSD only holds in a neighborhood of θ = 0; validate
        DensityMatrix::new(m).map_err(|e| {
            Error::domain("theta", format!("state left the PSD neighborhood: {e}"))
        })
    }

    fn derivs(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        self.check_len(theta)?;
        let d = self.dim();
        Ok(self
            .paulis
            .iter()
            .map(|p| p.dense().scale(1.0 / d as f64))
            .collect())
    }

    fn deriv_mode(&self) -> DerivMode {
        DerivMode::Analytic
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::eigh;
    use crate::states::{central_difference_derivs, StateFamily};

    fn plus_projector() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::projector(&[C64::new(s, 0.0), C64::new(s, 0.0)])
    }

    #[test]
    fn phase_qubit_at_zero_is_plus() {
        let fam = PhaseQubitFamily::new();
        let rho = fam.state(&[0.0]).unwrap();
        assert!((rho.mat() - &plus_projector()).frobenius_norm() < 1e-14);
    }

    #[test]
    fn phase_qubit_deriv_exact_and_matches_fd() {
        let fam = PhaseQubitFamily::new();
        let d = fam.derivs(&[0.0]).unwrap();
        // ∂ρ = (i|1⟩⟨0| − i|0⟩⟨1|)/2
        let mut expect = CMatrix::zeros(2, 2);
        expect[(1, 0)] = C64::new(0.0, 0.5);
        expect[(0, 1)] = C64::new(0.0, -0.5);
        assert!((&d[0] - &expect).frobenius_norm() < 1e-14);
        let fd = central_difference_derivs(&fam, &[0.0], 1e-5).unwrap();
        assert!((&d[0] - &fd[0]).frobenius_norm() < 1e-8);
    }

    #[test]
    fn depolarized_boundary_is_target() {
        let t = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let fam = DepolarizedFidelityFamily::new(&t).unwrap();
        let rho = fam.state(&[1.0]).unwrap();
        assert!((rho.mat() - &CMatrix::projector(&t)).frobenius_norm() < 1e-14);
        assert!(fam.state(&[1.5]).is_err());
    }

    #[test]
    fn depolarized_deriv_is_linear_form() {
        let t = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let fam = DepolarizedFidelityFamily::new(&t).unwrap();
        let d = fam.derivs(&[0.4]).unwrap();
        let proj = CMatrix::projector(&t);
        let expect = &proj - &(&CMatrix::identity(2) - &proj);
        assert!((&d[0] - &expect).frobenius_norm() < 1e-14);
    }

    #[test]
    fn ghz_pure_point() {
        let fam = GHZMixFamily::new(3).unwrap();
        let rho = fam.state(&[0.075, 0.075, 0.075]).unwrap();
        let basis = fam.basis_states();
        let overlap = rho.mat().expectation(&basis[0]).re;
        assert!((overlap - 0.775).abs() < 1e-12);
        // all-zero parameters give the exact GHZ projector
        let ghz = fam.state(&[0.0, 0.0, 0.0]).unwrap();
        assert!((ghz.mat() - &CMatrix::projector(&basis[0])).frobenius_norm() < 1e-14);
    }

    #[test]
    fn ghz_fidelity_reproduces_infidelity_table() {
        let target = [0.075, 0.075, 0.075];
        let cases = [
            ([0.10, 0.10, 0.10], 0.0073),
            ([0.15, 0.15, 0.15], 0.0570),
            ([0.20, 0.20, 0.20], 0.1459),
            ([0.25, 0.25, 0.25], 0.2759),
        ];
        for (state, infid) in cases {
            let f = ghz_fidelity(3, &target, &state).unwrap();
            assert!(
                ((1.0 - f) - infid).abs() < 0.5e-4,
                "state {state:?}: 1-f = {}",
                1.0 - f
            );
        }
        let same = ghz_fidelity(3, &target, &target).unwrap();
        assert!((same - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_derivs_match_fd() {
        let fam = GHZMixFamily::new(3).unwrap();
        let theta = [0.2, 0.25, 0.2];
        let an = fam.derivs(&theta).unwrap();
        let fd = central_difference_derivs(&fam, &theta, 1e-4).unwrap();
        for (a, b) in an.iter().zip(fd.iter()) {
            assert!((a - b).frobenius_norm() < 1e-6);
        }
    }

    #[test]
    fn stabilizer_mix_derivs_and_state() {
        let fam = StabilizerMixFamily::z_group(2).unwrap();
        assert_eq!(fam.n_params(), 3);
        let rho = fam.state(&[0.0, 0.0, 0.0]).unwrap();
        assert!((rho.mat() - &CMatrix::identity(4).scale(0.25)).frobenius_norm() < 1e-14);
        let d = fam.derivs(&[0.0, 0.0, 0.0]).unwrap();
        for (p, dm) in fam.paulis().iter().zip(d.iter()) {
            assert!((dm - &p.dense().scale(0.25)).frobenius_norm() < 1e-14);
        }
        // far outside the PSD neighborhood
        assert!(fam.state(&[2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn fidelity_pure_family_invariants() {
        let t = [
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
        ];
        let fam = FidelityPureFamily::new(&t).unwrap();
        assert_eq!(fam.n_params(), 3);
        let theta = [0.3, 0.4, 1.1];
        let rho = fam.state(&theta).unwrap();
        assert!((rho.mat().trace().re - 1.0).abs() < 1e-12);
        // |⟨φ|ψ⟩|² = f
        let ov = rho.mat().expectation(fam.target()).re;
        assert!((ov - 0.3).abs() < 1e-12);
        // analytic derivatives match central differences
        let an = fam.derivs(&theta).unwrap();
        let fd = central_difference_derivs(&fam, &theta, 1e-4).unwrap();
        for (a, b) in an.iter().zip(fd.iter()) {
            assert!((a - b).frobenius_norm() < 1e-6);
        }
        assert!(fam.state(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn family_invariants_hold_at_sampled_points() {
        use crate::rng::stream_rng;
        use rand::Rng;
        let mut rng = stream_rng(77, 0, 0);
        for trial in 0..5 {
            let _ = trial;
            let points: Vec<(Box<dyn StateFamily>, Vec<f64>)> = vec![
                (
                    Box::new(PhaseQubitFamily::new()),
                    vec![rng.random_range(-3.0..3.0)],
                ),
                (
                    Box::new(GHZMixFamily::new(3).unwrap()),
                    (0..3).map(|_| rng.random_range(0.02..0.3)).collect(),
                ),
                (
                    Box::new(
                        DepolarizedFidelityFamily::new(&[
                            C64::new(0.6, 0.0),
                            C64::new(0.0, 0.8),
                        ])
                        .unwrap(),
                    ),
                    vec![rng.random_range(0.05..0.95)],
                ),
                (
                    Box::new(StabilizerMixFamily::z_group(2).unwrap()),
                    (0..3).map(|_| rng.random_range(-0.15..0.15)).collect(),
                ),
            ];
            for (fam, theta) in &points {
                let rho = fam.state(theta).unwrap();
                assert!((rho.mat().trace().re - 1.0).abs() < 1e-10, "{}", fam.name());
                let eig = eigh(rho.mat()).unwrap();
                assert!(eig.min_eigenvalue() >= -1e-10, "{}", fam.name());
                for d in fam.derivs(theta).unwrap() {
                    assert!(d.trace().norm() < 1e-8, "{}", fam.name());
                }
            }
        }
    }

    #[test]
    fn family_states_are_valid_and_derivs_traceless() {
        let fams: Vec<(Box<dyn StateFamily>, Vec<f64>)> = vec![
            (Box::new(PhaseQubitFamily::new()), vec![0.7]),
            (
                Box::new(GHZMixFamily::new(3).unwrap()),
                vec![0.1, 0.15, 0.2],
            ),
            (
                Box::new(
                    DepolarizedFidelityFamily::new(&[
                        C64::new(0.6, 0.0),
                        C64::new(0.0, 0.8),
                    ])
                    .unwrap(),
                ),
                vec![0.9],
            ),
            (
                Box::new(StabilizerMixFamily::z_group(2).unwrap()),
                vec![0.05, -0.03, 0.08],
            ),
        ];
        for (fam, theta) in &fams {
            let rho = fam.state(theta).unwrap();
            let eig = eigh(rho.mat()).unwrap();
            assert!((rho.mat().trace().re - 1.0).abs() < 1e-10, "{}", fam.name());
            assert!(eig.min_eigenvalue() >= -1e-10, "{}", fam.name());
            for d in fam.derivs(theta).unwrap() {
                assert!(d.trace().norm() < 1e-8, "{} deriv trace", fam.name());
                assert!(d.hermitian_asymmetry() < 1e-10);
            }
        }
    }
}
