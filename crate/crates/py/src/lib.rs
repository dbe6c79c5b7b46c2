//! Python bindings for the core types and operations.
//!
//! Complex matrices cross the boundary as nested lists of `(re, im)` tuples,
//! vectors as flat lists of tuples, and real matrices as nested float lists.

use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qmetro::designs::{moment_t, pauli_povm_1q, povm_from_cliffords, RankOnePOVM};
use qmetro::designs::tableau::{clifford_enumerate, clifford_sample};
use qmetro::fisher::{
    cfim_rank_one, deviation_observables, gill_massar, near_optimality_ratio, predicted_msem,
    qfim, sld, DevKind, GmVariant,
};
use qmetro::models::{qfim_hamiltonian_pure, qfim_noisy_bell, PauliChannel};
use qmetro::qmath::{eigh, CMatrix, RMatrix, T_RANK};
use qmetro::rng::stream_rng;
use qmetro::shadows::{iterative_fidelity_estimate, generate_dataset_pure};
use qmetro::states::{DensityMatrix, GHZMixFamily};

type PyComplex = (f64, f64);
type PyCMat = Vec<Vec<PyComplex>>;
type PyCVec = Vec<PyComplex>;

fn err(e: qmetro::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_cmatrix(m: &PyCMat) -> PyResult<CMatrix> {
    let rows: Vec<Vec<C64>> = m
        .iter()
        .map(|row| row.iter().map(|(re, im)| C64::new(*re, *im)).collect())
        .collect();
    CMatrix::from_rows(&rows).map_err(err)
}

fn from_cmatrix(m: &CMatrix) -> PyCMat {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
        .collect()
}

fn to_cvec(v: &PyCVec) -> Vec<C64> {
    v.iter().map(|(re, im)| C64::new(*re, *im)).collect()
}

fn from_cvec(v: &[C64]) -> PyCVec {
    v.iter().map(|z| (z.re, z.im)).collect()
}

fn from_rmatrix(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn density(rho: &PyCMat) -> PyResult<DensityMatrix> {
    DensityMatrix::new(to_cmatrix(rho)?).map_err(err)
}

fn derivs_list(derivs: &[PyCMat]) -> PyResult<Vec<CMatrix>> {
    derivs.iter().map(|d| to_cmatrix(d)).collect()
}

fn povm_from_py(elements: Vec<(f64, PyCVec)>, dim: usize) -> PyResult<RankOnePOVM> {
    let els = elements
        .into_iter()
        .map(|(q, s)| (q, to_cvec(&s)))
        .collect();
    RankOnePOVM::new(dim, els).map_err(err)
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Hermitian eigendecomposition: (ascending eigenvalues, eigenvector columns).
#[pyfunction(name = "eigh")]
fn py_eigh(matrix: PyCMat) -> PyResult<(Vec<f64>, PyCMat)> {
    let e = eigh(&to_cmatrix(&matrix)?).map_err(err)?;
    Ok((e.eigenvalues.clone(), from_cmatrix(&e.eigenvectors)))
}

/// Symmetric logarithmic derivative of (ρ, ∂ρ).
#[pyfunction(name = "sld")]
fn py_sld(rho: PyCMat, drho: PyCMat) -> PyResult<PyCMat> {
    let l = sld(&density(&rho)?, &to_cmatrix(&drho)?, T_RANK).map_err(err)?;
    Ok(from_cmatrix(&l))
}

/// Quantum Fisher information matrix for (ρ, {∂ᵢρ}).
#[pyfunction(name = "qfim")]
fn py_qfim(rho: PyCMat, derivs: Vec<PyCMat>) -> PyResult<Vec<Vec<f64>>> {
    let j = qfim(&density(&rho)?, &derivs_list(&derivs)?, T_RANK).map_err(err)?;
    Ok(from_rmatrix(&j))
}

/// Classical Fisher information matrix for a rank-one POVM given as
/// (weight, state) elements with Σ q_s |s⟩⟨s| = 1/d.
#[pyfunction(name = "cfim")]
fn py_cfim(
    rho: PyCMat,
    derivs: Vec<PyCMat>,
    povm: Vec<(f64, PyCVec)>,
) -> PyResult<Vec<Vec<f64>>> {
    let rho = density(&rho)?;
    let p = povm_from_py(povm, rho.dim())?;
    let i = cfim_rank_one(&rho, &derivs_list(&derivs)?, &p).map_err(err)?;
    Ok(from_rmatrix(&i))
}

/// Plain deviation observables Xᵢ = Σⱼ (J⁻¹)ᵢⱼ Lⱼ.
#[pyfunction(name = "deviation_observables")]
fn py_deviation_observables(rho: PyCMat, derivs: Vec<PyCMat>) -> PyResult<Vec<PyCMat>> {
    let dev = deviation_observables(&density(&rho)?, &derivs_list(&derivs)?, DevKind::Plain)
        .map_err(err)?;
    Ok(dev.xs.iter().map(from_cmatrix).collect())
}

/// Single-shot MSE matrix of local shadow estimators under a 3-design.
#[pyfunction(name = "predicted_msem")]
fn py_predicted_msem(rho: PyCMat, xs: Vec<PyCMat>, d: usize) -> PyResult<Vec<Vec<f64>>> {
    let v = predicted_msem(&density(&rho)?, &derivs_list(&xs)?, d).map_err(err)?;
    Ok(from_rmatrix(&v))
}

/// Largest c with I ⪰ cJ.
#[pyfunction(name = "near_optimality_ratio")]
fn py_near_optimality_ratio(i: Vec<Vec<f64>>, j: Vec<Vec<f64>>) -> PyResult<f64> {
    let to_r = |m: &Vec<Vec<f64>>| {
        let n = m.len();
        RMatrix::from_fn(n, n, |a, b| m[a][b])
    };
    near_optimality_ratio(&to_r(&i), &to_r(&j)).map_err(err)
}

/// Gill–Massar quantity Tr(J⁻¹I) against the d−1 bound: (gm, bound, ok).
#[pyfunction(name = "gill_massar")]
fn py_gill_massar(j: Vec<Vec<f64>>, i: Vec<Vec<f64>>, d: usize) -> PyResult<(f64, f64, bool)> {
    let to_r = |m: &Vec<Vec<f64>>| {
        let n = m.len();
        RMatrix::from_fn(n, n, |a, b| m[a][b])
    };
    let g = gill_massar(&to_r(&j), &to_r(&i), d, GmVariant::Full).map_err(err)?;
    Ok((g.gm, g.bound, g.ok))
}

/// The six-outcome single-qubit Pauli POVM as (weight, state) elements.
#[pyfunction(name = "pauli_povm_1q")]
fn py_pauli_povm_1q() -> Vec<(f64, PyCVec)> {
    pauli_povm_1q()
        .elements()
        .iter()
        .map(|(q, s)| (*q, from_cvec(s)))
        .collect()
}

/// POVM from the exact Clifford enumeration (n ≤ 2).
#[pyfunction(name = "clifford_povm")]
fn py_clifford_povm(n: usize) -> PyResult<Vec<(f64, PyCVec)>> {
    let els = clifford_enumerate(n).map_err(err)?;
    let povm = povm_from_cliffords(&els).map_err(err)?;
    Ok(povm
        .elements()
        .iter()
        .map(|(q, s)| (*q, from_cvec(s)))
        .collect())
}

/// Frobenius gap of the t-th design moment against the Haar value.
#[pyfunction(name = "moment_gap")]
fn py_moment_gap(povm: Vec<(f64, PyCVec)>, dim: usize, t: usize) -> PyResult<f64> {
    let p = povm_from_py(povm, dim)?;
    Ok(moment_t(&p, t).map_err(err)?.frobenius_gap)
}

/// Uniformly sampled Clifford as gate tokens (H0, S1, CX0-1, CZ0-1, ...).
#[pyfunction(name = "clifford_sample_gates")]
fn py_clifford_sample_gates(n: usize, seed: u64) -> Vec<String> {
    let mut rng = stream_rng(seed, 0, 0);
    clifford_sample(n, &mut rng)
        .gates
        .iter()
        .map(|g| g.to_token())
        .collect()
}

/// Overlap fidelity between GHZ-mixture states given by weight parameters.
#[pyfunction(name = "ghz_fidelity")]
fn py_ghz_fidelity(n: usize, target: Vec<f64>, state: Vec<f64>) -> PyResult<f64> {
    qmetro::states::ghz_fidelity(n, &target, &state).map_err(err)
}

/// GHZ-mixture state vector for the given weight parameters.
#[pyfunction(name = "ghz_state")]
fn py_ghz_state(n: usize, phis: Vec<f64>) -> PyResult<PyCVec> {
    let fam = GHZMixFamily::new(n).map_err(err)?;
    Ok(from_cvec(&fam.psi(&phis).map_err(err)?))
}

/// End-to-end fidelity estimation: simulates `shots` random-Clifford
/// measurements of the unknown GHZ-mixture state and runs the iterative
/// local-shadow estimator against the target.
/// Returns (f_local, f_standard, iterations, converged).
#[pyfunction(name = "estimate_fidelity")]
fn py_estimate_fidelity(
    n: usize,
    target: Vec<f64>,
    state: Vec<f64>,
    shots: usize,
    seed: u64,
) -> PyResult<(f64, f64, usize, bool)> {
    let fam = GHZMixFamily::new(n).map_err(err)?;
    let psi = fam.psi(&state).map_err(err)?;
    let ds = generate_dataset_pure(&psi, n, shots, seed, 0).map_err(err)?;
    let est = iterative_fidelity_estimate(&ds, &target, &fam, 1e-6, 50).map_err(err)?;
    Ok((est.f_hat, est.f_std, est.iterations, est.converged))
}

/// Noiseless Hamiltonian-estimation QFIM for a pure input state (length d
/// for probe-only, d² for probe ⊗ ancilla).
#[pyfunction(name = "qfim_hamiltonian_pure")]
fn py_qfim_hamiltonian_pure(psi: PyCVec, n: usize) -> PyResult<Vec<Vec<f64>>> {
    let j = qfim_hamiltonian_pure(&to_cvec(&psi), n).map_err(err)?;
    Ok(from_rmatrix(&j))
}

/// Diagonal of the noisy maximally-entangled QFIM for a Pauli channel given
/// by its 4ⁿ rates.
#[pyfunction(name = "qfim_noisy_bell_diag")]
fn py_qfim_noisy_bell_diag(n: usize, rates: Vec<f64>) -> PyResult<Vec<f64>> {
    let ch = PauliChannel::new(n, rates).map_err(err)?;
    let j = qfim_noisy_bell(&ch).map_err(err)?;
    Ok((0..j.rows()).map(|k| j[(k, k)]).collect())
}

#[pymodule]
fn qmetro_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(py_eigh, m)?)?;
    m.add_function(wrap_pyfunction!(py_sld, m)?)?;
    m.add_function(wrap_pyfunction!(py_qfim, m)?)?;
    m.add_function(wrap_pyfunction!(py_cfim, m)?)?;
    m.add_function(wrap_pyfunction!(py_deviation_observables, m)?)?;
    m.add_function(wrap_pyfunction!(py_predicted_msem, m)?)?;
    m.add_function(wrap_pyfunction!(py_near_optimality_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(py_gill_massar, m)?)?;
    m.add_function(wrap_pyfunction!(py_pauli_povm_1q, m)?)?;
    m.add_function(wrap_pyfunction!(py_clifford_povm, m)?)?;
    m.add_function(wrap_pyfunction!(py_moment_gap, m)?)?;
    m.add_function(wrap_pyfunction!(py_clifford_sample_gates, m)?)?;
    m.add_function(wrap_pyfunction!(py_ghz_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(py_ghz_state, m)?)?;
    m.add_function(wrap_pyfunction!(py_estimate_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(py_qfim_hamiltonian_pure, m)?)?;
    m.add_function(wrap_pyfunction!(py_qfim_noisy_bell_diag, m)?)?;
    Ok(())
}
