//! Born-rule measurement simulation, classical-shadow snapshots, the
//! standard and local shadow estimators, and the iterative fidelity
//! estimation algorithm.
//!
//! A snapshot records (unitary gate word, outcome); the dense form
//! ρ̂(s) = (d+1)|s⟩⟨s| − 1 is expanded lazily. Dataset generation runs
//! per-shot RNG streams derived from the master seed, so results do not
//! depend on the worker count.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;

use crate::designs::tableau::{apply_gates, clifford_sample, gates_to_state, Gate};
use crate::error::{Error, Result};
use crate::qmath::{pairwise_mean, CMatrix};
use crate::rng::{domain, stream_rng};
use crate::states::{DensityMatrix, GHZMixFamily};

/// One randomized-measurement record: unitary gate word plus outcome index.
#[derive(Clone, Debug)]
pub struct ShadowSnapshot {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub outcome: usize,
}

impl ShadowSnapshot {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// |s⟩ = U|outcome⟩.
    pub fn state_vector(&self) -> Vec<C64> {
        gates_to_state(&self.gates, self.n_qubits, self.outcome)
    }

    /// ρ̂(s) = (d+1)|s⟩⟨s| − 1; Hermitian with unit trace.
    pub fn expand(&self) -> CMatrix {
        let d = self.dim();
        let s = self.state_vector();
        let mut m = CMatrix::projector(&s).scale(d as f64 + 1.0);
        for i in 0..d {
            m[(i, i)] -= C64::new(1.0, 0.0);
        }
        m
    }

    /// Tr(A·ρ̂(s)) = (d+1)⟨s|A|s⟩ − Tr(A), without expanding ρ̂.
    pub fn trace_with(&self, a: &CMatrix) -> f64 {
        let d = self.dim() as f64;
        let s = self.state_vector();
        (d + 1.0) * a.expectation(&s).re - a.trace().re
    }

    /// ⟨φ|ρ̂(s)|φ⟩ = (d+1)|⟨φ|s⟩|² − 1.
    pub fn overlap_with(&self, phi: &[C64]) -> f64 {
        let d = self.dim() as f64;
        let s = self.state_vector();
        let ov: C64 = phi.iter().zip(s.iter()).map(|(a, b)| a.conj() * b).sum();
        (d + 1.0) * ov.norm_sqr() - 1.0
    }
}

/// A recorded shadow dataset with its provenance.
#[derive(Clone, Debug)]
pub struct ShadowDataset {
    pub n_qubits: usize,
    pub ensemble: String,
    pub seed: u64,
    pub snapshots: Vec<ShadowSnapshot>,
}

impl ShadowDataset {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Writes the line-delimited text format: a `# key = value` header block,
    /// then one record per shot: `index<TAB>gate word<TAB>outcome`.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# format = shadow-dataset-v1")?;
        writeln!(w, "# n_qubits = {}", self.n_qubits)?;
        writeln!(w, "# ensemble = {}", self.ensemble)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# shots = {}", self.snapshots.len())?;
        for (i, snap) in self.snapshots.iter().enumerate() {
            let word: Vec<String> = snap.gates.iter().map(|g| g.to_token()).collect();
            writeln!(w, "{i}\t{}\t{}", word.join(" "), snap.outcome)?;
        }
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<ShadowDataset> {
        let r = BufReader::new(File::open(path)?);
        let mut n_qubits = None;
        let mut ensemble = String::new();
        let mut seed = 0u64;
        let mut snapshots = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    match k.trim() {
                        "n_qubits" => {
                            n_qubits = Some(v.trim().parse().map_err(|_| Error::Parse {
                                what: "dataset header".into(),
                                reason: format!("bad n_qubits `{v}`"),
                            })?)
                        }
                        "ensemble" => ensemble = v.trim().to_string(),
                        "seed" => {
                            seed = v.trim().parse().map_err(|_| Error::Parse {
                                what: "dataset header".into(),
                                reason: format!("bad seed `{v}`"),
                            })?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let mut parts = line.split('\t');
            let _idx = parts.next();
            let word = parts.next().ok_or_else(|| Error::Parse {
                what: "dataset record".into(),
                reason: "missing gate word".into(),
            })?;
            let outcome: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    what: "dataset record".into(),
                    reason: "missing outcome".into(),
                })?;
            let gates = word
                .split_whitespace()
                .map(Gate::from_token)
                .collect::<Result<Vec<_>>>()?;
            let n = n_qubits.ok_or_else(|| Error::Parse {
                what: "dataset".into(),
                reason: "records before n_qubits header".into(),
            })?;
            snapshots.push(ShadowSnapshot {
                n_qubits: n,
                gates,
                outcome,
            });
        }
        Ok(ShadowDataset {
            n_qubits: n_qubits.ok_or_else(|| Error::Parse {
                what: "dataset".into(),
                reason: "missing n_qubits header".into(),
            })?,
            ensemble,
            seed,
            snapshots,
        })
    }
}

/// Born-rule sampling of a basis outcome after applying U† to ρ: outcome x
/// drawn with probability ⟨x|U†ρU|x⟩.
pub fn simulate_measurement<R: Rng>(rho: &DensityMatrix, u: &CMatrix, rng: &mut R) -> Result<usize> {
    let d = rho.dim();
    if u.rows() != d || u.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: u.rows(),
        });
    }
    let probs: Vec<f64> = (0..d)
        .map(|x| {
            let ux = u.column(x);
            rho.mat().expectation(&ux).re
        })
        .collect();
    born_sample(&probs, rng)
}

/// Born-rule sampling for a gate-word unitary and a mixed state.
pub fn simulate_measurement_gates<R: Rng>(
    rho: &DensityMatrix,
    gates: &[Gate],
    n: usize,
    rng: &mut R,
) -> Result<usize> {
    let d = 1usize << n;
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.dim(),
        });
    }
    let probs: Vec<f64> = (0..d)
        .map(|x| {
            let ux = gates_to_state(gates, n, x);
            rho.mat().expectation(&ux).re
        })
        .collect();
    born_sample(&probs, rng)
}

/// Born-rule sampling for a pure state: p_x = |⟨x|U†|ψ⟩|².
pub fn simulate_measurement_pure<R: Rng>(
    psi: &[C64],
    gates: &[Gate],
    n: usize,
    rng: &mut R,
) -> Result<usize> {
    let d = 1usize << n;
    if psi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: psi.len(),
        });
    }
    // amplitudes of U†|ψ⟩: apply the inverse word
    let mut amp = psi.to_vec();
    let mut inv: Vec<Gate> = Vec::new();
    for g in gates.iter().rev() {
        inv.extend(g.inverse_word());
    }
    apply_gates(&mut amp, &inv);
    let probs: Vec<f64> = amp.iter().map(|a| a.norm_sqr()).collect();
    born_sample(&probs, rng)
}

fn born_sample<R: Rng>(probs: &[f64], rng: &mut R) -> Result<usize> {
    let mut total = 0.0;
    for p in probs {
        if *p < -1e-10 {
            return Err(Error::InvalidState {
                reason: format!("negative outcome probability {p:.3e}"),
            });
        }
        total += p.max(0.0);
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState {
            reason: format!("outcome probabilities sum to {total}"),
        });
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (x, p) in probs.iter().enumerate() {
        acc += p.max(0.0);
        if u < acc {
            return Ok(x);
        }
    }
    Ok(probs.len() - 1)
}

/// Draws one random-Clifford snapshot of a pure state.
pub fn sample_clifford_snapshot_pure<R: Rng>(
    psi: &[C64],
    n: usize,
    rng: &mut R,
) -> Result<ShadowSnapshot> {
    let el = clifford_sample(n, rng);
    let outcome = simulate_measurement_pure(psi, &el.gates, n, rng)?;
    Ok(ShadowSnapshot {
        n_qubits: n,
        gates: el.gates,
        outcome,
    })
}

/// Generates a dataset of `shots` random-Clifford snapshots of a pure state.
/// Shot i uses RNG stream (seed, SHOT domain, base + i).
pub fn generate_dataset_pure(
    psi: &[C64],
    n: usize,
    shots: usize,
    seed: u64,
    stream_base: u64,
) -> Result<ShadowDataset> {
    let snapshots: Vec<ShadowSnapshot> = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, domain::SHOT, stream_base + i as u64);
            sample_clifford_snapshot_pure(psi, n, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShadowDataset {
        n_qubits: n,
        ensemble: format!("clifford-sample n={n}"),
        seed,
        snapshots,
    })
}

/// Standard shadow estimator of the overlap ⟨φ|ρ|φ⟩: the snapshot mean of
/// (d+1)|⟨φ|s⟩|² − 1.
pub fn standard_shadow_overlap(dataset: &ShadowDataset, phi: &[C64]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if phi.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: phi.len(),
        });
    }
    let vals: Vec<f64> = dataset
        .snapshots
        .iter()
        .map(|s| s.overlap_with(phi))
        .collect();
    Ok(pairwise_mean(&vals))
}

/// Local shadow estimator θ̂ = θ⁰ + mean_s Tr(X·ρ̂(s)).
pub fn local_shadow_estimate(dataset: &ShadowDataset, x: &CMatrix, theta0: f64) -> f64 {
    if dataset.is_empty() {
        return theta0;
    }
    let vals: Vec<f64> = dataset.snapshots.iter().map(|s| s.trace_with(x)).collect();
    theta0 + pairwise_mean(&vals)
}

// ---------------------------------------------------------------------------
// Fidelity estimation on the GHZ-mixture span
// ---------------------------------------------------------------------------

/// Snapshot overlaps compressed onto the GHZ-family basis: everything the
/// fidelity estimators need per shot is ⟨B_k|s⟩ for the n+1 basis states.
#[derive(Clone, Debug)]
pub struct FidelityBatch {
    pub dim: usize,
    pub nb: usize,
    /// Flattened `[shot][k]` overlaps ⟨B_k|s⟩.
    pub overlaps: Vec<C64>,
}

impl FidelityBatch {
    pub fn from_snapshots(dataset: &ShadowDataset, basis: &[Vec<C64>]) -> Self {
        let nb = basis.len();
        let mut overlaps = Vec::with_capacity(dataset.len() * nb);
        for snap in &dataset.snapshots {
            let s = snap.state_vector();
            for b in basis {
                let ov: C64 = b.iter().zip(s.iter()).map(|(a, x)| a.conj() * x).sum();
                overlaps.push(ov);
            }
        }
        FidelityBatch {
            dim: dataset.dim(),
            nb,
            overlaps,
        }
    }

    pub fn shots(&self) -> usize {
        self.overlaps.len() / self.nb
    }

    /// Mean of (d+1)|Σ_k w_k ⟨B_k|s⟩|² − 1 over shots: the standard shadow
    /// estimator for the state with real basis coordinates w.
    pub fn standard_overlap(&self, w: &[f64]) -> f64 {
        let d = self.dim as f64;
        let n = self.shots();
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let base = i * self.nb;
                let mut ov = C64::new(0.0, 0.0);
                for k in 0..self.nb {
                    // ⟨φ|s⟩ = Σ w_k ⟨B_k|s⟩ for real w
                    ov += self.overlaps[base + k] * w[k];
                }
                (d + 1.0) * ov.norm_sqr() - 1.0
            })
            .collect();
        pairwise_mean(&vals)
    }

    /// Mean of Tr(X_f ρ̂(s)) for the fidelity deviation observable built from
    /// target coordinates t and orthogonal coordinates u (both real in the
    /// GHZ basis):
    /// X = a(|φ⟩⟨φ| − |φ⊥⟩⟨φ⊥|) + b(|φ⟩⟨φ⊥| + |φ⊥⟩⟨φ|), Tr X = 0.
    pub fn local_step(&self, t: &[f64], u: &[f64], f: f64) -> f64 {
        let d = self.dim as f64;
        let a = 2.0 * f * (1.0 - f);
        let b = (1.0 - 2.0 * f) * (f * (1.0 - f)).sqrt();
        let n = self.shots();
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let base = i * self.nb;
                let mut ot = C64::new(0.0, 0.0);
                let mut ou = C64::new(0.0, 0.0);
                for k in 0..self.nb {
                    ot += self.overlaps[base + k] * t[k];
                    ou += self.overlaps[base + k] * u[k];
                }
                let xv = a * (ot.norm_sqr() - ou.norm_sqr()) + 2.0 * b * (ot.conj() * ou).re;
                (d + 1.0) * xv
            })
            .collect();
        pairwise_mean(&vals)
    }
}

/// Result of the iterative local-shadow fidelity estimation.
#[derive(Clone, Debug)]
pub struct FidelityEstimate {
    pub f_hat: f64,
    pub f_std: f64,
    pub coarse: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub clamped: bool,
    /// (f̂, Δ) after each iteration.
    pub trace: Vec<(f64, f64)>,
}

const F_CLAMP: f64 = 1e-6;

/// Iterative local-shadow fidelity estimation on the GHZ-mixture family.
///
/// Obtains coarse weights from standard shadow overlaps with the bit-flip
/// basis states, freezes the orthogonal direction, then iterates
/// f̂ ← f̂ + mean_s Tr(X_{f̂} ρ̂(s)) until |Δ| < cutoff or `max_iter`.
pub fn iterative_fidelity_estimate(
    dataset: &ShadowDataset,
    target_phis: &[f64],
    family: &GHZMixFamily,
    cutoff: f64,
    max_iter: usize,
) -> Result<FidelityEstimate> {
    if cutoff <= 0.0 {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let basis = family.basis_states();
    let batch = FidelityBatch::from_snapshots(dataset, &basis);
    iterative_fidelity_on_batch(&batch, target_phis, family, cutoff, max_iter)
}

/// Core of the fidelity iteration on a prepared overlap batch.
pub fn iterative_fidelity_on_batch(
    batch: &FidelityBatch,
    target_phis: &[f64],
    family: &GHZMixFamily,
    cutoff: f64,
    max_iter: usize,
) -> Result<FidelityEstimate> {
    let n = family.n_qubits();
    let nb = n + 1;
    let mut clamped = false;

    // target coordinates in the GHZ basis
    let tw = family.weights(target_phis)?;
    let t: Vec<f64> = tw.iter().map(|w| w.sqrt()).collect();

    // coarse estimates of the weights from standard shadow overlaps
    let mut coarse = vec![0.0; n];
    for i in 0..n {
        let mut w = vec![0.0; nb];
        w[i + 1] = 1.0;
        coarse[i] = batch.standard_overlap(&w);
    }
    // clamp negatives (possible at small N), rescale if the total exceeds 1
    let mut phis = coarse.clone();
    for p in phis.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
            clamped = true;
        }
    }
    let total: f64 = phis.iter().sum();
    if total > 1.0 - F_CLAMP {
        let scale = (1.0 - F_CLAMP) / total;
        for p in phis.iter_mut() {
            *p *= scale;
        }
        clamped = true;
    }

    // standard estimator of f against the target state for comparison
    let f_std = batch.standard_overlap(&t);

    // coarse state coordinates and the frozen orthogonal direction
    let cw = family.weights(&phis)?;
    let cs: Vec<f64> = cw.iter().map(|w| w.sqrt()).collect();
    let mut f0: f64 = crate::states::ghz_fidelity(n, target_phis, &phis)?;
    if !(F_CLAMP..=1.0 - F_CLAMP).contains(&f0) {
        f0 = f0.clamp(F_CLAMP, 1.0 - F_CLAMP);
        clamped = true;
    }
    // |φ⊥⟩ ∝ |ψ_coarse⟩ − ⟨φ|ψ_coarse⟩|φ⟩, in basis coordinates (all real)
    let tdotc: f64 = t.iter().zip(cs.iter()).map(|(a, b)| a * b).sum();
    let mut u: Vec<f64> = cs
        .iter()
        .zip(t.iter())
        .map(|(c, tt)| c - tdotc * tt)
        .collect();
    let unorm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if unorm > 1e-9 {
        for x in u.iter_mut() {
            *x /= unorm;
        }
    } else {
        // coarse state is (numerically) the target: pick any orthogonal
        // direction in the span
        clamped = true;
        let mut v = vec![0.0; nb];
        v[1] = 1.0;
        let vdott: f64 = v.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
        for k in 0..nb {
            v[k] -= vdott * t[k];
        }
        let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        u = v.into_iter().map(|x| x / vn).collect();
    }

    // iterate f̂ ← f̂ + mean_s Tr(X_{f̂} ρ̂(s)) with ĝ (the direction) frozen
    let mut f_hat = f0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let delta = batch.local_step(&t, &u, f_hat);
        f_hat += delta;
        if !(F_CLAMP..=1.0 - F_CLAMP).contains(&f_hat) {
            f_hat = f_hat.clamp(F_CLAMP, 1.0 - F_CLAMP);
            clamped = true;
        }
        trace.push((f_hat, delta));
        if delta.abs() < cutoff {
            converged = true;
            break;
        }
    }
    Ok(FidelityEstimate {
        f_hat,
        f_std,
        coarse,
        iterations,
        converged,
        clamped,
        trace,
    })
}
