//! Measurement ensembles: exact small designs, Clifford enumeration and
//! uniform sampling, and t-design moment verification.
//!
//! A randomized measurement is a rank-one POVM `{ M_s = q_s d |s⟩⟨s| }` with
//! `Σ_s q_s |s⟩⟨s| = 1/d`. The moment checks compare the weighted t-fold
//! state moments against the Haar value (the normalized projector onto the
//! symmetric subspace), either exactly for enumerable ensembles or
//! statistically for sampled ones.

pub mod tableau;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qmath::{kron_vec, mean_and_stderr, CMatrix};
use crate::rng::{self, stream_rng};
use tableau::{clifford_sample, CliffordElement};

/// How a POVM was constructed (kept for provenance and shot bookkeeping).
#[derive(Clone, Debug, PartialEq)]
pub enum PovmRepresentation {
    ExplicitList,
    UnitaryEnsemble { n_unitaries: usize },
    Sampled { shots: usize, seed: u64 },
}

/// Weighted rank-one POVM: elements (q_s, |s⟩) with M_s = q_s·d·|s⟩⟨s|.
#[derive(Clone, Debug)]
pub struct RankOnePOVM {
    dim: usize,
    elements: Vec<(f64, Vec<C64>)>,
    pub representation: PovmRepresentation,
}

impl RankOnePOVM {
    pub fn new(dim: usize, elements: Vec<(f64, Vec<C64>)>) -> Result<Self> {
        let povm = RankOnePOVM {
            dim,
            elements,
            representation: PovmRepresentation::ExplicitList,
        };
        povm.validate()?;
        Ok(povm)
    }

    /// Checks Σ q_s |s⟩⟨s| = 1/d to 1e-10 (Frobenius) and q_s ≥ 0.
    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::InvalidPovm {
                reason: "no elements".into(),
            });
        }
        for (q, s) in &self.elements {
            if *q < 0.0 {
                return Err(Error::InvalidPovm {
                    reason: format!("negative weight {q}"),
                });
            }
            if s.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: s.len(),
                });
            }
        }
        let gap = self.completeness_gap();
        if gap > 1e-10 {
            return Err(Error::IncompletePovm { gap });
        }
        Ok(())
    }

    /// ‖Σ q_s |s⟩⟨s| − 1/d‖_F.
    pub fn completeness_gap(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (q, s) in &self.elements {
            acc.add_weighted_projector(s, *q);
        }
        (&acc - &CMatrix::identity(self.dim).scale(1.0 / self.dim as f64)).frobenius_norm()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[(f64, Vec<C64>)] {
        &self.elements
    }

    /// POVM element operator M_s = q_s·d·|s⟩⟨s|.
    pub fn element_operator(&self, k: usize) -> CMatrix {
        let (q, s) = &self.elements[k];
        CMatrix::projector(s).scale(q * self.dim as f64)
    }

    /// Merges elements whose projectors coincide (|⟨s|s'⟩|² = 1 within tol),
    /// summing their weights.
    pub fn merged(&self, tol: f64) -> RankOnePOVM {
        let mut kept: Vec<(f64, Vec<C64>)> = Vec::new();
        for (q, s) in &self.elements {
            let mut found = false;
            for (qk, sk) in kept.iter_mut() {
                let ov: C64 = sk.iter().zip(s.iter()).map(|(a, b)| a.conj() * b).sum();
                if (ov.norm_sqr() - 1.0).abs() < tol {
                    *qk += q;
                    found = true;
                    break;
                }
            }
            if !found {
                kept.push((*q, s.clone()));
            }
        }
        RankOnePOVM {
            dim: self.dim,
            elements: kept,
            representation: PovmRepresentation::ExplicitList,
        }
    }
}

/// The six-outcome single-qubit Pauli POVM, weight 1/3 per basis pair.
/// Forms an exact (complex projective) 3-design.
pub fn pauli_povm_1q() -> RankOnePOVM {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let states: Vec<Vec<C64>> = vec![
        vec![C64::new(s, 0.0), C64::new(s, 0.0)],     // |x+⟩
        vec![C64::new(s, 0.0), C64::new(-s, 0.0)],    // |x−⟩
        vec![C64::new(s, 0.0), C64::new(0.0, s)],     // |y+⟩
        vec![C64::new(s, 0.0), C64::new(0.0, -s)],    // |y−⟩
        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], // |z+⟩
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], // |z−⟩
    ];
    let elements = states.into_iter().map(|v| (1.0 / 6.0, v)).collect();
    RankOnePOVM {
        dim: 2,
        elements,
        representation: PovmRepresentation::ExplicitList,
    }
}

/// POVM induced by a unitary ensemble followed by the computational-basis
/// measurement: elements (p_U/d, U|x⟩) over all U, x.
pub fn povm_from_unitary_ensemble(ensemble: &[(f64, CMatrix)], d: usize) -> Result<RankOnePOVM> {
    let psum: f64 = ensemble.iter().map(|(p, _)| p).sum();
    if (psum - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidPovm {
            reason: format!("ensemble probabilities sum to {psum}"),
        });
    }
    let mut elements = Vec::with_capacity(ensemble.len() * d);
    for (p, u) in ensemble {
        if u.rows() != d || u.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: u.rows(),
            });
        }
        let gap = (&(&u.dagger() * u) - &CMatrix::identity(d)).frobenius_norm();
        if gap > 1e-9 {
            return Err(Error::InvalidPovm {
                reason: format!("non-unitary ensemble entry (gap {gap:.3e})"),
            });
        }
        for x in 0..d {
            elements.push((p / d as f64, u.column(x)));
        }
    }
    let povm = RankOnePOVM {
        dim: d,
        elements,
        representation: PovmRepresentation::UnitaryEnsemble {
            n_unitaries: ensemble.len(),
        },
    };
    povm.validate()?;
    Ok(povm)
}

/// Uniform POVM over a list of Clifford elements (all basis outcomes).
pub fn povm_from_cliffords(elements: &[CliffordElement]) -> Result<RankOnePOVM> {
    if elements.is_empty() {
        return Err(Error::InvalidPovm {
            reason: "empty Clifford list".into(),
        });
    }
    let n = elements[0].n_qubits();
    let d = 1usize << n;
    let p = 1.0 / elements.len() as f64;
    let q = p / d as f64;
    let mut out = Vec::with_capacity(elements.len() * d);
    for el in elements {
        for x in 0..d {
            out.push((q, el.column(x)));
        }
    }
    let povm = RankOnePOVM {
        dim: d,
        elements: out,
        representation: PovmRepresentation::UnitaryEnsemble {
            n_unitaries: elements.len(),
        },
    };
    povm.validate()?;
    Ok(povm)
}

/// Result of an exact t-design moment check.
#[derive(Clone, Debug)]
pub struct MomentCheck {
    pub t: usize,
    pub lhs: CMatrix,
    pub rhs: CMatrix,
    pub frobenius_gap: f64,
}

/// Projector onto the symmetric subspace of (ℂ^d)^{⊗t}: (1/t!) Σ_σ P_σ.
pub fn symmetric_projector(d: usize, t: usize) -> Result<CMatrix> {
    if !(1..=3).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside 1..3")));
    }
    let perms: Vec<Vec<usize>> = match t {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
    };
    let dt = d.pow(t as u32);
    let mut proj = CMatrix::zeros(dt, dt);
    let w = 1.0 / perms.len() as f64;
    for perm in &perms {
        for idx in 0..dt {
            let mut digits = vec![0usize; t];
            let mut rest = idx;
            for k in (0..t).rev() {
                digits[k] = rest % d;
                rest /= d;
            }
            let mut permuted = 0usize;
            for k in 0..t {
                permuted = permuted * d + digits[perm[k]];
            }
            proj[(permuted, idx)] += C64::new(w, 0.0);
        }
    }
    Ok(proj)
}

fn binom(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v *= (n - i) as f64 / (k - i) as f64;
    }
    v
}

/// Exact t-th moment check: lhs = Σ q_s (|s⟩⟨s|)^{⊗t} against the Haar
/// moment rhs = Π_sym / C(d+t−1, t).
pub fn moment_t(povm: &RankOnePOVM, t: usize) -> Result<MomentCheck> {
    if !(1..=3).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside 1..3")));
    }
    let d = povm.dim();
    let dt = d.pow(t as u32);
    if dt > 4096 {
        return Err(Error::Unsupported(format!(
            "exact moment at d^t = {dt} too large; use the sampled check"
        )));
    }
    let chunk = (povm.len() / 64).max(512);
    let chunks: Vec<CMatrix> = povm
        .elements()
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = CMatrix::zeros(dt, dt);
            for (q, s) in part {
                let mut st = s.clone();
                for _ in 1..t {
                    st = kron_vec(&st, s);
                }
                acc.add_weighted_projector(&st, *q);
            }
            acc
        })
        .collect();
    let mut lhs = CMatrix::zeros(dt, dt);
    for c in &chunks {
        lhs = &lhs + c;
    }
    let rhs = symmetric_projector(d, t)?.scale(1.0 / binom(d + t - 1, t));
    let frobenius_gap = (&lhs - &rhs).frobenius_norm();
    Ok(MomentCheck {
        t,
        lhs,
        rhs,
        frobenius_gap,
    })
}

/// Frobenius gaps for the two 3-design contraction identities
/// Σ q_s |s⟩⟨s|⟨s|A|s⟩ = (Tr(A)·1 + A)/((d+1)d) and its two-observable
/// analogue.
#[derive(Clone, Debug)]
pub struct ContractionGaps {
    pub gap_single: f64,
    pub gap_double: f64,
}

pub fn design_contraction_check(
    povm: &RankOnePOVM,
    a: &CMatrix,
    b: &CMatrix,
    c: &CMatrix,
) -> Result<ContractionGaps> {
    let d = povm.dim();
    for m in [a, b, c] {
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.rows(),
            });
        }
    }
    let df = d as f64;
    let mut lhs1 = CMatrix::zeros(d, d);
    let mut lhs2 = CMatrix::zeros(d, d);
    for (q, s) in povm.elements() {
        let ea = a.expectation(s);
        let eb = b.expectation(s);
        let ec = c.expectation(s);
        let mut p = CMatrix::projector(s);
        lhs1.add_scaled(&p, ea * q);
        p = p.scale_c(eb * ec * q);
        lhs2 = &lhs2 + &p;
    }
    let rhs1 = (&CMatrix::identity(d).scale_c(a.trace()) + a).scale(1.0 / ((df + 1.0) * df));
    let anti = &(b * c) + &(c * b);
    let rhs2_inner = &(&CMatrix::identity(d)
        .scale_c((b * c).trace() + b.trace() * c.trace())
        + &(&c.scale_c(b.trace()) + &b.scale_c(c.trace())))
        + &anti;
    let rhs2 = rhs2_inner.scale(1.0 / ((df + 2.0) * (df + 1.0) * df));
    Ok(ContractionGaps {
        gap_single: (&lhs1 - &rhs1).frobenius_norm(),
        gap_double: (&lhs2 - &rhs2).frobenius_norm(),
    })
}

/// Haar value of E_ψ[⟨ψ|A|ψ⟩^t] for t ∈ {1, 2, 3}.
pub fn haar_diagonal_moment(a: &CMatrix, t: usize) -> Result<f64> {
    let d = a.rows() as f64;
    let tr = a.trace().re;
    let tr2 = (a * a).trace().re;
    let tr3 = (&(a * a) * a).trace().re;
    match t {
        1 => Ok(tr / d),
        2 => Ok((tr * tr + tr2) / (d * (d + 1.0))),
        3 => Ok((tr * tr * tr + 3.0 * tr * tr2 + 2.0 * tr3) / (d * (d + 1.0) * (d + 2.0))),
        _ => Err(Error::InvalidArgument(format!("t = {t} outside 1..3"))),
    }
}

/// One probe direction of the sampled moment check.
#[derive(Clone, Debug)]
pub struct SampledMoment {
    pub t: usize,
    pub probe: usize,
    pub mean: f64,
    pub stderr: f64,
    pub haar: f64,
    pub z: f64,
}

/// Statistical t-design check for the sampled Clifford ensemble.
///
/// Draws `shots` Cliffords; for each probe Hermitian A the statistic
/// Y(U) = (1/d) Σ_x ⟨x|U†AU|x⟩^t has Haar expectation
/// [`haar_diagonal_moment`]. Returns mean, standard error, and z-score per
/// probe; a 3-design passes |z| ≤ 5 up to sampling noise.
pub fn moment_t_sampled(
    n_qubits: usize,
    t: usize,
    shots: usize,
    seed: u64,
    n_probes: usize,
) -> Result<Vec<SampledMoment>> {
    if !(1..=3).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside 1..3")));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("zero shots".into()));
    }
    let d = 1usize << n_qubits;
    let probes: Vec<CMatrix> = (0..n_probes)
        .map(|k| {
            let mut rng = stream_rng(seed, rng::domain::PROBE, k as u64);
            crate::rng::random_hermitian(d, &mut rng)
        })
        .collect();
    let samples: Vec<Vec<f64>> = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, rng::domain::SHOT, i as u64);
            let el = clifford_sample(n_qubits, &mut rng);
            let u = el.dense_unitary().expect("n ≤ 12");
            probes
                .iter()
                .map(|a| {
                    let rot = &(&u.dagger() * a) * &u;
                    (0..d).map(|x| rot[(x, x)].re.powi(t as i32)).sum::<f64>() / d as f64
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n_probes);
    for (k, a) in probes.iter().enumerate() {
        let ys: Vec<f64> = samples.iter().map(|row| row[k]).collect();
        let (mean, stderr) = mean_and_stderr(&ys);
        let haar = haar_diagonal_moment(a, t)?;
        // degenerate statistics (t = 1 is exactly unitarily invariant) leave
        // only float noise in the spread; floor the scale so the z-score
        // stays meaningful
        let scale = stderr.max(1e-12 * haar.abs().max(1.0));
        let z = (mean - haar) / scale;
        out.push(SampledMoment {
            t,
            probe: k,
            mean,
            stderr,
            haar,
            z,
        });
    }
    Ok(out)
}

/// Uniform unitary ensemble from enumerated Cliffords (dense form).
pub fn clifford_unitary_ensemble(elements: &[CliffordElement]) -> Result<Vec<(f64, CMatrix)>> {
    let p = 1.0 / elements.len() as f64;
    elements
        .iter()
        .map(|el| Ok((p, el.dense_unitary()?)))
        .collect()
}

/// Product POVM on ℂ^{d₁} ⊗ ℂ^{d₂}: elements (q₁q₂, s₁ ⊗ s₂).
pub fn product_povm(a: &RankOnePOVM, b: &RankOnePOVM) -> Result<RankOnePOVM> {
    let mut elements = Vec::with_capacity(a.len() * b.len());
    for (qa, sa) in a.elements() {
        for (qb, sb) in b.elements() {
            elements.push((qa * qb, kron_vec(sa, sb)));
        }
    }
    RankOnePOVM::new(a.dim() * b.dim(), elements)
}
