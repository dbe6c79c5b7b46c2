//! SLD operators, quantum and classical Fisher information matrices,
//! deviation observables, the closed-form single-shot MSE matrix for
//! 3-design measurements, Gill–Massar quantities and near-optimality checks.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::designs::RankOnePOVM;
use crate::error::{Error, Result};
use crate::qmath::{eigh, psd_ge, CMatrix, HermEig, RMatrix, T_PSD, T_RANK};
use crate::states::DensityMatrix;

/// Outcome probabilities below this floor are dropped from CFIM sums.
pub const P_FLOOR: f64 = 1e-14;

/// Eigendecomposition with small eigenvalues zeroed (relative cutoff).
fn support_eig(rho: &CMatrix, rank_tol: f64) -> Result<(HermEig, Vec<f64>, usize)> {
    let eig = eigh(rho)?;
    let lmax = eig.max_eigenvalue();
    let cutoff = rank_tol * lmax.max(0.0);
    let mut vals = eig.eigenvalues.clone();
    let mut rank = 0;
    for v in vals.iter_mut() {
        if *v < cutoff {
            *v = 0.0;
        } else {
            rank += 1;
        }
    }
    Ok((eig, vals, rank))
}

/// A set of symmetric logarithmic derivative operators for one state.
#[derive(Clone, Debug)]
pub struct SLDSet {
    pub operators: Vec<CMatrix>,
    pub support_rank: usize,
    pub rank_tol: f64,
}

/// SLD for one derivative: L = 2 Σ_{λ_j+λ_k>0} ⟨ψ_j|∂ρ|ψ_k⟩/(λ_j+λ_k) |ψ_j⟩⟨ψ_k|,
/// with eigenvalues below rank_tol·λ_max treated as exactly zero.
pub fn sld(rho: &DensityMatrix, drho: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    Ok(sld_set(rho, std::slice::from_ref(drho), rank_tol)?
        .operators
        .pop()
        .unwrap())
}

/// SLDs for all derivatives, sharing one eigendecomposition.
pub fn sld_set(rho: &DensityMatrix, derivs: &[CMatrix], rank_tol: f64) -> Result<SLDSet> {
    if rank_tol <= 0.0 {
        return Err(Error::InvalidArgument("rank_tol must be positive".into()));
    }
    let (eig, vals, rank) = support_eig(rho.mat(), rank_tol)?;
    let v = &eig.eigenvectors;
    let d = rho.dim();
    let mut operators = Vec::with_capacity(derivs.len());
    for drho in derivs {
        let dtil = &(&v.dagger() * drho) * v;
        let mut core = CMatrix::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                let denom = vals[j] + vals[k];
                if denom > 0.0 {
                    core[(j, k)] = dtil[(j, k)] * (2.0 / denom);
                }
            }
        }
        operators.push((&(v * &core) * &v.dagger()).hermitized());
    }
    Ok(SLDSet {
        operators,
        support_rank: rank,
        rank_tol,
    })
}

/// Quantum Fisher information matrix
/// J_ij = 2 Σ_{λ_k+λ_ℓ>0} Re[⟨ψ_k|∂_iρ|ψ_ℓ⟩⟨ψ_ℓ|∂_jρ|ψ_k⟩]/(λ_k+λ_ℓ).
pub fn qfim(rho: &DensityMatrix, derivs: &[CMatrix], rank_tol: f64) -> Result<RMatrix> {
    if rank_tol <= 0.0 {
        return Err(Error::InvalidArgument("rank_tol must be positive".into()));
    }
    let (eig, vals, _) = support_eig(rho.mat(), rank_tol)?;
    let v = &eig.eigenvectors;
    let d = rho.dim();
    let m = derivs.len();
    let rotated: Vec<CMatrix> = derivs.iter().map(|dr| &(&v.dagger() * dr) * v).collect();
    let mut j = RMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut acc = 0.0;
            for k in 0..d {
                for l in 0..d {
                    let denom = vals[k] + vals[l];
                    if denom > 0.0 {
                        acc += 2.0 * (rotated[a][(k, l)] * rotated[b][(l, k)]).re / denom;
                    }
                }
            }
            j[(a, b)] = acc;
            j[(b, a)] = acc;
        }
    }
    Ok(j)
}

/// CFIM over a general POVM given as explicit element operators.
pub fn cfim(rho: &DensityMatrix, derivs: &[CMatrix], povm: &[CMatrix]) -> Result<RMatrix> {
    let d = rho.dim();
    let mut total = CMatrix::zeros(d, d);
    for m in povm {
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.rows(),
            });
        }
        total = &total + m;
    }
    let gap = (&total - &CMatrix::identity(d)).frobenius_norm();
    if gap > 1e-8 {
        return Err(Error::IncompletePovm { gap });
    }
    let m = derivs.len();
    let mut i = RMatrix::zeros(m, m);
    for mx in povm {
        let p = (rho.mat() * mx).trace().re;
        if p <= P_FLOOR {
            continue;
        }
        let dp: Vec<f64> = derivs.iter().map(|dr| (dr * mx).trace().re).collect();
        for a in 0..m {
            for b in a..m {
                i[(a, b)] += dp[a] * dp[b] / p;
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            i[(a, b)] = i[(b, a)];
        }
    }
    Ok(i)
}

/// CFIM over a rank-one POVM, using quadratic forms instead of dense element
/// operators (p_s = q_s d ⟨s|ρ|s⟩).
pub fn cfim_rank_one(
    rho: &DensityMatrix,
    derivs: &[CMatrix],
    povm: &RankOnePOVM,
) -> Result<RMatrix> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: povm.dim(),
        });
    }
    povm.validate()?;
    let m = derivs.len();
    let d = povm.dim() as f64;
    let mut i = RMatrix::zeros(m, m);
    for (q, s) in povm.elements() {
        let p = q * d * rho.mat().expectation(s).re;
        if p <= P_FLOOR {
            continue;
        }
        let dp: Vec<f64> = derivs.iter().map(|dr| q * d * dr.expectation(s).re).collect();
        for a in 0..m {
            for b in a..m {
                i[(a, b)] += dp[a] * dp[b] / p;
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            i[(a, b)] = i[(b, a)];
        }
    }
    Ok(i)
}

/// Paired Fisher matrices for one (state, measurement) point.
#[derive(Clone, Debug)]
pub struct FisherMatrices {
    pub j: RMatrix,
    pub i: Option<RMatrix>,
    pub m: usize,
    pub d: usize,
}

impl FisherMatrices {
    pub fn new(j: RMatrix, i: Option<RMatrix>, d: usize) -> Self {
        let m = j.rows();
        FisherMatrices { j, i, m, d }
    }

    /// Gill–Massar quantity Tr(J⁻¹ I).
    pub fn gm_quantity(&self) -> Result<f64> {
        let i = self
            .i
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("CFIM missing".into()))?;
        Ok((&self.j.pinv_sym(T_RANK)? * i).trace())
    }
}

/// Kinds of deviation observables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DevKind {
    /// X_i = Σ_j (J⁻¹)_ij L_j.
    Plain,
    /// Low-rank split with Π⊥-censored SLDs (eigenvalue-preserving encodings).
    LowRankUnitary { mu: f64 },
    /// Low-rank split with the extra (∂_i p)/(1−p)·Π correction.
    LowRankGeneral { mu: f64 },
}

/// Deviation observables X_i with Tr(ρX_i) = 0 and Tr((∂_jρ)X_i) = δ_ij.
#[derive(Clone, Debug)]
pub struct DeviationObservables {
    pub xs: Vec<CMatrix>,
    pub kind: DevKind,
    /// Parameter indices lying in the truncated null space of the (possibly
    /// censored) Fisher matrix; their estimators are not locally unbiased.
    pub unidentifiable: Vec<usize>,
}

fn unidentifiable_params(g: &RMatrix, ginv: &RMatrix) -> Vec<usize> {
    // diagonal of the projector onto the row space; ≈1 identifiable, ≈0 not
    let proj = ginv * g;
    (0..g.rows()).filter(|&i| proj[(i, i)] < 0.5).collect()
}

/// Builds deviation observables of the requested kind.
pub fn deviation_observables(
    rho: &DensityMatrix,
    derivs: &[CMatrix],
    kind: DevKind,
) -> Result<DeviationObservables> {
    let ls: Vec<CMatrix> = match kind {
        DevKind::Plain => sld_set(rho, derivs, T_RANK)?.operators,
        DevKind::LowRankUnitary { mu } => {
            let split = lowrank_split(rho, derivs, mu)?;
            let slds = sld_set(rho, derivs, T_RANK)?.operators;
            slds.iter()
                .map(|l| {
                    let censored = &(&split.proj_perp * l) * &split.proj_perp;
                    l - &censored
                })
                .collect()
        }
        DevKind::LowRankGeneral { mu } => {
            let split = lowrank_split(rho, derivs, mu)?;
            let slds = sld_set(rho, derivs, T_RANK)?.operators;
            slds.iter()
                .enumerate()
                .map(|(i, l)| {
                    let censored = &(&split.proj_perp * l) * &split.proj_perp;
                    let mut lt = l - &censored;
                    if split.p > 0.0 {
                        lt.add_scaled(&split.proj, C64::new(split.dp[i] / (1.0 - split.p), 0.0));
                    }
                    lt
                })
                .collect()
        }
    };
    // G_ij = Tr(L̃_i ∂_jρ); symmetric (equals ½Tr(ρ{L̃_i, L_j}))
    let m = derivs.len();
    let mut g = RMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            g[(a, b)] = (&ls[a] * &derivs[b]).trace().re;
        }
    }
    let g = g.symmetrized();
    let ginv = g.pinv_sym(T_RANK)?;
    let unidentifiable = unidentifiable_params(&g, &ginv);
    let mut xs = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = CMatrix::zeros(rho.dim(), rho.dim());
        for (j, l) in ls.iter().enumerate() {
            x.add_scaled(l, C64::new(ginv[(i, j)], 0.0));
        }
        xs.push(x.hermitized());
    }
    Ok(DeviationObservables {
        xs,
        kind,
        unidentifiable,
    })
}

/// Single-shot MSE matrix of local shadow estimators under any 3-design:
/// V_ij = (d+1)/(d+2)·(Tr(X_iX_j) + Tr(ρ{X_i,X_j})) − Tr(X_i)Tr(X_j)/(d+2).
pub fn predicted_msem(rho: &DensityMatrix, xs: &[CMatrix], d: usize) -> Result<RMatrix> {
    let df = d as f64;
    let m = xs.len();
    for x in xs {
        let bias = (rho.mat() * x).trace().re;
        if bias.abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "Tr(ρX) = {bias:.3e}; deviation observables must be centered"
            )));
        }
    }
    let mut v = RMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let prod = &xs[a] * &xs[b];
            let txx = prod.trace().re;
            let anti = &prod + &(&xs[b] * &xs[a]);
            let trho = (rho.mat() * &anti).trace().re;
            let tra = xs[a].trace().re;
            let trb = xs[b].trace().re;
            let val = (df + 1.0) / (df + 2.0) * (txx + trho) - tra * trb / (df + 2.0);
            v[(a, b)] = val;
            v[(b, a)] = val;
        }
    }
    Ok(v)
}

/// Brute-force design expectation of the local-shadow MSE matrix:
/// V_ij = Σ_s q_s d ⟨s|ρ|s⟩ ⟨s|M⁻¹(X_i)|s⟩ ⟨s|M⁻¹(X_j)|s⟩ with
/// M⁻¹(X) = (d+1)X − Tr(X)·1. Independent oracle for [`predicted_msem`].
pub fn msem_brute_force(
    rho: &DensityMatrix,
    xs: &[CMatrix],
    povm: &RankOnePOVM,
) -> Result<RMatrix> {
    let d = povm.dim() as f64;
    let m = xs.len();
    let traces: Vec<f64> = xs.iter().map(|x| x.trace().re).collect();
    let mut v = RMatrix::zeros(m, m);
    for (q, s) in povm.elements() {
        let ps = q * d * rho.mat().expectation(s).re;
        let minv: Vec<f64> = xs
            .iter()
            .zip(traces.iter())
            .map(|(x, t)| (d + 1.0) * x.expectation(s).re - t)
            .collect();
        for a in 0..m {
            for b in a..m {
                v[(a, b)] += ps * minv[a] * minv[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            v[(a, b)] = v[(b, a)];
        }
    }
    Ok(v)
}

/// Gill–Massar bound variants.
#[derive(Clone, Copy, Debug)]
pub enum GmVariant {
    /// Tr(J⁻¹I) ≤ d − 1 for any individual measurement.
    Full,
    /// Derivatives restricted to the rank-r support: bound r − 1.
    Support { r: usize },
    /// Derivatives restricted off the support: bound d − r.
    OffSupport { r: usize },
}

#[derive(Clone, Debug)]
pub struct GillMassar {
    pub gm: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Evaluates the Gill–Massar quantity Tr(J⁻¹I) against the applicable bound.
pub fn gill_massar(j: &RMatrix, i: &RMatrix, d: usize, variant: GmVariant) -> Result<GillMassar> {
    if j.rank_sym(T_RANK)? < j.rows() {
        return Err(Error::Singular {
            what: "QFIM is singular; Gill–Massar quantity undefined".into(),
        });
    }
    let jinv = j.pinv_sym(T_RANK)?;
    let gm = (&jinv * i).trace();
    let bound = match variant {
        GmVariant::Full => d as f64 - 1.0,
        GmVariant::Support { r } => r as f64 - 1.0,
        GmVariant::OffSupport { r } => (d - r) as f64,
    };
    Ok(GillMassar {
        gm,
        bound,
        ok: gm <= bound + 1e-8,
    })
}

/// Largest c with I ⪰ cJ, computed as λ_min(J^{−1/2} I J^{−1/2}).
/// Requires J ≻ 0.
pub fn near_optimality_ratio(i: &RMatrix, j: &RMatrix) -> Result<f64> {
    let jm = j.inv_sqrt_spd(T_RANK)?;
    let w = (&(&jm * i) * &jm).symmetrized();
    w.min_eigenvalue_sym()
}

/// Largest c with I ⪰ cJ restricted to the support of J (eigenvalues above
/// rank_tol·λ_max). Parameters in the null space of J carry no information
/// and do not constrain c.
pub fn near_optimality_ratio_on_support(i: &RMatrix, j: &RMatrix) -> Result<f64> {
    let (vals, vecs) = j.eig_sym()?;
    let lmax = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&k| vals[k] > T_RANK * lmax.max(1e-300))
        .collect();
    if keep.is_empty() {
        return Err(Error::Singular {
            what: "QFIM has empty support".into(),
        });
    }
    let r = keep.len();
    // columns of the support basis scaled by λ^{-1/2}
    let mut b = RMatrix::zeros(vals.len(), r);
    for (col, &k) in keep.iter().enumerate() {
        let s = 1.0 / vals[k].sqrt();
        for row in 0..vals.len() {
            b[(row, col)] = vecs[(row, k)] * s;
        }
    }
    let w = (&(&b.transpose() * i) * &b).symmetrized();
    w.min_eigenvalue_sym()
}

/// Outcome of the weak near-optimality conditions.
#[derive(Clone, Debug)]
pub struct WeakNearOptimality {
    /// Tr(J·I⁻¹).
    pub tr_j_iinv: f64,
    /// Reference lower bound m²/reference_gm.
    pub reference: f64,
    /// Condition 1: Tr(J·I⁻¹) ≤ c₁ · reference.
    pub cond_average: bool,
    /// Condition 2: I ⪰ c₂·(Tr(J⁻¹I)/m)·J.
    pub cond_spread: bool,
    pub identifiable: bool,
}

impl WeakNearOptimality {
    pub fn ok(&self) -> bool {
        self.identifiable && self.cond_average && self.cond_spread
    }
}

/// Checks the two weak near-optimality conditions with constants c₁, c₂
/// against the Gill–Massar-derived reference bound m²/reference_gm.
pub fn weak_near_optimality_check(
    i: &RMatrix,
    j: &RMatrix,
    m: usize,
    c1: f64,
    c2: f64,
    reference_gm: f64,
) -> Result<WeakNearOptimality> {
    let identifiable = i.rank_sym(T_RANK)? == i.rows();
    let iinv = i.pinv_sym(T_RANK)?;
    let tr_j_iinv = (j * &iinv).trace();
    let reference = (m * m) as f64 / reference_gm;
    let cond_average = identifiable && tr_j_iinv <= c1 * reference + 1e-8;
    let gm = (&j.pinv_sym(T_RANK)? * i).trace();
    let scaled = j.scale(c2 * gm / m as f64);
    let cond_spread = psd_ge(&i.to_complex(), &scaled.to_complex(), T_PSD)?;
    Ok(WeakNearOptimality {
        tr_j_iinv,
        reference,
        cond_average,
        cond_spread,
        identifiable,
    })
}

/// Low-rank split of a state at threshold μ.
#[derive(Clone, Debug)]
pub struct LowRankSplit {
    pub mu: f64,
    pub proj: CMatrix,
    pub proj_perp: CMatrix,
    /// p = Tr(ρ Π⊥).
    pub p: f64,
    /// ∂_i p = Tr((∂_iρ) Π⊥).
    pub dp: Vec<f64>,
    pub j: RMatrix,
    pub j_perp: RMatrix,
    pub j_p: RMatrix,
    /// J̃ = J − p·J⊥ − J^p.
    pub j_tilde: RMatrix,
    /// Certified constant: largest c with J̃ ⪰ cJ.
    pub c: f64,
}

/// Splits the state at eigenvalue threshold μ and certifies the low-rank
/// constant c numerically.
pub fn lowrank_split(rho: &DensityMatrix, derivs: &[CMatrix], mu: f64) -> Result<LowRankSplit> {
    if mu <= 0.0 || mu > 1.0 {
        return Err(Error::InvalidArgument(format!("μ = {mu} outside (0, 1]")));
    }
    let eig = eigh(rho.mat())?;
    let d = rho.dim();
    let m = derivs.len();
    let hi: Vec<usize> = (0..d).filter(|&k| eig.eigenvalues[k] >= mu).collect();
    if hi.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no eigenvalue of ρ reaches μ = {mu} (max {:.6})",
            eig.max_eigenvalue()
        )));
    }
    let mut proj = CMatrix::zeros(d, d);
    for &k in &hi {
        let col = eig.eigenvectors.column(k);
        proj.add_weighted_projector(&col, 1.0);
    }
    let proj_perp = &CMatrix::identity(d) - &proj;
    let p = (rho.mat() * &proj_perp).trace().re.max(0.0);
    let dp: Vec<f64> = derivs.iter().map(|dr| (dr * &proj_perp).trace().re).collect();
    let j = qfim(rho, derivs, T_RANK)?;

    let (j_perp, j_p) = if p > 1e-12 {
        // post-selected state Π⊥ρΠ⊥/p with derivatives of the normalized map
        let rho_perp = (&(&proj_perp * rho.mat()) * &proj_perp).scale(1.0 / p);
        let dperp: Vec<CMatrix> = derivs
            .iter()
            .zip(dp.iter())
            .map(|(dr, dpi)| {
                let a = (&(&proj_perp * dr) * &proj_perp).scale(1.0 / p);
                let b = rho_perp.scale(dpi / p);
                &a - &b
            })
            .collect();
        let jp_mat = qfim(&DensityMatrix::new_unchecked(rho_perp), &dperp, T_RANK)?;
        let mut j_p = RMatrix::zeros(m, m);
        if p < 1.0 {
            for a in 0..m {
                for b in 0..m {
                    j_p[(a, b)] = dp[a] * dp[b] / (p * (1.0 - p));
                }
            }
        }
        (jp_mat, j_p)
    } else {
        (RMatrix::zeros(m, m), RMatrix::zeros(m, m))
    };

    let j_tilde = &(&j - &j_perp.scale(p)) - &j_p;
    let c = near_optimality_ratio_on_support(&j_tilde, &j)?;
    Ok(LowRankSplit {
        mu,
        proj,
        proj_perp,
        p,
        dp,
        j,
        j_perp,
        j_p,
        j_tilde,
        c,
    })
}

/// Weighted mean squared error Tr(W·V).
pub fn wmse(w: &RMatrix, v: &RMatrix) -> f64 {
    (w * v).trace()
}

/// The classical optimal locally unbiased estimator for a finite POVM:
/// θ̂_i(x) = θ_i⁰ + α_{i,x} with α_{i,x} = Σ_j (I⁻¹)_ij ∂_j p_x / p_x.
#[derive(Clone, Debug)]
pub struct OptimalLocalEstimator {
    /// Outcome probabilities p_x.
    pub probs: Vec<f64>,
    /// `α[i][x]`, the estimator offsets per parameter and outcome.
    pub alpha: Vec<Vec<f64>>,
    pub cfim: RMatrix,
}

impl OptimalLocalEstimator {
    pub fn new(rho: &DensityMatrix, derivs: &[CMatrix], povm: &RankOnePOVM) -> Result<Self> {
        let i = cfim_rank_one(rho, derivs, povm)?;
        let iinv = i.pinv_sym(T_RANK)?;
        let m = derivs.len();
        let d = povm.dim() as f64;
        let n_out = povm.len();
        let mut probs = Vec::with_capacity(n_out);
        let mut dps: Vec<Vec<f64>> = Vec::with_capacity(n_out);
        for (q, s) in povm.elements() {
            probs.push(q * d * rho.mat().expectation(s).re);
            dps.push(derivs.iter().map(|dr| q * d * dr.expectation(s).re).collect());
        }
        let mut alpha = vec![vec![0.0; n_out]; m];
        for x in 0..n_out {
            if probs[x] <= P_FLOOR {
                continue;
            }
            for a in 0..m {
                let mut acc = 0.0;
                for (j, dpj) in dps[x].iter().enumerate() {
                    acc += iinv[(a, j)] * dpj;
                }
                alpha[a][x] = acc / probs[x];
            }
        }
        Ok(OptimalLocalEstimator {
            probs,
            alpha,
            cfim: i,
        })
    }

    /// Draws `shots` outcomes and returns the empirical second-moment matrix
    /// of (θ̂ − θ⁰), which converges to I(M)⁻¹.
    pub fn empirical_msem<R: Rng>(&self, shots: usize, rng: &mut R) -> RMatrix {
        let m = self.alpha.len();
        let cdf: Vec<f64> = self
            .probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let total = *cdf.last().unwrap();
        let mut v = RMatrix::zeros(m, m);
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * total;
            let x = cdf.partition_point(|c| *c < u).min(self.probs.len() - 1);
            for a in 0..m {
                for b in a..m {
                    v[(a, b)] += self.alpha[a][x] * self.alpha[b][x];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                v[(a, b)] = v[(b, a)];
            }
        }
        v.scale(1.0 / shots as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{pauli_povm_1q, povm_from_cliffords, tableau::clifford_enumerate};
    use crate::models::pauli::PauliLabel;
    use crate::rng::{random_density, random_hermitian, stream_rng};
    use crate::states::{
        DepolarizedFidelityFamily, FidelityPureFamily, PhaseQubitFamily, StabilizerMixFamily,
        StateFamily,
    };

    fn hermitian_traceless(d: usize, rng: &mut impl Rng) -> CMatrix {
        let h = random_hermitian(d, rng);
        let shift = h.trace().re / d as f64;
        &h - &CMatrix::identity(d).scale(shift)
    }

    #[test]
    fn sld_diagonal_case() {
        // ρ = diag(f, 1−f), ∂ρ = diag(1, −1) → L = diag(1/f, −1/(1−f))
        let f = 0.3;
        let rho = DensityMatrix::new(CMatrix::diag_real(&[f, 1.0 - f])).unwrap();
        let drho = CMatrix::diag_real(&[1.0, -1.0]);
        let l = sld(&rho, &drho, T_RANK).unwrap();
        assert!((l[(0, 0)].re - 1.0 / f).abs() < 1e-12);
        assert!((l[(1, 1)].re + 1.0 / (1.0 - f)).abs() < 1e-12);
    }

    #[test]
    fn sld_pure_state_form() {
        // pure states: L = 2(|∂ψ⟩⟨ψ| + |ψ⟩⟨∂ψ|) = 2 ∂ρ
        let fam = PhaseQubitFamily::new();
        let theta = [0.4];
        let rho = fam.state(&theta).unwrap();
        let dr = fam.derivs(&theta).unwrap();
        let l = sld(&rho, &dr[0], T_RANK).unwrap();
        assert!((&l - &dr[0].scale(2.0)).frobenius_norm() < 1e-9);
    }

    #[test]
    fn sld_defining_equation_full_rank() {
        let mut rng = stream_rng(41, 0, 0);
        let rho = DensityMatrix::new(random_density(4, &mut rng)).unwrap();
        let drho = hermitian_traceless(4, &mut rng);
        let l = sld(&rho, &drho, T_RANK).unwrap();
        let recon = (&(&l * rho.mat()) + &(rho.mat() * &l)).scale(0.5);
        assert!((&recon - &drho).frobenius_norm() < 1e-8);
        // Tr(ρL) = 0 follows from tracelessness of ∂ρ
        assert!((rho.mat() * &l).trace().re.abs() < 1e-8);
    }

    #[test]
    fn qfim_phase_qubit_is_one() {
        let fam = PhaseQubitFamily::new();
        let rho = fam.state(&[0.9]).unwrap();
        let dr = fam.derivs(&[0.9]).unwrap();
        let j = qfim(&rho, &dr, T_RANK).unwrap();
        assert!((j[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn qfim_matches_anticommutator_route() {
        let mut rng = stream_rng(42, 0, 0);
        let rho = DensityMatrix::new(random_density(3, &mut rng)).unwrap();
        let derivs = vec![
            hermitian_traceless(3, &mut rng),
            hermitian_traceless(3, &mut rng),
        ];
        let j = qfim(&rho, &derivs, T_RANK).unwrap();
        let slds = sld_set(&rho, &derivs, T_RANK).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let anti = &(&slds.operators[a] * &slds.operators[b])
                    + &(&slds.operators[b] * &slds.operators[a]);
                let jab = 0.5 * (rho.mat() * &anti).trace().re;
                assert!((j[(a, b)] - jab).abs() < 1e-8, "({a},{b})");
            }
        }
    }

    #[test]
    fn qfim_fidelity_families() {
        // pure: J_ff = 1/(f(1−f)), J block-diagonal
        let t: Vec<C64> = vec![
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
        ];
        let fam = FidelityPureFamily::new(&t).unwrap();
        let theta = [0.3, 0.7, 0.4];
        let j = qfim(
            &fam.state(&theta).unwrap(),
            &fam.derivs(&theta).unwrap(),
            T_RANK,
        )
        .unwrap();
        assert!((j[(0, 0)] - 1.0 / (0.3 * 0.7)).abs() < 1e-9, "J_ff");
        for k in 1..3 {
            assert!(j[(0, k)].abs() < 1e-9, "J_fg must vanish");
        }
        // depolarized: same J_ff
        let dep = DepolarizedFidelityFamily::new(&t).unwrap();
        let jd = qfim(
            &dep.state(&[0.3]).unwrap(),
            &dep.derivs(&[0.3]).unwrap(),
            T_RANK,
        )
        .unwrap();
        assert!((jd[(0, 0)] - 1.0 / (0.3 * 0.7)).abs() < 1e-9);
    }

    #[test]
    fn cfim_phase_qubit_under_rotated_basis() {
        // basis {(|0⟩ ± e^{iβ}|1⟩)/√2}: CFI = 1 whenever β−θ ∉ (π/2)ℤ
        let fam = PhaseQubitFamily::new();
        let theta = [0.3];
        let beta = 1.1;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = vec![C64::new(s, 0.0), C64::from_polar(s, beta)];
        let minus = vec![C64::new(s, 0.0), -C64::from_polar(s, beta)];
        let povm = vec![CMatrix::projector(&plus), CMatrix::projector(&minus)];
        let i = cfim(
            &fam.state(&theta).unwrap(),
            &fam.derivs(&theta).unwrap(),
            &povm,
        )
        .unwrap();
        assert!((i[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cfim_phase_qubit_pauli_povm_two_thirds() {
        let fam = PhaseQubitFamily::new();
        let theta = [0.3];
        let i = cfim_rank_one(
            &fam.state(&theta).unwrap(),
            &fam.derivs(&theta).unwrap(),
            &pauli_povm_1q(),
        )
        .unwrap();
        assert!((i[(0, 0)] - 2.0 / 3.0).abs() < 1e-12, "I = {}", i[(0, 0)]);
        // brute force over the 24 enumerated Cliffords agrees
        let povm = povm_from_cliffords(&clifford_enumerate(1).unwrap()).unwrap();
        let i2 = cfim_rank_one(
            &fam.state(&theta).unwrap(),
            &fam.derivs(&theta).unwrap(),
            &povm,
        )
        .unwrap();
        assert!((i2[(0, 0)] - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn cfim_stabilizer_mix_design_suppression() {
        // CFIM under a 2-design is δ_ij/(2ⁿ+1); the n=1 Clifford POVM is one
        let fam = StabilizerMixFamily::z_group(1).unwrap();
        let theta = [0.0];
        let povm = povm_from_cliffords(&clifford_enumerate(1).unwrap()).unwrap();
        let i = cfim_rank_one(
            &fam.state(&theta).unwrap(),
            &fam.derivs(&theta).unwrap(),
            &povm,
        )
        .unwrap();
        assert!((i[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cfim_additive_on_product() {
        let fam = PhaseQubitFamily::new();
        let theta = [0.4];
        let rho = fam.state(&theta).unwrap();
        let dr = fam.derivs(&theta).unwrap();
        let povm = pauli_povm_1q();
        let i1 = cfim_rank_one(&rho, &dr, &povm).unwrap();
        // ρ⊗ρ with ∂(ρ⊗ρ) = ∂ρ⊗ρ + ρ⊗∂ρ under the product POVM
        let rho2 = DensityMatrix::new_unchecked(crate::qmath::kron(rho.mat(), rho.mat()));
        let d2 =
            vec![&crate::qmath::kron(&dr[0], rho.mat()) + &crate::qmath::kron(rho.mat(), &dr[0])];
        let povm2 = crate::designs::product_povm(&povm, &povm).unwrap();
        let i2 = cfim_rank_one(&rho2, &d2, &povm2).unwrap();
        assert!(
            (i2[(0, 0)] - 2.0 * i1[(0, 0)]).abs() < 1e-10,
            "additivity: {} vs 2×{}",
            i2[(0, 0)],
            i1[(0, 0)]
        );
    }

    #[test]
    fn deviation_observables_satisfy_local_unbiasedness() {
        let t: Vec<C64> = vec![C64::new(0.8, 0.0), C64::new(0.0, 0.6)];
        let fam = FidelityPureFamily::new(&t).unwrap();
        let theta = [0.35];
        let rho = fam.state(&theta).unwrap();
        let derivs = fam.derivs(&theta).unwrap();
        let dev = deviation_observables(&rho, &derivs, DevKind::Plain).unwrap();
        assert!(dev.unidentifiable.is_empty());
        for (i, x) in dev.xs.iter().enumerate() {
            assert!((rho.mat() * x).trace().re.abs() < 1e-8);
            for (j, dr) in derivs.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(((dr * x).trace().re - want).abs() < 1e-6, "({i},{j})");
            }
        }
    }

    #[test]
    fn deviation_observable_matches_closed_form_fidelity() {
        // X_f = 2f(1−f)(|φ⟩⟨φ|−|φ⊥⟩⟨φ⊥|) + (1−2f)√(f(1−f))(|φ⟩⟨φ⊥|+|φ⊥⟩⟨φ|)
        let t: Vec<C64> = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let fam = FidelityPureFamily::new(&t).unwrap();
        let f = 0.3;
        let rho = fam.state(&[f]).unwrap();
        let derivs = fam.derivs(&[f]).unwrap();
        let dev = deviation_observables(&rho, &derivs, DevKind::Plain).unwrap();
        // complement basis for d=2 anchored at |0⟩ is |1⟩
        let perp: Vec<C64> = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let a = 2.0 * f * (1.0 - f);
        let b = (1.0 - 2.0 * f) * (f * (1.0 - f)).sqrt();
        let mut expect = (&CMatrix::projector(&t) - &CMatrix::projector(&perp)).scale(a);
        expect.add_scaled(
            &(&CMatrix::outer(&t, &perp) + &CMatrix::outer(&perp, &t)),
            C64::new(b, 0.0),
        );
        assert!(
            (&dev.xs[0] - &expect).frobenius_norm() < 1e-9,
            "gap {}",
            (&dev.xs[0] - &expect).frobenius_norm()
        );
    }

    #[test]
    fn predicted_msem_matches_brute_force_design_sum() {
        let mut rng = stream_rng(43, 0, 0);
        let povm = povm_from_cliffords(&clifford_enumerate(1).unwrap()).unwrap();
        for _ in 0..5 {
            let rho = DensityMatrix::new(random_density(2, &mut rng)).unwrap();
            let xs: Vec<CMatrix> = (0..2)
                .map(|_| {
                    let x = random_hermitian(2, &mut rng);
                    let shift = (rho.mat() * &x).trace().re;
                    &x - &CMatrix::identity(2).scale(shift)
                })
                .collect();
            let v = predicted_msem(&rho, &xs, 2).unwrap();
            let bf = msem_brute_force(&rho, &xs, &povm).unwrap();
            assert!(
                (&v - &bf).frobenius_norm() <= 1e-9,
                "gap {}",
                (&v - &bf).frobenius_norm()
            );
        }
    }

    #[test]
    fn predicted_msem_fidelity_value() {
        let t: Vec<C64> = vec![
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
        ];
        let fam = FidelityPureFamily::new(&t).unwrap();
        let theta = [0.2, 0.3, 1.0];
        let rho = fam.state(&theta).unwrap();
        let derivs = fam.derivs(&theta).unwrap();
        let dev = deviation_observables(&rho, &derivs, DevKind::Plain).unwrap();
        let v = predicted_msem(&rho, &dev.xs, 4).unwrap();
        let d = 4.0;
        let expect = 4.0 * (d + 1.0) / (d + 2.0) * 0.2 * 0.8;
        assert!((v[(0, 0)] - expect).abs() < 1e-9, "V_ff = {}", v[(0, 0)]);
        // pure states with plain X: V = 4(d+1)/(d+2)·J⁻¹
        let j = qfim(&rho, &derivs, T_RANK).unwrap();
        let vfull = j
            .pinv_sym(T_RANK)
            .unwrap()
            .scale(4.0 * (d + 1.0) / (d + 2.0));
        assert!((&v - &vfull).frobenius_norm() < 1e-7);
        // W = J gives Tr(JV) = 4(d+1)m/(d+2)
        let w = wmse(&j, &v);
        assert!((w - 4.0 * (d + 1.0) * 3.0 / (d + 2.0)).abs() < 1e-7);
        // W = identity is just the trace; W = J, V = J⁻¹ gives m
        assert!((wmse(&RMatrix::identity(3), &v) - v.trace()).abs() < 1e-12);
        let jinv = j.pinv_sym(T_RANK).unwrap();
        assert!((wmse(&j, &jinv) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn gill_massar_basic_cases() {
        // I = J (single parameter): gm = 1 ≤ d−1
        let j = RMatrix::diag(&[2.5]);
        let res = gill_massar(&j, &j, 2, GmVariant::Full).unwrap();
        assert!((res.gm - 1.0).abs() < 1e-12);
        assert!(res.ok);
        // I = J/2 at m = 2(d−1) saturates: gm = d−1
        let d = 3;
        let m = 2 * (d - 1);
        let j = RMatrix::identity(m);
        let i = j.scale(0.5);
        let res = gill_massar(&j, &i, d, GmVariant::Full).unwrap();
        assert!((res.gm - (d as f64 - 1.0)).abs() < 1e-12);
        assert!(res.ok);
    }

    #[test]
    fn near_optimality_ratio_cases() {
        let j = RMatrix::diag(&[2.0, 5.0]);
        assert!((near_optimality_ratio(&j, &j).unwrap() - 1.0).abs() < 1e-10);
        assert!((near_optimality_ratio(&j.scale(0.5), &j).unwrap() - 0.5).abs() < 1e-10);
        // d=2 phase state under the enumerated Clifford 3-design: c = 2/3
        let fam = PhaseQubitFamily::new();
        let theta = [0.3];
        let rho = fam.state(&theta).unwrap();
        let dr = fam.derivs(&theta).unwrap();
        let povm = povm_from_cliffords(&clifford_enumerate(1).unwrap()).unwrap();
        let i = cfim_rank_one(&rho, &dr, &povm).unwrap();
        let j = qfim(&rho, &dr, T_RANK).unwrap();
        let c = near_optimality_ratio(&i, &j).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-10);
        assert!(c >= (2.0 + 2.0) / (4.0 * 3.0)); // (d+2)/(4(d+1)) at d=2
    }

    #[test]
    fn weak_near_optimality_maximally_mixed_passes() {
        // full-parameter maximally mixed qubit: I = J/(d+1) = J/3, c1 = c2 = 1
        let rho = DensityMatrix::maximally_mixed(2);
        let derivs: Vec<CMatrix> = [(1u32, 0u32), (1, 1), (0, 1)]
            .iter()
            .map(|&(x, z)| PauliLabel::new(1, x, z).dense().scale(0.5))
            .collect();
        let j = qfim(&rho, &derivs, T_RANK).unwrap();
        let povm = povm_from_cliffords(&clifford_enumerate(1).unwrap()).unwrap();
        let i = cfim_rank_one(&rho, &derivs, &povm).unwrap();
        assert!((&i - &j.scale(1.0 / 3.0)).frobenius_norm() < 1e-10);
        // reference bound m²/(d−1) = 9 is met with equality
        let res = weak_near_optimality_check(&i, &j, 3, 1.0, 1.0, 1.0).unwrap();
        assert!(res.ok(), "{res:?}");
        // I = J passes trivially
        let res2 = weak_near_optimality_check(&j, &j, 3, 1.0, 1.0, 1.0).unwrap();
        assert!(res2.ok());
    }

    #[test]
    fn weak_near_optimality_stabilizer_n2_fails() {
        // documented negative case: I = J/5 at n = 2 fails condition 1
        let fam = StabilizerMixFamily::z_group(2).unwrap();
        let theta = [0.0, 0.0, 0.0];
        let rho = fam.state(&theta).unwrap();
        let derivs = fam.derivs(&theta).unwrap();
        let j = qfim(&rho, &derivs, T_RANK).unwrap();
        let povm = povm_from_cliffords(&clifford_enumerate(2).unwrap()).unwrap();
        let i = cfim_rank_one(&rho, &derivs, &povm).unwrap();
        assert!((&i - &j.scale(0.2)).frobenius_norm() < 1e-9, "I = J/5");
        // reference bound from the support variant (r = d = 4): m²/(d−1)
        let res = weak_near_optimality_check(&i, &j, 3, 1.0, 1.0, 3.0).unwrap();
        assert!(!res.cond_average, "Tr(J I⁻¹) = {} > 3", res.tr_j_iinv);
    }

    #[test]
    fn lowrank_split_pure_state() {
        let fam = PhaseQubitFamily::new();
        let theta = [0.2];
        let rho = fam.state(&theta).unwrap();
        let derivs = fam.derivs(&theta).unwrap();
        let split = lowrank_split(&rho, &derivs, 1.0).unwrap();
        assert!(split.p.abs() < 1e-12);
        assert!((&split.j_tilde - &split.j).frobenius_norm() < 1e-10);
        assert!((split.c - 1.0).abs() < 1e-9);
        // Π + Π⊥ = 1
        let s = &split.proj + &split.proj_perp;
        assert!((&s - &CMatrix::identity(2)).frobenius_norm() < 1e-10);
        // no eigenvalue above μ is an error
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(lowrank_split(&mixed, &derivs, 0.9).is_err());
    }

    #[test]
    fn k_matrix_bound_full_parameter() {
        // K ⪯ 2rκ·J on random full-rank states
        let mut rng = stream_rng(44, 0, 0);
        for _ in 0..5 {
            let rho = DensityMatrix::new(random_density(3, &mut rng)).unwrap();
            let derivs = vec![
                hermitian_traceless(3, &mut rng),
                hermitian_traceless(3, &mut rng),
            ];
            let slds = sld_set(&rho, &derivs, T_RANK).unwrap();
            let m = derivs.len();
            let mut k = RMatrix::zeros(m, m);
            for a in 0..m {
                for b in 0..m {
                    k[(a, b)] = (&slds.operators[a] * &slds.operators[b]).trace().re;
                }
            }
            let k = k.symmetrized();
            let j = qfim(&rho, &derivs, T_RANK).unwrap();
            let eigs = eigh(rho.mat()).unwrap().eigenvalues;
            let kappa = eigs[2] / eigs[0];
            let bound = j.scale(2.0 * 3.0 * kappa);
            assert!(psd_ge(&bound.to_complex(), &k.to_complex(), 1e-8).unwrap());
        }
    }

    #[test]
    fn optimal_estimator_attains_inverse_cfim_matrix() {
        // full-parameter maximally mixed qubit (m = 3): every MSEM entry
        // converges to (I⁻¹)_ij within 5σ
        let rho = DensityMatrix::maximally_mixed(2);
        let derivs: Vec<CMatrix> = [(1u32, 0u32), (1, 1), (0, 1)]
            .iter()
            .map(|&(x, z)| PauliLabel::new(1, x, z).dense().scale(0.5))
            .collect();
        let povm = povm_from_cliffords(&clifford_enumerate(1).unwrap()).unwrap();
        let est = OptimalLocalEstimator::new(&rho, &derivs, &povm).unwrap();
        let mut rng = stream_rng(46, 0, 0);
        let shots = 150_000;
        let v = est.empirical_msem(shots, &mut rng);
        let iinv = est.cfim.pinv_sym(T_RANK).unwrap();
        let alpha_max = est
            .alpha
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, a| m.max(a.abs()));
        let sigma = alpha_max * alpha_max / (shots as f64).sqrt();
        for a in 0..3 {
            for b in 0..3 {
                assert!(
                    (v[(a, b)] - iinv[(a, b)]).abs() <= 5.0 * sigma,
                    "entry ({a},{b}): {} vs {}",
                    v[(a, b)],
                    iinv[(a, b)]
                );
            }
        }
    }

    #[test]
    fn optimal_estimator_attains_inverse_cfim() {
        let fam = PhaseQubitFamily::new();
        let theta = [0.3];
        let rho = fam.state(&theta).unwrap();
        let derivs = fam.derivs(&theta).unwrap();
        let est = OptimalLocalEstimator::new(&rho, &derivs, &pauli_povm_1q()).unwrap();
        let mut rng = stream_rng(45, 0, 0);
        let shots = 200_000;
        let v = est.empirical_msem(shots, &mut rng);
        let iinv = est.cfim.pinv_sym(T_RANK).unwrap();
        // 5σ band with per-draw variance bounded by α_max⁴
        let alpha_max = est.alpha[0].iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let sigma = alpha_max * alpha_max / (shots as f64).sqrt();
        assert!(
            (v[(0, 0)] - iinv[(0, 0)]).abs() <= 5.0 * sigma,
            "v = {}, want {}",
            v[(0, 0)],
            iinv[(0, 0)]
        );
    }
}
