//! The QAB denoiser: sparse coding over the low-energy part of the basis
//! followed by a piecewise-linear taper on the coefficients.

use crate::basis::{dot, QuantumBasis};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::par;

/// Coefficient taper by ascending-energy rank `i` (1-based):
/// 1 up to `s`, then `1 − (i − s)/ρ` while positive, then 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThresholdProfile {
    pub s: usize,
    pub rho: usize,
}

impl ThresholdProfile {
    pub fn new(s: usize, rho: usize) -> Result<Self> {
        if rho == 0 {
            return Err(Error::param("rho", "must be positive"));
        }
        Ok(Self { s, rho })
    }

    /// `s = ⌈T/2⌉`, `ρ = ⌈T/4⌉`.
    pub fn default_for(sparsity: usize) -> Self {
        Self {
            s: sparsity.div_ceil(2),
            rho: sparsity.div_ceil(4).max(1),
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        threshold_weight(self, i)
    }
}

/// How the taper is derived from the dictionary size `T`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProfileRule {
    /// `s = ⌈T/2⌉`, `ρ = ⌈T/4⌉`.
    #[default]
    Half,
    /// `s = T`, `ρ = 1`: keep every selected coefficient unchanged.
    Hard,
    Fixed(ThresholdProfile),
}

impl ProfileRule {
    pub fn resolve(&self, sparsity: usize) -> ThresholdProfile {
        match *self {
            ProfileRule::Half => ThresholdProfile::default_for(sparsity),
            ProfileRule::Hard => ThresholdProfile { s: sparsity, rho: 1 },
            ProfileRule::Fixed(p) => p,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProfileRule::Half => "half".into(),
            ProfileRule::Hard => "hard".into(),
            ProfileRule::Fixed(p) => format!("s{}-rho{}", p.s, p.rho),
        }
    }
}

pub fn threshold_weight(profile: &ThresholdProfile, i: usize) -> f64 {
    debug_assert!(i >= 1, "ranks are 1-based");
    if i <= profile.s {
        return 1.0;
    }
    let w = 1.0 - (i - profile.s) as f64 / profile.rho as f64;
    if w > 0.0 {
        w
    } else {
        0.0
    }
}

/// Output of matching pursuit: coefficients on the selected atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCoefficients {
    /// Selected atom ranks (0-based), in selection order.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub sparsity: usize,
}

impl SparseCoefficients {
    /// Dense coefficient vector of length `sparsity` (zeros off the support).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sparsity];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

fn check_sparsity(basis: &QuantumBasis, sparsity: usize) -> Result<()> {
    if sparsity == 0 {
        return Err(Error::param("sparsity", "T must be at least 1"));
    }
    if sparsity > basis.dim() {
        return Err(Error::param(
            "sparsity",
            format!("T = {sparsity} exceeds the dimension {}", basis.dim()),
        ));
    }
    if sparsity > basis.len() {
        return Err(Error::param(
            "sparsity",
            format!("T = {sparsity} but only {} basis vectors are available", basis.len()),
        ));
    }
    Ok(())
}

/// Index of the largest `|score|` among `eligible` entries; ties go to the lowest index.
fn argmax_abs(scores: &[f64], eligible: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&s, &ok)) in scores.iter().zip(eligible).enumerate() {
        if ok && best.is_none_or(|(_, b)| s.abs() > b) {
            best = Some((j, s.abs()));
        }
    }
    best.map(|(j, _)| j)
}

/// Solves `R a = b` for upper-triangular `R` stored by columns.
fn back_substitute(r_cols: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let m = b.len();
    let mut a = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = b[i];
        for j in i + 1..m {
            acc -= r_cols[j][i] * a[j];
        }
        a[i] = acc / r_cols[i][i];
    }
    a
}

/// Relative tolerance under which a new atom counts as linearly dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Orthogonal matching pursuit restricted to the first `sparsity` atoms.
///
/// Each step picks the unselected atom with the largest `|⟨r, ψ_j⟩|`
/// (lowest index on ties), extends a modified Gram–Schmidt QR of the
/// selected atoms (with one reorthogonalization pass), and refits the
/// least-squares coefficients. Works for any dictionary; atoms that are
/// numerically dependent on the current selection are skipped.
pub fn modified_omp(v: &[f64], basis: &QuantumBasis, sparsity: usize) -> Result<SparseCoefficients> {
    check_sparsity(basis, sparsity)?;
    if v.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("vector of length {}", basis.dim()),
            found: format!("length {}", v.len()),
        });
    }
    let dim = basis.dim();
    let mut residual = v.to_vec();
    let mut eligible = vec![true; sparsity];
    let mut q_cols: Vec<Vec<f64>> = Vec::with_capacity(sparsity);
    let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(sparsity);
    let mut qtv: Vec<f64> = Vec::with_capacity(sparsity);
    let mut indices = Vec::with_capacity(sparsity);

    while indices.len() < sparsity {
        let corr = par::map_range(sparsity, par::auto(sparsity * dim), |j| {
            if eligible[j] {
                dot(&residual, basis.vector(j))
            } else {
                0.0
            }
        });
        let Some(j) = argmax_abs(&corr, &eligible) else {
            break;
        };
        eligible[j] = false;

        let atom = basis.vector(j);
        let atom_norm = dot(atom, atom).sqrt();
        let mut q = atom.to_vec();
        let mut r = vec![0.0; q_cols.len() + 1];
        for _ in 0..2 {
            for (k, qk) in q_cols.iter().enumerate() {
                let p = dot(qk, &q);
                r[k] += p;
                q.iter_mut().zip(qk).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&q, &q).sqrt();
        if norm <= DEPENDENCE_TOL * atom_norm.max(f64::MIN_POSITIVE) {
            continue;
        }
        q.iter_mut().for_each(|x| *x /= norm);
        r[q_cols.len()] = norm;

        let b = dot(&q, v);
        qtv.push(b);
        let p = dot(&q, &residual);
        residual.iter_mut().zip(&q).for_each(|(x, y)| *x -= p * y);
        q_cols.push(q);
        r_cols.push(r);
        indices.push(j);
    }

    let values = back_substitute(&r_cols, &qtv);
    Ok(SparseCoefficients {
        indices,
        values,
        sparsity,
    })
}

/// Matching pursuit with the Gram matrix of the candidate atoms cached.
///
/// Carries the QR factorization of the selected atoms in coefficient
/// space (`R` columns and `Ψᵀq_k` products), so a call costs one
/// `T × dim` correlation pass plus `O(T³)` small-vector work instead of
/// `O(T² · dim)`. Selection and tie rules match [`modified_omp`].
#[derive(Clone, Debug)]
pub struct BatchOmp {
    sparsity: usize,
    gram: Vec<f64>,
}

impl BatchOmp {
    pub fn new(basis: &QuantumBasis, sparsity: usize) -> Result<Self> {
        check_sparsity(basis, sparsity)?;
        let rows = par::map_range(sparsity, par::auto(sparsity * sparsity * basis.dim()), |i| {
            (0..sparsity)
                .map(|j| dot(basis.vector(i), basis.vector(j)))
                .collect::<Vec<f64>>()
        });
        Ok(Self {
            sparsity,
            gram: rows.concat(),
        })
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn pursue(&self, v: &[f64], basis: &QuantumBasis) -> Result<SparseCoefficients> {
        let t = self.sparsity;
        check_sparsity(basis, t)?;
        let initial = basis.truncated(t).project(v);
        let gram = |i: usize, j: usize| self.gram[i * t + j];

        let mut corr = initial.clone();
        let mut eligible = vec![true; t];
        // w_cols[k] = Ψᵀ q_k
        let mut w_cols: Vec<Vec<f64>> = Vec::with_capacity(t);
        let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(t);
        let mut qtv: Vec<f64> = Vec::with_capacity(t);
        let mut indices = Vec::with_capacity(t);

        while indices.len() < t {
            let Some(j) = argmax_abs(&corr, &eligible) else {
                break;
            };
            eligible[j] = false;
            let mut r: Vec<f64> = w_cols.iter().map(|w| w[j]).collect();
            let rem = gram(j, j) - r.iter().map(|x| x * x).sum::<f64>();
            let tol = DEPENDENCE_TOL * DEPENDENCE_TOL * gram(j, j);
            if !(rem > tol) {
                continue;
            }
            let diag = rem.sqrt();
            let mut w: Vec<f64> = (0..t).map(|i| gram(i, j)).collect();
            for (wk, rk) in w_cols.iter().zip(&r) {
                w.iter_mut().zip(wk).for_each(|(x, y)| *x -= rk * y);
            }
            w.iter_mut().for_each(|x| *x /= diag);
            let b = (initial[j] - r.iter().zip(&qtv).map(|(x, y)| x * y).sum::<f64>()) / diag;
            corr.iter_mut().zip(&w).for_each(|(c, x)| *c -= b * x);
            r.push(diag);
            w_cols.push(w);
            r_cols.push(r);
            qtv.push(b);
            indices.push(j);
        }

        let values = back_substitute(&r_cols, &qtv);
        Ok(SparseCoefficients {
            indices,
            values,
            sparsity: t,
        })
    }
}

/// `x̂ = Σ τ_i α̂_i ψ_i` from matching-pursuit coefficients.
pub fn reconstruct(coeffs: &SparseCoefficients, basis: &QuantumBasis, profile: &ThresholdProfile) -> Vec<f64> {
    let mut weighted = coeffs.to_dense();
    for (i, a) in weighted.iter_mut().enumerate() {
        *a *= profile.weight(i + 1);
    }
    basis.synthesize(&weighted)
}

/// Matching pursuit with sparsity `T`, taper, reconstruction.
pub fn denoise(v: &Image, basis: &QuantumBasis, sparsity: usize, profile: &ThresholdProfile) -> Result<Image> {
    let coeffs = modified_omp(v.data(), basis, sparsity)?;
    Ok(Image::from_raw(v.side(), reconstruct(&coeffs, basis, profile)))
}

/// How the denoiser obtains its coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoefficientMode {
    /// Matching pursuit over the `T` lowest-energy atoms.
    #[default]
    Omp,
    /// Direct projection onto every vector of a complete basis.
    FullProjection,
}

/// A ready-to-use denoiser bound to one basis.
#[derive(Clone, Debug)]
pub struct QabDenoiser {
    basis: QuantumBasis,
    profile: ThresholdProfile,
    mode: CoefficientMode,
    omp: Option<BatchOmp>,
}

impl QabDenoiser {
    pub fn new(
        basis: QuantumBasis,
        sparsity: usize,
        profile: ThresholdProfile,
        mode: CoefficientMode,
    ) -> Result<Self> {
        let omp = match mode {
            CoefficientMode::Omp => Some(BatchOmp::new(&basis, sparsity)?),
            CoefficientMode::FullProjection => {
                if !basis.is_complete() {
                    return Err(Error::param(
                        "mode",
                        "full projection needs the complete basis",
                    ));
                }
                check_sparsity(&basis, sparsity)?;
                None
            }
        };
        Ok(Self {
            basis,
            profile,
            mode,
            omp,
        })
    }

    pub fn basis(&self) -> &QuantumBasis {
        &self.basis
    }

    pub fn profile(&self) -> ThresholdProfile {
        self.profile
    }

    pub fn mode(&self) -> CoefficientMode {
        self.mode
    }

    pub fn apply(&self, v: &Image) -> Result<Image> {
        let out = match &self.omp {
            Some(omp) => reconstruct(&omp.pursue(v.data(), &self.basis)?, &self.basis, &self.profile),
            None => {
                let mut coeffs = self.basis.project(v.data());
                for (i, a) in coeffs.iter_mut().enumerate() {
                    *a *= self.profile.weight(i + 1);
                }
                let support = coeffs.iter().rposition(|a| *a != 0.0).map_or(0, |p| p + 1);
                self.basis.synthesize(&coeffs[..support])
            }
        };
        Ok(Image::from_raw(v.side(), out))
    }
}
