//! Poisson observation model and a-posteriori SNR calibration.
//!
//! Random streams come from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! with a 64-bit value. Independent streams for parallel realizations are
//! derived with [`derive_seed`], a SplitMix64 finalizer over
//! `(master, index)`, so results never depend on worker scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::function::gamma::ln_gamma;

use crate::blur::BlurOperator;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::INFINITE_DB;

/// Means below this are sampled by inversion, the rest by PTRS rejection.
pub const INVERSION_LIMIT: f64 = 10.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent stream under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// One Poisson variate with the given mean.
pub fn poisson_variate<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean < INVERSION_LIMIT {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    }
}

/// Sequential-search inversion of the CDF.
fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut p = (-mean).exp();
    let mut cdf = p;
    // the tail beyond 1000 is below 1e-300 for mean < 10
    while u > cdf && k < 1000 {
        k += 1;
        p *= mean / f64::from(k);
        cdf += p;
    }
    f64::from(k)
}

/// Hörmann's transformed rejection with squeeze (PTRS), valid for mean >= 10.
fn poisson_ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k;
        }
    }
}

/// Draws `P(mean)` independently per pixel; deterministic in `seed`.
pub fn sample_poisson(mean: &Image, seed: u64) -> Result<Image> {
    if let Some(v) = mean.data().iter().find(|v| **v < 0.0) {
        return Err(Error::Domain(format!("negative Poisson mean {v}")));
    }
    let mut rng = rng_from_seed(seed);
    let data = mean
        .data()
        .iter()
        .map(|&m| poisson_variate(m, &mut rng))
        .collect();
    Ok(Image::from_raw(mean.side(), data))
}

/// `10·log10(‖Hx‖² / ‖y − Hx‖²)`; [`INFINITE_DB`] when the two agree exactly.
pub fn measured_snr(clean_blurred: &Image, observed: &Image) -> Result<f64> {
    clean_blurred.ensure_same_shape(observed)?;
    let noise: f64 = clean_blurred
        .data()
        .iter()
        .zip(observed.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if noise == 0.0 {
        return Ok(INFINITE_DB);
    }
    Ok(10.0 * (clean_blurred.norm_sq() / noise).log10())
}

/// Expected SNR (dB) of `P(scale·Hx)` using `E‖y − λ‖² = Σ λ`.
pub fn expected_snr(blurred: &Image, scale: f64) -> f64 {
    10.0 * (scale * blurred.norm_sq() / blurred.sum()).log10()
}

/// Photon scale chosen so that a Poisson observation hits a target SNR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub target_snr: f64,
    pub seed: u64,
    /// Expected photon count of a unit-intensity pixel.
    pub scale: f64,
}

impl NoiseModel {
    /// Photon-count observation `P(scale·Hx)`.
    pub fn observe_counts(&self, clean: &Image, op: &BlurOperator) -> Result<Image> {
        sample_poisson(&op.apply(clean)?.scaled(self.scale), self.seed)
    }

    /// Observation divided by the photon scale, i.e. in the `[0, 1]` units of the clean image.
    pub fn observe(&self, clean: &Image, op: &BlurOperator) -> Result<Image> {
        Ok(self.observe_counts(clean, op)?.scaled(1.0 / self.scale))
    }
}

/// Solves `expected_snr(H·clean, scale) = target_snr` for `scale`.
///
/// The expected SNR is affine in `log10(scale)`, so the solution is closed-form.
pub fn calibrate_peak(
    clean: &Image,
    op: &BlurOperator,
    target_snr: f64,
    seed: u64,
) -> Result<NoiseModel> {
    if !target_snr.is_finite() {
        return Err(Error::param("snr", "target SNR must be finite"));
    }
    if !clean.is_nonnegative() || clean.sum() <= 0.0 {
        return Err(Error::param(
            "image",
            "calibration needs a nonnegative image with positive mass",
        ));
    }
    let blurred = op.apply(clean)?;
    let scale = 10f64.powf(target_snr / 10.0) * blurred.sum() / blurred.norm_sq();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!("calibrated scale {scale} is not usable")));
    }
    Ok(NoiseModel {
        target_snr,
        seed,
        scale,
    })
}
