//! Full-reference quality metrics: PSNR, SSIM and RMSE.

use crate::error::Result;
use crate::image::Image;

/// Value reported in place of +∞ (identical images, zero noise) so that
/// tabular output stays numeric.
pub const INFINITE_DB: f64 = 999.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const SSIM_DYNAMIC_RANGE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub rmse: f64,
}

impl MetricReport {
    pub fn compute(reference: &Image, test: &Image) -> Result<Self> {
        Ok(Self {
            psnr: psnr(reference, test)?,
            ssim: ssim(reference, test)?,
            rmse: rmse(reference, test)?,
        })
    }
}

pub fn mse(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_shape(test)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.len() as f64)
}

pub fn rmse(reference: &Image, test: &Image) -> Result<f64> {
    Ok(mse(reference, test)?.sqrt())
}

/// Peak signal-to-noise ratio in dB, with the peak taken as the maximum of
/// `reference`. Returns [`INFINITE_DB`] when the images are identical.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    let err = mse(reference, test)?;
    if err == 0.0 {
        return Ok(INFINITE_DB);
    }
    let peak = reference.max();
    Ok(10.0 * (peak * peak / err).log10())
}

/// Normalized 1-D Gaussian taps of length `len`, centered on the middle tap.
pub(crate) fn gaussian_taps(len: usize, sigma: f64) -> Vec<f64> {
    let c = (len as f64 - 1.0) / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let d = i as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Separable "valid" correlation of an `n`×`n` field with `taps` along both axes.
fn filter_valid(data: &[f64], n: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let m = n - k + 1;
    let mut rows = vec![0.0; n * m];
    for r in 0..n {
        let line = &data[r * n..(r + 1) * n];
        for c in 0..m {
            rows[r * m + c] = taps.iter().zip(&line[c..c + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            out[r * m + c] = (0..k).map(|t| taps[t] * rows[(r + t) * m + c]).sum();
        }
    }
    out
}

/// Mean structural similarity over all fully-contained 11×11 Gaussian
/// windows (σ = 1.5, K₁ = 0.01, K₂ = 0.03, dynamic range 1).
pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_shape(test)?;
    let n = reference.side();
    if n < SSIM_WINDOW {
        return Err(crate::Error::InvalidImage(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {n}x{n}"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let a = reference.data();
    let b = test.data();
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();

    let mu_a = filter_valid(a, n, &taps);
    let mu_b = filter_valid(b, n, &taps);
    let e_aa = filter_valid(&aa, n, &taps);
    let e_bb = filter_valid(&bb, n, &taps);
    let e_ab = filter_valid(&ab, n, &taps);

    let c1 = (SSIM_K1 * SSIM_DYNAMIC_RANGE).powi(2);
    let c2 = (SSIM_K2 * SSIM_DYNAMIC_RANGE).powi(2);
    let total: f64 = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / mu_a.len() as f64)
}
