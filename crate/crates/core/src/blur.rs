//! Circulant (BCCB) blur operator applied through the 2-D FFT.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::Image;

/// A normalized, nonnegative k×k point spread function.
///
/// Tap `(anchor, anchor)` sits at the origin of the convolution, with
/// `anchor = (k - 1) / 2` (integer division). For even `k` this puts the
/// origin just before the continuous center `(k - 1) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Psf {
    size: usize,
    taps: Vec<f64>,
}

impl Psf {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size == 0 || taps.len() != size * size {
            return Err(Error::param("psf", "taps must form a non-empty k x k grid"));
        }
        if taps.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::param("psf", "taps must be finite and nonnegative"));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param("psf", format!("taps sum to {sum}, expected 1")));
        }
        Ok(Self { size, taps })
    }

    pub fn identity() -> Self {
        Self {
            size: 1,
            taps: vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn anchor(&self) -> usize {
        (self.size - 1) / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn tap(&self, i: usize, j: usize) -> f64 {
        self.taps[i * self.size + j]
    }
}

/// Sampled Gaussian kernel centered at `(k - 1) / 2` in tap coordinates, normalized to sum 1.
pub fn gaussian_psf(size: usize, sigma: f64) -> Result<Psf> {
    if size == 0 {
        return Err(Error::param("k", "kernel size must be at least 1"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", "must be positive and finite"));
    }
    let c = (size as f64 - 1.0) / 2.0;
    let mut taps = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
            taps.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(Psf { size, taps })
}

/// The blur matrix `H` for `n`×`n` images with circular boundaries.
#[derive(Clone)]
pub struct BlurOperator {
    psf: Psf,
    n: usize,
    response: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for BlurOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlurOperator")
            .field("psf", &self.psf)
            .field("n", &self.n)
            .finish()
    }
}

impl BlurOperator {
    pub fn new(psf: Psf, n: usize) -> Result<Self> {
        if psf.size() > n {
            return Err(Error::param(
                "psf",
                format!("kernel size {} exceeds image side {n}", psf.size()),
            ));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k = psf.size();
        let a = psf.anchor();
        let mut response = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..k {
            for j in 0..k {
                let r = (i + n - a) % n;
                let c = (j + n - a) % n;
                response[r * n + c].re += psf.tap(i, j);
            }
        }
        let mut op = Self {
            psf,
            n,
            response: Vec::new(),
            forward,
            inverse,
        };
        op.fft2(&mut response, false);
        op.response = response;
        Ok(op)
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Psf::identity(), n).expect("1x1 kernel fits any image")
    }

    pub fn psf(&self) -> &Psf {
        &self.psf
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Frequency response of the blur (2-D DFT of the circularly placed kernel).
    pub fn response(&self) -> &[Complex64] {
        &self.response
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = buf[r * n + c];
            }
            plan.process(&mut col);
            for r in 0..n {
                buf[r * n + c] = col[r];
            }
        }
    }

    fn filter(&self, x: &Image, adjoint: bool) -> Result<Image> {
        if x.side() != self.n {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} image", self.n),
                found: format!("{0}x{0}", x.side()),
            });
        }
        let mut buf: Vec<Complex64> = x.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, false);
        for (b, h) in buf.iter_mut().zip(&self.response) {
            *b *= if adjoint { h.conj() } else { *h };
        }
        self.fft2(&mut buf, true);
        let norm = 1.0 / (self.n * self.n) as f64;
        Ok(Image::from_raw(
            self.n,
            buf.iter().map(|c| c.re * norm).collect(),
        ))
    }

    /// `H x`: circular convolution with the PSF.
    pub fn apply(&self, x: &Image) -> Result<Image> {
        if self.psf.size() == 1 {
            return Ok(x.clone());
        }
        self.filter(x, false)
    }

    /// `Hᵀ w`: circular correlation with the PSF (convolution with the flipped kernel).
    pub fn apply_adjoint(&self, w: &Image) -> Result<Image> {
        if self.psf.size() == 1 {
            return Ok(w.clone());
        }
        self.filter(w, true)
    }
}
