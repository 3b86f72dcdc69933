//! Isotropic total-variation baseline.
//!
//! The TV proximal map is computed with Chambolle's dual projection
//! (forward differences, Neumann boundary, step 1/8) and plugged into the
//! same ADMM loop as the QAB denoiser.

use crate::admm::{run_admm, AdmmTrace, InnerSolverConfig, LoopConfig, ZStep};
use crate::blur::BlurOperator;
use crate::error::{Error, Result};
use crate::image::Image;

const DUAL_STEP: f64 = 0.125;

/// Forward differences; the last row/column difference is zero.
fn gradient(x: &[f64], n: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            gx[i] = if c + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            gy[i] = if r + 1 < n { x[i + n] - x[i] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], n: usize, out: &mut [f64]) {
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            let dx = match c {
                0 => px[i],
                _ if c + 1 == n => -px[i - 1],
                _ => px[i] - px[i - 1],
            };
            let dy = match r {
                0 => py[i],
                _ if r + 1 == n => -py[i - n],
                _ => py[i] - py[i - n],
            };
            out[i] = if n == 1 { 0.0 } else { dx + dy };
        }
    }
}

/// Isotropic total variation `Σ |∇x|`.
pub fn total_variation(x: &Image) -> f64 {
    let n = x.side();
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; x.len()];
    gradient(x.data(), n, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// `argmin_x ½‖x − v‖² + weight·TV(x)`, approximated with `iters` dual steps.
pub fn tv_prox(v: &Image, weight: f64, iters: usize) -> Result<Image> {
    if !(weight >= 0.0) || !weight.is_finite() {
        return Err(Error::param("tv_weight", "must be nonnegative and finite"));
    }
    if weight == 0.0 {
        return Ok(v.clone());
    }
    let n = v.side();
    let len = v.len();
    let (mut px, mut py) = (vec![0.0; len], vec![0.0; len]);
    let (mut gx, mut gy) = (vec![0.0; len], vec![0.0; len]);
    let mut div = vec![0.0; len];
    let mut arg = vec![0.0; len];
    let inv = 1.0 / weight;
    for _ in 0..iters {
        divergence(&px, &py, n, &mut div);
        for i in 0..len {
            arg[i] = div[i] - v[i] * inv;
        }
        gradient(&arg, n, &mut gx, &mut gy);
        for i in 0..len {
            let norm = 1.0 + DUAL_STEP * gx[i].hypot(gy[i]);
            px[i] = (px[i] + DUAL_STEP * gx[i]) / norm;
            py[i] = (py[i] + DUAL_STEP * gy[i]) / norm;
        }
    }
    divergence(&px, &py, n, &mut div);
    Ok(Image::new(n, v.data().iter().zip(&div).map(|(v, d)| v - weight * d).collect())?)
}

/// TV proximal step for the ADMM loop; the prox weight is `tv_weight / λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvStep {
    pub tv_weight: f64,
    pub prox_iters: usize,
}

impl ZStep for TvStep {
    fn apply(&self, v: &Image, lambda: f64) -> Result<Image> {
        tv_prox(v, self.tv_weight / lambda, self.prox_iters)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvConfig {
    pub lambda0: f64,
    pub gamma: f64,
    pub outer_iters: usize,
    pub tv_weight: f64,
    pub prox_iters: usize,
    pub inner: InnerSolverConfig,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            gamma: 1.05,
            outer_iters: 30,
            tv_weight: 0.1,
            prox_iters: 50,
            inner: InnerSolverConfig::default(),
        }
    }
}

impl TvConfig {
    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            lambda0: self.lambda0,
            gamma: self.gamma,
            outer_iters: self.outer_iters,
            inner: self.inner,
        }
    }
}

/// TV-regularized Poisson deconvolution by ADMM.
pub fn run_tv_admm(
    y: &Image,
    op: &BlurOperator,
    config: &TvConfig,
    reference: Option<&Image>,
) -> Result<(Image, AdmmTrace)> {
    if !(config.tv_weight >= 0.0) || !config.tv_weight.is_finite() {
        return Err(Error::param("tv_weight", "must be nonnegative and finite"));
    }
    if config.prox_iters == 0 {
        return Err(Error::param("prox_iters", "must be positive"));
    }
    let step = TvStep {
        tv_weight: config.tv_weight,
        prox_iters: config.prox_iters,
    };
    run_admm(y, op, &config.loop_config(), &step, reference)
}
