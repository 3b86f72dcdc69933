//! Plug-and-play ADMM for Poisson deconvolution.
//!
//! Scaled-form iteration with penalty `λ_k = λ₀·γ^k`:
//!
//! ```text
//! x ← argmin −yᵀlog(Hx) + 1ᵀHx + (λ_k/2)‖x − z + u‖²   (gradient descent)
//! z ← D(x + u)                                          (plug-in denoiser)
//! u ← u + x − z
//! ```
//!
//! The z-step is pluggable through [`ZStep`]; the QAB denoiser and the TV
//! proximal map share the same loop.

use std::fmt::Write as _;
use std::time::Instant;

use crate::basis::{build_basis, count_below_energy, BasisScope, HamiltonianParams, QuantumBasis};
use crate::blur::BlurOperator;
use crate::denoise::{CoefficientMode, ProfileRule, QabDenoiser};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::rmse;

/// Gradient descent with Armijo backtracking for the x-subproblem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerSolverConfig {
    pub max_iters: usize,
    /// Stop once `‖∇‖₂ ≤ grad_tol · n` (n = image side).
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    /// Positivity floor relative to `max(y)`; `x⁰ = max(y, ε)`.
    pub floor_rel: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            floor_rel: 1e-6,
        }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("inner.max_iters", "must be positive"));
        }
        for (name, v) in [
            ("inner.grad_tol", self.grad_tol),
            ("inner.initial_step", self.initial_step),
            ("inner.armijo", self.armijo),
            ("inner.floor_rel", self.floor_rel),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be positive and finite"));
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::param("inner.shrink", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Outer-loop schedule shared by every z-step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopConfig {
    pub lambda0: f64,
    pub gamma: f64,
    pub outer_iters: usize,
    pub inner: InnerSolverConfig,
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(Error::param("lambda0", "must be positive and finite"));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::param("gamma", "must be greater than 1"));
        }
        if self.outer_iters == 0 {
            return Err(Error::param("iters", "must be at least 1"));
        }
        self.inner.validate()
    }
}

/// Hyperparameters of QAB-PnP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmConfig {
    pub lambda0: f64,
    pub gamma: f64,
    pub outer_iters: usize,
    /// Energy cutoff `E`: the denoiser uses the `T` eigenvectors with `E_i < E`.
    pub energy_cutoff: f64,
    pub hamiltonian: HamiltonianParams,
    pub threshold: ProfileRule,
    pub inner: InnerSolverConfig,
    pub mode: CoefficientMode,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            lambda0: 1.3,
            gamma: 1.05,
            outer_iters: 30,
            energy_cutoff: 4.1,
            hamiltonian: HamiltonianParams {
                planck_factor: 4.0,
                sigma_qab: 1.0,
            },
            threshold: ProfileRule::Half,
            inner: InnerSolverConfig::default(),
            mode: CoefficientMode::Omp,
        }
    }
}

impl AdmmConfig {
    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            lambda0: self.lambda0,
            gamma: self.gamma,
            outer_iters: self.outer_iters,
            inner: self.inner,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loop_config().validate()?;
        self.hamiltonian.validate()?;
        if !self.energy_cutoff.is_finite() {
            return Err(Error::param("energy", "must be finite"));
        }
        Ok(())
    }

    pub fn basis_scope(&self) -> BasisScope {
        match self.mode {
            CoefficientMode::Omp => BasisScope::BelowEnergy(self.energy_cutoff),
            CoefficientMode::FullProjection => BasisScope::Full,
        }
    }
}

/// Primal, auxiliary and scaled dual variables.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub x: Image,
    pub z: Image,
    pub u: Image,
    pub lambda: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// `x⁰ = max(y, ε)`, `z⁰ = x⁰`, `u⁰ = 0`.
    pub fn initial(y: &Image, lambda0: f64, floor: f64) -> Self {
        let x = y.map(|v| v.max(floor));
        Self {
            z: x.clone(),
            u: Image::zeros(y.side()),
            x,
            lambda: lambda0,
            iteration: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based outer iteration.
    pub iter: usize,
    /// Penalty used during this iteration.
    pub lambda: f64,
    /// RMSE of `x^{k+1}` against the reference, when one was supplied.
    pub rmse: Option<f64>,
    /// Poisson data term at `x^{k+1}`.
    pub objective: f64,
    /// `‖x^{k+1} − z^{k+1}‖₂`.
    pub primal_residual: f64,
    pub inner_iters: usize,
    pub millis: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdmmTrace {
    pub records: Vec<IterationRecord>,
    /// RMSE of the starting point `x⁰` against the reference.
    pub initial_rmse: Option<f64>,
    /// Dictionary size `T` used by the denoiser (QAB only).
    pub sparsity: Option<usize>,
    pub basis_millis: f64,
    /// Pixels raised to zero by the final nonnegativity clamp.
    pub clamped_pixels: usize,
}

impl AdmmTrace {
    pub const CSV_HEADER: &'static str = "iter,lambda,rmse,objective,primal_residual,inner_iters,millis";

    /// Trace as CSV; an absent RMSE is written as an empty cell.
    pub fn to_csv(&self) -> String {
        self.to_csv_with(true)
    }

    /// Like [`Self::to_csv`], optionally leaving out the wall-clock column.
    pub fn to_csv_with(&self, timing: bool) -> String {
        let mut out = String::new();
        if timing {
            out.push_str(Self::CSV_HEADER);
        } else {
            out.push_str("iter,lambda,rmse,objective,primal_residual,inner_iters");
        }
        out.push('\n');
        for r in &self.records {
            let rmse = r.rmse.map(|v| v.to_string()).unwrap_or_default();
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                r.iter, r.lambda, rmse, r.objective, r.primal_residual, r.inner_iters
            );
            if timing {
                let _ = write!(out, ",{:.3}", r.millis);
            }
            out.push('\n');
        }
        out
    }
}

/// Poisson negative log-likelihood `−yᵀlog(Hx) + 1ᵀHx` (constant dropped) and its gradient.
#[derive(Clone, Debug)]
pub struct PoissonFidelity<'a> {
    y: &'a Image,
    op: &'a BlurOperator,
    floor: f64,
    ht_one: Image,
}

impl<'a> PoissonFidelity<'a> {
    /// `floor` is the strict lower bound required of every `(Hx)[i]`.
    pub fn new(y: &'a Image, op: &'a BlurOperator, floor: f64) -> Result<Self> {
        if y.side() != op.side() {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} observation", op.side()),
                found: format!("{0}x{0}", y.side()),
            });
        }
        if !y.is_nonnegative() {
            return Err(Error::Domain("observation has negative pixels".into()));
        }
        let ht_one = op.apply_adjoint(&Image::filled(y.side(), 1.0))?;
        Ok(Self {
            y,
            op,
            floor,
            ht_one,
        })
    }

    fn blurred(&self, x: &Image) -> Result<Image> {
        let hx = self.op.apply(x)?;
        if let Some((i, v)) = hx.data().iter().enumerate().find(|(_, v)| !(**v > self.floor)) {
            return Err(Error::Domain(format!(
                "(Hx)[{i}] = {v} is not above the positivity floor {}",
                self.floor
            )));
        }
        Ok(hx)
    }

    fn value_from_blurred(&self, hx: &Image) -> f64 {
        self.y
            .data()
            .iter()
            .zip(hx.data())
            .map(|(&y, &h)| if y == 0.0 { h } else { h - y * h.ln() })
            .sum()
    }

    pub fn objective(&self, x: &Image) -> Result<f64> {
        Ok(self.value_from_blurred(&self.blurred(x)?))
    }

    /// Objective plus `(λ/2)‖x − z + u‖²`.
    pub fn augmented_objective(&self, x: &Image, z: &Image, u: &Image, lambda: f64) -> Result<f64> {
        let quad: f64 = x
            .data()
            .iter()
            .zip(z.data())
            .zip(u.data())
            .map(|((x, z), u)| (x - z + u).powi(2))
            .sum();
        Ok(self.objective(x)? + 0.5 * lambda * quad)
    }

    /// `−Hᵀ(y/(Hx)) + Hᵀ1 + λ(x − z + u)`.
    pub fn augmented_gradient(&self, x: &Image, z: &Image, u: &Image, lambda: f64) -> Result<Image> {
        let hx = self.blurred(x)?;
        let ratio = Image::from_raw(
            hx.side(),
            self.y.data().iter().zip(hx.data()).map(|(y, h)| y / h).collect(),
        );
        let back = self.op.apply_adjoint(&ratio)?;
        let data = back
            .data()
            .iter()
            .zip(self.ht_one.data())
            .zip(x.data().iter().zip(z.data()).zip(u.data()))
            .map(|((b, one), ((x, z), u))| -b + one + lambda * (x - z + u))
            .collect();
        Ok(Image::from_raw(x.side(), data))
    }
}

/// Poisson data term with no floor beyond `Hx > 0`.
pub fn poisson_objective(x: &Image, y: &Image, op: &BlurOperator) -> Result<f64> {
    PoissonFidelity::new(y, op, 0.0)?.objective(x)
}

/// Gradient of the x-subproblem objective, requiring `Hx > 0`.
pub fn augmented_gradient(
    x: &Image,
    y: &Image,
    op: &BlurOperator,
    z: &Image,
    u: &Image,
    lambda: f64,
) -> Result<Image> {
    PoissonFidelity::new(y, op, 0.0)?.augmented_gradient(x, z, u, lambda)
}

/// Result of one x-subproblem solve.
#[derive(Clone, Debug)]
pub struct InnerSolve {
    pub x: Image,
    pub iterations: usize,
    /// Augmented objective after each accepted step (starting value first).
    pub objective_path: Vec<f64>,
}

/// Minimizes the x-subproblem from `state.x` by backtracking gradient descent.
pub fn x_update(
    state: &AdmmState,
    fidelity: &PoissonFidelity<'_>,
    config: &InnerSolverConfig,
) -> Result<InnerSolve> {
    let (z, u, lambda) = (&state.z, &state.u, state.lambda);
    let tol = config.grad_tol * state.x.side() as f64;
    let mut x = state.x.clone();
    let mut value = fidelity.augmented_objective(&x, z, u, lambda)?;
    let mut path = vec![value];
    let mut iterations = 0;
    for it in 0..config.max_iters {
        let grad = fidelity.augmented_gradient(&x, z, u, lambda)?;
        let g2 = grad.norm_sq();
        if g2.sqrt() <= tol {
            break;
        }
        let mut step = config.initial_step;
        let accepted = loop {
            let trial = x.axpy(-step, &grad);
            match fidelity.augmented_objective(&trial, z, u, lambda) {
                Ok(v) if v <= value - config.armijo * step * g2 => break Some((trial, v)),
                _ => {}
            }
            step *= config.shrink;
            if step < 1e-30 {
                break None;
            }
        };
        let Some((next, v)) = accepted else {
            return Err(Error::LineSearch {
                iteration: it,
                reason: format!("no feasible descent step (‖∇‖ = {:.3e}, λ = {lambda})", g2.sqrt()),
            });
        };
        x = next;
        value = v;
        path.push(v);
        iterations = it + 1;
    }
    Ok(InnerSolve {
        x,
        iterations,
        objective_path: path,
    })
}

/// The z-step of the loop: a denoiser or proximal map applied to `x + u`.
pub trait ZStep: Sync {
    fn apply(&self, v: &Image, lambda: f64) -> Result<Image>;
}

impl ZStep for QabDenoiser {
    fn apply(&self, v: &Image, _lambda: f64) -> Result<Image> {
        QabDenoiser::apply(self, v)
    }
}

/// Returns its input unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct PassThrough;

impl ZStep for PassThrough {
    fn apply(&self, v: &Image, _lambda: f64) -> Result<Image> {
        Ok(v.clone())
    }
}

/// Runs the outer loop with an arbitrary z-step.
pub fn run_admm(
    y: &Image,
    op: &BlurOperator,
    config: &LoopConfig,
    zstep: &dyn ZStep,
    reference: Option<&Image>,
) -> Result<(Image, AdmmTrace)> {
    let (state, trace) = run_admm_state(y, op, config, zstep, reference)?;
    finish(state, trace)
}

fn finish(state: AdmmState, mut trace: AdmmTrace) -> Result<(Image, AdmmTrace)> {
    trace.clamped_pixels = state.x.data().iter().filter(|v| **v < 0.0).count();
    Ok((state.x.map(|v| v.max(0.0)), trace))
}

/// Outer loop returning the final (unclamped) state as well.
pub fn run_admm_state(
    y: &Image,
    op: &BlurOperator,
    config: &LoopConfig,
    zstep: &dyn ZStep,
    reference: Option<&Image>,
) -> Result<(AdmmState, AdmmTrace)> {
    config.validate()?;
    if let Some(r) = reference {
        r.ensure_same_shape(y)?;
    }
    let peak = y.max();
    let eps = config.inner.floor_rel * if peak > 0.0 { peak } else { 1.0 };
    // x⁰ ≥ ε, so H x⁰ ≥ ε up to FFT rounding; the domain floor sits below it
    let fidelity = PoissonFidelity::new(y, op, 0.5 * eps)?;
    let mut state = AdmmState::initial(y, config.lambda0, eps);
    let mut trace = AdmmTrace {
        initial_rmse: reference.map(|r| rmse(r, &state.x)).transpose()?,
        ..Default::default()
    };
    for k in 0..config.outer_iters {
        let t0 = Instant::now();
        let inner = x_update(&state, &fidelity, &config.inner)?;
        let x = inner.x;
        let v = x.axpy(1.0, &state.u);
        let z = zstep.apply(&v, state.lambda)?;
        let u = state.u.axpy(1.0, &x).axpy(-1.0, &z);
        let record = IterationRecord {
            iter: k + 1,
            lambda: state.lambda,
            rmse: reference.map(|r| rmse(r, &x)).transpose()?,
            objective: fidelity.objective(&x)?,
            primal_residual: x.axpy(-1.0, &z).norm_sq().sqrt(),
            inner_iters: inner.iterations,
            millis: t0.elapsed().as_secs_f64() * 1e3,
        };
        trace.records.push(record);
        state = AdmmState {
            x,
            z,
            u,
            lambda: state.lambda * config.gamma,
            iteration: k + 1,
        };
    }
    Ok((state, trace))
}

/// Builds the QAB denoiser for observation `y` under `config`.
pub fn build_qab_denoiser(y: &Image, config: &AdmmConfig) -> Result<QabDenoiser> {
    let basis = build_basis(y, &config.hamiltonian, config.basis_scope())?;
    qab_denoiser_from_basis(basis, config)
}

/// Wraps an existing basis (complete, or holding at least the sub-cutoff part).
pub fn qab_denoiser_from_basis(basis: QuantumBasis, config: &AdmmConfig) -> Result<QabDenoiser> {
    let sparsity = count_below_energy(&basis, config.energy_cutoff);
    if sparsity == 0 {
        return Err(Error::Config(match basis.energies().first() {
            Some(e) => format!(
                "energy cutoff {} lies below the lowest eigenvalue {e}; no basis vectors selected",
                config.energy_cutoff
            ),
            None => format!("no eigenvalues lie below the energy cutoff {}", config.energy_cutoff),
        }));
    }
    let profile = config.threshold.resolve(sparsity);
    QabDenoiser::new(basis, sparsity, profile, config.mode)
}

/// QAB-PnP: builds the basis once from the smoothed observation, then runs the loop.
pub fn run_qab_pnp(
    y: &Image,
    op: &BlurOperator,
    config: &AdmmConfig,
    reference: Option<&Image>,
) -> Result<(Image, AdmmTrace)> {
    config.validate()?;
    if !y.is_nonnegative() {
        return Err(Error::Domain("observation has negative pixels".into()));
    }
    let t0 = Instant::now();
    let denoiser = build_qab_denoiser(y, config)?;
    let basis_millis = t0.elapsed().as_secs_f64() * 1e3;
    let (x, mut trace) = run_admm(y, op, &config.loop_config(), &denoiser, reference)?;
    trace.sparsity = Some(count_below_energy(denoiser.basis(), config.energy_cutoff));
    trace.basis_millis = basis_millis;
    Ok((x, trace))
}

/// QAB-PnP with a precomputed denoiser.
pub fn run_qab_pnp_with(
    y: &Image,
    op: &BlurOperator,
    config: &AdmmConfig,
    denoiser: &QabDenoiser,
    reference: Option<&Image>,
) -> Result<(Image, AdmmTrace)> {
    config.validate()?;
    let (x, mut trace) = run_admm(y, op, &config.loop_config(), denoiser, reference)?;
    trace.sparsity = Some(count_below_energy(denoiser.basis(), config.energy_cutoff));
    Ok((x, trace))
}
