//! Degrade, restore and score over seeded noise realizations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::admm::{run_qab_pnp, AdmmConfig, AdmmTrace, InnerSolverConfig};
use crate::basis::HamiltonianParams;
use crate::blur::{gaussian_psf, BlurOperator};
use crate::denoise::{CoefficientMode, ProfileRule};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io;
use crate::metrics::MetricReport;
use crate::noise::{calibrate_peak, derive_seed, measured_snr};
use crate::par::{self, Execution};
use crate::tv::{run_tv_admm, TvConfig};

use super::stats::{StreamingStats, Summary};
use super::synthetic::{make_synthetic, SyntheticKind};
use super::tune::{tune_qab, tune_tv, GridPoint};

#[derive(Clone, Debug, PartialEq)]
pub enum ImageSource {
    File(PathBuf),
    Synthetic { kind: SyntheticKind, n: usize, seed: u64 },
}

impl ImageSource {
    pub fn load(&self) -> Result<Image> {
        match self {
            ImageSource::File(path) => io::load(path),
            ImageSource::Synthetic { kind, n, seed } => make_synthetic(*kind, *n, *seed),
        }
    }

    pub fn sample_id(&self) -> String {
        match self {
            ImageSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into()),
            ImageSource::Synthetic { kind, n, seed } => {
                let k = match kind {
                    SyntheticKind::Piecewise => "piecewise",
                    SyntheticKind::Textured => "textured",
                };
                format!("synthetic-{k}-{n}-s{seed}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlurSpec {
    pub size: usize,
    pub sigma: f64,
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self { size: 4, sigma: 3.0 }
    }
}

impl BlurSpec {
    pub fn operator(&self, n: usize) -> Result<BlurOperator> {
        BlurOperator::new(gaussian_psf(self.size, self.sigma)?, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Qab,
    Tv,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Qab => "qab-pnp",
            Method::Tv => "tv-admm",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qab" | "qab-pnp" => Ok(Method::Qab),
            "tv" | "tv-admm" => Ok(Method::Tv),
            other => Err(Error::Config(format!("unknown method {other:?} (expected qab or tv)"))),
        }
    }
}

/// Per-SNR hyperparameters from the published experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaptionDefaults {
    pub snr: f64,
    pub energy: f64,
    pub lambda0: f64,
    pub planck: f64,
}

pub const CAPTION_DEFAULTS: [CaptionDefaults; 3] = [
    CaptionDefaults { snr: 10.0, energy: 3.9, lambda0: 1.5, planck: 4.0 },
    CaptionDefaults { snr: 15.0, energy: 4.1, lambda0: 1.3, planck: 4.0 },
    CaptionDefaults { snr: 20.0, energy: 4.5, lambda0: 3.15, planck: 4.3 },
];

/// Entry with the nearest SNR; ties go to the lower one.
pub fn caption_defaults(snr: f64) -> CaptionDefaults {
    let mut best = CAPTION_DEFAULTS[0];
    for c in &CAPTION_DEFAULTS[1..] {
        if (c.snr - snr).abs() < (best.snr - snr).abs() {
            best = *c;
        }
    }
    best
}

pub const DEFAULT_GAMMA: f64 = 1.05;
pub const DEFAULT_ITERS: usize = 30;
pub const DEFAULT_SIGMA_QAB: f64 = 1.0;
pub const DEFAULT_REALIZATIONS: usize = 20;

/// QAB-PnP settings; unset fields follow [`caption_defaults`] (or the grid when tuning).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QabSettings {
    pub energy: Option<f64>,
    pub lambda0: Option<f64>,
    pub gamma: Option<f64>,
    pub planck: Option<f64>,
    pub sigma_qab: Option<f64>,
    pub profile: Option<ProfileRule>,
    pub iters: Option<usize>,
    pub no_omp: bool,
}

impl QabSettings {
    pub fn resolve(&self, snr: f64) -> AdmmConfig {
        let d = caption_defaults(snr);
        AdmmConfig {
            lambda0: self.lambda0.unwrap_or(d.lambda0),
            gamma: self.gamma.unwrap_or(DEFAULT_GAMMA),
            outer_iters: self.iters.unwrap_or(DEFAULT_ITERS),
            energy_cutoff: self.energy.unwrap_or(d.energy),
            hamiltonian: HamiltonianParams {
                planck_factor: self.planck.unwrap_or(d.planck),
                sigma_qab: self.sigma_qab.unwrap_or(DEFAULT_SIGMA_QAB),
            },
            threshold: self.profile.unwrap_or_default(),
            inner: InnerSolverConfig::default(),
            mode: if self.no_omp {
                CoefficientMode::FullProjection
            } else {
                CoefficientMode::Omp
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TvSettings {
    pub tv_weight: Option<f64>,
    pub lambda0: Option<f64>,
    pub gamma: Option<f64>,
    pub iters: Option<usize>,
}

impl TvSettings {
    pub fn resolve(&self) -> TvConfig {
        let d = TvConfig::default();
        TvConfig {
            lambda0: self.lambda0.unwrap_or(d.lambda0),
            gamma: self.gamma.unwrap_or(DEFAULT_GAMMA),
            outer_iters: self.iters.unwrap_or(DEFAULT_ITERS),
            tv_weight: self.tv_weight.unwrap_or(d.tv_weight),
            ..d
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub source: ImageSource,
    pub blur: BlurSpec,
    pub snrs: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub qab: QabSettings,
    pub tv: TvSettings,
    /// Grid-search unset hyperparameters on a held-out realization per SNR.
    pub tune: bool,
    pub execution: Execution,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    /// 64×64 piecewise synthetic, both methods, 20 realizations per SNR.
    pub fn synthetic(snrs: Vec<f64>, seed: u64) -> Self {
        Self {
            source: ImageSource::Synthetic {
                kind: SyntheticKind::Piecewise,
                n: 64,
                seed,
            },
            blur: BlurSpec::default(),
            snrs,
            realizations: DEFAULT_REALIZATIONS,
            seed,
            methods: vec![Method::Qab, Method::Tv],
            qab: QabSettings::default(),
            tv: TvSettings::default(),
            tune: false,
            execution: Execution::default(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.snrs.is_empty() {
            return Err(Error::Config("the SNR list is empty".into()));
        }
        if let Some(s) = self.snrs.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("SNR {s} is not finite")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        for &snr in &self.snrs {
            self.qab.resolve(snr).validate()?;
        }
        self.tv.resolve().loop_config().validate()?;
        if !(self.blur.sigma > 0.0 && self.blur.size > 0) {
            return Err(Error::Config("blur needs a positive size and sigma".into()));
        }
        Ok(())
    }

    /// Noise seed of realization `r` at SNR index `snr_index`.
    pub fn realization_seed(&self, snr_index: usize, r: usize) -> u64 {
        derive_seed(derive_seed(self.seed, snr_index as u64), r as u64)
    }

    /// Noise seed of the realization used for tuning; never one of the scored ones.
    pub fn tuning_seed(&self, snr_index: usize) -> u64 {
        derive_seed(derive_seed(self.seed, snr_index as u64), u64::MAX)
    }
}

/// A blurred, Poisson-degraded observation in the units of the clean image.
#[derive(Clone, Debug)]
pub struct Degraded {
    pub y: Image,
    pub scale: f64,
    pub measured_snr: f64,
}

pub fn degrade(clean: &Image, op: &BlurOperator, snr: f64, seed: u64) -> Result<Degraded> {
    let model = calibrate_peak(clean, op, snr, seed)?;
    let y = model.observe(clean, op)?;
    let measured = measured_snr(&op.apply(clean)?, &y)?;
    Ok(Degraded {
        y,
        scale: model.scale,
        measured_snr: measured,
    })
}

/// Hyperparameters actually used at one SNR.
#[derive(Clone, Debug)]
pub struct MethodConfigs {
    pub qab: AdmmConfig,
    pub tv: TvConfig,
}

/// One method on one realization.
#[derive(Clone, Debug)]
pub struct MethodRun {
    pub metrics: MetricReport,
    pub trace: AdmmTrace,
    pub millis: f64,
    pub restored: Image,
}

pub fn run_method(
    method: Method,
    configs: &MethodConfigs,
    y: &Image,
    op: &BlurOperator,
    clean: &Image,
) -> Result<MethodRun> {
    let t0 = Instant::now();
    let (x, trace) = match method {
        Method::Qab => run_qab_pnp(y, op, &configs.qab, Some(clean))?,
        Method::Tv => run_tv_admm(y, op, &configs.tv, Some(clean))?,
    };
    let millis = t0.elapsed().as_secs_f64() * 1e3;
    Ok(MethodRun {
        metrics: MetricReport::compute(clean, &x)?,
        trace,
        millis,
        restored: x,
    })
}

/// Everything recorded for one (SNR, realization) cell.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub snr: f64,
    pub realization: usize,
    pub seed: u64,
    /// Degradation outcome; an error here fails every method of the cell.
    pub observation: std::result::Result<(Degraded, MetricReport), String>,
    pub methods: Vec<(Method, std::result::Result<MethodRun, String>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub sample: String,
    /// Method label, or `observed` for the degraded input.
    pub method: String,
    pub target_snr: f64,
    pub requested: usize,
    pub completed: usize,
    pub psnr: Summary,
    pub ssim: Summary,
    pub mean_millis: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub sample: String,
    pub rows: Vec<ResultRow>,
    pub runs: Vec<RunRecord>,
    pub configs: Vec<(f64, MethodConfigs)>,
    pub tuning: Vec<GridPoint>,
}

impl ExperimentReport {
    pub fn row(&self, method: &str, snr: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.target_snr == snr)
    }
}

/// Configs for one SNR: resolved defaults, or a grid search on the tuning realization.
pub fn configs_for(
    spec: &ExperimentSpec,
    snr_index: usize,
    clean: &Image,
    op: &BlurOperator,
) -> Result<(MethodConfigs, Vec<GridPoint>)> {
    let snr = spec.snrs[snr_index];
    let mut configs = MethodConfigs {
        qab: spec.qab.resolve(snr),
        tv: spec.tv.resolve(),
    };
    let mut points = Vec::new();
    if !spec.tune {
        return Ok((configs, points));
    }
    let tuning = degrade(clean, op, snr, spec.tuning_seed(snr_index))?;
    if spec.methods.contains(&Method::Qab) {
        let (cfg, p) = tune_qab(clean, &tuning.y, op, &spec.qab, snr)?;
        configs.qab = cfg;
        points.extend(p);
    }
    if spec.methods.contains(&Method::Tv) {
        let (cfg, p) = tune_tv(clean, &tuning.y, op, &spec.tv, snr)?;
        configs.tv = cfg;
        points.extend(p);
    }
    Ok((configs, points))
}

fn run_cell(
    spec: &ExperimentSpec,
    snr_index: usize,
    r: usize,
    clean: &Image,
    op: &BlurOperator,
    configs: &MethodConfigs,
) -> RunRecord {
    let snr = spec.snrs[snr_index];
    let seed = spec.realization_seed(snr_index, r);
    let observation = degrade(clean, op, snr, seed)
        .and_then(|d| {
            let m = MetricReport::compute(clean, &d.y)?;
            Ok((d, m))
        })
        .map_err(|e| e.to_string());
    let methods = spec
        .methods
        .iter()
        .map(|&m| {
            let run = match &observation {
                Ok((d, _)) => run_method(m, configs, &d.y, op, clean).map_err(|e| e.to_string()),
                Err(e) => Err(format!("degradation failed: {e}")),
            };
            (m, run)
        })
        .collect();
    RunRecord {
        snr,
        realization: r,
        seed,
        observation,
        methods,
    }
}

fn aggregate(sample: &str, method: &str, snr: f64, requested: usize, metrics: &[(MetricReport, f64)]) -> ResultRow {
    let psnr: StreamingStats = metrics.iter().map(|(m, _)| m.psnr).collect();
    let ssim: StreamingStats = metrics.iter().map(|(m, _)| m.ssim).collect();
    let mean_millis = if metrics.is_empty() {
        0.0
    } else {
        metrics.iter().map(|(_, t)| t).sum::<f64>() / metrics.len() as f64
    };
    ResultRow {
        sample: sample.to_string(),
        method: method.to_string(),
        target_snr: snr,
        requested,
        completed: metrics.len(),
        psnr: psnr.summary(),
        ssim: ssim.summary(),
        mean_millis,
    }
}

/// Runs every (SNR, realization) cell, aggregates and optionally writes CSVs.
///
/// Realizations of one SNR run through [`par::map_range`] with the spec's
/// execution mode; each derives its own seed, so results do not depend on
/// scheduling. Per-cell failures are recorded, not propagated.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let clean = spec.source.load()?;
    let op = spec.blur.operator(clean.side())?;
    let sample = spec.source.sample_id();
    let mut report = ExperimentReport {
        sample: sample.clone(),
        rows: Vec::new(),
        runs: Vec::new(),
        configs: Vec::new(),
        tuning: Vec::new(),
    };
    for (si, &snr) in spec.snrs.iter().enumerate() {
        let (configs, points) = configs_for(spec, si, &clean, &op)?;
        let cells = par::map_range(spec.realizations, spec.execution, |r| {
            run_cell(spec, si, r, &clean, &op, &configs)
        });

        let observed: Vec<(MetricReport, f64)> = cells
            .iter()
            .filter_map(|c| c.observation.as_ref().ok().map(|(_, m)| (*m, 0.0)))
            .collect();
        report
            .rows
            .push(aggregate(&sample, "observed", snr, spec.realizations, &observed));
        for &m in &spec.methods {
            let ok: Vec<(MetricReport, f64)> = cells
                .iter()
                .flat_map(|c| c.methods.iter())
                .filter(|(mm, _)| *mm == m)
                .filter_map(|(_, run)| run.as_ref().ok().map(|r| (r.metrics, r.millis)))
                .collect();
            report.rows.push(aggregate(&sample, m.label(), snr, spec.realizations, &ok));
        }
        report.configs.push((snr, configs));
        report.tuning.extend(points);
        report.runs.extend(cells);
    }
    if let Some(dir) = &spec.out_dir {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

pub const RESULTS_HEADER: &str =
    "sample,method,target_snr,requested,completed,psnr_mean,psnr_std,ssim_mean,ssim_std";
pub const TIMING_HEADER: &str = "sample,method,target_snr,mean_millis";
pub const RUNS_HEADER: &str =
    "sample,method,target_snr,realization,seed,scale,measured_snr,psnr,ssim,rmse,sparsity,clamped_pixels,status";

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.sample, r.method, r.target_snr, r.requested, r.completed, r.psnr.mean, r.psnr.std, r.ssim.mean, r.ssim.std
        );
    }
    out
}

pub fn timing_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{TIMING_HEADER}\n");
    for r in rows.iter().filter(|r| r.method != "observed") {
        let _ = writeln!(out, "{},{},{},{:.3}", r.sample, r.method, r.target_snr, r.mean_millis);
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// One line per (cell, method) plus one for each observation.
pub fn runs_csv(sample: &str, runs: &[RunRecord]) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for c in runs {
        let (scale, msnr) = match &c.observation {
            Ok((d, _)) => (d.scale.to_string(), d.measured_snr.to_string()),
            Err(_) => (String::new(), String::new()),
        };
        let prefix = |method: &str| {
            format!(
                "{sample},{method},{},{},{},{scale},{msnr}",
                c.snr, c.realization, c.seed
            )
        };
        match &c.observation {
            Ok((_, m)) => {
                let _ = writeln!(out, "{},{},{},{},,,ok", prefix("observed"), m.psnr, m.ssim, m.rmse);
            }
            Err(e) => {
                let _ = writeln!(out, "{},,,,,,{}", prefix("observed"), csv_field(&format!("error: {e}")));
            }
        }
        for (m, run) in &c.methods {
            match run {
                Ok(r) => {
                    let sparsity = r.trace.sparsity.map(|t| t.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{sparsity},{},ok",
                        prefix(m.label()),
                        r.metrics.psnr,
                        r.metrics.ssim,
                        r.metrics.rmse,
                        r.trace.clamped_pixels
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{},,,,,,{}", prefix(m.label()), csv_field(&format!("error: {e}")));
                }
            }
        }
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `<method>_snr<snr>_r<realization>`
pub fn run_name(method: Method, snr: f64, realization: usize) -> String {
    format!("{}_snr{snr}_r{realization}", method.label())
}

/// `results.csv`, `runs.csv`, `timing.csv`, `tuning.csv` (when tuned),
/// `traces/trace_<run>.csv`, and the first realization's restorations as PGM.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let traces = dir.join("traces");
    fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
    write_text(&dir.join("results.csv"), &results_csv(&report.rows))?;
    write_text(&dir.join("timing.csv"), &timing_csv(&report.rows))?;
    write_text(&dir.join("runs.csv"), &runs_csv(&report.sample, &report.runs))?;
    if !report.tuning.is_empty() {
        write_text(&dir.join("tuning.csv"), &super::tune::tuning_csv(&report.tuning))?;
    }
    for c in &report.runs {
        for (m, run) in &c.methods {
            let Ok(r) = run else { continue };
            let name = run_name(*m, c.snr, c.realization);
            write_text(&traces.join(format!("trace_{name}.csv")), &r.trace.to_csv_with(false))?;
            if c.realization == 0 {
                io::save(&r.restored, &dir.join(format!("restored_{name}.pgm")))?;
            }
        }
    }
    Ok(())
}
