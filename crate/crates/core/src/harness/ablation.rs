//! Energy-cutoff matching pursuit against projection onto the complete basis.

use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use crate::admm::run_qab_pnp;
use crate::denoise::CoefficientMode;
use crate::error::{Error, Result};
use crate::metrics::psnr;

use super::experiment::{degrade, ExperimentSpec};
use super::stats::{StreamingStats, Summary};

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub target_snr: f64,
    pub energy: f64,
    pub mode: CoefficientMode,
    /// `T` per realization (it depends on the observation).
    pub sparsity: Vec<usize>,
    pub completed: usize,
    pub psnr: Summary,
    /// Mean wall time of one restoration, basis construction included.
    pub mean_millis: f64,
    pub errors: Vec<String>,
}

pub fn mode_label(mode: CoefficientMode) -> &'static str {
    match mode {
        CoefficientMode::Omp => "cutoff-omp",
        CoefficientMode::FullProjection => "full-projection",
    }
}

/// QAB-PnP in both coefficient modes for every SNR of the spec and every cutoff.
///
/// Runs sequentially so the two modes are timed under the same load; the
/// realizations and seeds are those of [`super::run_experiment`]. The QAB
/// settings of the spec apply except for the cutoff and the mode.
pub fn run_omp_ablation(spec: &ExperimentSpec, energy_cutoffs: &[f64]) -> Result<Vec<AblationRow>> {
    spec.validate()?;
    if energy_cutoffs.is_empty() {
        return Err(Error::Config("no energy cutoffs given".into()));
    }
    let clean = spec.source.load()?;
    let op = spec.blur.operator(clean.side())?;
    let mut rows = Vec::new();
    for (si, &snr) in spec.snrs.iter().enumerate() {
        let observations: Vec<_> = (0..spec.realizations)
            .map(|r| degrade(&clean, &op, snr, spec.realization_seed(si, r)))
            .collect();
        for &energy in energy_cutoffs {
            for mode in [CoefficientMode::Omp, CoefficientMode::FullProjection] {
                let cfg = crate::admm::AdmmConfig {
                    energy_cutoff: energy,
                    mode,
                    ..spec.qab.resolve(snr)
                };
                let mut stats = StreamingStats::default();
                let mut millis = 0.0;
                let mut sparsity = Vec::new();
                let mut errors = Vec::new();
                for obs in &observations {
                    let outcome = obs.as_ref().map_err(|e| e.to_string()).and_then(|d| {
                        let t0 = Instant::now();
                        let (x, trace) = run_qab_pnp(&d.y, &op, &cfg, Some(&clean)).map_err(|e| e.to_string())?;
                        let elapsed = t0.elapsed().as_secs_f64() * 1e3;
                        let p = psnr(&clean, &x).map_err(|e| e.to_string())?;
                        Ok((p, elapsed, trace.sparsity.unwrap_or(0)))
                    });
                    match outcome {
                        Ok((p, t, s)) => {
                            stats.push(p);
                            millis += t;
                            sparsity.push(s);
                        }
                        Err(e) => errors.push(e),
                    }
                }
                let summary = stats.summary();
                rows.push(AblationRow {
                    target_snr: snr,
                    energy,
                    mode,
                    sparsity,
                    completed: summary.count,
                    psnr: summary,
                    mean_millis: if summary.count > 0 { millis / summary.count as f64 } else { 0.0 },
                    errors,
                });
            }
        }
    }
    if let Some(dir) = &spec.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("ablation.csv");
        fs::write(&path, ablation_csv(&rows)).map_err(|e| Error::io(&path, e))?;
        let path = dir.join("ablation_timing.csv");
        fs::write(&path, ablation_timing_csv(&rows)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(rows)
}

pub const ABLATION_HEADER: &str = "target_snr,energy,mode,max_sparsity,completed,psnr_mean,psnr_std";

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = format!("{ABLATION_HEADER}\n");
    for r in rows {
        let t = r.sparsity.iter().max().copied().unwrap_or(0);
        let _ = writeln!(
            out,
            "{},{},{},{t},{},{},{}",
            r.target_snr,
            r.energy,
            mode_label(r.mode),
            r.completed,
            r.psnr.mean,
            r.psnr.std
        );
    }
    out
}

pub fn ablation_timing_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("target_snr,energy,mode,mean_millis\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.3}", r.target_snr, r.energy, mode_label(r.mode), r.mean_millis);
    }
    out
}
