//! Small grid searches scored by PSNR on a held-out realization.

use std::fmt::Write as _;

use crate::admm::{qab_denoiser_from_basis, run_qab_pnp_with, AdmmConfig};
use crate::basis::build_basis;
use crate::blur::BlurOperator;
use crate::denoise::ProfileRule;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::psnr;
use crate::tv::{run_tv_admm, TvConfig};

use super::experiment::{caption_defaults, Method, QabSettings, TvSettings};

/// Offsets added to the default energy cutoff.
pub const ENERGY_OFFSETS: [f64; 3] = [0.0, 2.0, 4.0];
pub const QAB_LAMBDAS: [f64; 4] = [0.3, 1.0, 3.0, 10.0];
pub const QAB_PROFILES: [ProfileRule; 2] = [ProfileRule::Half, ProfileRule::Hard];
pub const TV_WEIGHTS: [f64; 6] = [0.02, 0.03, 0.05, 0.08, 0.12, 0.2];
pub const TV_LAMBDAS: [f64; 3] = [0.3, 1.0, 3.0];

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub method: Method,
    pub snr: f64,
    pub params: String,
    /// `None` when the candidate failed.
    pub psnr: Option<f64>,
    pub chosen: bool,
}

fn unique(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Marks and returns the best candidate; the first wins ties.
fn pick<C: Clone>(points: &mut [GridPoint], candidates: &[C]) -> Result<C> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(v) = p.psnr {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (i, _) = best.ok_or_else(|| Error::Config("every grid candidate failed".into()))?;
    points[i].chosen = true;
    Ok(candidates[i].clone())
}

/// Searches the energy cutoff, `λ₀` and taper rule of QAB-PnP, leaving
/// explicitly set fields alone. One basis is built per cutoff.
pub fn tune_qab(
    clean: &Image,
    y: &Image,
    op: &BlurOperator,
    settings: &QabSettings,
    snr: f64,
) -> Result<(AdmmConfig, Vec<GridPoint>)> {
    let base = settings.resolve(snr);
    let d = caption_defaults(snr);
    let energies = match settings.energy {
        Some(e) => vec![e],
        None => ENERGY_OFFSETS.iter().map(|o| d.energy + o).collect(),
    };
    let lambdas = match settings.lambda0 {
        Some(l) => vec![l],
        None => unique(std::iter::once(d.lambda0).chain(QAB_LAMBDAS)),
    };
    let profiles = match settings.profile {
        Some(p) => vec![p],
        None => QAB_PROFILES.to_vec(),
    };

    let mut candidates = Vec::new();
    let mut points = Vec::new();
    for &energy in &energies {
        let scoped = AdmmConfig {
            energy_cutoff: energy,
            ..base
        };
        let basis = build_basis(y, &scoped.hamiltonian, scoped.basis_scope());
        for &profile in &profiles {
            for &lambda0 in &lambdas {
                let cfg = AdmmConfig {
                    lambda0,
                    threshold: profile,
                    ..scoped
                };
                let score = basis
                    .as_ref()
                    .map_err(|e| Error::Config(e.to_string()))
                    .and_then(|b| qab_denoiser_from_basis(b.clone(), &cfg))
                    .and_then(|den| run_qab_pnp_with(y, op, &cfg, &den, Some(clean)))
                    .and_then(|(x, _)| psnr(clean, &x))
                    .ok();
                points.push(GridPoint {
                    method: Method::Qab,
                    snr,
                    params: format!("energy={energy};lambda0={lambda0};profile={}", profile.label()),
                    psnr: score,
                    chosen: false,
                });
                candidates.push(cfg);
            }
        }
    }
    let cfg = pick(&mut points, &candidates)?;
    Ok((cfg, points))
}

/// Searches the TV weight and `λ₀`, leaving explicitly set fields alone.
pub fn tune_tv(
    clean: &Image,
    y: &Image,
    op: &BlurOperator,
    settings: &TvSettings,
    snr: f64,
) -> Result<(TvConfig, Vec<GridPoint>)> {
    let base = settings.resolve();
    let weights = settings.tv_weight.map_or(TV_WEIGHTS.to_vec(), |w| vec![w]);
    let lambdas = settings.lambda0.map_or(TV_LAMBDAS.to_vec(), |l| vec![l]);
    let mut candidates = Vec::new();
    let mut points = Vec::new();
    for &tv_weight in &weights {
        for &lambda0 in &lambdas {
            let cfg = TvConfig {
                tv_weight,
                lambda0,
                ..base
            };
            let score = run_tv_admm(y, op, &cfg, Some(clean))
                .and_then(|(x, _)| psnr(clean, &x))
                .ok();
            points.push(GridPoint {
                method: Method::Tv,
                snr,
                params: format!("tv_weight={tv_weight};lambda0={lambda0}"),
                psnr: score,
                chosen: false,
            });
            candidates.push(cfg);
        }
    }
    let cfg = pick(&mut points, &candidates)?;
    Ok((cfg, points))
}

pub const TUNING_HEADER: &str = "method,target_snr,params,psnr,chosen";

pub fn tuning_csv(points: &[GridPoint]) -> String {
    let mut out = format!("{TUNING_HEADER}\n");
    for p in points {
        let score = p.psnr.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{score},{}", p.method.label(), p.snr, p.params, p.chosen);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(psnr: Option<f64>) -> GridPoint {
        GridPoint {
            method: Method::Tv,
            snr: 15.0,
            params: String::new(),
            psnr,
            chosen: false,
        }
    }

    #[test]
    fn pick_prefers_first_best() {
        let mut pts = vec![point(Some(20.0)), point(None), point(Some(21.0)), point(Some(21.0))];
        assert_eq!(pick(&mut pts, &[0, 1, 2, 3]).unwrap(), 2);
        assert_eq!(pts.iter().filter(|p| p.chosen).count(), 1);
        assert!(pts[2].chosen);
        let mut none = vec![point(None)];
        assert!(pick(&mut none, &[0]).is_err());
    }

    #[test]
    fn unique_keeps_order() {
        assert_eq!(unique([1.3, 0.3, 1.0, 1.3, 3.0]), vec![1.3, 0.3, 1.0, 3.0]);
    }
}
