//! Poisson deconvolution with a quantum adaptive basis denoiser inside
//! plug-and-play ADMM, plus a TV baseline and an experiment harness.

pub mod admm;
pub mod basis;
pub mod blur;
pub mod denoise;
pub mod error;
pub mod harness;
pub mod image;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod par;
pub mod spectral;
pub mod tv;

pub use error::{Error, Result};
pub use image::Image;
