//! Deterministic synthetic test images.

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::noise::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Rectangles and disks of distinct intensities on a graded background.
    Piecewise,
    /// The piecewise scene with a low-amplitude sinusoidal texture inside the shapes.
    Textured,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "piecewise" => Ok(Self::Piecewise),
            "textured" => Ok(Self::Textured),
            other => Err(Error::param("kind", format!("unknown synthetic kind {other:?}"))),
        }
    }
}

pub const MIN_SIDE: usize = 16;

const LEVELS: [f64; 4] = [0.55, 0.75, 0.9, 1.0];

enum Shape {
    Rect { r0: f64, c0: f64, r1: f64, c1: f64 },
    Disk { r: f64, c: f64, radius: f64 },
}

impl Shape {
    fn contains(&self, r: f64, c: f64) -> bool {
        match *self {
            Shape::Rect { r0, c0, r1, c1 } => r >= r0 && r < r1 && c >= c0 && c < c1,
            Shape::Disk { r: cr, c: cc, radius } => (r - cr).powi(2) + (c - cc).powi(2) <= radius * radius,
        }
    }
}

/// `n×n` image in `[0, 1]`; identical for identical `(kind, n, seed)`.
pub fn make_synthetic(kind: SyntheticKind, n: usize, seed: u64) -> Result<Image> {
    if n < MIN_SIDE {
        return Err(Error::param("n", format!("synthetic images need n >= {MIN_SIDE}, got {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let nf = n as f64;
    // one shape per quadrant keeps them apart
    let mut shapes = Vec::new();
    for q in 0..4 {
        let (qr, qc) = ((q / 2) as f64 * nf / 2.0, (q % 2) as f64 * nf / 2.0);
        let half = nf / 2.0;
        let level = LEVELS[q];
        let shape = if q % 2 == 0 {
            let h = half * rng.random_range(0.45..0.7);
            let w = half * rng.random_range(0.45..0.7);
            let r0 = qr + rng.random_range(0.1..0.9) * (half - h);
            let c0 = qc + rng.random_range(0.1..0.9) * (half - w);
            Shape::Rect { r0, c0, r1: r0 + h, c1: c0 + w }
        } else {
            let radius = half * rng.random_range(0.22..0.35);
            let r = qr + half / 2.0 + rng.random_range(-0.1..0.1) * half;
            let c = qc + half / 2.0 + rng.random_range(-0.1..0.1) * half;
            Shape::Disk { r, c, radius }
        };
        shapes.push((shape, level));
    }
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Image::from_fn(n, |r, c| {
        let (rf, cf) = (r as f64 + 0.5, c as f64 + 0.5);
        let background = 0.1 + 0.25 * (rf + cf) / (2.0 * nf);
        let mut v = background;
        for (shape, level) in &shapes {
            if shape.contains(rf, cf) {
                v = *level;
                if kind == SyntheticKind::Textured {
                    v -= 0.08 * (0.5 + 0.5 * (0.9 * rf + 0.6 * cf + phase).sin());
                }
            }
        }
        v.clamp(0.0, 1.0)
    })
}
