//! Square grayscale images stored as lexicographic (row-major) vectors.

use crate::error::{Error, Result};

/// Row-major index of pixel `(row, col)` on an `n`×`n` grid.
pub fn pixel_index(row: usize, col: usize, n: usize) -> Result<usize> {
    if row >= n || col >= n {
        return Err(Error::IndexOutOfRange { row, col, n });
    }
    Ok(row * n + col)
}

/// A square image with finite `f64` intensities.
///
/// Every vector-valued quantity of the restoration problem (observation,
/// iterates, dual variable, basis vectors) lives in this layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    side: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidImage("side length must be positive".into()));
        }
        if data.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", side * side),
                found: format!("{} pixels", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite intensity at index {pos}"
            )));
        }
        Ok(Self { side, data })
    }

    /// Builds an image from `width`×`height` data, rejecting non-square shapes.
    pub fn from_shape(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width != height {
            return Err(Error::InvalidImage(format!(
                "images must be square, got {width}x{height}"
            )));
        }
        Self::new(width, data)
    }

    pub fn filled(side: usize, value: f64) -> Self {
        assert!(side > 0 && value.is_finite());
        Self {
            side,
            data: vec![value; side * side],
        }
    }

    pub fn zeros(side: usize) -> Self {
        Self::filled(side, 0.0)
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                data.push(f(r, c));
            }
        }
        Self::new(side, data)
    }

    /// Wraps data produced by internal arithmetic; finiteness is only debug-checked.
    pub(crate) fn from_raw(side: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), side * side);
        debug_assert!(data.iter().all(|v| v.is_finite()), "non-finite pixel");
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn width(&self) -> usize {
        self.side
    }

    pub fn height(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.side + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Image) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(self.side, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Image {
        self.map(|v| v * factor)
    }

    /// Pixelwise `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Image) -> Image {
        debug_assert_eq!(self.side, other.side);
        Image::from_raw(
            self.side,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    pub fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.side != other.side {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0}", self.side),
                found: format!("{0}x{0}", other.side),
            });
        }
        Ok(())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }
}

impl std::ops::Index<usize> for Image {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}
