//! Quantum adaptive basis: eigenvectors of a discrete Schrödinger operator
//! whose potential is a (smoothed) image.
//!
//! The operator is the 5-point negative Laplacian scaled by the
//! `planck_factor` (ħ²/2m) plus the image as a diagonal potential, with
//! zero-padding outside the grid. Horizontal couplings never wrap across
//! row ends. Eigenpairs come back in ascending energy order with unit
//! norm, and each vector's first component above `1e-12` in magnitude is
//! made positive.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::par;
use crate::spectral;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianParams {
    /// The ħ²/2m hyperparameter: strength of the kinetic (Laplacian) term.
    pub planck_factor: f64,
    /// Standard deviation in pixels of the Gaussian pre-smoothing of the guide; 0 disables it.
    pub sigma_qab: f64,
}

impl HamiltonianParams {
    pub fn new(planck_factor: f64, sigma_qab: f64) -> Result<Self> {
        let p = Self {
            planck_factor,
            sigma_qab,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.planck_factor > 0.0) || !self.planck_factor.is_finite() {
            return Err(Error::param("planck", "ħ²/2m must be positive and finite"));
        }
        if !(self.sigma_qab >= 0.0) || !self.sigma_qab.is_finite() {
            return Err(Error::param("sigma-qab", "must be nonnegative and finite"));
        }
        Ok(())
    }
}

/// Maps any integer offset onto `0..n` by half-sample symmetric reflection.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Gaussian low-pass of the guide image used to build the basis.
///
/// Separable kernel truncated at radius `ceil(3σ)`, normalized, with
/// symmetric reflection at the borders (so constants are preserved).
pub fn smooth_guide(image: &Image, sigma_qab: f64) -> Result<Image> {
    if !(sigma_qab >= 0.0) || !sigma_qab.is_finite() {
        return Err(Error::param("sigma-qab", "must be nonnegative and finite"));
    }
    if sigma_qab == 0.0 {
        return Ok(image.clone());
    }
    let radius = (3.0 * sigma_qab).ceil().max(1.0) as isize;
    let taps = crate::metrics::gaussian_taps((2 * radius + 1) as usize, sigma_qab);
    let n = image.side();
    let src = image.data();
    let mut rows = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            rows[r * n + c] = taps
                .iter()
                .enumerate()
                .map(|(t, w)| w * src[r * n + reflect(c as isize + t as isize - radius, n)])
                .sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = taps
                .iter()
                .enumerate()
                .map(|(t, w)| w * rows[reflect(r as isize + t as isize - radius, n) * n + c])
                .sum();
        }
    }
    Ok(Image::from_raw(n, out))
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn nnz_in_row(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).map(|(j, a)| a * v[j]).sum())
            .collect()
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> SymmetricMatrix {
        let mut data = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                data[i * self.dim + j] = v;
            }
        }
        SymmetricMatrix {
            dim: self.dim,
            data,
        }
    }
}

/// Discrete Hamiltonian for the `potential` image.
///
/// Diagonal `V[i] + 4·ħ²/2m`; `−ħ²/2m` between grid neighbours (left/right
/// within a row, up/down between rows); zero elsewhere.
pub fn assemble_hamiltonian(potential: &Image, params: &HamiltonianParams) -> Result<SparseMatrix> {
    params.validate()?;
    let n = potential.side();
    let dim = n * n;
    let h = params.planck_factor;
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(5 * dim);
    let mut values = Vec::with_capacity(5 * dim);
    row_ptr.push(0);
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            if r > 0 {
                cols.push(i - n);
                values.push(-h);
            }
            if c > 0 {
                cols.push(i - 1);
                values.push(-h);
            }
            cols.push(i);
            values.push(potential[i] + 4.0 * h);
            if c + 1 < n {
                cols.push(i + 1);
                values.push(-h);
            }
            if r + 1 < n {
                cols.push(i + n);
                values.push(-h);
            }
            row_ptr.push(cols.len());
        }
    }
    Ok(SparseMatrix {
        dim,
        row_ptr,
        cols,
        values,
    })
}

/// Dense symmetric matrix (row-major, which equals column-major here).
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds from row-major data; rejects asymmetric input.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", dim * dim),
                found: format!("{} entries", data.len()),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::Domain(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in values.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Which eigenpairs to compute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisScope {
    /// All `dim` eigenpairs.
    Full,
    /// Only eigenpairs with energy strictly below the cutoff.
    BelowEnergy(f64),
}

/// Orthonormal eigenvectors with their energies, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumBasis {
    dim: usize,
    energies: Vec<f64>,
    /// Eigenvector `i` occupies `vectors[i*dim..(i+1)*dim]`.
    vectors: Vec<f64>,
}

impl QuantumBasis {
    fn from_parts(dim: usize, energies: Vec<f64>, vectors: Vec<f64>) -> Self {
        debug_assert_eq!(vectors.len(), energies.len() * dim);
        Self {
            dim,
            energies,
            vectors,
        }
    }

    /// Wraps arbitrary atoms (not necessarily orthonormal) as a dictionary.
    /// `energies` must be ascending and match the number of vectors.
    pub fn from_columns(dim: usize, energies: Vec<f64>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if energies.len() != vectors.len() || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: format!("{} vectors of length {dim}", energies.len()),
                found: format!("{} vectors", vectors.len()),
            });
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("energies", "must be ascending"));
        }
        Ok(Self::from_parts(dim, energies, vectors.concat()))
    }

    /// Length of each basis vector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of eigenpairs held.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// True when every eigenpair of the operator is present.
    pub fn is_complete(&self) -> bool {
        self.len() == self.dim
    }

    /// Side length of the image grid (`dim = side²`), when square.
    pub fn side(&self) -> Option<usize> {
        let s = (self.dim as f64).sqrt().round() as usize;
        (s * s == self.dim).then_some(s)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    /// Eigenvector of rank `i` (0-based, ascending energy).
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim)
    }

    /// The first `count` eigenpairs.
    pub fn truncated(&self, count: usize) -> QuantumBasis {
        let count = count.min(self.len());
        Self::from_parts(
            self.dim,
            self.energies[..count].to_vec(),
            self.vectors[..count * self.dim].to_vec(),
        )
    }

    /// `⟨v, ψ_i⟩` for every held vector.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        par::map_range(self.len(), par::auto(self.len() * self.dim), |i| {
            dot(self.vector(i), v)
        })
    }

    /// `Σ coeffs[i]·ψ_i` over the first `coeffs.len()` vectors.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        assert!(coeffs.len() <= self.len());
        let mut out = vec![0.0; self.dim];
        for (i, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                for (o, p) in out.iter_mut().zip(self.vector(i)) {
                    *o += a * p;
                }
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `T = #{i : E_i < cutoff}`.
pub fn count_below_energy(basis: &QuantumBasis, energy_cutoff: f64) -> usize {
    basis.energies().partition_point(|&e| e < energy_cutoff)
}

/// Full symmetric eigendecomposition.
pub fn eigendecompose(matrix: &SymmetricMatrix) -> Result<QuantumBasis> {
    finish(matrix.dim(), spectral::dense_eigen(matrix.dim(), matrix.as_slice())?)
}

/// Eigenpairs with energy strictly below `cutoff`, taken from the full dense decomposition.
pub fn eigendecompose_below(matrix: &SymmetricMatrix, cutoff: f64) -> Result<QuantumBasis> {
    if !cutoff.is_finite() {
        return Err(Error::param("energy", "cutoff must be finite"));
    }
    let basis = eigendecompose(matrix)?;
    Ok(basis.truncated(count_below_energy(&basis, cutoff)))
}

/// Eigenpairs of a sparse operator below `cutoff` by filtered subspace iteration.
///
/// `bounds` must enclose the spectrum.
pub fn eigendecompose_sparse_below(matrix: &SparseMatrix, cutoff: f64, bounds: (f64, f64)) -> Result<QuantumBasis> {
    if !cutoff.is_finite() {
        return Err(Error::param("energy", "cutoff must be finite"));
    }
    finish(matrix.dim(), spectral::lowest_below(matrix, cutoff, bounds)?)
}

fn finish(dim: usize, pairs: spectral::Eigenpairs) -> Result<QuantumBasis> {
    let spectral::Eigenpairs { values, mut vectors } = pairs;
    if values.iter().any(|e| !e.is_finite()) || vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenpair".into()));
    }
    for vec in vectors.chunks_exact_mut(dim.max(1)) {
        if let Some(first) = vec.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                vec.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    Ok(QuantumBasis::from_parts(dim, values, vectors))
}

/// Smooths `guide`, assembles its Hamiltonian and eigendecomposes it.
///
/// Fails if any energy falls outside the Gershgorin interval
/// `[min V, max V + 8·ħ²/2m]`.
pub fn build_basis(guide: &Image, params: &HamiltonianParams, scope: BasisScope) -> Result<QuantumBasis> {
    params.validate()?;
    let potential = smooth_guide(guide, params.sigma_qab)?;
    let hamiltonian = assemble_hamiltonian(&potential, params)?;
    let lo = potential.min();
    let hi = potential.max() + 8.0 * params.planck_factor;
    let basis = match scope {
        BasisScope::Full => eigendecompose(&hamiltonian.to_dense())?,
        BasisScope::BelowEnergy(cut) => eigendecompose_sparse_below(&hamiltonian, cut, (lo, hi))?,
    };
    let slack = 1e-9 * (hi.abs() + lo.abs() + 1.0);
    if let Some(e) = basis.energies().iter().find(|&&e| e < lo - slack || e > hi + slack) {
        return Err(Error::Eigensolver(format!(
            "energy {e} outside Gershgorin interval [{lo}, {hi}]"
        )));
    }
    Ok(basis)
}

const CACHE_MAGIC: &[u8; 8] = b"QABBASIS";
const CACHE_VERSION: u32 = 1;

/// Content hash identifying a basis build: guide pixels, parameters and scope.
pub fn cache_key(guide: &Image, params: &HamiltonianParams, scope: BasisScope) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((guide.side() as u64).to_le_bytes());
    for v in guide.data() {
        h.update(v.to_le_bytes());
    }
    h.update(params.planck_factor.to_le_bytes());
    h.update(params.sigma_qab.to_le_bytes());
    match scope {
        BasisScope::Full => h.update([0u8]),
        BasisScope::BelowEnergy(e) => {
            h.update([1u8]);
            h.update(e.to_le_bytes());
        }
    }
    h.finalize().into()
}

/// Writes `basis` with its build parameters and content key (little-endian binary).
pub fn save_basis(
    path: &Path,
    basis: &QuantumBasis,
    params: &HamiltonianParams,
    key: &[u8; 32],
) -> Result<()> {
    let mut out = Vec::with_capacity(64 + 8 * (basis.len() * (basis.dim() + 1)));
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(key);
    out.extend_from_slice(&(basis.dim() as u64).to_le_bytes());
    out.extend_from_slice(&params.planck_factor.to_le_bytes());
    out.extend_from_slice(&params.sigma_qab.to_le_bytes());
    out.extend_from_slice(&(basis.len() as u64).to_le_bytes());
    for e in basis.energies() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for v in &basis.vectors {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Reloads a cached basis, failing unless its stored key equals `expected_key`.
pub fn load_basis(path: &Path, expected_key: &[u8; 32]) -> Result<(QuantumBasis, HamiltonianParams)> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Format {
        format: "basis cache",
        reason: reason.to_string(),
    };
    let mut cursor = 0usize;
    let mut take = |len: usize| -> Result<&[u8]> {
        let s = bytes
            .get(cursor..cursor + len)
            .ok_or_else(|| bad("truncated file"))?;
        cursor += len;
        Ok(s)
    };
    if take(8)? != CACHE_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let key: [u8; 32] = take(32)?.try_into().unwrap();
    if &key != expected_key {
        return Err(Error::CacheMismatch(
            "stored content hash does not match the requested inputs".into(),
        ));
    }
    let mut read_u64 = || -> Result<u64> { Ok(u64::from_le_bytes(take(8)?.try_into().unwrap())) };
    let dim = read_u64()? as usize;
    let planck_factor = f64::from_bits(read_u64()?);
    let sigma_qab = f64::from_bits(read_u64()?);
    let count = read_u64()? as usize;
    if count > dim {
        return Err(bad("more eigenpairs than dimensions"));
    }
    let mut floats = |len: usize| -> Result<Vec<f64>> {
        (0..len)
            .map(|_| Ok(f64::from_bits(read_u64()?)))
            .collect()
    };
    let energies = floats(count)?;
    let vectors = floats(count * dim)?;
    Ok((
        QuantumBasis::from_parts(dim, energies, vectors),
        HamiltonianParams {
            planck_factor,
            sigma_qab,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(n: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(n, (0..n * n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn params(h: f64) -> HamiltonianParams {
        HamiltonianParams::new(h, 0.0).unwrap()
    }

    fn residual(m: &SymmetricMatrix, basis: &QuantumBasis, i: usize) -> f64 {
        let v = basis.vector(i);
        let e = basis.energy(i);
        (0..m.dim())
            .map(|r| {
                let mv: f64 = (0..m.dim()).map(|c| m.get(r, c) * v[c]).sum();
                (mv - e * v[r]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    fn max_gram_deviation(basis: &QuantumBasis) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let g = dot(basis.vector(i), basis.vector(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    #[test]
    fn smoothing_identity_and_constants() {
        let img = random_image(16, 1);
        assert_eq!(smooth_guide(&img, 0.0).unwrap(), img);
        let c = Image::filled(16, 0.37);
        for s in [0.5, 2.0, 9.0] {
            let out = smooth_guide(&c, s).unwrap();
            assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-14));
        }
        assert!(smooth_guide(&img, -1.0).is_err());
    }

    #[test]
    fn smoothing_matches_direct_2d_convolution() {
        let img = random_image(16, 2);
        let sigma = 2.0;
        let radius = 6isize;
        let mut w = Vec::new();
        for i in -radius..=radius {
            for j in -radius..=radius {
                w.push((-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp());
            }
        }
        let total: f64 = w.iter().sum();
        let n = 16;
        let got = smooth_guide(&img, sigma).unwrap();
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                let mut k = 0;
                for i in -radius..=radius {
                    for j in -radius..=radius {
                        let rr = reflect(r as isize + i, n);
                        let cc = reflect(c as isize + j, n);
                        acc += w[k] / total * img.get(rr, cc);
                        k += 1;
                    }
                }
                assert!((got.get(r, c) - acc).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reflect_folds_far_offsets() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(-5, 4), 3);
        assert_eq!(reflect(9, 4), 1);
    }

    #[test]
    fn one_pixel_hamiltonian() {
        let h = assemble_hamiltonian(&Image::filled(1, 0.7), &params(2.0)).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.get(0, 0), 0.7 + 8.0);
    }

    #[test]
    fn two_by_two_hamiltonian() {
        let h = assemble_hamiltonian(&Image::zeros(2), &params(1.0)).unwrap();
        #[rustfmt::skip]
        let expected = [
            4.0, -1.0, -1.0, 0.0,
            -1.0, 4.0, 0.0, -1.0,
            -1.0, 0.0, 4.0, -1.0,
            0.0, -1.0, -1.0, 4.0,
        ];
        assert_eq!(h.to_dense().as_slice(), &expected);
        let basis = eigendecompose(&h.to_dense()).unwrap();
        for (e, want) in basis.energies().iter().zip([2.0, 4.0, 4.0, 6.0]) {
            assert!((e - want).abs() < 1e-12);
        }
        for i in 0..4 {
            assert!(residual(&h.to_dense(), &basis, i) < 1e-10);
        }
        assert_eq!(count_below_energy(&basis, 4.5), 3);
        assert_eq!(count_below_energy(&basis, 1.0), 0);
        assert_eq!(count_below_energy(&basis, 7.0), 4);
    }

    #[test]
    fn no_wrap_across_rows() {
        let h = assemble_hamiltonian(&random_image(4, 3), &params(1.5)).unwrap();
        assert_eq!(h.get(3, 4), 0.0);
        assert_eq!(h.get(4, 3), 0.0);
        assert_eq!(h.get(2, 3), -1.5);
        assert_eq!(h.get(3, 7), -1.5);
        assert!((0..16).all(|i| h.nnz_in_row(i) <= 5));
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        for seed in 0..5 {
            let h = assemble_hamiltonian(&random_image(8, seed), &params(0.8)).unwrap();
            assert!(h.is_symmetric());
            let d = h.to_dense();
            for i in 0..64 {
                for j in 0..64 {
                    assert_eq!(d.get(i, j), d.get(j, i));
                }
            }
        }
    }

    #[test]
    fn diagonal_matrix_sorted() {
        let basis = eigendecompose(&SymmetricMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(basis.energies(), &[1.0, 2.0, 3.0]);
        assert_eq!(basis.vector(0), &[0.0, 1.0, 0.0]);
        assert_eq!(basis.vector(1), &[0.0, 0.0, 1.0]);
        assert_eq!(basis.vector(2), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn random_symmetric_self_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dim = 64;
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        let m = SymmetricMatrix::from_row_major(dim, data).unwrap();
        let basis = eigendecompose(&m).unwrap();
        assert!(max_gram_deviation(&basis) < 1e-10);
        assert!(basis.energies().windows(2).all(|w| w[0] <= w[1]));
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let rec: f64 = (0..dim)
                    .map(|k| basis.vector(k)[r] * basis.energy(k) * basis.vector(k)[c])
                    .sum();
                worst = worst.max((rec - m.get(r, c)).abs());
            }
        }
        assert!(worst < 1e-9, "reconstruction error {worst}");
    }

    #[test]
    fn sign_convention() {
        let basis = build_basis(&random_image(6, 4), &params(1.0), BasisScope::Full).unwrap();
        for v in basis.vectors() {
            let first = v.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0, 2.0, 3.0, 1.0]).is_err());
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let img = random_image(8, 5);
        let p = params(1.3);
        let a = build_basis(&img, &p, BasisScope::Full).unwrap();
        let b = build_basis(&img.map(|v| v + 0.75), &p, BasisScope::Full).unwrap();
        for (x, y) in a.energies().iter().zip(b.energies()) {
            assert!((y - x - 0.75).abs() < 1e-9);
        }
        // random potentials have simple spectra, so vectors match up to sign
        for i in 0..a.len() {
            let d = dot(a.vector(i), b.vector(i)).abs();
            assert!((d - 1.0).abs() < 1e-9, "vector {i}: |<a,b>| = {d}");
        }
    }

    #[test]
    fn subset_matches_full_prefix() {
        let img = random_image(8, 6);
        let p = params(1.0);
        let full = build_basis(&img, &p, BasisScope::Full).unwrap();
        let cut = 3.1;
        let part = build_basis(&img, &p, BasisScope::BelowEnergy(cut)).unwrap();
        let t = count_below_energy(&full, cut);
        assert_eq!(part.len(), t);
        assert!(t > 0 && t < 64);
        for i in 0..t {
            assert!((part.energy(i) - full.energy(i)).abs() < 1e-10);
            assert!((dot(part.vector(i), full.vector(i)).abs() - 1.0).abs() < 1e-8);
        }
        assert!(part.energies().iter().all(|&e| e < cut));
        let none = build_basis(&img, &p, BasisScope::BelowEnergy(-5.0)).unwrap();
        assert!(none.is_empty());
    }

    /// Zero potential on an n×1 strip: energies 2h(1 − cos(kπ/(n+1))),
    /// vectors sin(jkπ/(n+1)) with k − 1 sign changes.
    #[test]
    fn strip_oscillation_grows_with_energy() {
        let n = 16;
        let h = 1.0;
        // strip as a tridiagonal operator; the 2-D grid would be 16x16
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 2.0 * h;
            if i + 1 < n {
                data[i * n + i + 1] = -h;
                data[(i + 1) * n + i] = -h;
            }
        }
        let basis = eigendecompose(&SymmetricMatrix::from_row_major(n, data).unwrap()).unwrap();
        let mut last = 0;
        for k in 1..=n {
            let theta = k as f64 * std::f64::consts::PI / (n as f64 + 1.0);
            assert!((basis.energy(k - 1) - 2.0 * h * (1.0 - theta.cos())).abs() < 1e-12);
            let v = basis.vector(k - 1);
            let crossings = v.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
            assert_eq!(crossings, k - 1);
            assert!(crossings >= last);
            last = crossings;
        }
    }

    #[test]
    fn gershgorin_bounds_hold() {
        let img = random_image(8, 7);
        let p = params(2.5);
        let basis = build_basis(&img, &p, BasisScope::Full).unwrap();
        assert!(basis.energy(0) >= img.min() - 1e-12);
        assert!(*basis.energies().last().unwrap() <= img.max() + 20.0 + 1e-12);
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let img = random_image(6, 8);
        let p = HamiltonianParams::new(1.7, 0.8).unwrap();
        let scope = BasisScope::BelowEnergy(5.0);
        let basis = build_basis(&img, &p, scope).unwrap();
        let key = cache_key(&img, &p, scope);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.bin");
        save_basis(&path, &basis, &p, &key).unwrap();
        let (back, bp) = load_basis(&path, &key).unwrap();
        assert_eq!(back, basis);
        assert_eq!(bp, p);
        let other = cache_key(&img, &p, BasisScope::Full);
        assert!(matches!(load_basis(&path, &other), Err(Error::CacheMismatch(_))));
    }
}
