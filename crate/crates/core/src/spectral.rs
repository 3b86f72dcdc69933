//! Symmetric eigensolvers.
//!
//! Dense problems use faer's self-adjoint eigendecomposition. The low end
//! of a sparse spectrum is found by Chebyshev-filtered subspace iteration
//! with Rayleigh-Ritz projection. The number of eigenvalues below a cutoff
//! is counted separately from the inertia of a banded `LDLᵀ` factorization
//! and must agree with the converged Ritz values.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::SparseMatrix;
use crate::error::{Error, Result};
use crate::par;

/// Eigenpairs in ascending order; vector `k` is `vectors[k*dim..(k+1)*dim]`.
#[derive(Clone, Debug)]
pub(crate) struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl Eigenpairs {
    fn truncate(&mut self, count: usize, dim: usize) {
        self.values.truncate(count);
        self.vectors.truncate(count * dim);
    }
}

/// Full decomposition of a dense symmetric matrix given row-major.
pub(crate) fn dense_eigen(dim: usize, data: &[f64]) -> Result<Eigenpairs> {
    let a = Mat::from_fn(dim, dim, |i, j| data[i * dim + j]);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("dense eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..dim).map(|k| s[k]).collect();
    let mut vectors = Vec::with_capacity(dim * dim);
    for k in 0..dim {
        vectors.extend((0..dim).map(|i| u[(i, k)]));
    }
    Ok(Eigenpairs { values, vectors })
}

/// Number of eigenvalues strictly below `shift`.
///
/// Sylvester's law of inertia applied to `A − shift·I = LDLᵀ`, factored
/// without pivoting inside the band of `A`. Fails on a zero pivot.
pub fn count_eigenvalues_below(a: &SparseMatrix, shift: f64) -> Result<usize> {
    let dim = a.dim();
    let bw = a.bandwidth();
    let w = bw + 1;
    // band[i*w + k] holds entry (i, i−k)
    let mut band = vec![0.0; dim * w];
    for i in 0..dim {
        for (j, v) in a.row(i) {
            if j <= i {
                band[i * w + (i - j)] = if i == j { v - shift } else { v };
            }
        }
    }
    let mut negatives = 0;
    for j in 0..dim {
        let lo = j.saturating_sub(bw);
        let mut d = band[j * w];
        for k in lo..j {
            let l = band[j * w + (j - k)];
            d -= l * l * band[k * w];
        }
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Eigensolver(format!(
                "singular pivot at {j} while counting eigenvalues below {shift}"
            )));
        }
        band[j * w] = d;
        if d < 0.0 {
            negatives += 1;
        }
        for i in j + 1..(j + w).min(dim) {
            let mut s = band[i * w + (i - j)];
            for k in i.saturating_sub(bw)..j {
                s -= band[i * w + (i - k)] * band[j * w + (j - k)] * band[k * w];
            }
            band[i * w + (i - j)] = s / d;
        }
    }
    Ok(negatives)
}

fn spmm(a: &SparseMatrix, x: &Mat<f64>) -> Mat<f64> {
    let cols = par::map_range(x.ncols(), par::auto(x.nrows() * x.ncols() * 5), |j| {
        a.matvec(x.col_as_slice(j))
    });
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| cols[j][i])
}

/// Scaled Chebyshev filter damping the spectrum inside `[lo, hi]`;
/// `floor` is a lower bound of the whole spectrum.
fn chebyshev_filter(a: &SparseMatrix, x: Mat<f64>, degree: usize, lo: f64, hi: f64, floor: f64) -> Mat<f64> {
    let e = (hi - lo) / 2.0;
    let c = (hi + lo) / 2.0;
    let sigma1 = e / (floor - c);
    let tau = 2.0 / sigma1;
    let mut sigma = sigma1;
    let mut prev = x;
    let ax = spmm(a, &prev);
    let mut cur = Mat::from_fn(prev.nrows(), prev.ncols(), |i, j| (ax[(i, j)] - c * prev[(i, j)]) * sigma1 / e);
    for _ in 1..degree {
        let next_sigma = 1.0 / (tau - sigma);
        let ay = spmm(a, &cur);
        let next = Mat::from_fn(cur.nrows(), cur.ncols(), |i, j| {
            2.0 * (ay[(i, j)] - c * cur[(i, j)]) * next_sigma / e - sigma * next_sigma * prev[(i, j)]
        });
        prev = cur;
        cur = next;
        sigma = next_sigma;
    }
    cur
}

const FILTER_DEGREE: usize = 24;
const MAX_SWEEPS: usize = 200;

/// Every eigenpair of `a` with eigenvalue strictly below `cutoff`.
///
/// `bounds` must enclose the spectrum. Falls back to the dense solver
/// when the wanted block is not small against the dimension.
pub(crate) fn lowest_below(a: &SparseMatrix, cutoff: f64, bounds: (f64, f64)) -> Result<Eigenpairs> {
    let dim = a.dim();
    let (floor, ceiling) = bounds;
    if cutoff <= floor {
        return Ok(Eigenpairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let wanted = count_eigenvalues_below(a, cutoff)?;
    let block = wanted + (wanted / 10).max(16);
    if wanted == 0 {
        return Ok(Eigenpairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    if 2 * block >= dim {
        let mut all = dense_eigen(dim, a.to_dense().as_slice())?;
        let found = all.values.partition_point(|&v| v < cutoff);
        if found != wanted {
            return Err(Error::Eigensolver(format!(
                "inertia counts {wanted} eigenvalues below {cutoff}, dense solver finds {found}"
            )));
        }
        all.truncate(wanted, dim);
        return Ok(all);
    }

    let tol = 1e-11 * floor.abs().max(ceiling.abs()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = Mat::from_fn(dim, block, |_, _| rng.random::<f64>() - 0.5);
    for _ in 0..MAX_SWEEPS {
        let q = x.qr().compute_thin_Q();
        let aq = spmm(a, &q);
        let g = q.transpose() * &aq;
        let g = Mat::from_fn(block, block, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
        let evd = g
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("Rayleigh-Ritz step failed: {e:?}")))?;
        let theta: Vec<f64> = (0..block).map(|k| evd.S().column_vector()[k]).collect();
        let s = evd.U();
        x = &q * s;
        let ax = &aq * s;
        let residual = |k: usize| -> f64 {
            (0..dim)
                .map(|i| (ax[(i, k)] - theta[k] * x[(i, k)]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let settled = theta[wanted - 1] < cutoff
            && theta[wanted] >= cutoff
            && (0..=wanted).all(|k| residual(k) <= tol);
        if settled {
            let mut vectors = Vec::with_capacity(wanted * dim);
            for k in 0..wanted {
                vectors.extend_from_slice(x.col_as_slice(k));
            }
            return Ok(Eigenpairs {
                values: theta[..wanted].to_vec(),
                vectors,
            });
        }
        let lo = theta[block - 1];
        x = chebyshev_filter(a, x, FILTER_DEGREE, lo, ceiling, floor);
    }
    Err(Error::Eigensolver(format!(
        "subspace iteration did not settle {wanted} eigenpairs below {cutoff} in {MAX_SWEEPS} sweeps"
    )))
}
