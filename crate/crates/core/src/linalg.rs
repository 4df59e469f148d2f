//! Small dense kernels: covariance, Moore–Penrose pseudo-inverse, symmetric
//! eigendecomposition and the sign-split symmetrization of a dataset.
//!
//! Everything here is deterministic for a fixed input; the decompositions are
//! nalgebra's one-sided Jacobi / implicit QR routines, never randomized.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{IcaError, Result};
use crate::synth::Dataset;

/// Relative singular-value cutoff used when no explicit one is given.
pub const DEFAULT_REL_CUTOFF: f64 = 1e-10;

/// Pseudo-inverse of a square matrix together with the rank it was computed at.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    pub cutoff: f64,
}

/// Covariance of the rows of `x` with divisor `n`.
///
/// The divisor is `n`, not `n - 1`: the contrasts and the independence score
/// use the covariance as a plug-in estimate, and with divisor `n` the
/// empirical contrasts have an exactly vanishing Hessian at the origin.
pub fn sample_covariance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(IcaError::InsufficientData { needed: 2, got: n });
    }
    let mean = column_means(x);
    let centered = center_rows(x, &mean);
    Ok(gram(&centered) / n as f64)
}

pub(crate) fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

pub(crate) fn center_rows(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        let m = mean[j];
        col.iter_mut().for_each(|v| *v -= m);
    }
    c
}

/// `X^T X`, filled from the upper triangle so the result is exactly symmetric.
pub(crate) fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let k = x.ncols();
    let mut g = DMatrix::zeros(k, k);
    for a in 0..k {
        let ca = x.column(a);
        for b in a..k {
            let v = ca.dot(&x.column(b));
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// `sum_i w_i x_i x_i^T` over the rows of `x`, exactly symmetric.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let k = x.ncols();
    let mut g = DMatrix::zeros(k, k);
    for a in 0..k {
        let ca = x.column(a);
        let wa: Vec<f64> = ca.iter().zip(w).map(|(v, wi)| v * wi).collect();
        for b in a..k {
            let v: f64 = wa.iter().zip(x.column(b).iter()).map(|(p, q)| p * q).sum();
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// Moore–Penrose pseudo-inverse via SVD; singular values below
/// `rel_cutoff * sigma_max` are treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_cutoff: f64) -> Result<PseudoInverse> {
    if !(rel_cutoff > 0.0 && rel_cutoff < 1.0) {
        return Err(IcaError::InvalidParameter(format!(
            "rel_cutoff must lie in (0, 1), got {rel_cutoff}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(IcaError::InvalidInput(
            "matrix has non-finite entries".into(),
        ));
    }
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(PseudoInverse {
            matrix: DMatrix::zeros(c, r),
            rank: 0,
            cutoff: rel_cutoff,
        });
    }
    let svd = m.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(IcaError::InvalidInput("svd did not converge".into())),
    };
    let s = svd.singular_values;
    let smax = s.max();
    let threshold = rel_cutoff * smax;
    let mut rank = 0;
    let mut pinv = DMatrix::zeros(c, r);
    for (i, &si) in s.iter().enumerate() {
        if si > threshold && si > 0.0 {
            rank += 1;
            // v_i u_i^T / s_i
            pinv += (vt.row(i).transpose() * u.column(i).transpose()) / si;
        }
    }
    Ok(PseudoInverse {
        matrix: pinv,
        rank,
        cutoff: rel_cutoff,
    })
}

/// Numerical rank using the same relative cutoff convention as [`pseudo_inverse`].
pub fn numerical_rank(m: &DMatrix<f64>, rel_cutoff: f64) -> usize {
    let s = m.clone().singular_values();
    let smax = s.max();
    s.iter()
        .filter(|&&v| v > rel_cutoff * smax && v > 0.0)
        .count()
}

/// Eigenvalues (ascending) and matching eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Pairs row `i` with row `floor(n/2) + i` and returns their differences.
///
/// The result has a symmetric distribution and is still a noisy linear
/// mixture with the same mixing matrix (sources symmetrized, noise covariance
/// doubled).
pub fn symmetrize_dataset(ds: &Dataset) -> Result<Dataset> {
    let n = ds.n();
    if n < 2 {
        return Err(IcaError::InsufficientData { needed: 2, got: n });
    }
    let half = n / 2;
    let x = ds.x();
    let y = DMatrix::from_fn(half, ds.k(), |i, j| x[(i, j)] - x[(half + i, j)]);
    Dataset::new(y)
}

/// Frobenius norm of the off-diagonal part divided by that of the diagonal.
pub fn off_diagonal_ratio(m: &DMatrix<f64>) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for ((i, j), v) in m
        .iter()
        .enumerate()
        .map(|(idx, v)| ((idx % m.nrows(), idx / m.nrows()), v))
    {
        if i == j {
            diag += v * v;
        } else {
            off += v * v;
        }
    }
    (off / diag).sqrt()
}
