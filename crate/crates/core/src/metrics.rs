//! Amari error between an estimated and a true mixing matrix.

use nalgebra::DMatrix;

use crate::error::{IcaError, Result};
use crate::linalg::{self, DEFAULT_REL_CUTOFF};

fn normalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

fn full_rank_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(IcaError::InvalidDimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(IcaError::InvalidInput(
            "matrix has non-finite entries".into(),
        ));
    }
    let rank = linalg::numerical_rank(m, DEFAULT_REL_CUTOFF);
    match m.clone().try_inverse() {
        Some(inv) if rank == m.nrows() => Ok(inv),
        _ => Err(IcaError::RankDeficient {
            rank,
            dim: m.nrows(),
        }),
    }
}

/// Amari error of `b_hat` against `b`.
///
/// Both inverses are row-normalized (Euclidean norm) and combined as
/// `W = norm(b_hat^{-1}) norm(b^{-1})^{-1}`; the result is zero exactly when
/// `W` is a scaled permutation.
pub fn amari_error(b_hat: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if b_hat.shape() != b.shape() {
        return Err(IcaError::InvalidDimension(
            "matrices must have the same shape".into(),
        ));
    }
    let a_hat = normalize_rows(&full_rank_inverse(b_hat)?);
    let a = normalize_rows(&full_rank_inverse(b)?);
    let a_inv = full_rank_inverse(&a)?;
    amari_from_w(&(a_hat * a_inv))
}

/// Amari error of a prepared `W`: the row and column sums of `|W|`, each
/// divided by its largest entry, averaged over `k`, minus 2.
pub fn amari_from_w(w: &DMatrix<f64>) -> Result<f64> {
    let k = w.nrows();
    if k == 0 || !w.is_square() {
        return Err(IcaError::InvalidDimension(
            "W must be square and non-empty".into(),
        ));
    }
    let abs = w.abs();
    let mut total = 0.0;
    for row in abs.row_iter() {
        let max = row.max();
        if !(max > 0.0) {
            return Err(IcaError::InvalidInput("W has an all-zero row".into()));
        }
        total += row.sum() / max;
    }
    for col in abs.column_iter() {
        let max = col.max();
        if !(max > 0.0) {
            return Err(IcaError::InvalidInput("W has an all-zero column".into()));
        }
        total += col.sum() / max;
    }
    Ok(total / k as f64 - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::synth::make_mixing_matrix;
    use proptest::prelude::*;

    fn random_b(k: usize, seed: u64) -> DMatrix<f64> {
        make_mixing_matrix(k, &mut rng_from_seed(seed)).unwrap()
    }

    #[test]
    fn identical_matrices() {
        let b = random_b(4, 1);
        assert!(amari_error(&b, &b).unwrap().abs() < 1e-10);
    }

    #[test]
    fn permutation_and_scaling() {
        let b = random_b(4, 2);
        let p = DMatrix::from_row_slice(
            4,
            4,
            &[
                0., 0., 1., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0., 1., 0., 0.,
            ],
        );
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -2.0, 2.0, -0.5]));
        assert!(amari_error(&(&b * p * d), &b).unwrap().abs() < 1e-10);
    }

    #[test]
    fn all_ones_gives_two() {
        assert_eq!(
            amari_from_w(&DMatrix::from_element(2, 2, 1.0)).unwrap(),
            2.0
        );
    }

    #[test]
    fn zero_rows_and_rank_deficiency_error() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(amari_from_w(&w).is_err());
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            amari_error(&singular, &random_b(2, 3)),
            Err(IcaError::RankDeficient { .. })
        ));
    }

    #[test]
    fn interpolation_is_monotone() {
        let b = random_b(5, 4);
        let eye = DMatrix::<f64>::identity(5, 5);
        let errs: Vec<f64> = (5..=10)
            .map(|i| {
                let eps = i as f64 / 10.0;
                amari_error(&(&b * eps + &eye * (1.0 - eps)), &b).unwrap()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
        assert!(errs[5] < 1e-10);
    }

    proptest! {
        #[test]
        fn nonnegative_and_scale_invariant(seed in 0u64..500, row in 0usize..3, scale in 0.1f64..10.0, neg: bool) {
            let b = random_b(3, seed);
            let b_hat = random_b(3, seed + 1000);
            let e = amari_error(&b_hat, &b).unwrap();
            prop_assert!(e >= -1e-12);

            let mut inv = b_hat.clone().try_inverse().unwrap();
            let s = if neg { -scale } else { scale };
            inv.row_mut(row).scale_mut(s);
            let rescaled = inv.try_inverse().unwrap();
            prop_assert!((amari_error(&rescaled, &b).unwrap() - e).abs() < 1e-10);

            let p = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]);
            let swapped = amari_error(&(&b_hat * &p), &(&b * &p)).unwrap();
            prop_assert!((swapped - e).abs() < 1e-10);
        }
    }
}
