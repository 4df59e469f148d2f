//! Pseudo-Euclidean power iteration and sequential deflation.
//!
//! One step maps a unit vector `u` to `grad f(v) / |grad f(v)|` with
//! `v = C^+ u`. Columns are extracted one at a time; after column `j` the data
//! is projected with `I - U V`, which removes the recovered directions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrast::{self, ContrastKind, ContrastVariant, QuasiOrthMatrix};
use crate::error::{IcaError, Result};
use crate::linalg::{self, DEFAULT_REL_CUTOFF};
use crate::rng::{derive_seed, rng_from_seed};
use crate::score::Scorer;
use crate::synth::Dataset;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_RESTARTS: usize = 5;
/// Matches the spread of `C^+ u` for unit `u` when `C = B B^T` and the
/// columns of `B` have norm near 2, as in the synthetic mixing model.
pub const DEFAULT_EVAL_SCALE: f64 = 0.5;
const MIN_GRAD_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Projected standard deviation of the evaluation point `C^+ u`.
    pub eval_scale: f64,
}

impl ExtractOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(IcaError::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.eval_scale > 0.0) || !self.eval_scale.is_finite() {
            return Err(IcaError::InvalidParameter(format!(
                "eval_scale must be positive, got {}",
                self.eval_scale
            )));
        }
        Ok(())
    }
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            restarts: DEFAULT_RESTARTS,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            eval_scale: DEFAULT_EVAL_SCALE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    pub u: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Runs for this column that finished without a numerical error.
    pub restarts_used: usize,
    /// Contrast at the final iterate, evaluated on the deflated data.
    pub final_contrast: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemixResult {
    /// Column `j` is the unit vector found for component `j`.
    pub u: DMatrix<f64>,
    /// Row `j` satisfies `V(j,:) U(:,j) = 1`.
    pub v: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    pub b_hat_inv: DMatrix<f64>,
    pub per_column: Vec<ColumnDiagnostics>,
}

impl DemixResult {
    /// Wraps a demixing matrix produced elsewhere.
    pub fn from_demixing(w: &DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(IcaError::InvalidDimension(
                "demixing matrix must be square".into(),
            ));
        }
        let b_hat = linalg::pseudo_inverse(w, DEFAULT_REL_CUTOFF)?.matrix;
        let mut u = b_hat.clone();
        for mut col in u.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        let v = linalg::pseudo_inverse(&u, DEFAULT_REL_CUTOFF)?.matrix;
        let per_column = (0..w.nrows())
            .map(|_| ColumnDiagnostics {
                iterations: 0,
                converged: true,
                restarts_used: 0,
                final_contrast: f64::NAN,
            })
            .collect();
        Ok(DemixResult {
            u,
            v,
            b_hat,
            b_hat_inv: w.clone(),
            per_column,
        })
    }

    pub fn k(&self) -> usize {
        self.u.nrows()
    }

    pub fn all_converged(&self) -> bool {
        self.per_column.iter().all(|c| c.converged)
    }
}

/// `C^+ u` rescaled by a positive factor so that the projection has sample
/// standard deviation `scale` on `ds`. Positive rescaling keeps the fixed
/// points of the update and makes non-homogeneous contrasts independent of
/// the overall scale of `C`.
fn eval_point(
    c_dag: &DMatrix<f64>,
    u: &DVector<f64>,
    ds: &Dataset,
    scale: f64,
) -> Result<DVector<f64>> {
    let v = c_dag * u;
    let var = v.dot(&(ds.cov() * &v));
    if !(var > 0.0) || !var.is_finite() {
        return Err(IcaError::DegenerateGradient { norm: 0.0 });
    }
    Ok(v * (scale / var.sqrt()))
}

fn power_step(
    c_dag: &DMatrix<f64>,
    kind: &ContrastKind,
    ds: &Dataset,
    u: &DVector<f64>,
    scale: f64,
) -> Result<DVector<f64>> {
    let v = eval_point(c_dag, u, ds, scale)?;
    let g = contrast::grad_contrast(kind, &v, ds)?;
    let norm = g.norm();
    if !(norm >= MIN_GRAD_NORM) {
        return Err(IcaError::DegenerateGradient { norm });
    }
    Ok(g / norm)
}

fn check_start(c_dag: &DMatrix<f64>, ds: &Dataset, u0: &DVector<f64>) -> Result<()> {
    let k = ds.k();
    if c_dag.nrows() != k || c_dag.ncols() != k || u0.len() != k {
        return Err(IcaError::InvalidDimension(format!(
            "expected k = {k} for C and u0"
        )));
    }
    if (u0.norm() - 1.0).abs() > 1e-8 {
        return Err(IcaError::InvalidInput(format!(
            "u0 must have unit norm, got {}",
            u0.norm()
        )));
    }
    Ok(())
}

/// Runs the update from `u0` until `1 - |<u_t, u_{t+1}>| < tol` or `max_iter` steps.
pub fn power_iterate(
    c_dag: &DMatrix<f64>,
    kind: &ContrastKind,
    ds: &Dataset,
    u0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<PowerOutcome> {
    let opts = ExtractOptions {
        tol,
        max_iter,
        ..ExtractOptions::default()
    };
    power_iterate_with(c_dag, kind, ds, u0, &opts)
}

/// [`power_iterate`] with tolerance, iteration cap and evaluation scale from `opts`.
pub fn power_iterate_with(
    c_dag: &DMatrix<f64>,
    kind: &ContrastKind,
    ds: &Dataset,
    u0: &DVector<f64>,
    opts: &ExtractOptions,
) -> Result<PowerOutcome> {
    check_start(c_dag, ds, u0)?;
    opts.validate()?;
    let mut u = u0.clone();
    for it in 1..=opts.max_iter {
        let next = power_step(c_dag, kind, ds, &u, opts.eval_scale)?;
        let gap = 1.0 - u.dot(&next).abs();
        u = next;
        if gap < opts.tol {
            return Ok(PowerOutcome {
                u,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(PowerOutcome {
        u,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// All iterates `u_0, ..., u_steps` without early stopping.
pub fn power_trajectory(
    c_dag: &DMatrix<f64>,
    kind: &ContrastKind,
    ds: &Dataset,
    u0: &DVector<f64>,
    steps: usize,
) -> Result<Vec<DVector<f64>>> {
    check_start(c_dag, ds, u0)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u0.clone());
    for _ in 0..steps {
        let next = power_step(
            c_dag,
            kind,
            ds,
            out.last().expect("non-empty"),
            DEFAULT_EVAL_SCALE,
        )?;
        out.push(next);
    }
    Ok(out)
}

struct ColumnRun {
    u: DVector<f64>,
    iterations: usize,
    converged: bool,
    score: f64,
}

fn run_column(
    kind: &ContrastKind,
    data: &Dataset,
    c_dag: &DMatrix<f64>,
    u0: &DVector<f64>,
    opts: &ExtractOptions,
) -> Result<ColumnRun> {
    let out = power_iterate_with(c_dag, kind, data, u0, opts)?;
    let v = eval_point(c_dag, &out.u, data, opts.eval_scale)?;
    let score = contrast::eval_contrast(kind, &v, data)?;
    Ok(ColumnRun {
        u: out.u,
        iterations: out.iterations,
        converged: out.converged,
        score,
    })
}

/// Extracts all `k` columns by deflation.
///
/// For every column, `opts.restarts` random starts are tried; for the CGF
/// contrast each start is also run with `-C`, since the maxima with `d_i < 0`
/// are only attracting under the flipped sign. (For even contrasts `-C` only
/// flips the sign of every iterate.) The run with the largest `|f|` wins,
/// with converged runs preferred.
pub fn extract_all<R: Rng + ?Sized>(
    kind: &ContrastKind,
    ds: &Dataset,
    c: &QuasiOrthMatrix,
    rng: &mut R,
    opts: &ExtractOptions,
) -> Result<DemixResult> {
    let k = ds.k();
    if c.k() != k {
        return Err(IcaError::InvalidDimension(format!(
            "C is {}x{0}, data has k = {k}",
            c.k()
        )));
    }
    if opts.restarts == 0 {
        return Err(IcaError::InvalidParameter(
            "restarts must be at least 1".into(),
        ));
    }
    opts.validate()?;
    let c_dag = &c.c_dag.matrix;
    let neg = -c_dag;
    let branches: Vec<&DMatrix<f64>> = if kind.variant == ContrastVariant::Cgf {
        vec![c_dag, &neg]
    } else {
        vec![c_dag]
    };

    let mut u_mat = DMatrix::zeros(k, k);
    let mut v_mat = DMatrix::zeros(k, k);
    let mut per_column = Vec::with_capacity(k);
    for j in 0..k {
        let deflated = if j == 0 {
            ds.clone()
        } else {
            let uv = u_mat.columns(0, j) * v_mat.rows(0, j);
            ds.transform(&(DMatrix::identity(k, k) - uv))?
        };
        let starts: Vec<DVector<f64>> = (0..opts.restarts)
            .map(|_| contrast::random_unit(k, rng))
            .collect();
        let jobs: Vec<(&DVector<f64>, &DMatrix<f64>)> = starts
            .iter()
            .flat_map(|s| branches.iter().map(move |b| (s, *b)))
            .collect();
        let runs: Vec<ColumnRun> = jobs
            .par_iter()
            .map(|(s, b)| run_column(kind, &deflated, b, s, opts))
            .collect::<Vec<_>>()
            .into_iter()
            .filter_map(|r| r.ok())
            .collect();
        let restarts_used = runs.len();
        let best = runs
            .into_iter()
            .fold(None::<ColumnRun>, |acc, r| match acc {
                Some(a) if (a.converged, a.score.abs()) >= (r.converged, r.score.abs()) => Some(a),
                _ => Some(r),
            });
        let (u, diag) = match best {
            Some(r) => {
                let diag = ColumnDiagnostics {
                    iterations: r.iterations,
                    converged: r.converged,
                    restarts_used,
                    final_contrast: r.score,
                };
                (r.u, diag)
            }
            None => {
                // keep the matrices full rank with a direction outside the recovered span
                let d = &starts[0] - u_mat.columns(0, j) * (v_mat.rows(0, j) * &starts[0]);
                let d = if d.norm() > 1e-12 {
                    d.normalize()
                } else {
                    starts[0].clone()
                };
                let diag = ColumnDiagnostics {
                    iterations: 0,
                    converged: false,
                    restarts_used: 0,
                    final_contrast: f64::NAN,
                };
                (d, diag)
            }
        };
        let cu = c_dag * &u;
        let den = u.dot(&cu);
        let v_row = if den.abs() > 1e-12 * cu.norm() {
            cu / den
        } else {
            u.clone()
        };
        u_mat.set_column(j, &u);
        v_mat.set_row(j, &v_row.transpose());
        per_column.push(diag);
    }
    let b_hat_inv = linalg::pseudo_inverse(&u_mat, DEFAULT_REL_CUTOFF)?.matrix;
    Ok(DemixResult {
        b_hat: u_mat.clone(),
        u: u_mat,
        v: v_mat,
        b_hat_inv,
        per_column,
    })
}

/// Seed used by initialization `i` of [`best_of_restarts`] for base seed `base`.
pub fn init_seed(base: u64, i: usize) -> u64 {
    derive_seed(base, &[i as u64])
}

/// Runs [`extract_all`] `num_inits` times and keeps the result with the
/// smallest independence score. The base seed is drawn once from `rng`.
pub fn best_of_restarts<R: Rng + ?Sized>(
    kind: &ContrastKind,
    ds: &Dataset,
    c: &QuasiOrthMatrix,
    num_inits: usize,
    rng: &mut R,
    scorer: &Scorer,
    opts: &ExtractOptions,
) -> Result<DemixResult> {
    if num_inits == 0 {
        return Err(IcaError::InvalidParameter(
            "num_inits must be at least 1".into(),
        ));
    }
    let base: u64 = rng.random();
    let results: Vec<Result<(f64, DemixResult)>> = (0..num_inits)
        .into_par_iter()
        .map(|i| {
            let demix = extract_all(kind, ds, c, &mut rng_from_seed(init_seed(base, i)), opts)?;
            let score = scorer.score_demixer(&demix.b_hat_inv, ds)?.mean;
            Ok((score, demix))
        })
        .collect();
    let mut best: Option<(f64, DemixResult)> = None;
    let mut last_err = None;
    for r in results {
        match r {
            Ok((s, d)) => {
                if best.as_ref().is_none_or(|(b, _)| s < *b) {
                    best = Some((s, d));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, d)) => Ok(d),
        None => Err(last_err.expect("at least one init ran")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrast::quasi_orth_matrix;
    use crate::metrics::amari_error;
    use crate::rng::rng_from_seed;
    use crate::synth::{generate_dataset, random_orthogonal, MixingModel, ModelSpec, SourceSpec};

    /// All `2^k` sign patterns of `k` Rademacher sources, mixed by `b`.
    fn rademacher_factorial(b: &DMatrix<f64>) -> Dataset {
        let k = b.nrows();
        let z = DMatrix::from_fn(1 << k, k, |i, j| if (i >> j) & 1 == 1 { 1.0 } else { -1.0 });
        Dataset::new(z * b.transpose()).unwrap()
    }

    #[test]
    fn exact_fixed_point_on_factorial_design() {
        let b = random_orthogonal(3, &mut rng_from_seed(1));
        let ds = rademacher_factorial(&b);
        let eye = DMatrix::identity(3, 3);
        for j in 0..3 {
            let u0 = b.column(j).into_owned();
            let out =
                power_iterate(&eye, &ContrastKind::kurtosis(), &ds, &u0, DEFAULT_TOL, 50).unwrap();
            assert!(out.converged && out.iterations <= 2, "{out:?}");
            assert!(out.u.dot(&u0).abs() > 1.0 - 1e-8);
        }
    }

    #[test]
    fn max_iter_zero_is_a_no_op() {
        let ds = rademacher_factorial(&DMatrix::identity(2, 2));
        let u0 = DVector::from_vec(vec![0.6, 0.8]);
        let out = power_iterate(
            &DMatrix::identity(2, 2),
            &ContrastKind::chf(),
            &ds,
            &u0,
            1e-7,
            0,
        )
        .unwrap();
        assert_eq!(
            out,
            PowerOutcome {
                u: u0,
                iterations: 0,
                converged: false
            }
        );
    }

    #[test]
    fn rejects_non_unit_start() {
        let ds = rademacher_factorial(&DMatrix::identity(2, 2));
        let u0 = DVector::from_vec(vec![1.0, 1.0]);
        assert!(power_iterate(
            &DMatrix::identity(2, 2),
            &ContrastKind::chf(),
            &ds,
            &u0,
            1e-7,
            5
        )
        .is_err());
    }

    fn model(sources: Vec<SourceSpec>, rho: f64, seed: u64) -> MixingModel {
        MixingModel::from_spec(&ModelSpec {
            k: sources.len(),
            rho,
            seed,
            sources,
        })
        .unwrap()
    }

    #[test]
    fn converges_from_nearby_start() {
        let m = model(vec![SourceSpec::Uniform; 2], 0.1, 3);
        let ds = generate_dataset(&m, 100_000, &mut rng_from_seed(4)).unwrap();
        let kind = ContrastKind::chf();
        // a well-balanced C, as supplied by a preliminary estimate of B
        let q = QuasiOrthMatrix::from_matrix(-(&m.b * m.b.transpose()), kind).unwrap();
        for j in 0..2 {
            let truth = m.b.column(j).normalize();
            let other = m.b.column(1 - j).normalize();
            let perp = (&other - &truth * truth.dot(&other)).normalize();
            let angle = 10f64.to_radians();
            let u0 = &truth * angle.cos() + perp * angle.sin();
            let out = power_iterate(
                &q.c_dag.matrix,
                &kind,
                &ds,
                &u0,
                DEFAULT_TOL,
                DEFAULT_MAX_ITER,
            )
            .unwrap();
            assert!(
                out.u.dot(&truth).abs() > 0.99,
                "column {j}: {}",
                out.u.dot(&truth)
            );
        }
    }

    #[test]
    fn noiseless_orthogonal_kurtosis_recovers_b() {
        let b = random_orthogonal(3, &mut rng_from_seed(6));
        let m = MixingModel::from_parts(
            b.clone(),
            DMatrix::zeros(3, 3),
            0.0,
            vec![SourceSpec::Uniform; 3],
            0,
        );
        let ds = generate_dataset(&m, 100_000, &mut rng_from_seed(7)).unwrap();
        let q = QuasiOrthMatrix::from_matrix(DMatrix::identity(3, 3), ContrastKind::kurtosis())
            .unwrap();
        let res = extract_all(
            &ContrastKind::kurtosis(),
            &ds,
            &q,
            &mut rng_from_seed(8),
            &ExtractOptions::default(),
        )
        .unwrap();
        assert!(amari_error(&res.b_hat, &b).unwrap() < 0.05);
        assert!(res.all_converged());
    }

    #[test]
    fn result_invariants() {
        let m = model(
            vec![
                SourceSpec::Uniform,
                SourceSpec::Exponential { rate: 5.0 },
                SourceSpec::Laplace { scale: 1.0 },
            ],
            0.1,
            9,
        );
        let ds = generate_dataset(&m, 20_000, &mut rng_from_seed(10)).unwrap();
        for kind in [
            ContrastKind::kurtosis(),
            ContrastKind::chf(),
            ContrastKind::cgf(),
        ] {
            let q = quasi_orth_matrix(
                &kind,
                &ds,
                4,
                kind.variant.default_probe_scale(),
                &mut rng_from_seed(11),
            )
            .unwrap();
            let res = extract_all(
                &kind,
                &ds,
                &q,
                &mut rng_from_seed(12),
                &ExtractOptions::default(),
            )
            .unwrap();
            for j in 0..3 {
                assert!((res.u.column(j).norm() - 1.0).abs() < 1e-12);
                if res.per_column[j].converged {
                    assert!((res.v.row(j).dot(&res.u.column(j).transpose()) - 1.0).abs() < 1e-8);
                }
            }
            if res.all_converged() {
                assert!(
                    (&res.b_hat_inv * &res.b_hat - DMatrix::<f64>::identity(3, 3))
                        .abs()
                        .max()
                        < 1e-6
                );
            }
        }
    }

    #[test]
    fn scalar_case() {
        let m = model(vec![SourceSpec::Uniform, SourceSpec::Uniform], 0.0, 1);
        let ds = generate_dataset(&m, 1_000, &mut rng_from_seed(2)).unwrap();
        let one = ds
            .transform(&DMatrix::from_row_slice(1, 2, &[1.0, 0.5]))
            .unwrap();
        let kind = ContrastKind::kurtosis();
        let q = quasi_orth_matrix(
            &kind,
            &one,
            4,
            kind.variant.default_probe_scale(),
            &mut rng_from_seed(3),
        )
        .unwrap();
        let res = extract_all(
            &kind,
            &one,
            &q,
            &mut rng_from_seed(4),
            &ExtractOptions::default(),
        )
        .unwrap();
        assert_eq!(res.u[(0, 0)].abs(), 1.0);
        assert!((res.v[(0, 0)] * res.u[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deflation_removes_everything_on_noiseless_data() {
        let m = model(
            vec![
                SourceSpec::Uniform,
                SourceSpec::Exponential { rate: 5.0 },
                SourceSpec::Uniform,
            ],
            0.0,
            13,
        );
        let ds = generate_dataset(&m, 20_000, &mut rng_from_seed(14)).unwrap();
        let kind = ContrastKind::cgf();
        let q = quasi_orth_matrix(
            &kind,
            &ds,
            4,
            kind.variant.default_probe_scale(),
            &mut rng_from_seed(15),
        )
        .unwrap();
        let res = extract_all(
            &kind,
            &ds,
            &q,
            &mut rng_from_seed(16),
            &ExtractOptions::default(),
        )
        .unwrap();
        let resid = ds.x() * (DMatrix::identity(3, 3) - res.v.transpose() * res.u.transpose());
        assert!(
            resid.norm() < 1e-6 * ds.x().norm(),
            "{}",
            resid.norm() / ds.x().norm()
        );
    }

    #[test]
    fn amari_ignores_extraction_order() {
        let m = model(vec![SourceSpec::Uniform; 3], 0.1, 17);
        let ds = generate_dataset(&m, 10_000, &mut rng_from_seed(18)).unwrap();
        let kind = ContrastKind::chf();
        let q = quasi_orth_matrix(
            &kind,
            &ds,
            4,
            kind.variant.default_probe_scale(),
            &mut rng_from_seed(19),
        )
        .unwrap();
        let res = extract_all(
            &kind,
            &ds,
            &q,
            &mut rng_from_seed(20),
            &ExtractOptions::default(),
        )
        .unwrap();
        let perm = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let a = amari_error(&res.b_hat, &m.b).unwrap();
        let b = amari_error(&(&res.b_hat * &perm), &m.b).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn extraction_is_deterministic() {
        let m = model(vec![SourceSpec::Uniform; 2], 0.1, 21);
        let ds = generate_dataset(&m, 5_000, &mut rng_from_seed(22)).unwrap();
        let kind = ContrastKind::cgf();
        let q = quasi_orth_matrix(
            &kind,
            &ds,
            4,
            kind.variant.default_probe_scale(),
            &mut rng_from_seed(23),
        )
        .unwrap();
        let a = extract_all(
            &kind,
            &ds,
            &q,
            &mut rng_from_seed(24),
            &ExtractOptions::default(),
        )
        .unwrap();
        let b = extract_all(
            &kind,
            &ds,
            &q,
            &mut rng_from_seed(24),
            &ExtractOptions::default(),
        )
        .unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn single_init_matches_extract_all() {
        let m = model(vec![SourceSpec::Uniform; 3], 0.1, 25);
        let ds = generate_dataset(&m, 5_000, &mut rng_from_seed(26)).unwrap();
        let kind = ContrastKind::chf();
        let q = quasi_orth_matrix(
            &kind,
            &ds,
            4,
            kind.variant.default_probe_scale(),
            &mut rng_from_seed(27),
        )
        .unwrap();
        let scorer = Scorer::new(20, 5, true);
        let opts = ExtractOptions::default();
        let best =
            best_of_restarts(&kind, &ds, &q, 1, &mut rng_from_seed(28), &scorer, &opts).unwrap();
        let base: u64 = rng_from_seed(28).random();
        let single = extract_all(
            &kind,
            &ds,
            &q,
            &mut rng_from_seed(init_seed(base, 0)),
            &opts,
        )
        .unwrap();
        assert_eq!(best.u, single.u);
        let again =
            best_of_restarts(&kind, &ds, &q, 3, &mut rng_from_seed(28), &scorer, &opts).unwrap();
        let again2 =
            best_of_restarts(&kind, &ds, &q, 3, &mut rng_from_seed(28), &scorer, &opts).unwrap();
        assert_eq!(again.u, again2.u);
    }

    #[test]
    fn external_demixer_round_trips() {
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let r = DemixResult::from_demixing(&w).unwrap();
        assert_eq!(r.b_hat_inv, w);
        assert!((&r.b_hat * &w - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
        assert!((&r.v * &r.u - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
    }
}
