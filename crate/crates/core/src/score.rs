//! Characteristic-function independence scores for a candidate demixer `F`.
//!
//! With `y = F x`, the corrected score at probe `t` is
//! `| E e^{i t.y} e^{-t' diag(G) t / 2} - prod_j E e^{i t_j y_j} e^{-t' G t / 2} |`
//! where `G = F S F^T`. The two Gaussian factors cancel the contribution of
//! additive Gaussian noise, so the population score vanishes exactly at
//! `F = D P B^{-1}` even when the noise is correlated.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrast::random_unit;
use crate::error::{IcaError, Result};
use crate::rng::{rng_from_seed, std_normal};
use crate::synth::Dataset;

pub const DEFAULT_PROBES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mean: f64,
    pub stddev: f64,
    pub num_probes: usize,
    pub corrected: bool,
    pub probe_seed: u64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub failed_probes: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

/// Score at one probe given the projected data `y` (columns are coordinates)
/// and its covariance `g`.
fn delta(y: &DMatrix<f64>, t: &[f64], g: &DMatrix<f64>, corrected: bool) -> f64 {
    let n = y.nrows() as f64;
    let m = y.ncols();
    let mut joint = Complex64::new(0.0, 0.0);
    let mut marg = vec![Complex64::new(0.0, 0.0); m];
    let mut z = vec![0.0; y.nrows()];
    for (j, col) in y.column_iter().enumerate() {
        let tj = t[j];
        let mut acc = Complex64::new(0.0, 0.0);
        for (zi, &v) in z.iter_mut().zip(col.iter()) {
            let a = tj * v;
            *zi += a;
            let (s, c) = a.sin_cos();
            acc.re += c;
            acc.im += s;
        }
        marg[j] = acc / n;
    }
    for zi in &z {
        let (s, c) = zi.sin_cos();
        joint.re += c;
        joint.im += s;
    }
    joint /= n;
    let product: Complex64 = marg.iter().product();
    if !corrected {
        return (joint - product).norm();
    }
    let tv = DVector::from_column_slice(t);
    let diag_quad: f64 = (0..m).map(|j| t[j] * t[j] * g[(j, j)]).sum();
    let full_quad = tv.dot(&(g * &tv));
    (joint * (-0.5 * diag_quad).exp() - product * (-0.5 * full_quad).exp()).norm()
}

fn projected(f: &DMatrix<f64>, ds: &Dataset) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if f.ncols() != ds.k() {
        return Err(IcaError::InvalidDimension(format!(
            "F has {} columns, data has k = {}",
            f.ncols(),
            ds.k()
        )));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(IcaError::InvalidInput("F has non-finite entries".into()));
    }
    let y = ds.centered() * f.transpose();
    let g = f * ds.cov() * f.transpose();
    Ok((y, g))
}

fn single(t: &DVector<f64>, f: &DMatrix<f64>, ds: &Dataset, corrected: bool) -> Result<f64> {
    if t.len() != f.nrows() {
        return Err(IcaError::InvalidDimension(
            "t must have one entry per row of F".into(),
        ));
    }
    let (y, g) = projected(f, ds)?;
    Ok(delta(&y, t.as_slice(), &g, corrected))
}

pub fn corrected_score(t: &DVector<f64>, f: &DMatrix<f64>, ds: &Dataset) -> Result<f64> {
    single(t, f, ds, true)
}

pub fn uncorrected_score(t: &DVector<f64>, f: &DMatrix<f64>, ds: &Dataset) -> Result<f64> {
    single(t, f, ds, false)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Probes `t ~ N(0, I_k)` generated from `probe_seed`.
pub fn probe_set(k: usize, num: usize, probe_seed: u64) -> Vec<DVector<f64>> {
    let mut rng = rng_from_seed(probe_seed);
    (0..num)
        .map(|_| DVector::from_fn(k, |_, _| std_normal(&mut rng)))
        .collect()
}

/// Monte-Carlo score with the probe sequence fixed by `probe_seed`.
pub fn mc_score_seeded(
    f: &DMatrix<f64>,
    ds: &Dataset,
    m: usize,
    probe_seed: u64,
    corrected: bool,
) -> Result<ScoreReport> {
    if m == 0 {
        return Err(IcaError::InvalidParameter("need at least one probe".into()));
    }
    let (y, g) = projected(f, ds)?;
    let probes = probe_set(f.nrows(), m, probe_seed);
    let values: Vec<f64> = probes
        .par_iter()
        .map(|t| delta(&y, t.as_slice(), &g, corrected))
        .collect();
    let ok: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    let failed = m - ok.len();
    if 2 * failed > m || ok.is_empty() {
        return Err(IcaError::ProbeFailure { failed, total: m });
    }
    let (mean, stddev) = mean_std(&ok);
    Ok(ScoreReport {
        mean,
        stddev,
        num_probes: m,
        corrected,
        probe_seed,
        failed_probes: failed,
    })
}

/// Monte-Carlo score; the probe seed is drawn from `rng` and recorded in the report.
pub fn mc_score<R: Rng + ?Sized>(
    f: &DMatrix<f64>,
    ds: &Dataset,
    m: usize,
    rng: &mut R,
    corrected: bool,
) -> Result<ScoreReport> {
    let probe_seed: u64 = rng.random();
    mc_score_seeded(f, ds, m, probe_seed, corrected)
}

/// Rescales each row of `f` so that `(F x)_j` has unit sample variance.
/// Rows with zero variance are left untouched.
pub fn normalize_demixer(f: &DMatrix<f64>, ds: &Dataset) -> DMatrix<f64> {
    let mut out = f.clone();
    let s = ds.cov();
    for mut row in out.row_iter_mut() {
        let r = row.transpose();
        let var = r.dot(&(s * &r));
        if var > 0.0 && var.is_finite() {
            row /= var.sqrt();
        }
    }
    out
}

/// Scores demixers with a fixed probe set, after normalizing their rows to
/// unit output variance. The score depends on the scale of `F`, and without
/// this step a demixer with small rows would look independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scorer {
    pub probes: usize,
    pub probe_seed: u64,
    pub corrected: bool,
}

impl Scorer {
    pub fn new(probes: usize, probe_seed: u64, corrected: bool) -> Self {
        Scorer {
            probes,
            probe_seed,
            corrected,
        }
    }

    pub fn with_corrected(self, corrected: bool) -> Self {
        Scorer { corrected, ..self }
    }

    pub fn score_demixer(&self, f: &DMatrix<f64>, ds: &Dataset) -> Result<ScoreReport> {
        mc_score_seeded(
            &normalize_demixer(f, ds),
            ds,
            self.probes,
            self.probe_seed,
            self.corrected,
        )
    }
}

/// Score of the partial decomposition after `l` extracted columns.
///
/// The data is split into the `l` rank-one projections `U(:,a) V(a,:) x` and,
/// when `l < k`, the residual `(I - U V) x`. For random unit `t` the pieces
/// `w_a = t^T Y_a x` are tested for mutual independence with the corrected
/// score (all-ones probe on `w`).
pub fn sequential_score<R: Rng + ?Sized>(
    ds: &Dataset,
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    m: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let k = ds.k();
    let l = u.ncols();
    if l == 0 || l > k || u.nrows() != k || v.nrows() != l || v.ncols() != k {
        return Err(IcaError::InvalidInput(format!(
            "need U k x l and V l x k with 1 <= l <= k = {k}, got U {}x{} and V {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    if m == 0 {
        return Err(IcaError::InvalidParameter("need at least one probe".into()));
    }
    let mut pieces: Vec<DMatrix<f64>> = (0..l).map(|a| u.column(a) * v.row(a)).collect();
    if l < k {
        pieces.push(DMatrix::identity(k, k) - u * v);
    }
    let k0 = pieces.len();
    let ones = vec![1.0; k0];
    let xc = ds.centered();
    let n = ds.n() as f64;
    let mut values = Vec::with_capacity(m);
    for _ in 0..m {
        let t = random_unit(k, rng);
        let mut w = DMatrix::zeros(ds.n(), k0);
        for (a, p) in pieces.iter().enumerate() {
            w.set_column(a, &(xc * (p.transpose() * &t)));
        }
        let g = crate::linalg::gram(&w) / n;
        values.push(delta(&w, &ones, &g, true));
    }
    Ok(mean_std(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_dataset, MixingModel, ModelSpec, SourceSpec};
    use proptest::prelude::*;

    fn model(sources: Vec<SourceSpec>, rho: f64, seed: u64) -> MixingModel {
        MixingModel::from_spec(&ModelSpec {
            k: sources.len(),
            rho,
            seed,
            sources,
        })
        .unwrap()
    }

    fn data(m: &MixingModel, n: usize, seed: u64) -> Dataset {
        generate_dataset(m, n, &mut rng_from_seed(seed)).unwrap()
    }

    #[test]
    fn one_dimensional_score_is_zero() {
        let m = model(vec![SourceSpec::Uniform; 2], 0.0, 1);
        let ds = data(&m, 1000, 2)
            .head(1000)
            .unwrap()
            .transform(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0]))
            .unwrap();
        let t = DVector::from_element(1, 1.7);
        let f = DMatrix::identity(1, 1);
        assert_eq!(corrected_score(&t, &f, &ds).unwrap(), 0.0);
        assert_eq!(uncorrected_score(&t, &f, &ds).unwrap(), 0.0);
    }

    #[test]
    fn true_demixer_beats_random_matrix() {
        let m = model(vec![SourceSpec::BernoulliScaled { p: 0.2 }; 2], 0.2, 3);
        let binv = m.b.clone().try_inverse().unwrap();
        let t = DVector::from_vec(vec![0.8, -0.6]);
        let mut wins = 0;
        for s in 0..20 {
            let ds = data(&m, 100_000, 100 + s);
            let mut rng = rng_from_seed(200 + s);
            let rand_f = DMatrix::from_fn(2, 2, |_, _| std_normal(&mut rng));
            let rand_f = normalize_demixer(&rand_f, &ds);
            let truth = normalize_demixer(&binv, &ds);
            if corrected_score(&t, &truth, &ds).unwrap()
                < corrected_score(&t, &rand_f, &ds).unwrap()
            {
                wins += 1;
            }
        }
        assert!(wins >= 18, "{wins}");
    }

    #[test]
    fn score_shrinks_with_sample_size() {
        let m = MixingModel::from_parts(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            0.0,
            vec![SourceSpec::Uniform; 2],
            0,
        );
        let t = DVector::from_vec(vec![1.0, 1.0]);
        let f = DMatrix::identity(2, 2);
        let wins = (0..20)
            .filter(|&s| {
                let big = corrected_score(&t, &f, &data(&m, 100_000, 300 + s)).unwrap();
                let small = corrected_score(&t, &f, &data(&m, 1_000, 400 + s)).unwrap();
                big < small
            })
            .count();
        assert!(wins >= 18, "{wins}");
    }

    #[test]
    fn uncorrected_small_on_noiseless_truth() {
        let m = model(
            vec![SourceSpec::Uniform, SourceSpec::Exponential { rate: 5.0 }],
            0.0,
            5,
        );
        let ds = data(&m, 100_000, 6);
        let binv = normalize_demixer(&m.b.clone().try_inverse().unwrap(), &ds);
        let mut rng = rng_from_seed(7);
        for _ in 0..10 {
            let t = random_unit(2, &mut rng) * 2.0;
            assert!(uncorrected_score(&t, &binv, &ds).unwrap() < 0.02);
        }
    }

    #[test]
    fn noise_inflates_uncorrected_score() {
        let m = model(vec![SourceSpec::Uniform; 2], 0.5, 8);
        let binv = m.b.clone().try_inverse().unwrap();
        let t = DVector::from_vec(vec![0.6, 0.8]);
        let wins = (0..20)
            .filter(|&s| {
                let ds = data(&m, 100_000, 500 + s);
                let f = normalize_demixer(&binv, &ds);
                uncorrected_score(&t, &f, &ds).unwrap() > corrected_score(&t, &f, &ds).unwrap()
            })
            .count();
        assert!(wins >= 18, "{wins}");
    }

    #[test]
    fn single_probe_report() {
        let m = model(vec![SourceSpec::Uniform; 3], 0.1, 9);
        let ds = data(&m, 2_000, 10);
        let f = m.b.clone().try_inverse().unwrap();
        let r = mc_score_seeded(&f, &ds, 1, 42, true).unwrap();
        let t = &probe_set(3, 1, 42)[0];
        assert_eq!(r.mean, corrected_score(t, &f, &ds).unwrap());
        assert_eq!(r.stddev, 0.0);
        assert_eq!(mc_score_seeded(&f, &ds, 1, 42, true).unwrap(), r);
        let a = mc_score(&f, &ds, 10, &mut rng_from_seed(3), false).unwrap();
        let b = mc_score(&f, &ds, 10, &mut rng_from_seed(3), false).unwrap();
        assert_eq!(a, b);
        assert!(!a.corrected);
    }

    #[test]
    fn report_json_fields() {
        let r = ScoreReport {
            mean: 0.5,
            stddev: 0.1,
            num_probes: 3,
            corrected: true,
            probe_seed: 7,
            failed_probes: 0,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["corrected", "mean", "num_probes", "probe_seed", "stddev"]
        );
    }

    #[test]
    fn rejects_bad_demixer() {
        let m = model(vec![SourceSpec::Uniform; 2], 0.0, 11);
        let ds = data(&m, 100, 12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(
            corrected_score(&DVector::zeros(2), &bad, &ds),
            Err(IcaError::InvalidInput(_))
        ));
        assert!(mc_score_seeded(&DMatrix::identity(2, 2), &ds, 0, 1, true).is_err());
    }

    #[test]
    fn overflowing_demixer_fails_probes() {
        let m = model(vec![SourceSpec::Uniform; 2], 0.0, 13);
        let ds = data(&m, 100, 14);
        let huge = DMatrix::from_element(2, 2, 1e308);
        assert!(matches!(
            mc_score_seeded(&huge, &ds, 4, 1, true),
            Err(IcaError::ProbeFailure { .. })
        ));
    }

    #[test]
    fn sequential_score_small_at_truth() {
        let m = model(
            vec![
                SourceSpec::Uniform,
                SourceSpec::Exponential { rate: 5.0 },
                SourceSpec::Laplace { scale: 1.0 },
            ],
            0.0,
            15,
        );
        let ds = data(&m, 100_000, 16);
        let mut u = m.b.clone();
        for mut c in u.column_iter_mut() {
            c.normalize_mut();
        }
        let v = u.clone().try_inverse().unwrap();
        let (mean, _) = sequential_score(&ds, &u, &v, 20, &mut rng_from_seed(17)).unwrap();
        assert!(mean < 0.02, "{mean}");
    }

    #[test]
    fn sequential_score_prefers_true_column() {
        let m = model(
            vec![SourceSpec::Uniform, SourceSpec::Exponential { rate: 5.0 }],
            0.0,
            18,
        );
        let b1 = m.b.column(0).normalize();
        let b2 = m.b.column(1).normalize();
        let wins = (0..20)
            .filter(|&s| {
                let ds = data(&m, 20_000, 600 + s);
                let score = |u: DVector<f64>| {
                    let cu = ds.cov().clone().try_inverse().unwrap() * &u;
                    let v = DMatrix::from_row_slice(1, 2, (cu.clone() / u.dot(&cu)).as_slice());
                    let umat = DMatrix::from_column_slice(2, 1, u.as_slice());
                    sequential_score(&ds, &umat, &v, 30, &mut rng_from_seed(700 + s))
                        .unwrap()
                        .0
                };
                let mixed = (&b1 + &b2).normalize();
                score(b1.clone()) < score(mixed)
            })
            .count();
        assert!(wins >= 18, "{wins}");
    }

    #[test]
    fn sequential_score_checks_shapes_and_repeats() {
        let m = model(vec![SourceSpec::Uniform; 2], 0.0, 19);
        let ds = data(&m, 500, 20);
        let u = DMatrix::identity(2, 2);
        assert!(sequential_score(
            &ds,
            &DMatrix::zeros(2, 0),
            &DMatrix::zeros(0, 2),
            1,
            &mut rng_from_seed(1)
        )
        .is_err());
        assert!(sequential_score(
            &ds,
            &DMatrix::zeros(2, 3),
            &DMatrix::zeros(3, 2),
            1,
            &mut rng_from_seed(1)
        )
        .is_err());
        let a = sequential_score(&ds, &u, &u, 1, &mut rng_from_seed(2)).unwrap();
        let b = sequential_score(&ds, &u, &u, 1, &mut rng_from_seed(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn score_is_bounded_and_permutation_equivariant(
            seed in 0u64..1000,
            tv in prop::collection::vec(-3.0f64..3.0, 3),
            fv in prop::collection::vec(-2.0f64..2.0, 9),
            perm_idx in 0usize..6,
        ) {
            let m = model(vec![SourceSpec::Uniform, SourceSpec::Exponential { rate: 5.0 }, SourceSpec::Gaussian], 0.3, seed);
            let ds = data(&m, 500, seed + 1);
            let f = DMatrix::from_row_slice(3, 3, &fv);
            let t = DVector::from_vec(tv);
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let p = DMatrix::from_fn(3, 3, |i, j| if perms[perm_idx][i] == j { 1.0 } else { 0.0 });
            for corrected in [true, false] {
                let s = single(&t, &f, &ds, corrected).unwrap();
                prop_assert!((0.0..=2.0).contains(&s));
                let permuted = single(&(p.transpose() * &t), &f, &ds, corrected).unwrap();
                let direct = single(&t, &(&p * &f), &ds, corrected).unwrap();
                prop_assert!((permuted - direct).abs() < 1e-12);
            }
        }
    }
}
