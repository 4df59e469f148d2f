//! Ground-truth mixing models and synthetic data for the noisy ICA model
//! `x = B z + g`, with independent standardized sources `z` and Gaussian
//! noise `g ~ N(0, Sigma)`.

mod dataset;

pub use dataset::Dataset;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Exp, Exp1, StudentT, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{IcaError, Result};
use crate::rng::{rng_from_seed, std_normal};

/// Bernoulli parameter with zero excess kurtosis, `1/2 - 1/sqrt(12)`.
pub const ZERO_KURTOSIS_P: f64 = 0.211_324_865_405_187_1;

/// Distribution of one source. Every draw is standardized analytically to
/// mean zero and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    BernoulliScaled { p: f64 },
    Uniform,
    Exponential { rate: f64 },
    Laplace { scale: f64 },
    StudentT { dof: f64 },
    Gaussian,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IcaError::InvalidParameter(msg));
        match *self {
            SourceSpec::BernoulliScaled { p } if !(p > 0.0 && p < 1.0) => {
                bad(format!("bernoulli p must lie in (0, 1), got {p}"))
            }
            SourceSpec::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                bad(format!("exponential rate must be positive, got {rate}"))
            }
            SourceSpec::Laplace { scale } if !(scale > 0.0 && scale.is_finite()) => {
                bad(format!("laplace scale must be positive, got {scale}"))
            }
            SourceSpec::StudentT { dof } if !(dof > 2.0) => bad(format!(
                "student-t needs dof > 2 for unit variance, got {dof}"
            )),
            _ => Ok(()),
        }
    }

    /// Draws `n` standardized samples.
    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            SourceSpec::BernoulliScaled { p } => {
                let d = Bernoulli::new(p).expect("validated");
                let sd = (p * (1.0 - p)).sqrt();
                (0..n)
                    .map(|_| (f64::from(u8::from(d.sample(rng))) - p) / sd)
                    .collect()
            }
            SourceSpec::Uniform => {
                let h = 3f64.sqrt();
                let d = Uniform::new(-h, h).expect("finite bounds");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            SourceSpec::Exponential { rate } => {
                let d = Exp::new(rate).expect("validated");
                (0..n)
                    .map(|_| (d.sample(rng) - 1.0 / rate) * rate)
                    .collect()
            }
            SourceSpec::Laplace { .. } => {
                // difference of two unit exponentials is Laplace(0, 1), variance 2
                let s = std::f64::consts::SQRT_2;
                (0..n)
                    .map(|_| {
                        let a: f64 = Exp1.sample(rng);
                        let b: f64 = Exp1.sample(rng);
                        (a - b) / s
                    })
                    .collect()
            }
            SourceSpec::StudentT { dof } => {
                let d = StudentT::new(dof).expect("validated");
                let sd = (dof / (dof - 2.0)).sqrt();
                (0..n).map(|_| d.sample(rng) / sd).collect()
            }
            SourceSpec::Gaussian => (0..n).map(|_| std_normal(rng)).collect(),
        }
    }

    /// Excess kurtosis of the distribution, `None` when the fourth moment is infinite.
    pub fn excess_kurtosis(&self) -> Option<f64> {
        match *self {
            SourceSpec::BernoulliScaled { p } => scaled_kurtosis_bernoulli(p).ok(),
            SourceSpec::Uniform => Some(-1.2),
            SourceSpec::Exponential { .. } => Some(6.0),
            SourceSpec::Laplace { .. } => Some(3.0),
            SourceSpec::StudentT { dof } if dof > 4.0 => Some(6.0 / (dof - 4.0)),
            SourceSpec::StudentT { .. } => None,
            SourceSpec::Gaussian => Some(0.0),
        }
    }

    /// Three uniform, three exponential(5) and three zero-kurtosis Bernoulli sources.
    pub fn nine_source_plan() -> Vec<SourceSpec> {
        let mut plan = vec![SourceSpec::Uniform; 3];
        plan.extend([SourceSpec::Exponential { rate: 5.0 }; 3]);
        plan.extend([SourceSpec::BernoulliScaled { p: ZERO_KURTOSIS_P }; 3]);
        plan
    }
}

/// Excess kurtosis of a standardized Bernoulli(p), `(1 - 6p(1-p)) / (p(1-p))`.
pub fn scaled_kurtosis_bernoulli(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(IcaError::InvalidParameter(format!(
            "p must lie in (0, 1), got {p}"
        )));
    }
    let q = p * (1.0 - p);
    Ok((1.0 - 6.0 * q) / q)
}

/// Smaller root `p` of `scaled_kurtosis_bernoulli(p) = kappa`, for `kappa >= -2`.
pub fn bernoulli_p_for_scaled_kurtosis(kappa: f64) -> Result<f64> {
    if !(kappa >= -2.0) || !kappa.is_finite() {
        return Err(IcaError::InvalidParameter(format!(
            "scaled kurtosis must be at least -2, got {kappa}"
        )));
    }
    let q = 1.0 / (kappa + 6.0);
    Ok((1.0 - (1.0 - 4.0 * q).max(0.0).sqrt()) / 2.0)
}

/// Serializable description of a model; the matrices are regenerated from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub k: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    pub sources: Vec<SourceSpec>,
}

impl ModelSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| IcaError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| IcaError::Config(e.to_string()))
    }
}

/// Ground truth for one synthetic problem.
#[derive(Debug, Clone)]
pub struct MixingModel {
    pub b: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    /// `sqrt(rho/k) R`, so that `sigma = noise_factor * noise_factor^T`.
    pub noise_factor: DMatrix<f64>,
    pub rho: f64,
    pub sources: Vec<SourceSpec>,
    pub seed: u64,
}

impl MixingModel {
    /// Builds `B` and `Sigma` from `spec.seed`. `B` is drawn first, so it
    /// depends only on `(k, seed)` and stays fixed when the sources change.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        if spec.sources.len() != spec.k {
            return Err(IcaError::InvalidDimension(format!(
                "{} sources for k = {}",
                spec.sources.len(),
                spec.k
            )));
        }
        for s in &spec.sources {
            s.validate()?;
        }
        let mut rng = rng_from_seed(spec.seed);
        let b = make_mixing_matrix(spec.k, &mut rng)?;
        let noise_factor = noise_factor(spec.k, spec.rho, &mut rng)?;
        Ok(Self::from_parts(
            b,
            noise_factor,
            spec.rho,
            spec.sources.clone(),
            spec.seed,
        ))
    }

    pub fn from_parts(
        b: DMatrix<f64>,
        noise_factor: DMatrix<f64>,
        rho: f64,
        sources: Vec<SourceSpec>,
        seed: u64,
    ) -> Self {
        let sigma = crate::linalg::gram(&noise_factor.transpose());
        MixingModel {
            b,
            sigma,
            noise_factor,
            rho,
            sources,
            seed,
        }
    }

    pub fn k(&self) -> usize {
        self.b.nrows()
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            k: self.k(),
            rho: self.rho,
            seed: self.seed,
            sources: self.sources.clone(),
        }
    }

    /// Population covariance `B B^T + Sigma` (sources have unit variance).
    pub fn population_cov(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose() + &self.sigma
    }

    /// Same mixing matrix and noise with different sources.
    pub fn with_sources(&self, sources: Vec<SourceSpec>) -> Result<Self> {
        if sources.len() != self.k() {
            return Err(IcaError::InvalidDimension(
                "source count must equal k".into(),
            ));
        }
        for s in &sources {
            s.validate()?;
        }
        Ok(MixingModel {
            sources,
            ..self.clone()
        })
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| std_normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `B = U diag(spectrum) V^T` with Haar-random `U`, `V`.
pub fn mixing_from_spectrum<R: Rng + ?Sized>(
    spectrum: &[f64],
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = spectrum.len();
    if k < 2 {
        return Err(IcaError::InvalidDimension(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let u = random_orthogonal(k, rng);
    let v = random_orthogonal(k, rng);
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spectrum));
    Ok(u * lambda * v.transpose())
}

/// Random mixing matrix with singular values drawn i.i.d. from `Uniform[1, 3]`.
pub fn make_mixing_matrix<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if k < 2 {
        return Err(IcaError::InvalidDimension(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let u = random_orthogonal(k, rng);
    let v = random_orthogonal(k, rng);
    let spread = Uniform::new_inclusive(1.0, 3.0).expect("finite bounds");
    let lambda: Vec<f64> = (0..k).map(|_| spread.sample(rng)).collect();
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda));
    Ok(u * lambda * v.transpose())
}

fn noise_factor<R: Rng + ?Sized>(k: usize, rho: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(IcaError::InvalidParameter(format!(
            "rho must be nonnegative, got {rho}"
        )));
    }
    let r = DMatrix::from_fn(k, k, |_, _| std_normal(rng));
    Ok(r * (rho / k as f64).sqrt())
}

/// Wishart-type noise covariance `(rho/k) R R^T` with standard normal `R`.
pub fn make_noise_cov<R: Rng + ?Sized>(k: usize, rho: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let f = noise_factor(k, rho, rng)?;
    Ok(crate::linalg::gram(&f.transpose()))
}

/// Draws `n` observations `x = B z + g`.
pub fn generate_dataset<R: Rng + ?Sized>(
    model: &MixingModel,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(IcaError::InvalidParameter("n must be at least 1".into()));
    }
    let k = model.k();
    let mut z = DMatrix::zeros(n, k);
    for (j, src) in model.sources.iter().enumerate() {
        let col = src.sample_n(n, rng);
        z.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    let mut x = z * model.b.transpose();
    if model.noise_factor.iter().any(|&v| v != 0.0) {
        let w = DMatrix::from_fn(n, k, |_, _| std_normal(rng));
        x += w * model.noise_factor.transpose();
    }
    Dataset::new(x)
}
