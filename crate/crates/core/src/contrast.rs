//! Contrast functions of a projection `y = u^T x` (fourth cumulant, log
//! characteristic function, cumulant generating function), their analytic
//! gradients and Hessians, and the quasi-orthogonalization matrix `C`.
//!
//! All contrasts are evaluated on mean-centered data with the divisor-`n`
//! covariance, so each of them vanishes to second order at `u = 0` and
//! vanishes identically on Gaussian data in the large-sample limit.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IcaError, Result};
use crate::linalg::{self, PseudoInverse, DEFAULT_REL_CUTOFF};
use crate::rng::std_normal;
use crate::synth::Dataset;

pub const DEFAULT_CHF_MODULUS_FLOOR: f64 = 1e-12;
pub const DEFAULT_CGF_CLIP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastVariant {
    Kurtosis,
    Chf,
    Cgf,
}

impl ContrastVariant {
    /// Projected standard deviation of the random Hessian probes used for `C`.
    ///
    /// The CGF Hessian is dominated by the largest samples when probes are
    /// long, so it is probed close to the origin; the CHF Hessian carries
    /// little signal there for sources with small cumulants, so it is probed
    /// further out. Kurtosis is homogeneous and insensitive to the choice.
    pub fn default_probe_scale(self) -> f64 {
        match self {
            ContrastVariant::Kurtosis => 1.0,
            ContrastVariant::Chf => 1.5,
            ContrastVariant::Cgf => 0.125,
        }
    }
}

impl fmt::Display for ContrastVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContrastVariant::Kurtosis => "kurtosis",
            ContrastVariant::Chf => "chf",
            ContrastVariant::Cgf => "cgf",
        })
    }
}

impl FromStr for ContrastVariant {
    type Err = IcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kurtosis" | "kurt" | "pegi" => Ok(ContrastVariant::Kurtosis),
            "chf" => Ok(ContrastVariant::Chf),
            "cgf" => Ok(ContrastVariant::Cgf),
            other => Err(IcaError::InvalidParameter(format!(
                "unknown contrast '{other}'"
            ))),
        }
    }
}

/// A contrast together with its numerical guards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastKind {
    pub variant: ContrastVariant,
    /// Smallest admissible `(E cos y)^2 + (E sin y)^2` for the CHF contrast.
    pub chf_modulus_floor: f64,
    /// Shifted exponents below `-cgf_clip` are dropped from the CGF sums.
    pub cgf_clip: f64,
}

impl ContrastKind {
    pub fn new(variant: ContrastVariant) -> Self {
        ContrastKind {
            variant,
            chf_modulus_floor: DEFAULT_CHF_MODULUS_FLOOR,
            cgf_clip: DEFAULT_CGF_CLIP,
        }
    }

    pub fn kurtosis() -> Self {
        Self::new(ContrastVariant::Kurtosis)
    }

    pub fn chf() -> Self {
        Self::new(ContrastVariant::Chf)
    }

    pub fn cgf() -> Self {
        Self::new(ContrastVariant::Cgf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chf_modulus_floor > 0.0) || !(self.cgf_clip > 0.0) {
            return Err(IcaError::InvalidParameter(
                "chf_modulus_floor and cgf_clip must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for ContrastKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.variant.fmt(f)
    }
}

/// Contrast value with optional first and second derivatives.
#[derive(Debug, Clone)]
pub struct ContrastEval {
    pub value: f64,
    pub grad: Option<DVector<f64>>,
    pub hess: Option<DMatrix<f64>>,
}

/// Evaluates the contrast and as many derivatives as `order` asks for (0, 1 or 2).
pub fn evaluate(
    kind: &ContrastKind,
    u: &DVector<f64>,
    ds: &Dataset,
    order: u8,
) -> Result<ContrastEval> {
    if u.len() != ds.k() {
        return Err(IcaError::InvalidDimension(format!(
            "u has length {}, data has k = {}",
            u.len(),
            ds.k()
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(IcaError::InvalidInput(
            "direction has non-finite entries".into(),
        ));
    }
    let xc = ds.centered();
    let s = ds.cov();
    let n = ds.n() as f64;
    let y = xc * u;
    let su = s * u;
    let m2 = u.dot(&su);
    match kind.variant {
        ContrastVariant::Kurtosis => {
            let m4 = y.iter().map(|v| v.powi(4)).sum::<f64>() / n;
            let value = m4 - 3.0 * m2 * m2;
            let grad = (order >= 1).then(|| {
                let y3 = y.map(|v| v * v * v);
                (xc.tr_mul(&y3) / n) * 4.0 - &su * (12.0 * m2)
            });
            let hess = (order >= 2).then(|| {
                let w: Vec<f64> = y.iter().map(|v| 12.0 * v * v / n).collect();
                linalg::weighted_gram(xc, &w) - (&su * su.transpose()) * 24.0 - s * (12.0 * m2)
            });
            Ok(ContrastEval { value, grad, hess })
        }
        ContrastVariant::Chf => {
            let (sin, cos): (Vec<f64>, Vec<f64>) = y.iter().map(|v| v.sin_cos()).unzip();
            let c = cos.iter().sum::<f64>() / n;
            let sn = sin.iter().sum::<f64>() / n;
            let r = c * c + sn * sn;
            if !(r >= kind.chf_modulus_floor) {
                return Err(IcaError::DegenerateDirection { modulus: r });
            }
            let value = r.ln() + m2;
            if order == 0 {
                return Ok(ContrastEval {
                    value,
                    grad: None,
                    hess: None,
                });
            }
            let grad_c = -(xc.tr_mul(&DVector::from_column_slice(&sin)) / n);
            let grad_s = xc.tr_mul(&DVector::from_column_slice(&cos)) / n;
            let grad_r = (&grad_c * c + &grad_s * sn) * 2.0;
            let grad = &grad_r / r + &su * 2.0;
            let hess = (order >= 2).then(|| {
                let w: Vec<f64> = cos
                    .iter()
                    .zip(&sin)
                    .map(|(co, si)| (c * co + sn * si) / n)
                    .collect();
                let hess_r = (&grad_c * grad_c.transpose() + &grad_s * grad_s.transpose()
                    - linalg::weighted_gram(xc, &w))
                    * 2.0;
                symmetric(hess_r / r - (&grad_r * grad_r.transpose()) / (r * r) + s * 2.0)
            });
            Ok(ContrastEval {
                value,
                grad: Some(grad),
                hess,
            })
        }
        ContrastVariant::Cgf => {
            let a = y.max();
            let w: Vec<f64> = y
                .iter()
                .map(|&v| {
                    if v - a < -kind.cgf_clip {
                        0.0
                    } else {
                        (v - a).exp()
                    }
                })
                .collect();
            let total: f64 = w.iter().sum();
            let value = a + (total / n).ln() - 0.5 * m2;
            if !value.is_finite() {
                return Err(IcaError::Overflow);
            }
            if order == 0 {
                return Ok(ContrastEval {
                    value,
                    grad: None,
                    hess: None,
                });
            }
            let p: Vec<f64> = w.iter().map(|v| v / total).collect();
            let tilted_mean = xc.tr_mul(&DVector::from_column_slice(&p));
            let grad = &tilted_mean - &su;
            let hess = (order >= 2).then(|| {
                symmetric(
                    linalg::weighted_gram(xc, &p) - &tilted_mean * tilted_mean.transpose() - s,
                )
            });
            Ok(ContrastEval {
                value,
                grad: Some(grad),
                hess,
            })
        }
    }
}

fn symmetric(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn eval_contrast(kind: &ContrastKind, u: &DVector<f64>, ds: &Dataset) -> Result<f64> {
    Ok(evaluate(kind, u, ds, 0)?.value)
}

pub fn grad_contrast(kind: &ContrastKind, u: &DVector<f64>, ds: &Dataset) -> Result<DVector<f64>> {
    Ok(evaluate(kind, u, ds, 1)?
        .grad
        .expect("order 1 yields a gradient"))
}

pub fn hessian_contrast(
    kind: &ContrastKind,
    u: &DVector<f64>,
    ds: &Dataset,
) -> Result<DMatrix<f64>> {
    Ok(evaluate(kind, u, ds, 2)?
        .hess
        .expect("order 2 yields a Hessian"))
}

/// Normalized excess kurtosis `m4 / m2^2 - 3` of `u^T x`, for diagnostics.
pub fn excess_kurtosis(u: &DVector<f64>, ds: &Dataset) -> Result<f64> {
    let y = ds.centered() * u;
    let n = ds.n() as f64;
    let m2 = y.iter().map(|v| v * v).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(IcaError::InvalidInput(
            "projection has zero variance".into(),
        ));
    }
    let m4 = y.iter().map(|v| v.powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Estimated `C = B D B^T` with its pseudo-inverse.
#[derive(Debug, Clone)]
pub struct QuasiOrthMatrix {
    pub c: DMatrix<f64>,
    pub c_dag: PseudoInverse,
    /// Directions the Hessians were evaluated at; empty when `C` was injected.
    pub probes: Vec<DVector<f64>>,
    pub kind: ContrastKind,
}

impl QuasiOrthMatrix {
    /// Wraps an externally supplied `C` (for example `B B^T` from another algorithm).
    pub fn from_matrix(c: DMatrix<f64>, kind: ContrastKind) -> Result<Self> {
        if !c.is_square() {
            return Err(IcaError::InvalidDimension("C must be square".into()));
        }
        let c = symmetric(c);
        let c_dag = linalg::pseudo_inverse(&c, DEFAULT_REL_CUTOFF)?;
        Ok(QuasiOrthMatrix {
            c,
            c_dag,
            probes: Vec::new(),
            kind,
        })
    }

    /// Same matrix with the sign flipped, used to reach the other family of maxima.
    pub fn negated(&self) -> Self {
        QuasiOrthMatrix {
            c: -&self.c,
            c_dag: PseudoInverse {
                matrix: -&self.c_dag.matrix,
                ..self.c_dag.clone()
            },
            probes: self.probes.clone(),
            kind: self.kind,
        }
    }

    pub fn k(&self) -> usize {
        self.c.nrows()
    }
}

/// Averages the contrast Hessian over the given directions. Probes at which
/// the contrast is degenerate are skipped.
pub fn quasi_orth_from_probes(
    kind: &ContrastKind,
    ds: &Dataset,
    probes: &[DVector<f64>],
) -> Result<QuasiOrthMatrix> {
    kind.validate()?;
    if probes.is_empty() {
        return Err(IcaError::InvalidParameter("need at least one probe".into()));
    }
    let k = ds.k();
    let mut sum = DMatrix::zeros(k, k);
    let mut used = Vec::with_capacity(probes.len());
    let mut last_err = None;
    for p in probes {
        match hessian_contrast(kind, p, ds) {
            Ok(h) if h.iter().all(|v| v.is_finite()) => {
                sum += h;
                used.push(p.clone());
            }
            Ok(_) => last_err = Some("non-finite Hessian".to_string()),
            Err(e) => last_err = Some(e.to_string()),
        }
    }
    if used.is_empty() {
        return Err(IcaError::EstimationFailure(format!(
            "all {} probes degenerate ({})",
            probes.len(),
            last_err.unwrap_or_default()
        )));
    }
    let c = symmetric(sum / used.len() as f64);
    let c_dag = linalg::pseudo_inverse(&c, DEFAULT_REL_CUTOFF)?;
    Ok(QuasiOrthMatrix {
        c,
        c_dag,
        probes: used,
        kind: *kind,
    })
}

/// Draws `num_probes` random directions, rescaled so that each projection
/// `p^T x` has sample standard deviation `probe_scale`, and averages the
/// Hessians there.
///
/// Fixing the projected spread keeps the probes away from both the flat
/// region near the origin and the zeros of the characteristic function.
pub fn quasi_orth_matrix<R: Rng + ?Sized>(
    kind: &ContrastKind,
    ds: &Dataset,
    num_probes: usize,
    probe_scale: f64,
    rng: &mut R,
) -> Result<QuasiOrthMatrix> {
    if num_probes == 0 {
        return Err(IcaError::InvalidParameter(
            "num_probes must be at least 1".into(),
        ));
    }
    if !(probe_scale > 0.0) || !probe_scale.is_finite() {
        return Err(IcaError::InvalidParameter(format!(
            "probe_scale must be positive, got {probe_scale}"
        )));
    }
    let probes: Vec<DVector<f64>> = (0..num_probes)
        .map(|_| {
            let d = random_unit(ds.k(), rng);
            let var = d.dot(&(ds.cov() * &d));
            if var > 0.0 {
                d * (probe_scale / var.sqrt())
            } else {
                d
            }
        })
        .collect();
    quasi_orth_from_probes(kind, ds, &probes)
}

/// Uniform draw from the unit sphere in `R^k`.
pub fn random_unit<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(k, |_, _| std_normal(rng));
        let norm = g.norm();
        if norm > 1e-12 {
            return g / norm;
        }
    }
}
