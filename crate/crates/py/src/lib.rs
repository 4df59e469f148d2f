//! Python bindings. Matrices cross the boundary as lists of rows.

use nalgebra::{DMatrix, DVector};
use noisy_ica::contrast::{self, quasi_orth_matrix, ContrastKind, ContrastVariant};
use noisy_ica::extract::{self, ExtractOptions};
use noisy_ica::meta::{self, BuiltinOptions, Candidate, Registry, DEFAULT_PROBES_PER_DIM};
use noisy_ica::rng::{derive_seed, rng_from_seed};
use noisy_ica::score::Scorer;
use noisy_ica::synth::{self, ModelSpec, SourceSpec};
use noisy_ica::IcaError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type Rows = Vec<Vec<f64>>;

fn err(e: IcaError) -> PyErr {
    match e {
        IcaError::InvalidDimension(_)
        | IcaError::InvalidParameter(_)
        | IcaError::InvalidInput(_)
        | IcaError::Config(_)
        | IcaError::Csv(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(
            "expected a non-empty rectangular list of rows",
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_variant(name: &str) -> PyResult<ContrastVariant> {
    name.parse().map_err(err)
}

/// Parses `"uniform"`, `"gaussian"`, `"bernoulli:0.01"`, `"exponential:5"`,
/// `"laplace:1"` or `"student_t:5"`.
fn parse_source(text: &str) -> PyResult<SourceSpec> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let value = |default: Option<f64>| -> PyResult<f64> {
        match arg {
            Some(a) => a
                .trim()
                .parse()
                .map_err(|_| PyValueError::new_err(format!("bad parameter in '{text}'"))),
            None => {
                default.ok_or_else(|| PyValueError::new_err(format!("'{name}' needs a parameter")))
            }
        }
    };
    let spec = match name.trim() {
        "uniform" => SourceSpec::Uniform,
        "gaussian" => SourceSpec::Gaussian,
        "bernoulli" => SourceSpec::BernoulliScaled {
            p: value(Some(synth::ZERO_KURTOSIS_P))?,
        },
        "exponential" => SourceSpec::Exponential {
            rate: value(Some(5.0))?,
        },
        "laplace" => SourceSpec::Laplace {
            scale: value(Some(1.0))?,
        },
        "student_t" => SourceSpec::StudentT { dof: value(None)? },
        other => return Err(PyValueError::new_err(format!("unknown source '{other}'"))),
    };
    spec.validate().map_err(err)?;
    Ok(spec)
}

/// Observations stored one per row.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: synth::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(rows: Rows) -> PyResult<Self> {
        Ok(PyDataset {
            inner: synth::Dataset::new(to_matrix(&rows)?).map_err(err)?,
        })
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        Ok(PyDataset {
            inner: synth::Dataset::read_csv(path.as_ref()).map_err(err)?,
        })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv(path.as_ref()).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn cov(&self) -> Rows {
        to_rows(self.inner.cov())
    }

    fn to_list(&self) -> Rows {
        to_rows(self.inner.x())
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, k={})", self.inner.n(), self.inner.k())
    }
}

/// Noisy mixing model `x = B z + g`.
#[pyclass(name = "MixingModel", frozen)]
struct PyMixingModel {
    inner: synth::MixingModel,
}

#[pymethods]
impl PyMixingModel {
    #[new]
    #[pyo3(signature = (k, rho=0.2, seed=0, sources=None))]
    fn new(k: usize, rho: f64, seed: u64, sources: Option<Vec<String>>) -> PyResult<Self> {
        let sources = match sources {
            Some(s) => s
                .iter()
                .map(|t| parse_source(t))
                .collect::<PyResult<Vec<_>>>()?,
            None => vec![SourceSpec::Uniform; k],
        };
        let inner = synth::MixingModel::from_spec(&ModelSpec {
            k,
            rho,
            seed,
            sources,
        })
        .map_err(err)?;
        Ok(PyMixingModel { inner })
    }

    #[getter]
    fn b(&self) -> Rows {
        to_rows(&self.inner.b)
    }

    #[getter]
    fn sigma(&self) -> Rows {
        to_rows(&self.inner.sigma)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    /// Draws `n` observations.
    #[pyo3(signature = (n, seed=0))]
    fn generate(&self, n: usize, seed: u64) -> PyResult<PyDataset> {
        let inner =
            synth::generate_dataset(&self.inner, n, &mut rng_from_seed(seed)).map_err(err)?;
        Ok(PyDataset { inner })
    }
}

#[pyclass(name = "DemixResult", frozen)]
struct PyDemixResult {
    inner: extract::DemixResult,
}

#[pymethods]
impl PyDemixResult {
    #[getter]
    fn u(&self) -> Rows {
        to_rows(&self.inner.u)
    }

    #[getter]
    fn v(&self) -> Rows {
        to_rows(&self.inner.v)
    }

    #[getter]
    fn b_hat(&self) -> Rows {
        to_rows(&self.inner.b_hat)
    }

    #[getter]
    fn b_hat_inv(&self) -> Rows {
        to_rows(&self.inner.b_hat_inv)
    }

    #[getter]
    fn converged(&self) -> Vec<bool> {
        self.inner.per_column.iter().map(|c| c.converged).collect()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("plain struct serializes")
    }
}

/// Estimates the mixing matrix by power iteration with one contrast.
#[pyfunction]
#[pyo3(signature = (data, contrast="chf", seed=0, restarts=5, inits=1, probes=100))]
fn demix(
    py: Python<'_>,
    data: &PyDataset,
    contrast: &str,
    seed: u64,
    restarts: usize,
    inits: usize,
    probes: usize,
) -> PyResult<PyDemixResult> {
    let variant = parse_variant(contrast)?;
    let ds = &data.inner;
    let inner = py
        .detach(|| {
            let kind = ContrastKind::new(variant);
            let mut rng = rng_from_seed(seed);
            let c = quasi_orth_matrix(
                &kind,
                ds,
                DEFAULT_PROBES_PER_DIM * ds.k(),
                variant.default_probe_scale(),
                &mut rng,
            )?;
            let opts = ExtractOptions {
                restarts,
                ..ExtractOptions::default()
            };
            if inits > 1 {
                let scorer = Scorer::new(probes, derive_seed(seed, &[1]), true);
                extract::best_of_restarts(&kind, ds, &c, inits, &mut rng, &scorer, &opts)
            } else {
                extract::extract_all(&kind, ds, &c, &mut rng, &opts)
            }
        })
        .map_err(err)?;
    Ok(PyDemixResult { inner })
}

/// Independence score of a demixing matrix as a dict.
#[pyfunction]
#[pyo3(signature = (data, demixer, probes=100, seed=0, corrected=true))]
fn score(
    py: Python<'_>,
    data: &PyDataset,
    demixer: Rows,
    probes: usize,
    seed: u64,
    corrected: bool,
) -> PyResult<std::collections::BTreeMap<String, f64>> {
    let w = to_matrix(&demixer)?;
    let report = py
        .detach(|| Scorer::new(probes, seed, corrected).score_demixer(&w, &data.inner))
        .map_err(err)?;
    Ok([
        ("mean".to_string(), report.mean),
        ("stddev".to_string(), report.stddev),
        ("num_probes".to_string(), report.num_probes as f64),
        ("failed_probes".to_string(), report.failed_probes as f64),
    ]
    .into_iter()
    .collect())
}

/// Runs the selected candidates plus external demixers and returns the
/// result as a JSON string.
#[pyfunction]
#[pyo3(signature = (data, probes=100, seed=0, candidates=None, external=None, truth=None, corrected=true))]
#[allow(clippy::too_many_arguments)]
fn run_meta(
    py: Python<'_>,
    data: &PyDataset,
    probes: usize,
    seed: u64,
    candidates: Option<Vec<String>>,
    external: Option<std::collections::BTreeMap<String, Rows>>,
    truth: Option<Rows>,
    corrected: bool,
) -> PyResult<String> {
    let names = candidates.unwrap_or_else(|| vec!["pegi".into(), "chf".into(), "cgf".into()]);
    let mut registry = Registry::builtin(BuiltinOptions::default())
        .select(&names)
        .map_err(err)?;
    for (name, rows) in external.unwrap_or_default() {
        registry
            .push(Candidate::external(name, to_matrix(&rows)?))
            .map_err(err)?;
    }
    let truth = truth.as_ref().map(to_matrix).transpose()?;
    let mut res = py
        .detach(|| {
            let mut rng = rng_from_seed(seed);
            if corrected {
                meta::run_meta(&registry, &data.inner, probes, &mut rng)
            } else {
                meta::uncorrected_meta(&registry, &data.inner, probes, &mut rng)
            }
        })
        .map_err(err)?;
    if let Some(b) = &truth {
        res.attach_truth(b);
    }
    Ok(res.to_json())
}

#[pyfunction]
fn amari_error(b_hat: Rows, b: Rows) -> PyResult<f64> {
    noisy_ica::metrics::amari_error(&to_matrix(&b_hat)?, &to_matrix(&b)?).map_err(err)
}

/// Contrast value, gradient and Hessian at `u`.
#[pyfunction]
fn evaluate_contrast(
    contrast: &str,
    u: Vec<f64>,
    data: &PyDataset,
) -> PyResult<(f64, Vec<f64>, Rows)> {
    let kind = ContrastKind::new(parse_variant(contrast)?);
    let u = DVector::from_vec(u);
    let e = contrast::evaluate(&kind, &u, &data.inner, 2).map_err(err)?;
    let grad = e.grad.expect("order 2 includes the gradient");
    let hess = e.hess.expect("order 2 includes the Hessian");
    Ok((e.value, grad.iter().copied().collect(), to_rows(&hess)))
}

#[pymodule]
fn noisy_ica_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyMixingModel>()?;
    m.add_class::<PyDemixResult>()?;
    m.add_function(wrap_pyfunction!(demix, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(run_meta, m)?)?;
    m.add_function(wrap_pyfunction!(amari_error, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_contrast, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
