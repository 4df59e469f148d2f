use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{IcaError, Result};
use crate::io;
use crate::linalg;

/// An `n x k` sample matrix (rows are observations) with its mean and
/// covariance computed once at construction.
///
/// Immutable after construction; clones share nothing but are cheap enough
/// for the dimensions used here.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    centered: DMatrix<f64>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(IcaError::InvalidDimension(format!(
                "dataset must be non-empty, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(IcaError::InvalidInput(
                "dataset has non-finite entries".into(),
            ));
        }
        let mean = linalg::column_means(&x);
        let centered = linalg::center_rows(&x, &mean);
        let cov = if x.nrows() < 2 {
            DMatrix::zeros(x.ncols(), x.ncols())
        } else {
            linalg::gram(&centered) / x.nrows() as f64
        };
        Ok(Dataset {
            x,
            centered,
            mean,
            cov,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Rows minus the sample mean.
    pub fn centered(&self) -> &DMatrix<f64> {
        &self.centered
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Sample covariance with divisor `n` (zero matrix when `n == 1`).
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Applies `x -> M x` to every observation.
    pub fn transform(&self, m: &DMatrix<f64>) -> Result<Dataset> {
        if m.ncols() != self.k() {
            return Err(IcaError::InvalidDimension(format!(
                "transform has {} columns, data has {}",
                m.ncols(),
                self.k()
            )));
        }
        Dataset::new(&self.x * m.transpose())
    }

    /// First `n` rows as a new dataset.
    pub fn head(&self, n: usize) -> Result<Dataset> {
        let n = n.min(self.n());
        Dataset::new(self.x.rows(0, n).into_owned())
    }

    pub fn header(&self) -> Vec<String> {
        (1..=self.k()).map(|j| format!("x{j}")).collect()
    }

    pub fn to_csv(&self) -> String {
        io::matrix_to_csv(&self.x, Some(&self.header()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        Dataset::new(io::read_matrix_csv(path)?)
    }
}
