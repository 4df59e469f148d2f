//! Plain-text matrix files: comma separated, one row per line, optional
//! header line and `#` comment lines.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{IcaError, Result};

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_csv(m: &DMatrix<f64>, header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => rows.push(vals),
            // a non-numeric first data line is a header
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(IcaError::Csv(format!("line {}: {e}", lineno + 1))),
        }
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(IcaError::Csv("ragged rows".into()));
    }
    if rows.is_empty() {
        return Err(IcaError::Csv("no numeric rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(&std::fs::read_to_string(path)?)
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m, header))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_comments_are_skipped() {
        let m = parse_matrix_csv("# c\nx1,x2\n1,2\n3.5,-4e-3\n").unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m[(1, 1)], -4e-3);
    }

    #[test]
    fn ragged_rows_fail() {
        assert!(parse_matrix_csv("1,2\n3\n").is_err());
        assert!(parse_matrix_csv("1,2\nx,3\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trips_bit_exact(vals in proptest::collection::vec(-1e300f64..1e300, 6)) {
            let m = DMatrix::from_vec(3, 2, vals);
            let back = parse_matrix_csv(&matrix_to_csv(&m, None)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
