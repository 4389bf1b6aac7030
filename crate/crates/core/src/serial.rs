//! Decimal-string encoding shared by every JSON artifact.
//!
//! Reals are written with 17 significant digits, which is enough for an exact
//! `f64` round trip. Complex numbers are `[re, im]` pairs and matrices are
//! row-major arrays of such pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        // keep the sign of negative zero out of the files
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("not a decimal number: {s:?}")))
}

/// A number that may arrive either as a JSON number or as a decimal string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Decimal {
    Text(String),
    Number(f64),
}

impl Decimal {
    pub fn value(&self) -> Result<f64> {
        match self {
            Decimal::Text(s) => parse_f64(s),
            Decimal::Number(x) => Ok(*x),
        }
    }

    pub fn of(x: f64) -> Self {
        Decimal::Text(format_f64(x))
    }
}

pub type ComplexJson = [Decimal; 2];

pub fn complex_to_json(z: Complex64) -> ComplexJson {
    [Decimal::of(z.re), Decimal::of(z.im)]
}

pub fn complex_from_json(z: &ComplexJson) -> Result<Complex64> {
    Ok(Complex64::new(z[0].value()?, z[1].value()?))
}

/// Row-major array of rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<ComplexJson>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| complex_to_json(m[(r, c)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    let mut m = CMatrix::zeros(nrows, ncols);
    for (r, row) in rows.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            let v = complex_from_json(z)?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidInput("non-finite matrix entry".into()));
            }
            m[(r, c)] = v;
        }
    }
    Ok(m)
}
