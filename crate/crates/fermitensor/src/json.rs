//! JSON schemas for algebras, states, and reports.
//!
//! Complex numbers are two-element arrays `[re, im]`; matrices are row-major
//! nested arrays.

use crate::linalg::{CMat, CVec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex scalar serialized as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx(pub f64, pub f64);

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx(z.re, z.im)
    }
}

impl From<Cx> for Complex64 {
    fn from(c: Cx) -> Self {
        Complex64::new(c.0, c.1)
    }
}

pub type MatrixJson = Vec<Vec<Cx>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Cx::from(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat, String> {
    let nr = rows.len();
    if nr == 0 {
        return Err("empty matrix".into());
    }
    let nc = rows[0].len();
    if rows.iter().any(|r| r.len() != nc) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMat::from_fn(nr, nc, |i, j| rows[i][j].into()))
}

pub fn vector_to_json(v: &CVec) -> Vec<Cx> {
    v.iter().map(|&z| Cx::from(z)).collect()
}

pub fn vector_from_json(v: &[Cx]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&c| Complex64::from(c)))
}

/// On-disk description of a graded algebra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub name: String,
    pub ambient_dim: usize,
    pub basis: Vec<BasisElementJson>,
    pub grading_unitary: MatrixJson,
    pub identity_coeffs: Vec<Cx>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisElementJson {
    pub grade: i8,
    pub matrix: MatrixJson,
}

/// On-disk description of a state: values on the basis, or an ambient
/// density matrix. `algebra` is a preset name or a path to an algebra file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub algebra: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Cx>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReportJson {
    pub quantity: String,
    pub points: Vec<(usize, f64)>,
    pub fitted_rate: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResultJson {
    pub grid_params: Vec<f64>,
    pub weights: Vec<f64>,
    pub residual: f64,
    pub sites: usize,
}
