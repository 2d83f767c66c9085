use ndarray::{Array1, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude floor relative to the row maximum.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    None,
    #[default]
    InverseSqrtMagnitude,
}

/// Weak inverse-magnitude weights `1/√|f(s_k)|`, with `|f|` floored at
/// `1e-12·max|f|`.
pub fn compute_weights(row: ArrayView1<'_, Complex64>) -> Result<Array1<f64>> {
    let max = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::precondition("cannot weight identically-zero channel"));
    }
    let floor = WEIGHT_FLOOR * max;
    Ok(row.mapv(|v| 1.0 / v.norm().max(floor).sqrt()))
}

pub(crate) fn row_weights(row: ArrayView1<'_, Complex64>, scheme: Weighting) -> Result<Array1<f64>> {
    match scheme {
        Weighting::None => Ok(Array1::ones(row.len())),
        Weighting::InverseSqrtMagnitude => compute_weights(row),
    }
}
