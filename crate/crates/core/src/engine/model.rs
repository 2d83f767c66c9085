use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::poles::PoleSet;
use crate::error::{Error, Result};
use crate::frf::{StackedFrf, StackingKind};

/// `H_r(s) = Σ_n c_rn/(s - a_n) + d_r + s·e_r` for every stacked row.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalModel {
    pub poles: PoleSet,
    /// `[N_rows × N]`, columns follow `poles.poles()`.
    pub residues: Array2<Complex64>,
    pub d_terms: Array1<Complex64>,
    pub e_terms: Array1<Complex64>,
    pub row_to_output: Vec<usize>,
    pub stacking: StackingKind,
    /// Input count of the tensor the rows were stacked from.
    pub source_inputs: usize,
}

impl RationalModel {
    pub fn n_rows(&self) -> usize {
        self.residues.nrows()
    }
}

/// Laplace variable `i·2π·f` for each frequency.
pub fn laplace(freq_hz: &[f64]) -> Vec<Complex64> {
    freq_hz
        .iter()
        .map(|&f| Complex64::new(0.0, 2.0 * PI * f))
        .collect()
}

pub fn evaluate_model(m: &RationalModel, freq_hz: &[f64]) -> Result<Array2<Complex64>> {
    let poles = m.poles.poles();
    let s = laplace(freq_hz);
    for &sk in &s {
        if let Some(p) = poles.iter().find(|&&p| p == sk) {
            return Err(Error::precondition(format!(
                "model evaluated exactly at pole {p}"
            )));
        }
    }
    let mut out = Array2::zeros((m.n_rows(), s.len()));
    for (k, &sk) in s.iter().enumerate() {
        let inv: Vec<Complex64> = poles.iter().map(|&p| (sk - p).inv()).collect();
        for r in 0..m.n_rows() {
            let mut h = m.d_terms[r] + sk * m.e_terms[r];
            for (c, g) in m.residues.row(r).iter().zip(&inv) {
                h += c * g;
            }
            out[[r, k]] = h;
        }
    }
    Ok(out)
}

/// Per-row `√(mean_k |H_fit - H_data|²)`.
pub fn model_rmse(m: &RationalModel, data: &StackedFrf) -> Result<Array1<f64>> {
    if data.n_rows() != m.n_rows() {
        return Err(Error::precondition(format!(
            "model has {} rows, data has {}",
            m.n_rows(),
            data.n_rows()
        )));
    }
    let fit = evaluate_model(m, data.freq_hz())?;
    Ok(rmse_rows(&fit, data.rows()))
}

pub(crate) fn rmse_rows(fit: &Array2<Complex64>, data: &Array2<Complex64>) -> Array1<f64> {
    let n = fit.ncols() as f64;
    Array1::from_iter(
        fit.rows()
            .into_iter()
            .zip(data.rows())
            .map(|(a, b)| (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / n).sqrt()),
    )
}
