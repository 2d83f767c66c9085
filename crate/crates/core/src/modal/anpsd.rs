use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Average normalised power spectral density: every channel scaled to unit
/// sum over frequency, then averaged across channels.
pub fn anpsd(psd: &Array2<f64>) -> Result<Array1<f64>> {
    let (n_ch, n_freq) = psd.dim();
    if n_ch == 0 || n_freq == 0 {
        return Err(Error::precondition("ANPSD of an empty PSD array"));
    }
    let mut acc = Array1::zeros(n_freq);
    for (c, row) in psd.axis_iter(Axis(0)).enumerate() {
        if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::precondition(format!(
                "PSD channel {} has negative or non-finite values",
                c + 1
            )));
        }
        let total: f64 = row.sum();
        if total == 0.0 {
            return Err(Error::precondition(format!("PSD channel {} is identically zero", c + 1)));
        }
        acc.scaled_add(1.0 / total, &row);
    }
    Ok(acc / n_ch as f64)
}
