use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{evaluate_model, fit_frf, FitConfig, FitDiagnostics, RationalModel};
use crate::error::{Error, Result};
use crate::frf::{flatten_all, stack_superposed, stack_upper_triangular, truncate_band, FrfTensor, StackedFrf};
use crate::io::fmt_f64;
use crate::modal::{model_to_modal, ModalSet};

/// How an `N_out × N_in` tensor is collapsed into fitting rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stacking {
    #[default]
    Superposed,
    Triangular,
    Flat,
}

impl Stacking {
    pub fn as_str(self) -> &'static str {
        match self {
            Stacking::Superposed => "superposed",
            Stacking::Triangular => "triangular",
            Stacking::Flat => "flat",
        }
    }

    pub fn apply(self, t: &FrfTensor) -> Result<StackedFrf> {
        match self {
            Stacking::Superposed => Ok(stack_superposed(t)),
            Stacking::Triangular => stack_upper_triangular(t),
            Stacking::Flat => Ok(flatten_all(t)),
        }
    }
}

impl FromStr for Stacking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "superposed" => Ok(Stacking::Superposed),
            "triangular" => Ok(Stacking::Triangular),
            "flat" => Ok(Stacking::Flat),
            _ => Err(Error::precondition(format!(
                "unknown stacking '{s}' (expected superposed, triangular or flat)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyConfig {
    /// Band limits; `None` uses the file's own grid edge.
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub stacking: Stacking,
    pub fit: FitConfig,
}

impl IdentifyConfig {
    pub fn new(order: usize) -> Self {
        Self {
            f_min: None,
            f_max: None,
            stacking: Stacking::default(),
            fit: FitConfig::new(order),
        }
    }

    /// Band actually analysed for a given grid.
    pub fn band(&self, freq_hz: &[f64]) -> (f64, f64) {
        (
            self.f_min.unwrap_or(freq_hz[0]),
            self.f_max.unwrap_or(freq_hz[freq_hz.len() - 1]),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Identification {
    pub data: StackedFrf,
    pub model: RationalModel,
    pub diagnostics: FitDiagnostics,
    /// Modes inside the analysis band.
    pub modes: ModalSet,
}

/// Truncate, stack, fit, extract.
pub fn identify(t: &FrfTensor, cfg: &IdentifyConfig) -> Result<Identification> {
    let (f_min, f_max) = cfg.band(t.freq_hz());
    let band = truncate_band(t, f_min, f_max)?;
    let data = cfg.stacking.apply(&band)?;
    let (model, diagnostics) = fit_frf(&data, &cfg.fit)?;
    let modes = model_to_modal(&model).within_band(f_min, f_max);
    Ok(Identification {
        data,
        model,
        diagnostics,
        modes,
    })
}

fn write_fit_rows<W: Write>(data: &StackedFrf, fit: &Array2<Complex64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "freq_hz,row,data_abs,fit_abs,dev_abs")?;
    for r in 0..data.n_rows() {
        for (k, f) in data.freq_hz().iter().enumerate() {
            let d = data.rows()[[r, k]];
            let m = fit[[r, k]];
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(*f),
                r + 1,
                fmt_f64(d.norm()),
                fmt_f64(m.norm()),
                fmt_f64((d - m).norm())
            )?;
        }
    }
    w.flush()
}

/// Rows of `freq_hz,row,data_abs,fit_abs,dev_abs`, one per (row, frequency).
pub fn write_fit_csv_to<W: Write>(data: &StackedFrf, model: &RationalModel, w: W) -> Result<()> {
    let fit = evaluate_model(model, data.freq_hz())?;
    write_fit_rows(data, &fit, w).map_err(|e| Error::io("<stream>", e))
}

pub fn write_fit_csv(data: &StackedFrf, model: &RationalModel, path: &Path) -> Result<()> {
    let fit = evaluate_model(model, data.freq_hz())?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_fit_rows(data, &fit, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
