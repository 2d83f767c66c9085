use std::f64::consts::PI;

use ndarray::{Array2, Array3, ArrayView1};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::config::BeamConfig;
use super::fem::{modal_damping_ratios, StructuralModel};
use crate::error::{Error, Result};
use crate::frf::{FrfTensor, UnitKind};
use crate::io::{ThKind, ThRecord};

/// Sampled excitation and response records sharing one clock.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHistories {
    pub fs_hz: f64,
    /// `[n_out × n_samp]`, displacements in m.
    pub outputs: Array2<f64>,
    /// `[n_in × n_samp]`, forces in N.
    pub inputs: Array2<f64>,
}

impl TimeHistories {
    pub fn n_samp(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn output_record(&self) -> ThRecord {
        ThRecord {
            fs_hz: self.fs_hz,
            kind: ThKind::Output,
            data: self.outputs.clone(),
        }
    }

    pub fn input_record(&self) -> ThRecord {
        ThRecord {
            fs_hz: self.fs_hz,
            kind: ThKind::Input,
            data: self.inputs.clone(),
        }
    }

    pub fn from_records(outputs: ThRecord, inputs: ThRecord) -> Result<Self> {
        if outputs.fs_hz != inputs.fs_hz {
            return Err(Error::invalid(format!(
                "sampling rates differ: {} vs {}",
                outputs.fs_hz, inputs.fs_hz
            )));
        }
        if outputs.data.ncols() != inputs.data.ncols() {
            return Err(Error::invalid(format!(
                "record lengths differ: {} vs {}",
                outputs.data.ncols(),
                inputs.data.ncols()
            )));
        }
        Ok(Self {
            fs_hz: outputs.fs_hz,
            outputs: outputs.data,
            inputs: inputs.data,
        })
    }
}

/// Modes that survive the sampling chain: all of them, or only those below
/// Nyquist when `cfg.anti_alias` is set.
pub fn retained_modes(model: &StructuralModel, cfg: &BeamConfig) -> Vec<usize> {
    let nyquist = cfg.fs_hz / 2.0;
    (0..model.eigen.omega.len())
        .filter(|&n| !cfg.anti_alias || model.eigen.omega[n] / (2.0 * PI) < nyquist)
        .collect()
}

/// Impulse response by exact modal superposition. `forces[j]` is the
/// amplitude of a one-sample pulse on input DoF `j` at sample 0.
pub fn impulse_response(
    model: &StructuralModel,
    modes: &[usize],
    forces: &[f64],
    fs_hz: f64,
    n_samp: usize,
) -> Result<TimeHistories> {
    let n_in = model.input_dofs.len();
    if forces.len() != n_in {
        return Err(Error::precondition(format!(
            "expected {n_in} force amplitudes, got {}",
            forces.len()
        )));
    }
    let dt = 1.0 / fs_hz;
    let zeta = modal_damping_ratios(model);
    let phi = &model.eigen.phi;
    let mut outputs = Array2::zeros((model.output_dofs.len(), n_samp));
    for &n in modes {
        let w = model.eigen.omega[n];
        let z = zeta[n];
        if z >= 1.0 {
            return Err(Error::precondition(format!("mode {} is not underdamped", n + 1)));
        }
        let wd = w * (1.0 - z * z).sqrt();
        // initial modal velocity from the impulse F·dt per unit modal mass
        let v0: f64 = model
            .input_dofs
            .iter()
            .zip(forces)
            .map(|(&d, f)| phi[(d, n)] * f * dt)
            .sum();
        if v0 == 0.0 {
            continue;
        }
        let q: Vec<f64> = (0..n_samp)
            .map(|k| {
                let t = k as f64 * dt;
                v0 / wd * (-z * w * t).exp() * (wd * t).sin()
            })
            .collect();
        for (o, &d) in model.output_dofs.iter().enumerate() {
            let a = phi[(d, n)];
            for (x, qk) in outputs.row_mut(o).iter_mut().zip(&q) {
                *x += a * qk;
            }
        }
    }
    let mut inputs = Array2::zeros((n_in, n_samp));
    for (j, &f) in forces.iter().enumerate() {
        inputs[(j, 0)] = f;
    }
    Ok(TimeHistories {
        fs_hz,
        outputs,
        inputs,
    })
}

/// Both unit impulses applied together at sample 0.
pub fn simulate_impulse(model: &StructuralModel, cfg: &BeamConfig) -> Result<TimeHistories> {
    let forces = vec![1.0; model.input_dofs.len()];
    impulse_response(model, &retained_modes(model, cfg), &forces, cfg.fs_hz, cfg.n_samples())
}

/// Unit impulse on input `j` only; the other input records stay zero.
pub fn simulate_single_input(model: &StructuralModel, cfg: &BeamConfig, j: usize) -> Result<TimeHistories> {
    let n_in = model.input_dofs.len();
    if j >= n_in {
        return Err(Error::precondition(format!("input {j} out of range (n_in = {n_in})")));
    }
    let mut forces = vec![0.0; n_in];
    forces[j] = 1.0;
    impulse_response(model, &retained_modes(model, cfg), &forces, cfg.fs_hz, cfg.n_samples())
}

/// Receptance from the modal expansion, over all modes of the model.
pub fn synthesize_frf_analytic(model: &StructuralModel, freq_hz: &[f64]) -> Result<FrfTensor> {
    let zeta = modal_damping_ratios(model);
    let phi = &model.eigen.phi;
    let (n_out, n_in) = (model.output_dofs.len(), model.input_dofs.len());
    let mut values = Array3::zeros((n_out, n_in, freq_hz.len()));
    for (k, &f) in freq_hz.iter().enumerate() {
        let w = 2.0 * PI * f;
        let den: Vec<Complex64> = model
            .eigen
            .omega
            .iter()
            .zip(&zeta)
            .map(|(&wn, &z)| Complex64::new(wn * wn - w * w, 2.0 * z * wn * w))
            .collect();
        for (o, &do_) in model.output_dofs.iter().enumerate() {
            for (i, &di) in model.input_dofs.iter().enumerate() {
                values[(o, i, k)] = den
                    .iter()
                    .enumerate()
                    .map(|(n, d)| phi[(do_, n)] * phi[(di, n)] / d)
                    .sum();
            }
        }
    }
    FrfTensor::new(values, freq_hz.to_vec(), UnitKind::Receptance)
}

const MIN_INPUT_SPECTRUM: f64 = 1e-12;

/// FFT grid kept by the estimator: bins 1..=n/2, DC excluded.
pub fn fft_grid(fs_hz: f64, n_samp: usize) -> Vec<f64> {
    (1..=n_samp / 2).map(|k| k as f64 * fs_hz / n_samp as f64).collect()
}

fn spectrum(planner: &mut FftPlanner<f64>, x: ArrayView1<f64>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn ratio_columns(th: &TimeHistories, values: &mut Array3<Complex64>, inputs: &[usize], column: Option<usize>) -> Result<()> {
    let n = th.n_samp();
    let mut planner = FftPlanner::new();
    let grid = fft_grid(th.fs_hz, n);
    let outs: Vec<Vec<Complex64>> = th.outputs.rows().into_iter().map(|r| spectrum(&mut planner, r)).collect();
    for &j in inputs {
        let u = spectrum(&mut planner, th.inputs.row(j));
        for (k, f) in grid.iter().enumerate() {
            if u[k + 1].norm() < MIN_INPUT_SPECTRUM {
                return Err(Error::precondition(format!(
                    "input {} spectrum below {MIN_INPUT_SPECTRUM:e} at {f} Hz",
                    j + 1
                )));
            }
        }
        let col = column.unwrap_or(j);
        for (o, y) in outs.iter().enumerate() {
            for k in 0..grid.len() {
                values[(o, col, k)] = y[k + 1] / u[k + 1];
            }
        }
    }
    Ok(())
}

/// `H_ij = FFT(y_i) / FFT(u_j)` on the one-sided grid, rectangular window.
/// With simultaneous equal impulses every column is the superposed response.
pub fn estimate_frf(th: &TimeHistories) -> Result<FrfTensor> {
    let n = th.n_samp();
    if n < 4 {
        return Err(Error::precondition("records need at least 4 samples"));
    }
    let n_in = th.inputs.nrows();
    let grid = fft_grid(th.fs_hz, n);
    let mut values = Array3::zeros((th.outputs.nrows(), n_in, grid.len()));
    ratio_columns(th, &mut values, &(0..n_in).collect::<Vec<_>>(), None)?;
    FrfTensor::new(values, grid, UnitKind::Receptance)
}

/// Per-input tensor from separate single-input records: column `j` comes
/// from `records[j]` divided by its own input `j`.
pub fn estimate_frf_separate(records: &[TimeHistories]) -> Result<FrfTensor> {
    let first = records
        .first()
        .ok_or_else(|| Error::precondition("no records to estimate from"))?;
    let n = first.n_samp();
    if n < 4 {
        return Err(Error::precondition("records need at least 4 samples"));
    }
    for r in records {
        if r.fs_hz != first.fs_hz || r.n_samp() != n || r.outputs.nrows() != first.outputs.nrows() {
            return Err(Error::invalid("single-input records do not share a layout"));
        }
        if r.inputs.nrows() != records.len() {
            return Err(Error::invalid(format!(
                "{} records for {} inputs",
                records.len(),
                r.inputs.nrows()
            )));
        }
    }
    let grid = fft_grid(first.fs_hz, n);
    let mut values = Array3::zeros((first.outputs.nrows(), records.len(), grid.len()));
    for (j, r) in records.iter().enumerate() {
        ratio_columns(r, &mut values, &[j], Some(j))?;
    }
    FrfTensor::new(values, grid, UnitKind::Receptance)
}
