use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::compare::{compare_modes, DEFAULT_F_TOL_PCT};
use super::identify::{identify, IdentifyConfig};
use crate::beam::{
    add_awgn_channels, assemble_beam, cell_seed, channel_seed, estimate_frf_separate, modal_damping_ratios,
    retained_modes, simulate_single_input, BeamConfig, StructuralModel, TimeHistories,
};
use crate::error::{Error, Result};
use crate::frf::FrfTensor;
use crate::io::fmt_f64;
use crate::modal::{normalize_shape, ModalSet, Mode, Provenance};

/// Eigen-solution of the modes that survive sampling, as a modal set over
/// the translational outputs.
pub fn beam_reference(model: &StructuralModel, cfg: &BeamConfig) -> Result<ModalSet> {
    let zeta = modal_damping_ratios(model);
    let mut modes = Vec::new();
    for n in retained_modes(model, cfg) {
        let shape: Vec<Complex64> = model
            .output_dofs
            .iter()
            .map(|&d| Complex64::new(model.eigen.phi[(d, n)], 0.0))
            .collect();
        let f_hz = model.eigen.omega[n] / (2.0 * std::f64::consts::PI);
        modes.push(Mode {
            f_hz,
            zeta: zeta[n],
            shape: normalize_shape(&shape)?,
            pole: Mode::pole_from_parameters(f_hz, zeta[n]),
            source_orders: Vec::new(),
        });
    }
    Ok(ModalSet::new(
        modes,
        Provenance {
            selection: Some("finite-element eigen-solution".into()),
            ..Provenance::default()
        },
    ))
}

/// The simulated beam with its clean single-input records, reused across
/// noise draws.
#[derive(Debug, Clone)]
pub struct BeamOracle {
    pub cfg: BeamConfig,
    pub model: StructuralModel,
    pub reference: ModalSet,
    /// One record per input, that input alone excited.
    pub records: Vec<TimeHistories>,
}

impl BeamOracle {
    pub fn new(cfg: &BeamConfig) -> Result<Self> {
        let model = assemble_beam(cfg)?;
        let reference = beam_reference(&model, cfg)?;
        let records = (0..model.input_dofs.len())
            .map(|j| simulate_single_input(&model, cfg, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg: cfg.clone(),
            model,
            reference,
            records,
        })
    }

    /// Records with independent noise on every input and output channel.
    pub fn noisy_records(&self, percent: f64, seed: u64) -> Result<Vec<TimeHistories>> {
        self.records
            .iter()
            .enumerate()
            .map(|(j, r)| {
                Ok(TimeHistories {
                    fs_hz: r.fs_hz,
                    outputs: add_awgn_channels(&r.outputs, percent, channel_seed(seed, 2 * j))?,
                    inputs: add_awgn_channels(&r.inputs, percent, channel_seed(seed, 2 * j + 1))?,
                })
            })
            .collect()
    }

    /// FFT-ratio estimate from the (optionally noisy) records.
    pub fn estimated_frf(&self, percent: f64, seed: u64) -> Result<FrfTensor> {
        estimate_frf_separate(&self.noisy_records(percent, seed)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub levels: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub identify: IdentifyConfig,
    pub f_tol_pct: f64,
}

/// Levels studied for the beam, percent of signal standard deviation.
pub const SWEEP_LEVELS: [f64; 8] = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0, 3.0, 5.0];

impl Default for SweepConfig {
    fn default() -> Self {
        // d soaks up the background the sampled record leaves near Nyquist;
        // from order 40 up it turns collinear with a far surplus real pole
        // on clean data
        let mut identify = IdentifyConfig::new(36);
        identify.f_min = Some(2.0);
        identify.f_max = Some(480.0);
        Self {
            levels: SWEEP_LEVELS.to_vec(),
            reps: 5,
            seed: 0,
            identify,
            f_tol_pct: DEFAULT_F_TOL_PCT,
        }
    }
}

/// One reference mode in one (level, repetition) cell. Error fields are NaN
/// when no identified mode paired with the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub level_pct: f64,
    pub rep: usize,
    /// 1-based index into the reference set.
    pub mode: usize,
    pub f_err_pct: f64,
    pub zeta_err_pct: f64,
    pub mac: f64,
}

impl SweepRow {
    pub fn retrieved(&self) -> bool {
        !self.f_err_pct.is_nan()
    }
}

/// Identification of one noisy realization, compared with the reference.
pub fn sweep_cell(oracle: &BeamOracle, cfg: &SweepConfig, level_index: usize, rep: usize) -> Result<Vec<SweepRow>> {
    let level = cfg.levels[level_index];
    let seed = cell_seed(cfg.seed, level_index, rep);
    let frf = oracle.estimated_frf(level, seed)?;
    let id = identify(&frf, &cfg.identify)?;
    let cmp = compare_modes(&oracle.reference, &id.modes, cfg.f_tol_pct)?;
    Ok((0..oracle.reference.len())
        .map(|a| match cmp.pair_for_a(a) {
            Some(p) => SweepRow {
                level_pct: level,
                rep,
                mode: a + 1,
                f_err_pct: p.df_pct.abs(),
                zeta_err_pct: (p.dzeta / p.zeta_a).abs() * 100.0,
                mac: p.mac,
            },
            None => SweepRow {
                level_pct: level,
                rep,
                mode: a + 1,
                f_err_pct: f64::NAN,
                zeta_err_pct: f64::NAN,
                mac: f64::NAN,
            },
        })
        .collect())
}

/// Every (level, repetition) cell, run concurrently; rows come back in
/// level, repetition, mode order.
pub fn run_noise_sweep(oracle: &BeamOracle, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.reps < 1 {
        return Err(Error::precondition("at least one repetition is required"));
    }
    if let Some(l) = cfg.levels.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::precondition(format!("noise level must be >= 0, got {l}")));
    }
    let cells: Vec<(usize, usize)> = (0..cfg.levels.len())
        .flat_map(|l| (0..cfg.reps).map(move |r| (l, r)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(l, r)| sweep_cell(oracle, cfg, l, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn write_sweep_rows<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "level_pct,rep,mode,f_err_pct,zeta_err_pct,mac")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(r.level_pct),
            r.rep + 1,
            r.mode,
            fmt_f64(r.f_err_pct),
            fmt_f64(r.zeta_err_pct),
            fmt_f64(r.mac)
        )?;
    }
    w.flush()
}

pub fn write_sweep_csv_to<W: Write>(rows: &[SweepRow], w: W) -> std::io::Result<()> {
    write_sweep_rows(rows, w)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_sweep_rows(rows, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_has_ten_modes_at_three_percent() {
        let cfg = BeamConfig::default();
        let m = assemble_beam(&cfg).unwrap();
        let r = beam_reference(&m, &cfg).unwrap();
        assert_eq!(r.len(), 10);
        for mode in r.modes() {
            assert!((mode.zeta - 0.03).abs() < 1e-12);
            assert_eq!(mode.shape.len(), 12);
        }
    }

    #[test]
    fn noisy_records_are_reproducible() {
        let cfg = BeamConfig {
            duration_s: 2.0,
            ..BeamConfig::default()
        };
        let o = BeamOracle::new(&cfg).unwrap();
        let a = o.noisy_records(1.0, 7).unwrap();
        let b = o.noisy_records(1.0, 7).unwrap();
        let c = o.noisy_records(1.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].outputs, c[0].outputs);
        assert_ne!(a[0].inputs, o.records[0].inputs);
        assert_eq!(o.noisy_records(0.0, 7).unwrap(), o.records);
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = vec![
            SweepRow {
                level_pct: 0.1,
                rep: 0,
                mode: 1,
                f_err_pct: 0.01,
                zeta_err_pct: 1.0,
                mac: 1.0,
            },
            SweepRow {
                level_pct: 0.1,
                rep: 0,
                mode: 2,
                f_err_pct: f64::NAN,
                zeta_err_pct: f64::NAN,
                mac: f64::NAN,
            },
        ];
        assert!(!rows[1].retrieved());
        let mut buf = Vec::new();
        write_sweep_csv_to(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "level_pct,rep,mode,f_err_pct,zeta_err_pct,mac");
        assert!(lines[1].starts_with("1.0000000000000001e-1,1,1,"));
        assert!(lines[2].ends_with(",NaN,NaN,NaN"));
    }
}
