use serde::{Deserialize, Serialize};

use super::model::{evaluate_model, rmse_rows, RationalModel};
use super::poles::{enforce_stability, initial_poles, PoleSet};
use super::relocate::{relocate, Prepared};
use super::residues::fit_residues;
use super::weights::Weighting;
use crate::error::{Error, Result};
use crate::frf::StackedFrf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of poles, conjugates counted individually.
    pub order: usize,
    pub iterations: usize,
    pub weighting: Weighting,
    pub include_d: bool,
    pub include_e: bool,
    pub relax: bool,
    /// Real-to-imaginary ratio of the starting poles.
    pub imag_ratio: f64,
}

impl FitConfig {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            iterations: 5,
            weighting: Weighting::InverseSqrtMagnitude,
            include_d: true,
            include_e: true,
            relax: true,
            imag_ratio: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::precondition(format!(
                "model order must be at least 2, got {}",
                self.order
            )));
        }
        if self.iterations < 1 {
            return Err(Error::precondition("at least one iteration is required"));
        }
        if !(self.imag_ratio.is_finite() && self.imag_ratio > 0.0) {
            return Err(Error::precondition(format!(
                "imag_ratio must be positive, got {}",
                self.imag_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Largest `|a_new - a_old|/|a_new|` over the relocated poles.
    pub max_pole_change: f64,
    pub condition: f64,
    pub rank: usize,
    pub sigma_const: f64,
    pub sigma_const_guarded: bool,
    pub relaxation_scale: f64,
    /// Poles reflected or shifted into the left half-plane.
    pub stabilized_poles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub order: usize,
    pub n_rows: usize,
    pub n_freq: usize,
    pub config: FitConfig,
    /// Right-hand side of the relaxation row before scaling.
    pub relaxation_target: f64,
    pub iterations: Vec<IterationRecord>,
    pub residue_condition: Vec<f64>,
    pub row_rmse: Vec<f64>,
    /// `row_rmse` divided by the row's peak magnitude.
    pub row_rmse_relative: Vec<f64>,
}

impl FitDiagnostics {
    pub fn guard_activations(&self) -> usize {
        self.iterations.iter().filter(|r| r.sigma_const_guarded).count()
    }
}

fn max_relative_change(old: &PoleSet, new: &PoleSet) -> f64 {
    let old = old.poles();
    new.poles()
        .iter()
        .map(|p| {
            let nearest = old
                .iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            nearest / p.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Full fit from uniformly spaced starting poles over the data band.
pub fn fit_frf(data: &StackedFrf, cfg: &FitConfig) -> Result<(RationalModel, FitDiagnostics)> {
    cfg.validate()?;
    let freq = data.freq_hz();
    let start = initial_poles(freq[0], freq[freq.len() - 1], cfg.order, cfg.imag_ratio)?;
    fit_frf_from(data, cfg, start)
}

/// Full fit from caller-supplied starting poles; `cfg.order` is ignored in
/// favour of the pole count.
pub fn fit_frf_from(
    data: &StackedFrf,
    cfg: &FitConfig,
    start: PoleSet,
) -> Result<(RationalModel, FitDiagnostics)> {
    if cfg.iterations < 1 {
        return Err(Error::precondition("at least one iteration is required"));
    }
    let prep = Prepared::new(data, cfg)?;
    let mut poles = start;
    let mut history = Vec::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        let (raw, sigma) = relocate(data, &poles, cfg, &prep).map_err(|e| e.at_iteration(it))?;
        let stable = enforce_stability(&raw);
        let reflected = raw
            .poles()
            .iter()
            .filter(|p| p.re >= 0.0)
            .count();
        history.push(IterationRecord {
            iteration: it,
            max_pole_change: max_relative_change(&poles, &stable),
            condition: sigma.condition,
            rank: sigma.rank,
            sigma_const: sigma.sigma_const,
            sigma_const_guarded: sigma.guarded,
            relaxation_scale: sigma.relaxation_scale,
            stabilized_poles: reflected,
        });
        poles = stable;
    }
    let (model, residue_condition) = fit_residues(data, &poles, cfg, &prep)?;
    let fit = evaluate_model(&model, data.freq_hz())?;
    let row_rmse = rmse_rows(&fit, data.rows()).to_vec();
    let row_rmse_relative = row_rmse
        .iter()
        .zip(data.rows().rows())
        .map(|(e, row)| e / row.iter().map(|v| v.norm()).fold(0.0, f64::max))
        .collect();
    let diagnostics = FitDiagnostics {
        order: poles.order(),
        n_rows: data.n_rows(),
        n_freq: data.n_freq(),
        config: cfg.clone(),
        relaxation_target: data.n_freq() as f64,
        iterations: history,
        residue_condition,
        row_rmse,
        row_rmse_relative,
    };
    Ok((model, diagnostics))
}
