//! End-to-end workflows built from the data, engine, modal and beam layers.

mod compare;
mod identify;
mod psd;
mod sweep;

pub use compare::{
    compare_modes, write_comparison_csv, write_comparison_csv_to, Comparison, ModePair, DEFAULT_F_TOL_PCT,
};
pub use identify::{identify, write_fit_csv, write_fit_csv_to, Identification, IdentifyConfig, Stacking};
pub use psd::{frf_power, periodogram, write_anpsd_csv, write_psd_csv};
pub use sweep::{
    beam_reference, run_noise_sweep, sweep_cell, write_sweep_csv, write_sweep_csv_to, BeamOracle, SweepConfig,
    SweepRow, SWEEP_LEVELS,
};
