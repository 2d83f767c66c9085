//! Two-plane Euler–Bernoulli cantilever used as a ground-truth oracle.

mod config;
mod fem;
mod noise;
mod sim;

pub use config::{BeamConfig, Section};
pub use fem::{
    assemble_beam, eigen_modes, modal_damping_matrix, modal_damping_ratios, Direction, Dof, DofKind,
    EigenSolution, StructuralModel,
};
pub use noise::{add_awgn, add_awgn_channels, cell_seed, channel_seed};
pub use sim::{
    estimate_frf, estimate_frf_separate, fft_grid, impulse_response, retained_modes, simulate_impulse,
    simulate_single_input, synthesize_frf_analytic, TimeHistories,
};
