//! Fast relaxed vector fitting.

pub mod fit;
mod lsq;
pub mod model;
pub mod poles;
pub mod relocate;
pub mod residues;
pub mod weights;

pub use fit::{fit_frf, fit_frf_from, FitConfig, FitDiagnostics, IterationRecord};
pub use model::{evaluate_model, laplace, model_rmse, RationalModel};
pub use poles::{enforce_stability, initial_poles, PoleSet, PoleTerm};
pub use relocate::{pole_relocation_step, SigmaEstimate};
pub use residues::residue_fit;
pub use weights::{compute_weights, Weighting};
