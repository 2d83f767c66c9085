//! Modal parameters from rational models, stabilization diagrams and
//! stable-mode selection.

mod anpsd;
pub mod export;
mod modes;
mod stabilization;

pub use anpsd::anpsd;
pub use export::{modes_from_json, modes_to_json, read_modes_json, write_modes_json, write_stab_csv};
pub use modes::{
    mac, model_to_modal, normalize_shape, poles_to_modal, residues_to_shape, ModalSet, Mode, Provenance,
};
pub use stabilization::{
    build_stabilization, select_stable, Criteria, StabEntry, StabilityFlags, StabilizationDiagram,
};
