pub mod beam;
pub mod engine;
pub mod error;
pub mod frf;
pub mod io;
pub mod modal;
pub mod pipeline;

pub use error::{Error, Result};
