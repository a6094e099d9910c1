//! File formats, the training driver and the command-line front end for the
//! mutual-information POS inducer in `mimax-core`.

pub mod error;
pub mod io;
pub mod model_file;
pub mod trainer;

pub use error::{Error, ModelFileError, Result};
pub use mimax_core as core;
