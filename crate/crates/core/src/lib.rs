pub mod cli;
pub mod decomposition;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod numerics;
pub mod oracle;
pub mod phases;
pub mod scenarios;
pub mod speedlimits;
pub mod tolerances;

pub use error::{Error, Result};
