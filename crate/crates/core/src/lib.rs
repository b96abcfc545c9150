pub mod cli;
pub mod covariates;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod formula;
pub mod geometry;
pub mod io;
pub mod lgcp;
pub mod rng;
pub mod simulate;
pub mod summaries;

pub use error::{Error, Result};
