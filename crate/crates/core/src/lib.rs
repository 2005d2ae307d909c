pub mod cli;
pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod numkernel;
pub mod streaming;
pub mod training;

pub use error::{Error, Result};
