pub mod config;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod io;
pub mod runner;

pub use config::{ExperimentConfig, Kind};
pub use error::{LabError, Result};
pub use fft::RustFftPlanner;
pub use io::Summary;
