//! Experiment harness behind the `tast` binary: manifests, Monte Carlo
//! sweeps, certification reports and plots.

pub mod certify;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;

pub use config::Config;
pub use error::CliError;
