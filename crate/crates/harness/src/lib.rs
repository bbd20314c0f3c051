//! Experiment harness: TOML configs, parallel sweeps, CSV output, plot
//! scripts and detection curves.

pub mod config;
pub mod detection;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod oracle;

pub use config::{parse_config, parse_config_str, ExperimentConfig, ExperimentKind, ExperimentSpec, Profile};
pub use detection::{detection_probability, detection_probability_monte_carlo};
pub use experiment::{point_scenario, run_experiment, RunOptions, RunRecord};
