//! Dual-surface ISAC downlink simulator: geometry and channels, echo-based
//! angle sensing, SDR transmit beamforming and discrete phase search.

pub mod bisection;
pub mod config;
pub mod error;
pub mod linalg;
pub mod orchestrator;
pub mod phase;
pub mod phaseopt;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod txbf;

pub use config::{SystemConfig, Topology};
pub use error::{Error, Result};
pub use phase::{PhaseConfig, PhaseGrid};
pub use scenario::{make_scenario, synth_channels, ChannelSet, Scenario};
pub use sensing::FeasibleSetTable;
pub use orchestrator::{joint_optimize, run_experiment, Algorithm, ExperimentSpec};
