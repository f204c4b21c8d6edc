//! Shared fixtures for the benchmarks.

use dualris_core::linalg::{CVec, C64};
use dualris_core::phase::PhaseConfig;
use dualris_core::sensing::{sense_surface, SensingOutcome};
use dualris_core::txbf::{combine_channels, CombinedChannels};
use dualris_core::{make_scenario, synth_channels, ChannelSet, Scenario, SystemConfig};

/// Deployment, channels and sensing results of the default configuration.
pub struct Fixture {
    pub config: SystemConfig,
    pub scenario: Scenario,
    pub channels: ChannelSet,
    pub sensing: Vec<SensingOutcome>,
}

impl Fixture {
    pub fn new(config: SystemConfig, seed: u64) -> Fixture {
        let scenario = make_scenario(&config, seed).expect("valid configuration");
        let channels = synth_channels(&scenario, &config).expect("channels");
        let sensing = (0..channels.surfaces.len())
            .map(|i| sense_surface(&scenario, &channels, &config, i, seed).expect("sensing"))
            .collect();
        Fixture { config, scenario, channels, sensing }
    }

    /// Phases at the arc representatives of every surface.
    pub fn initial_phases(&self) -> Vec<PhaseConfig> {
        self.sensing.iter().map(|s| PhaseConfig::discrete(s.table.grid, s.table.representatives())).collect()
    }

    pub fn combined(&self) -> CombinedChannels {
        combine_channels(&self.channels, &self.initial_phases()).expect("combined channels")
    }

    /// Equal-power beams along each user's conjugate channel.
    pub fn matched_beams(&self) -> Vec<CVec> {
        let combined = self.combined();
        let k = combined.n_users() as f64;
        combined
            .rows
            .iter()
            .map(|h| {
                let w = h.map(|z| z.conj());
                let n = w.norm().max(f64::MIN_POSITIVE);
                w * C64::from((self.config.p_max / k).sqrt() / n)
            })
            .collect()
    }
}
