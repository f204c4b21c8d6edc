//! System configuration and its flat key-value text format.
//!
//! One `key = value` pair per line, `#` starts a comment. Values are SI
//! units. Power keys also accept a `_dbm` suffix and the reference gain a
//! `_db` suffix; both are converted to linear units at parse time.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which surfaces are deployed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Topology {
    /// Two surfaces of `N_y x N_z` elements each.
    Dual,
    /// Surface 1 alone with `2 N_y x N_z` elements; surface 2 is disabled.
    Single,
}

impl Topology {
    pub fn as_str(&self) -> &'static str {
        match self {
            Topology::Dual => "dual",
            Topology::Single => "single",
        }
    }
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dual" => Ok(Topology::Dual),
            "single" => Ok(Topology::Single),
            other => Err(Error::Config(format!("unknown topology '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_tx_antennas: usize,
    pub n_ris_elements_y: usize,
    pub n_ris_elements_z: usize,
    pub n_sense_elements_y: usize,
    pub n_sense_elements_z: usize,
    pub n_users: usize,
    /// Phase-shifter resolution; the grid has `2^bits` levels.
    pub bits: u32,
    /// Transmit power budget, W.
    pub p_max: f64,
    /// Receiver noise at each user, W.
    pub noise_power_user: f64,
    /// Noise at each surface sensing element, W.
    pub noise_power_sensor: f64,
    /// Inter-element spacing, m. Shared by the BS array, surfaces and sensors.
    pub element_spacing: f64,
    pub wavelength: f64,
    pub kappa_bs_ris: f64,
    pub kappa_ris_user: f64,
    pub kappa_echo: f64,
    /// Linear power gain at the 1 m reference distance.
    pub c0: f64,
    pub snapshots: usize,
    /// Convergence tolerance for every bisection and alternating loop.
    pub tolerance: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Literal element-count switch between global and 1-D search. When
    /// unset the enumeration budget decides.
    pub size_threshold: Option<usize>,
    pub topology: Topology,
    pub enumeration_budget: u64,
    pub randomization_draws: usize,
    pub outer_iterations: usize,
    /// Cap on single-element updates in the 1-D search.
    pub od_iterations: usize,
    /// Points per axis of the MUSIC search grid over `[-pi, pi]`.
    pub music_grid: usize,
    pub solver_tolerance: f64,
    pub solver_max_iterations: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_tx_antennas: 6,
            n_ris_elements_y: 4,
            n_ris_elements_z: 4,
            n_sense_elements_y: 8,
            n_sense_elements_z: 8,
            n_users: 4,
            bits: 2,
            p_max: dbm_to_watts(30.0),
            noise_power_user: dbm_to_watts(-40.0),
            noise_power_sensor: dbm_to_watts(-40.0),
            element_spacing: 0.01,
            wavelength: 0.02,
            kappa_bs_ris: 2.2,
            kappa_ris_user: 2.5,
            kappa_echo: 2.5,
            c0: 1e-3,
            snapshots: 1000,
            tolerance: 1e-3,
            tau_min: 0.0,
            tau_max: 10.0,
            size_threshold: None,
            topology: Topology::Dual,
            enumeration_budget: 1_000_000,
            randomization_draws: 100,
            outer_iterations: 100,
            od_iterations: 1000,
            music_grid: 181,
            solver_tolerance: 1e-7,
            solver_max_iterations: 200,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    /// Reflecting elements per surface before topology is applied.
    pub fn n_ris_elements(&self) -> usize {
        self.n_ris_elements_y * self.n_ris_elements_z
    }

    pub fn n_sense_elements(&self) -> usize {
        self.n_sense_elements_y * self.n_sense_elements_z
    }

    /// `(N_y, N_z)` of every active surface under the configured topology.
    pub fn surface_dims(&self) -> Vec<(usize, usize)> {
        match self.topology {
            Topology::Dual => vec![(self.n_ris_elements_y, self.n_ris_elements_z); 2],
            Topology::Single => vec![(2 * self.n_ris_elements_y, self.n_ris_elements_z)],
        }
    }

    pub fn phase_levels(&self) -> usize {
        1usize << self.bits
    }

    /// `2 pi d / lambda`.
    pub fn phase_rate_scale(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.element_spacing / self.wavelength
    }

    /// Check every invariant; the message names the first violated one.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        let counts = [
            ("n_tx_antennas", self.n_tx_antennas),
            ("n_ris_elements_y", self.n_ris_elements_y),
            ("n_ris_elements_z", self.n_ris_elements_z),
            ("n_sense_elements_y", self.n_sense_elements_y),
            ("n_sense_elements_z", self.n_sense_elements_z),
            ("n_users", self.n_users),
            ("snapshots", self.snapshots),
            ("randomization_draws", self.randomization_draws),
            ("outer_iterations", self.outer_iterations),
            ("od_iterations", self.od_iterations),
            ("solver_max_iterations", self.solver_max_iterations),
        ];
        for (name, v) in counts {
            if v < 1 {
                return fail(&format!("{name} must be >= 1"));
            }
        }
        if self.n_tx_antennas <= self.n_users {
            return fail("n_tx_antennas must exceed n_users (N_t > K)");
        }
        if self.n_users >= self.n_sense_elements() {
            return fail("n_users must be smaller than the sensing element count (K < M)");
        }
        if self.bits < 1 || self.bits > 16 {
            return fail("bits must lie in 1..=16");
        }
        let positive = [
            ("p_max", self.p_max),
            ("noise_power_user", self.noise_power_user),
            ("noise_power_sensor", self.noise_power_sensor),
            ("element_spacing", self.element_spacing),
            ("wavelength", self.wavelength),
            ("c0", self.c0),
            ("tolerance", self.tolerance),
            ("solver_tolerance", self.solver_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(&format!("{name} must be positive and finite"));
            }
        }
        for (name, v) in [
            ("kappa_bs_ris", self.kappa_bs_ris),
            ("kappa_ris_user", self.kappa_ris_user),
            ("kappa_echo", self.kappa_echo),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(&format!("{name} must be non-negative"));
            }
        }
        if ((self.element_spacing - self.wavelength / 2.0) / self.wavelength).abs() > 1e-9 {
            return fail("element_spacing must equal wavelength / 2");
        }
        if !(self.tau_min >= 0.0 && self.tau_min < self.tau_max && self.tau_max.is_finite()) {
            return fail("bisection bounds must satisfy 0 <= tau_min < tau_max");
        }
        if self.music_grid < 3 {
            return fail("music_grid must be >= 3");
        }
        if self.enumeration_budget < 1 {
            return fail("enumeration_budget must be >= 1");
        }
        if self.size_threshold == Some(0) {
            return fail("size_threshold must be >= 1 when set");
        }
        Ok(())
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::Config(format!("{key}: cannot parse '{v}' as {what}"));
        let uint = || v.parse::<usize>().map_err(|_| bad("an unsigned integer"));
        let real = || v.parse::<f64>().map_err(|_| bad("a number"));
        match key {
            "n_tx_antennas" => self.n_tx_antennas = uint()?,
            "n_ris_elements" => {
                let n = uint()?;
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    return Err(Error::Config(format!("{key}: {n} is not a perfect square")));
                }
                self.n_ris_elements_y = side;
                self.n_ris_elements_z = side;
            }
            "n_ris_elements_y" => self.n_ris_elements_y = uint()?,
            "n_ris_elements_z" => self.n_ris_elements_z = uint()?,
            "n_sense_elements_y" => self.n_sense_elements_y = uint()?,
            "n_sense_elements_z" => self.n_sense_elements_z = uint()?,
            "n_users" => self.n_users = uint()?,
            "bits" => self.bits = v.parse().map_err(|_| bad("an unsigned integer"))?,
            "p_max" => self.p_max = real()?,
            "p_max_dbm" => self.p_max = dbm_to_watts(real()?),
            "noise_power_user" => self.noise_power_user = real()?,
            "noise_power_user_dbm" => self.noise_power_user = dbm_to_watts(real()?),
            "noise_power_sensor" => self.noise_power_sensor = real()?,
            "noise_power_sensor_dbm" => self.noise_power_sensor = dbm_to_watts(real()?),
            "element_spacing" => self.element_spacing = real()?,
            "wavelength" => self.wavelength = real()?,
            "kappa_bs_ris" => self.kappa_bs_ris = real()?,
            "kappa_ris_user" => self.kappa_ris_user = real()?,
            "kappa_echo" => self.kappa_echo = real()?,
            "c0" => self.c0 = real()?,
            "c0_db" => self.c0 = db_to_linear(real()?),
            "snapshots" => self.snapshots = uint()?,
            "tolerance" => self.tolerance = real()?,
            "tau_min" => self.tau_min = real()?,
            "tau_max" => self.tau_max = real()?,
            "size_threshold" => {
                self.size_threshold = match v {
                    "none" | "" => None,
                    _ => Some(uint()?),
                }
            }
            "topology" => self.topology = v.parse()?,
            "enumeration_budget" => {
                self.enumeration_budget = v.parse().map_err(|_| bad("an unsigned integer"))?
            }
            "randomization_draws" => self.randomization_draws = uint()?,
            "outer_iterations" => self.outer_iterations = uint()?,
            "od_iterations" => self.od_iterations = uint()?,
            "music_grid" => self.music_grid = uint()?,
            "solver_tolerance" => self.solver_tolerance = real()?,
            "solver_max_iterations" => self.solver_max_iterations = uint()?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parse key-value text on top of the defaults, then validate.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        for (line, key, value) in key_values(text)? {
            cfg.set(&key, &value).map_err(|e| match e {
                Error::Config(message) => Error::Parse { line, message },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Render every field in SI units, one key per line, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("n_tx_antennas", self.n_tx_antennas.to_string());
        put("n_ris_elements_y", self.n_ris_elements_y.to_string());
        put("n_ris_elements_z", self.n_ris_elements_z.to_string());
        put("n_sense_elements_y", self.n_sense_elements_y.to_string());
        put("n_sense_elements_z", self.n_sense_elements_z.to_string());
        put("n_users", self.n_users.to_string());
        put("bits", self.bits.to_string());
        put("p_max", self.p_max.to_string());
        put("noise_power_user", self.noise_power_user.to_string());
        put("noise_power_sensor", self.noise_power_sensor.to_string());
        put("element_spacing", self.element_spacing.to_string());
        put("wavelength", self.wavelength.to_string());
        put("kappa_bs_ris", self.kappa_bs_ris.to_string());
        put("kappa_ris_user", self.kappa_ris_user.to_string());
        put("kappa_echo", self.kappa_echo.to_string());
        put("c0", self.c0.to_string());
        put("snapshots", self.snapshots.to_string());
        put("tolerance", self.tolerance.to_string());
        put("tau_min", self.tau_min.to_string());
        put("tau_max", self.tau_max.to_string());
        put(
            "size_threshold",
            self.size_threshold.map_or("none".to_string(), |n| n.to_string()),
        );
        put("topology", self.topology.as_str().to_string());
        put("enumeration_budget", self.enumeration_budget.to_string());
        put("randomization_draws", self.randomization_draws.to_string());
        put("outer_iterations", self.outer_iterations.to_string());
        put("od_iterations", self.od_iterations.to_string());
        put("music_grid", self.music_grid.to_string());
        put("solver_tolerance", self.solver_tolerance.to_string());
        put("solver_max_iterations", self.solver_max_iterations.to_string());
        s
    }
}

/// Split key-value text into `(line number, key, value)` triples.
pub fn key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SystemConfig::default().validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = SystemConfig::default();
        cfg.bits = 4;
        cfg.size_threshold = Some(20);
        cfg.topology = Topology::Single;
        let back = SystemConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn db_suffixes_convert() {
        let cfg = SystemConfig::parse("p_max_dbm = 40\nnoise_power_user_dbm = -40\nc0_db = -30").unwrap();
        assert!((cfg.p_max - 10.0).abs() < 1e-12);
        assert!((cfg.noise_power_user - 1e-7).abs() < 1e-20);
        assert!((cfg.c0 - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn nt_not_above_k_is_rejected() {
        let err = SystemConfig::parse("n_tx_antennas = 4\nn_users = 4").unwrap_err();
        match err {
            Error::Config(m) => assert!(m.contains("N_t > K"), "{m}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn spacing_must_be_half_wavelength() {
        assert!(SystemConfig::parse("element_spacing = 0.02").is_err());
    }

    #[test]
    fn unknown_key_reports_line() {
        match SystemConfig::parse("# header\nbits = 2\nfoo = 1").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn square_surface_shorthand() {
        let cfg = SystemConfig::parse("n_ris_elements = 49").unwrap();
        assert_eq!((cfg.n_ris_elements_y, cfg.n_ris_elements_z), (7, 7));
        assert!(SystemConfig::parse("n_ris_elements = 20").is_err());
    }

    #[test]
    fn single_topology_doubles_rows() {
        let cfg = SystemConfig { topology: Topology::Single, ..Default::default() };
        assert_eq!(cfg.surface_dims(), vec![(8, 4)]);
    }
}
