//! Deployment geometry, array responses and line-of-sight channel synthesis.
//!
//! Angle convention: for a unit direction `r` leaving a surface (normal
//! `+x`, element rows along `y`, columns along `z`) the elevation is
//! `asin(r_z)` and the azimuth `atan2(r_y, r_x)`. Phase rates follow
//! `u = 2 pi d/lambda cos(elev) sin(azim)`, `v = 2 pi d/lambda sin(azim)`
//! and are applied uniformly to every surface and sensing array. The BS
//! array lies along `y`; its phase rate toward a point is
//! `2 pi d/lambda sin(azim)` with `sin(azim) = r_y`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{cis, kron, outer, CMat, CVec, C64};
use crate::rng::{stream, TAG_SCENARIO};

pub const BS_POSITION: [f64; 3] = [10.0, 0.0, 10.0];
/// Distances from the BS to surface 1 and surface 2.
pub const RIS_DISTANCES: [f64; 2] = [45.0, 50.0];
/// Lateral (`y`) offsets of the two surfaces on the `x = 0` wall.
pub const RIS_LATERAL: [f64; 2] = [20.0, -20.0];
pub const USER_RANGE: (f64, f64) = (40.0, 70.0);
/// Sampling box for users in the `x > 0` half-space.
const USER_BOX: [(f64, f64); 3] = [(5.0, 70.0), (-60.0, 60.0), (0.0, 20.0)];
pub const REFERENCE_DISTANCE: f64 = 1.0;

/// Power gain `c0 (distance / 1 m)^-kappa`.
pub fn path_loss(distance: f64, kappa: f64, c0: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("path loss distance must be positive, got {distance}")));
    }
    Ok(c0 * (distance / REFERENCE_DISTANCE).powf(-kappa))
}

/// Uniform linear array response `[1, e^{jv}, ..., e^{j(n-1)v}]`.
pub fn steering_ula(v: f64, n: usize) -> Result<CVec> {
    if n == 0 {
        return Err(Error::Domain("array must have at least one element".into()));
    }
    Ok(CVec::from_iterator(n, (0..n).map(|m| cis(m as f64 * v))))
}

/// Planar array response `a_y(u) (x) a_z(v)`; element `(y, z)` sits at index `y * nz + z`.
pub fn steering_upa(u: f64, v: f64, ny: usize, nz: usize) -> Result<CVec> {
    Ok(kron(&steering_ula(u, ny)?, &steering_ula(v, nz)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub elevation: f64,
    pub azimuth: f64,
}

/// Phase progression per element along the two array axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRates {
    pub u: f64,
    pub v: f64,
}

pub fn angles_to_uv(elevation: f64, azimuth: f64, spacing: f64, wavelength: f64) -> PhaseRates {
    let k = 2.0 * PI * spacing / wavelength;
    PhaseRates { u: k * elevation.cos() * azimuth.sin(), v: k * azimuth.sin() }
}

/// Inverse of [`angles_to_uv`] on elevations in `[0, pi/2]`. The elevation
/// sign is not observable; a zero azimuth leaves elevation undefined and
/// reports it as zero.
pub fn uv_to_angles(u: f64, v: f64, spacing: f64, wavelength: f64) -> Angles {
    let k = 2.0 * PI * spacing / wavelength;
    let s = (v / k).clamp(-1.0, 1.0);
    let azimuth = s.asin();
    if s.abs() < 1e-12 {
        return Angles { elevation: 0.0, azimuth };
    }
    let c = (u / (k * s)).clamp(-1.0, 1.0);
    Angles { elevation: c.acos(), azimuth }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Angles of the direction from a surface at `from` toward `to`.
pub fn surface_angles(from: [f64; 3], to: [f64; 3]) -> Angles {
    let d = sub(to, from);
    let r = distance(to, from);
    Angles { elevation: (d[2] / r).asin(), azimuth: d[1].atan2(d[0]) }
}

/// One surface-to-user link. The echo arriving at the sensors shares the
/// departure rates of the reflected link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLink {
    pub distance: f64,
    pub angles: Angles,
    pub rates: PhaseRates,
    pub echo_rates: PhaseRates,
    /// RIS-to-user gain.
    pub gain: C64,
    /// Echo gain seen at the sensing elements, over the round trip `2 q`.
    pub echo_gain: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSite {
    pub position: [f64; 3],
    pub bs_distance: f64,
    /// Direction from the surface toward the BS.
    pub bs_angles: Angles,
    /// Arrival rates of the BS signal on the surface.
    pub bs_rates: PhaseRates,
    /// Departure rate at the BS array toward this surface.
    pub bs_departure: f64,
    pub bs_gain: C64,
    pub users: Vec<UserLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub bs_position: [f64; 3],
    pub user_positions: Vec<[f64; 3]>,
    /// Both deployment sites; single-surface runs only use the first.
    pub sites: [SurfaceSite; 2],
}

pub fn ris_positions() -> [[f64; 3]; 2] {
    let mut out = [[0.0; 3]; 2];
    for i in 0..2 {
        let dx = BS_POSITION[0];
        let dy = RIS_LATERAL[i];
        let dz = (RIS_DISTANCES[i].powi(2) - dx * dx - dy * dy).sqrt();
        out[i] = [0.0, BS_POSITION[1] + dy, BS_POSITION[2] + dz];
    }
    out
}

/// Build the random deployment for `seed`. Users are drawn uniformly in a
/// box in front of the wall and kept when both sites lie 40-70 m away.
pub fn make_scenario(config: &SystemConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = stream(seed, &[TAG_SCENARIO]);
    let ris = ris_positions();
    let scale = config.phase_rate_scale();
    let (d, lambda) = (config.element_spacing, config.wavelength);

    let mut user_positions = Vec::with_capacity(config.n_users);
    while user_positions.len() < config.n_users {
        let p = [
            rng.random_range(USER_BOX[0].0..USER_BOX[0].1),
            rng.random_range(USER_BOX[1].0..USER_BOX[1].1),
            rng.random_range(USER_BOX[2].0..USER_BOX[2].1),
        ];
        if ris.iter().all(|&r| (USER_RANGE.0..=USER_RANGE.1).contains(&distance(p, r))) {
            user_positions.push(p);
        }
    }

    let mut random_gain = |power: f64| C64::from_polar(power.sqrt(), rng.random_range(0.0..2.0 * PI));
    let sites = [0usize, 1].map(|i| {
        let position = ris[i];
        let bs_distance = distance(BS_POSITION, position);
        let bs_angles = surface_angles(position, BS_POSITION);
        let toward = sub(position, BS_POSITION);
        let bs_departure = scale * (toward[1] / bs_distance);
        let bs_gain = random_gain(path_loss(bs_distance, config.kappa_bs_ris, config.c0).unwrap());
        let users = user_positions
            .iter()
            .map(|&p| {
                let dist = distance(position, p);
                let angles = surface_angles(position, p);
                let rates = angles_to_uv(angles.elevation, angles.azimuth, d, lambda);
                UserLink {
                    distance: dist,
                    angles,
                    rates,
                    echo_rates: rates,
                    gain: random_gain(path_loss(dist, config.kappa_ris_user, config.c0).unwrap()),
                    echo_gain: random_gain(path_loss(2.0 * dist, config.kappa_echo, config.c0).unwrap()),
                }
            })
            .collect();
        SurfaceSite {
            position,
            bs_distance,
            bs_angles,
            bs_rates: angles_to_uv(bs_angles.elevation, bs_angles.azimuth, d, lambda),
            bs_departure,
            bs_gain,
            users,
        }
    });

    Ok(Scenario { seed, bs_position: BS_POSITION, user_positions, sites })
}

/// Channels of one active surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceChannels {
    pub ny: usize,
    pub nz: usize,
    /// `H_BR` (N x N_t).
    pub bs_to_ris: CMat,
    /// Entries of the row vector `h_{i,k}^H` for each user.
    pub user_rows: Vec<CVec>,
    /// `H_RUS` (M x N).
    pub echo: CMat,
}

impl SurfaceChannels {
    pub fn n_elements(&self) -> usize {
        self.ny * self.nz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub n_tx: usize,
    pub n_users: usize,
    pub surfaces: Vec<SurfaceChannels>,
}

/// Realize the line-of-sight channels of every active surface.
pub fn synth_channels(scenario: &Scenario, config: &SystemConfig) -> Result<ChannelSet> {
    if scenario.user_positions.len() != config.n_users {
        return Err(Error::Dimension(format!(
            "scenario has {} users, config expects {}",
            scenario.user_positions.len(),
            config.n_users
        )));
    }
    let (my, mz) = (config.n_sense_elements_y, config.n_sense_elements_z);
    let surfaces = config
        .surface_dims()
        .into_iter()
        .zip(scenario.sites.iter())
        .map(|((ny, nz), site)| {
            let a_bs = steering_upa(site.bs_rates.u, site.bs_rates.v, ny, nz)?;
            let b_bs = steering_ula(site.bs_departure, config.n_tx_antennas)?;
            let bs_to_ris = outer(&a_bs, &b_bs) * site.bs_gain;
            let mut user_rows = Vec::with_capacity(site.users.len());
            let mut echo = CMat::zeros(my * mz, ny * nz);
            for link in &site.users {
                let a = steering_upa(link.rates.u, link.rates.v, ny, nz)?;
                user_rows.push(a.map(|z| z.conj()) * link.gain);
                let a_s = steering_upa(link.echo_rates.u, link.echo_rates.v, my, mz)?;
                echo += outer(&a_s, &a) * link.echo_gain;
            }
            Ok(SurfaceChannels { ny, nz, bs_to_ris, user_rows, echo })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelSet { n_tx: config.n_tx_antennas, n_users: config.n_users, surfaces })
}
