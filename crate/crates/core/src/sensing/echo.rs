use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, C64};
use crate::phase::PhaseGrid;
use crate::rng::{stream, TAG_ECHO};
use crate::scenario::ChannelSet;

/// Echo samples collected by one surface's sensing array, one column per snapshot.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    pub samples: CMat,
    pub surface: usize,
    /// Grid indices of the random reflection pattern used at each snapshot.
    pub reflections: Vec<Vec<usize>>,
}

impl SnapshotMatrix {
    pub fn snapshots(&self) -> usize {
        self.samples.ncols()
    }
}

/// Simulate `snapshots` echo observations at the sensors of `surface`.
///
/// Each snapshot draws its own random reflection pattern on the configured
/// phase grid, a unit-modulus symbol and circular Gaussian sensor noise. The
/// per-snapshot pattern is what decorrelates the user echoes, which all carry
/// the same transmitted symbol. Randomness for snapshot `t` comes from a
/// stream keyed by `(seed, surface, t)`.
pub fn simulate_echo(
    channels: &ChannelSet,
    config: &SystemConfig,
    surface: usize,
    beam: &CVec,
    snapshots: usize,
    seed: u64,
) -> Result<SnapshotMatrix> {
    let surf = channels
        .surfaces
        .get(surface)
        .ok_or_else(|| Error::Dimension(format!("no active surface {surface}")))?;
    if beam.len() != channels.n_tx {
        return Err(Error::Dimension(format!(
            "sensing beam has {} entries, expected {}",
            beam.len(),
            channels.n_tx
        )));
    }
    let power = beam.norm_squared();
    if power > config.p_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "sensing beam power {power} exceeds budget {}",
            config.p_max
        )));
    }
    if snapshots == 0 {
        return Err(Error::Domain("at least one snapshot is required".into()));
    }

    let grid = PhaseGrid::new(config.bits);
    let incident = &surf.bs_to_ris * beam;
    let n = surf.n_elements();
    let m = surf.echo.nrows();
    let noise_std = (config.noise_power_sensor / 2.0).sqrt();
    let mut samples = CMat::zeros(m, snapshots);
    let mut reflections = Vec::with_capacity(snapshots);
    let mut reflected = CVec::zeros(n);

    for t in 0..snapshots {
        let mut rng = stream(seed, &[TAG_ECHO, surface as u64, t as u64]);
        let pattern: Vec<usize> = (0..n).map(|_| rng.random_range(0..grid.levels())).collect();
        let symbol = cis(rng.random_range(0.0..std::f64::consts::TAU));
        for (e, &idx) in pattern.iter().enumerate() {
            reflected[e] = cis(grid.value(idx)) * incident[e] * symbol;
        }
        let mut y = &surf.echo * &reflected;
        if noise_std > 0.0 {
            for s in y.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *s += C64::new(re, im) * noise_std;
            }
        }
        samples.set_column(t, &y);
        reflections.push(pattern);
    }
    Ok(SnapshotMatrix { samples, surface, reflections })
}

/// Sample covariance `Y Y^H / T`.
pub fn covariance(y: &SnapshotMatrix) -> CMat {
    let t = y.snapshots() as f64;
    (&y.samples * y.samples.adjoint()).unscale(t)
}
