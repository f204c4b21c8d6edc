//! Echo simulation, 2D-MUSIC angle estimation and feasible-set narrowing.

mod echo;
mod feasible;
mod music;

use std::io::Write;

pub use echo::{covariance, simulate_echo, SnapshotMatrix};
pub use feasible::{
    coherent_phases, covering_arc, narrow_feasible_set, optimal_phase, phase_from_rates, Arc, FeasibleSetTable,
};
pub use music::{
    music_spectrum, pick_peaks, AngleEstimate, MusicSpectrum, Peak, SearchGrid, SubspacePair, SPECTRUM_CAP,
};
pub use music::subspace_split;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};
use crate::scenario::{steering_ula, ChannelSet, PhaseRates, Scenario};

/// Beam matched to the BS departure toward `surface`, at full power.
pub fn default_sensing_beam(scenario: &Scenario, config: &SystemConfig, surface: usize) -> Result<CVec> {
    let b = steering_ula(scenario.sites[surface].bs_departure, config.n_tx_antennas)?;
    Ok(b * C64::from((config.p_max / config.n_tx_antennas as f64).sqrt()))
}

/// Everything one surface learns during the sensing phase.
#[derive(Debug, Clone)]
pub struct SensingOutcome {
    pub surface: usize,
    pub estimate: AngleEstimate,
    pub eigenvalues: Vec<f64>,
    pub spectrum: MusicSpectrum,
    pub table: FeasibleSetTable,
}

/// Sense the users through `surface` and narrow its phase sets.
pub fn sense_surface(
    scenario: &Scenario,
    channels: &ChannelSet,
    config: &SystemConfig,
    surface: usize,
    seed: u64,
) -> Result<SensingOutcome> {
    let surf = channels
        .surfaces
        .get(surface)
        .ok_or_else(|| Error::Dimension(format!("no active surface {surface}")))?;
    let beam = default_sensing_beam(scenario, config, surface)?;
    let y = simulate_echo(channels, config, surface, &beam, config.snapshots, seed)?;
    let r = covariance(&y);
    let split = subspace_split(&r, config.n_users)?;
    let grid = SearchGrid::uniform(config.music_grid);
    let spectrum =
        music_spectrum(&split.noise, &grid, config.n_sense_elements_y, config.n_sense_elements_z)?;
    let estimate = pick_peaks(&spectrum, config.n_users, config.element_spacing, config.wavelength);

    let bs = scenario.sites[surface].bs_rates;
    let n = surf.n_elements();
    let mut per_element = vec![Vec::with_capacity(estimate.peaks.len()); n];
    for peak in &estimate.peaks {
        let phases = coherent_phases(surf.ny, surf.nz, bs, PhaseRates { u: peak.u, v: peak.v });
        for (slot, p) in per_element.iter_mut().zip(phases) {
            slot.push(p);
        }
    }
    let table = if estimate.peaks.is_empty() {
        FeasibleSetTable::full(n, config.bits)
    } else {
        narrow_feasible_set(&per_element, config.bits)
    };
    Ok(SensingOutcome { surface, estimate, eigenvalues: split.eigenvalues, spectrum, table })
}

/// Write a spectrum as `u,v,power` rows.
pub fn write_spectrum_csv<W: Write>(spectrum: &MusicSpectrum, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "v", "power"])?;
    for (iu, u) in spectrum.grid.u.iter().enumerate() {
        for (iv, v) in spectrum.grid.v.iter().enumerate() {
            w.write_record([u.to_string(), v.to_string(), spectrum.at(iu, iv).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write angle estimates as `user,u,v,elevation,azimuth,peak` rows.
pub fn write_angles_csv<W: Write>(estimate: &AngleEstimate, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "u", "v", "elevation", "azimuth", "peak"])?;
    for (k, p) in estimate.peaks.iter().enumerate() {
        w.write_record([
            k.to_string(),
            p.u.to_string(),
            p.v.to_string(),
            p.angles.elevation.to_string(),
            p.angles.azimuth.to_string(),
            p.height.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::linalg::{numerical_rank, outer, CMat};
    use crate::phase::{circular_distance, PhaseGrid};
    use crate::scenario::{steering_upa, Angles, SurfaceChannels};

    /// One 4x4 surface, an 8x8 sensor array and users at the given rates.
    fn synthetic(users: &[(f64, f64)], noise: f64) -> (ChannelSet, SystemConfig) {
        let cfg = SystemConfig {
            n_users: users.len(),
            n_tx_antennas: users.len() + 1,
            noise_power_sensor: noise,
            ..Default::default()
        };
        let (ny, nz) = (4, 4);
        let a_bs = steering_upa(0.3, -0.5, ny, nz).unwrap();
        let b = crate::scenario::steering_ula(0.7, cfg.n_tx_antennas).unwrap();
        let mut echo = CMat::zeros(64, ny * nz);
        let mut user_rows = Vec::new();
        for &(u, v) in users {
            let a = steering_upa(u, v, ny, nz).unwrap();
            echo += outer(&steering_upa(u, v, 8, 8).unwrap(), &a);
            user_rows.push(a.map(|z| z.conj()));
        }
        let surf = SurfaceChannels { ny, nz, bs_to_ris: outer(&a_bs, &b), user_rows, echo };
        (ChannelSet { n_tx: cfg.n_tx_antennas, n_users: users.len(), surfaces: vec![surf] }, cfg)
    }

    fn beam(cfg: &SystemConfig) -> CVec {
        crate::scenario::steering_ula(0.7, cfg.n_tx_antennas).unwrap()
            * C64::from((cfg.p_max / cfg.n_tx_antennas as f64).sqrt())
    }

    fn grid_point(i: usize) -> f64 {
        SearchGrid::uniform(181).u[i]
    }

    #[test]
    fn noiseless_single_snapshot_is_collinear_with_the_source() {
        let (u, v) = (0.4, -1.1);
        let (ch, cfg) = synthetic(&[(u, v)], 0.0);
        let y = simulate_echo(&ch, &cfg, 0, &beam(&cfg), 1, 5).unwrap();
        let a = steering_upa(u, v, 8, 8).unwrap();
        let col = y.samples.column(0).into_owned();
        let proj = a.dotc(&col).norm() / (a.norm() * col.norm());
        assert!((proj - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_beam_gives_pure_noise() {
        let (ch, cfg) = synthetic(&[(0.4, -1.1)], 1e-3);
        let zero = CVec::zeros(cfg.n_tx_antennas);
        let y = simulate_echo(&ch, &cfg, 0, &zero, 400, 1).unwrap();
        let r = covariance(&y);
        let mean_diag = r.diagonal().iter().map(|z| z.re).sum::<f64>() / 64.0;
        assert!((mean_diag - 1e-3).abs() < 1e-4, "{mean_diag}");
    }

    #[test]
    fn power_budget_is_enforced() {
        let (ch, cfg) = synthetic(&[(0.4, -1.1)], 0.0);
        let loud = beam(&cfg) * C64::from(1.01);
        assert!(matches!(simulate_echo(&ch, &cfg, 0, &loud, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn snapshots_are_seeded_per_index() {
        let (ch, cfg) = synthetic(&[(0.4, -1.1), (1.0, 0.2)], 1e-3);
        let a = simulate_echo(&ch, &cfg, 0, &beam(&cfg), 20, 9).unwrap();
        let b = simulate_echo(&ch, &cfg, 0, &beam(&cfg), 10, 9).unwrap();
        assert_eq!(a.samples.columns(0, 10), b.samples);
        assert_eq!(a.reflections[..10], b.reflections[..]);
    }

    #[test]
    fn covariance_examples() {
        let y = CVec::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)]);
        let snap = SnapshotMatrix { samples: CMat::from_columns(&[y.clone()]), surface: 0, reflections: vec![] };
        assert_eq!(covariance(&snap), outer(&y, &y));
        let zero = SnapshotMatrix { samples: CMat::zeros(3, 4), surface: 0, reflections: vec![] };
        assert_eq!(covariance(&zero), CMat::zeros(3, 3));
    }

    #[test]
    fn decorrelated_sources_give_rank_k() {
        for k in 1..=4 {
            let users: Vec<(f64, f64)> = (0..k).map(|i| (-1.5 + 0.9 * i as f64, 1.2 - 0.7 * i as f64)).collect();
            let (ch, cfg) = synthetic(&users, 0.0);
            let y = simulate_echo(&ch, &cfg, 0, &beam(&cfg), 1000, 3).unwrap();
            let split = subspace_split(&covariance(&y), k).unwrap();
            let ev = &split.eigenvalues;
            assert!(ev[k - 1] / ev[k].abs().max(1e-300) >= 1e6, "k={k}: {:?}", &ev[..k + 1]);
            assert!(ev[k] <= 1e-8 * ev[0]);
            assert_eq!(numerical_rank(&covariance(&y), 1e-6), k);
        }
    }

    #[test]
    fn subspace_split_examples() {
        let eye = CMat::identity(4, 4);
        let s = subspace_split(&eye, 1).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-12));
        assert!((s.signal.adjoint() * &s.noise).norm() < 1e-10);

        let mut d = CMat::identity(4, 4);
        d[(0, 0)] = C64::from(5.0);
        let s = subspace_split(&d, 1).unwrap();
        assert!((s.signal[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(matches!(subspace_split(&d, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn music_recovers_grid_aligned_sources_exactly() {
        let grid = SearchGrid::uniform(181);
        for users in [vec![(60, 120)], vec![(40, 50), (130, 100)], vec![(30, 140), (70, 60), (110, 95), (150, 20)]] {
            let truth: Vec<(f64, f64)> = users.iter().map(|&(a, b)| (grid_point(a), grid_point(b))).collect();
            let (ch, cfg) = synthetic(&truth, 0.0);
            let y = simulate_echo(&ch, &cfg, 0, &beam(&cfg), 1000, 11).unwrap();
            let split = subspace_split(&covariance(&y), truth.len()).unwrap();
            let spec = music_spectrum(&split.noise, &grid, 8, 8).unwrap();
            assert!(spec.power.iter().all(|&p| p > 0.0));
            let est = pick_peaks(&spec, truth.len(), cfg.element_spacing, cfg.wavelength);
            assert!(!est.degraded);
            let mut got: Vec<(usize, usize)> = est.peaks.iter().map(|p| (p.u_index, p.v_index)).collect();
            got.sort();
            let mut want = users.clone();
            want.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn empty_noise_subspace_is_rejected() {
        let grid = SearchGrid::uniform(5);
        assert!(matches!(music_spectrum(&CMat::zeros(4, 0), &grid, 2, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn peak_picking_flags_missing_maxima() {
        let grid = SearchGrid::from_axes(vec![0.0, 0.1, 0.2], vec![0.0, 0.1, 0.2]);
        let mut power = vec![1.0; 9];
        power[4] = 5.0;
        let est = pick_peaks(&MusicSpectrum { grid, power }, 2, 0.01, 0.02);
        assert!(est.degraded);
        assert_eq!(est.peaks.len(), 1);
        assert_eq!((est.peaks[0].u_index, est.peaks[0].v_index), (1, 1));
    }

    #[test]
    fn optimal_phase_examples() {
        let zero = Angles { elevation: 0.0, azimuth: 0.0 };
        for y in 1..=4 {
            for z in 1..=4 {
                assert_eq!(optimal_phase(y, z, zero, zero, 0.01, 0.01, 0.02), 0.0);
            }
        }
        let user = Angles { elevation: PI / 2.0, azimuth: 0.0 };
        let p = optimal_phase(1, 1, zero, user, 0.01, 0.01, 0.02);
        assert!((p - PI / 2.0).abs() < 1e-12);
        for y in 1..=8 {
            let p = optimal_phase(y, 3, Angles { elevation: 0.7, azimuth: -2.0 }, user, 0.01, 0.01, 0.02);
            assert!((0.0..2.0 * PI).contains(&p));
        }
    }

    #[test]
    fn coherent_phases_align_both_paths() {
        let (ch, _) = synthetic(&[(1.1, -0.4)], 0.0);
        let surf = &ch.surfaces[0];
        let phases = coherent_phases(4, 4, PhaseRates { u: 0.3, v: -0.5 }, PhaseRates { u: 1.1, v: -0.4 });
        let col0 = surf.bs_to_ris.column(0);
        let terms: Vec<C64> =
            (0..16).map(|n| surf.user_rows[0][n] * crate::linalg::cis(phases[n]) * col0[n]).collect();
        let sum: C64 = terms.iter().sum();
        assert!((sum.norm() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn narrowing_examples() {
        let t = narrow_feasible_set(&[vec![0.3, 1.4]], 3);
        assert_eq!(t.arcs[0], Arc { start: 0, len: 3 });
        assert_eq!(t.members(0), vec![0, 1, 2]);

        let t = narrow_feasible_set(&[vec![2.0, 2.0, 2.0]], 2);
        assert_eq!(t.arcs[0].len, 1);
        assert_eq!(t.arcs[0].start, PhaseGrid::new(2).nearest(2.0));

        let t = narrow_feasible_set(&[vec![0.1], vec![5.0], vec![3.3]], 4);
        assert!(t.arcs.iter().all(|a| a.len == 1));
    }

    #[test]
    fn arcs_wrap_and_break_ties_low() {
        // {7, 0} on 8 levels: the short way crosses zero.
        assert_eq!(covering_arc(&[7, 0], 8), Arc { start: 7, len: 2 });
        // Opposite points: two arcs of length 5 (start 0 or 4); keep 0.
        assert_eq!(covering_arc(&[0, 4], 8), Arc { start: 0, len: 5 });
        assert_eq!(covering_arc(&[1, 0], 2), Arc { start: 0, len: 2 });
    }

    #[test]
    fn representative_is_nearest_the_mean() {
        let t = narrow_feasible_set(&[vec![0.1, 1.3]], 3);
        // Mean 0.7 lies nearest pi/4.
        assert_eq!(t.representative(0), 1);
    }

    #[test]
    fn spectrum_and_angle_csv_headers() {
        let grid = SearchGrid::from_axes(vec![0.0, 0.5], vec![0.1]);
        let spec = MusicSpectrum { grid, power: vec![1.0, 2.0] };
        let mut buf = Vec::new();
        write_spectrum_csv(&spec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,v,power\n"));
        assert_eq!(text.lines().count(), 3);
        let est = pick_peaks(&spec, 1, 0.01, 0.02);
        let mut buf = Vec::new();
        write_angles_csv(&est, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("user,u,v,elevation,azimuth,peak\n"));
    }

    proptest! {
        #[test]
        fn quantized_optima_lie_in_their_arc(
            phases in prop::collection::vec(prop::collection::vec(0.0..(2.0 * PI), 1..6), 1..10),
            bits in 1u32..5,
        ) {
            let t = narrow_feasible_set(&phases, bits);
            let levels = 1usize << bits;
            for (arc, opt) in t.arcs.iter().zip(&phases) {
                prop_assert!(arc.len >= 1 && arc.len <= levels);
                for &p in opt {
                    let q = t.grid.nearest(p);
                    prop_assert!(arc.contains(q, levels));
                    prop_assert!(circular_distance(t.grid.value(q), p) <= t.grid.step() / 2.0 + 1e-12);
                }
            }
        }

        #[test]
        fn covering_arc_is_shortest(points in prop::collection::vec(0usize..16, 1..8)) {
            let arc = covering_arc(&points, 16);
            for &p in &points {
                prop_assert!(arc.contains(p, 16));
            }
            // No shorter arc covers the points.
            for start in 0..16 {
                for len in 1..arc.len {
                    let cand = Arc { start, len };
                    prop_assert!(!points.iter().all(|&p| cand.contains(p, 16)));
                }
            }
        }

        #[test]
        fn one_bit_arcs_have_at_most_two_points(phases in prop::collection::vec(0.0..(2.0 * PI), 1..8)) {
            let t = narrow_feasible_set(&[phases], 1);
            prop_assert!(t.arcs[0].len <= 2);
        }
    }
}
