//! Acceptance criteria for the simulator. Prints one PASS/FAIL line per
//! criterion and exits successfully either way, so failures are reported
//! without breaking the workspace test run.
//!
//! `ACCEPTANCE_OVERRIDES="key=value,key=value"` applies extra configuration
//! keys to every run (for diagnostics, e.g. `c0_db=0`).

use std::f64::consts::PI;
use std::time::Instant;

use dualris_core::bisection::{bisect, expected_steps};
use dualris_core::linalg::{outer, CMat, CVec, C64};
use dualris_core::orchestrator::{
    aggregate, apply_override, joint_optimize, run_seed, scenario_seed, AggregateRow, JointResult, PhaseMethod,
    ResultRow, Termination,
};
use dualris_core::phaseopt::{enumerate_candidates, gs_optimize, od_optimize, PhaseProblem};
use dualris_core::scenario::{steering_upa, SurfaceChannels};
use dualris_core::sensing::{
    covariance, music_spectrum, pick_peaks, sense_surface, simulate_echo, subspace_split, Arc, SearchGrid,
};
use dualris_core::txbf::{
    check_lifted, optimize_txbf, sinr_lifted, sinr_per_user, solve_feasibility, sdp::SdpSettings, CombinedChannels,
};
use dualris_core::{
    make_scenario, run_experiment, synth_channels, Algorithm, ChannelSet, ExperimentSpec, FeasibleSetTable,
    PhaseConfig, SystemConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const MASTER_SEED: u64 = 2024;
const EPS: f64 = 1e-3;
/// Relative slack for comparing two computed SINRs.
const FLOAT_SLACK: f64 = 1e-9;
/// Relative drop that makes a per-seed curve segment non-monotone.
const DROP: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

fn overrides() -> Vec<(String, String)> {
    std::env::var("ACCEPTANCE_OVERRIDES")
        .unwrap_or_default()
        .split(',')
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn apply_all(config: &mut SystemConfig, algorithm: &mut Algorithm) {
    for (k, v) in overrides() {
        apply_override(config, algorithm, &k, &v).unwrap_or_else(|e| panic!("override {k}={v}: {e}"));
    }
}

fn base_config() -> SystemConfig {
    let mut cfg = SystemConfig::default();
    apply_all(&mut cfg, &mut Algorithm::Gs);
    cfg
}

fn preset(text: &str) -> ExperimentSpec {
    let mut spec = ExperimentSpec::parse(text).expect("preset parses");
    let mut alg = spec.algorithm;
    apply_all(&mut spec.base, &mut alg);
    spec.algorithm = alg;
    spec
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 { 0.0 } else { hits as f64 / total as f64 }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn run(config: &SystemConfig, algorithm: Algorithm, cell: usize, seed_index: usize) -> (Result<JointResult, String>, f64) {
    let start = Instant::now();
    let out = make_scenario(config, scenario_seed(MASTER_SEED, seed_index))
        .and_then(|sc| joint_optimize(&sc, config, algorithm, run_seed(MASTER_SEED, cell, seed_index)))
        .map_err(|e| e.to_string());
    (out, start.elapsed().as_secs_f64())
}

/// Convergence within the iteration limits, and runtime.
fn convergence(store: &mut Vec<JointResult>) -> Verdict {
    let base = base_config();
    let mut within5 = 0;
    let mut total = 0;
    let mut b1_within2 = 0;
    let mut b1_total = 0;
    let mut slowest: f64 = 0.0;
    let mut errors = 0;
    for (cell, bits) in [1u32, 2, 4].into_iter().enumerate() {
        let cfg = SystemConfig { bits, ..base.clone() };
        for s in 0..20 {
            let (res, secs) = run(&cfg, Algorithm::Gs, cell, s);
            slowest = slowest.max(secs);
            total += 1;
            if bits == 1 {
                b1_total += 1;
            }
            let Ok(res) = res else {
                errors += 1;
                continue;
            };
            let converged = res.trace.termination == Termination::Converged;
            let iters = res.trace.outer_iterations();
            if converged && iters <= 5 {
                within5 += 1;
            }
            if bits == 1 && converged && iters <= 2 {
                b1_within2 += 1;
            }
            store.push(res);
        }
    }
    let (f5, f2) = (fraction(within5, total), fraction(b1_within2, b1_total));
    Verdict {
        pass: f5 >= 0.9 && f2 >= 0.8 && slowest <= 120.0 && errors == 0,
        detail: format!(
            "within 5 iterations {within5}/{total} ({:.0}%, need 90%); b=1 within 2 iterations {b1_within2}/{b1_total} ({:.0}%, need 80%); slowest run {slowest:.2} s (limit 120 s); errors {errors}",
            100.0 * f5,
            100.0 * f2
        ),
    }
}

fn tau_by_seed(rows: &[ResultRow], cell: usize) -> Vec<f64> {
    rows.iter().filter(|r| r.cell == cell).map(|r| if r.ok() { r.tau_extracted } else { f64::NAN }).collect()
}

fn at_least(a: f64, b: f64) -> bool {
    a >= b - FLOAT_SLACK * b.abs().max(a.abs())
}

/// continuous >= gs(b=2) >= quantized(b=2) per seed, small continuous-gs gap.
fn ordering(fig5: &[ResultRow]) -> Verdict {
    let (gs, cont, quant) = (tau_by_seed(fig5, 1), tau_by_seed(fig5, 2), tau_by_seed(fig5, 3));
    let ordered = (0..gs.len()).filter(|&s| at_least(cont[s], gs[s]) && at_least(gs[s], quant[s])).count();
    let gaps: Vec<f64> = (0..gs.len()).map(|s| cont[s] - gs[s]).collect();
    let gap = mean(&gaps);
    let worst = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f = fraction(ordered, gs.len());
    Verdict {
        pass: f >= 0.9 && gap <= 0.1,
        detail: format!(
            "ordered on {ordered}/{} seeds ({:.0}%, need 90%); mean continuous-gs gap {gap:.4} (limit 0.1), largest {worst:.4}; means gs {:.4e} continuous {:.4e} quantized {:.4e}",
            gs.len(),
            100.0 * f,
            mean(&gs),
            mean(&cont),
            mean(&quant)
        ),
    }
}

/// Dual-surface gs(b=2) mean at least 1.5x the single wide surface.
fn dual_vs_single(agg: &[AggregateRow]) -> Verdict {
    let (dual, single) = (agg[1].mean, agg[4].mean);
    Verdict {
        pass: dual >= 1.5 * single,
        detail: format!(
            "dual mean {dual:.4e} over {} runs, single mean {single:.4e} over {} runs, ratio {:.3} (need 1.5)",
            agg[1].runs,
            agg[4].runs,
            dual / single
        ),
    }
}

/// Largest cell-to-cell decrease of the mean along `x`, per curve.
fn worst_drop(agg: &[AggregateRow], keep: impl Fn(&AggregateRow) -> bool, x: impl Fn(&AggregateRow) -> f64) -> (f64, String) {
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in agg.iter().filter(|r| keep(r)) {
        let key = format!("{} b={}", r.algorithm, r.bits);
        match curves.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push((x(r), r.mean)),
            None => curves.push((key, vec![(x(r), r.mean)])),
        }
    }
    let mut worst = (f64::NEG_INFINITY, String::new());
    for (key, mut pts) in curves {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            let drop = if w[1].1.is_nan() || w[0].1.is_nan() { f64::INFINITY } else { w[0].1 - w[1].1 };
            if drop > worst.0 {
                worst = (drop, format!("{key} at {}->{}", w[0].0, w[1].0));
            }
        }
    }
    worst
}

fn monotone_trends(fig6: &[AggregateRow], fig9: &[AggregateRow], fig8: &[AggregateRow]) -> Verdict {
    let nt = worst_drop(fig6, |_| true, |r| r.n_tx as f64);
    let p = worst_drop(
        fig9,
        |r| matches!(r.algorithm, Algorithm::Gs | Algorithm::Continuous),
        |r| r.p_max_dbm,
    );
    let n = worst_drop(fig8, |_| true, |r| r.n_elements as f64);
    let ok = |d: f64| d <= 0.05;
    Verdict {
        pass: ok(nt.0) && ok(p.0) && ok(n.0),
        detail: format!(
            "largest mean decrease (limit 0.05): N_t {:.4} ({}); P_max {:.4} ({}); N {:.4} ({})",
            nt.0, nt.1, p.0, p.1, n.0, n.1
        ),
    }
}

fn curve(rows: &[ResultRow], algorithm: Algorithm, seed: usize) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.algorithm == algorithm && r.seed_index == seed)
        .map(|r| (r.p_max_dbm, if r.ok() { r.tau_extracted } else { f64::NAN }))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().map(|p| p.1).collect()
}

fn has_drop(c: &[f64]) -> bool {
    c.windows(2).any(|w| w[1] < w[0] * (1.0 - DROP))
}

/// Quantized curves dip in P_max for enough seeds, gs curves never do.
fn quantization_pathology(fig9: &[ResultRow], seeds: usize) -> Verdict {
    let mut quant = 0;
    let mut gs = 0;
    for s in 0..seeds {
        let q = curve(fig9, Algorithm::Quantized, s);
        if !q.iter().any(|t| t.is_nan()) && has_drop(&q) {
            quant += 1;
        }
        let g = curve(fig9, Algorithm::Gs, s);
        if g.iter().any(|t| t.is_nan()) || has_drop(&g) {
            gs += 1;
        }
    }
    let f = fraction(quant, seeds);
    Verdict {
        pass: f >= 0.3 && gs == 0,
        detail: format!(
            "quantized non-monotone on {quant}/{seeds} seeds ({:.0}%, need 30%); gs non-monotone on {gs}/{seeds} seeds (need 0)",
            100.0 * f
        ),
    }
}

fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Squared (u, v) error per user under the best assignment of peaks to
/// users; a user left without a peak scores half a period in both axes.
fn assignment_errors(truth: &[(f64, f64)], est: &[(f64, f64)]) -> Vec<f64> {
    let miss = 2.0 * PI * PI;
    let k = truth.len();
    let mut best = (f64::INFINITY, vec![miss; k]);
    for perm in permutations(k) {
        let errs: Vec<f64> = (0..k)
            .map(|u| match est.get(perm[u]) {
                Some(&(eu, ev)) => wrap(eu - truth[u].0).powi(2) + wrap(ev - truth[u].1).powi(2),
                None => miss,
            })
            .collect();
        let total: f64 = errs.iter().sum();
        if total < best.0 {
            best = (total, errs);
        }
    }
    best.1
}

fn music_accuracy() -> Verdict {
    let base = base_config();
    let grid = SearchGrid::uniform(base.music_grid);
    let step = grid.step_u();

    // Noiseless grid-aligned sources through a 4x4 surface.
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let mut exact = 0;
    let trials = 50;
    for t in 0..trials {
        let mut idx: Vec<(usize, usize)> = Vec::new();
        while idx.len() < base.n_users {
            let c = (rng.random_range(1..grid.u.len() - 1), rng.random_range(1..grid.v.len() - 1));
            if idx.iter().all(|&(a, b)| a.abs_diff(c.0) >= 3 || b.abs_diff(c.1) >= 3) {
                idx.push(c);
            }
        }
        let cfg = SystemConfig { noise_power_sensor: 0.0, ..base.clone() };
        let (ny, nz) = (cfg.n_ris_elements_y, cfg.n_ris_elements_z);
        let mut echo = CMat::zeros(cfg.n_sense_elements_y * cfg.n_sense_elements_z, ny * nz);
        for &(a, b) in &idx {
            let (u, v) = (grid.u[a], grid.v[b]);
            echo += outer(
                &steering_upa(u, v, cfg.n_sense_elements_y, cfg.n_sense_elements_z).unwrap(),
                &steering_upa(u, v, ny, nz).unwrap(),
            );
        }
        let nt = cfg.n_tx_antennas;
        let surf = SurfaceChannels {
            ny,
            nz,
            bs_to_ris: CMat::from_fn(ny * nz, nt, |i, j| C64::from_polar(1.0, 0.3 * (i * j) as f64)),
            user_rows: vec![CVec::zeros(ny * nz); cfg.n_users],
            echo,
        };
        let ch = ChannelSet { n_tx: nt, n_users: cfg.n_users, surfaces: vec![surf] };
        let beam = CVec::from_element(nt, C64::from((cfg.p_max / nt as f64).sqrt()));
        let y = simulate_echo(&ch, &cfg, 0, &beam, cfg.snapshots, t as u64).unwrap();
        let split = subspace_split(&covariance(&y), cfg.n_users).unwrap();
        let spec = music_spectrum(&split.noise, &grid, cfg.n_sense_elements_y, cfg.n_sense_elements_z).unwrap();
        let est = pick_peaks(&spec, cfg.n_users, cfg.element_spacing, cfg.wavelength);
        let mut got: Vec<(usize, usize)> = est.peaks.iter().map(|p| (p.u_index, p.v_index)).collect();
        got.sort();
        idx.sort();
        if got == idx {
            exact += 1;
        }
    }

    // Scenario echoes at the configured sensor noise, both surfaces.
    let seeds = 100;
    let k = base.n_users;
    let mut sq = vec![0.0; k];
    let mut count = 0;
    for s in 0..seeds {
        let sc = make_scenario(&base, scenario_seed(MASTER_SEED, s)).unwrap();
        let ch = synth_channels(&sc, &base).unwrap();
        for surface in 0..ch.surfaces.len() {
            let out = sense_surface(&sc, &ch, &base, surface, run_seed(MASTER_SEED, 0, s)).unwrap();
            let truth: Vec<(f64, f64)> =
                sc.sites[surface].users.iter().map(|u| (u.echo_rates.u, u.echo_rates.v)).collect();
            let est: Vec<(f64, f64)> = out.estimate.peaks.iter().map(|p| (p.u, p.v)).collect();
            for (acc, e) in sq.iter_mut().zip(assignment_errors(&truth, &est)) {
                *acc += e;
            }
            count += 1;
        }
    }
    let rmse: Vec<f64> = sq.iter().map(|s| (s / count as f64).sqrt() / step).collect();
    let worst = rmse.iter().copied().fold(0.0, f64::max);
    Verdict {
        pass: exact == trials && worst <= 2.0,
        detail: format!(
            "noiseless exact recovery {exact}/{trials}; sigma^2 = {:.1e} W, T = {}, M = {}, K = {k}: per-user RMSE in grid steps {:?} (limit 2)",
            base.noise_power_sensor,
            base.snapshots,
            base.n_sense_elements_y * base.n_sense_elements_z,
            rmse.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
}

fn random_channels(rng: &mut ChaCha8Rng, surfaces: usize, n: usize, nt: usize, k: usize) -> ChannelSet {
    ChannelSet {
        n_tx: nt,
        n_users: k,
        surfaces: (0..surfaces)
            .map(|_| SurfaceChannels {
                ny: n,
                nz: 1,
                bs_to_ris: CMat::from_fn(n, nt, |_, _| gauss(rng)),
                user_rows: (0..k).map(|_| CVec::from_fn(n, |_, _| gauss(rng))).collect(),
                echo: CMat::zeros(1, n),
            })
            .collect(),
    }
}

fn random_rows(rng: &mut ChaCha8Rng, k: usize, nt: usize) -> CombinedChannels {
    CombinedChannels::from_rows((0..k).map(|_| CVec::from_fn(nt, |_, _| gauss(rng))).collect())
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Oracle equivalences over seeded random instances.
fn oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 7);
    let mut failures: Vec<String> = Vec::new();
    let noise = 0.05;
    let cfg = SystemConfig { tau_min: 0.0, tau_max: 1e3, tolerance: EPS, ..SystemConfig::default() };

    // Global search equals exhaustive enumeration; 1-D never exceeds it.
    let mut gs_cases = 0;
    for case in 0..100 {
        let n = rng.random_range(3..=6);
        let k = rng.random_range(1..=3);
        let nt = rng.random_range(k..=4);
        let ch = random_channels(&mut rng, 2, n, nt, k);
        let beams: Vec<CVec> = (0..k).map(|_| CVec::from_fn(nt, |_, _| gauss(&mut rng) * 0.3)).collect();
        let phases: Vec<PhaseConfig> =
            (0..2).map(|_| PhaseConfig::continuous((0..n).map(|_| rng.random::<f64>() * 6.28).collect())).collect();
        let arcs = (0..n).map(|_| Arc { start: rng.random_range(0..4), len: rng.random_range(1..=4) }).collect();
        let table = FeasibleSetTable::from_arcs(2, arcs);
        if table.cardinality() > 10_000 {
            continue;
        }
        gs_cases += 1;
        let surface = case % 2;
        let prob = PhaseProblem::new(&ch, &beams, &phases, surface, noise).unwrap();
        let gs = gs_optimize(&prob, &table, &cfg).unwrap();
        let mut best = f64::NEG_INFINITY;
        for idx in enumerate_candidates(&table, 10_000).unwrap() {
            let mut p = phases.clone();
            p[surface] = PhaseConfig::discrete(table.grid, idx);
            let combined = dualris_core::txbf::combine_channels(&ch, &p).unwrap();
            best = best.max(min_of(&sinr_per_user(&combined, &beams, noise).unwrap()));
        }
        if (gs.objective - best).abs() > FLOAT_SLACK * best.abs().max(1.0) {
            failures.push(format!("gs {} vs exhaustive {best}", gs.objective));
        }
        let od = od_optimize(&prob, &table, &cfg, None).unwrap();
        if od.objective > gs.objective * (1.0 + FLOAT_SLACK) {
            failures.push(format!("1-D {} above gs {}", od.objective, gs.objective));
        }
    }

    // Lifted and vector SINR agree on rank-one beams.
    for _ in 0..200 {
        let k = rng.random_range(1..=4);
        let nt = rng.random_range(1..=6);
        let ch = random_rows(&mut rng, k, nt);
        let beams = random_rows(&mut rng, k, nt).rows;
        let lifted: Vec<CMat> = beams.iter().map(|w| outer(w, w)).collect();
        let a = sinr_per_user(&ch, &beams, 0.3).unwrap();
        let b = sinr_lifted(&ch, &lifted, 0.3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            if (x - y).abs() > 1e-10 * x.abs().max(1.0) {
                failures.push(format!("lifted SINR {y} vs vector {x}"));
            }
        }
    }

    // Bisection on a synthetic threshold.
    for _ in 0..200 {
        let lo = rng.random_range(-5.0..5.0);
        let hi = lo + rng.random_range(0.1..20.0);
        let eps = (hi - lo) * 10f64.powf(-rng.random_range(0.5..8.0));
        let t = rng.random_range(lo..hi);
        let r = bisect(lo, hi, eps, |tau| Ok::<_, ()>((tau <= t).then_some(()))).unwrap();
        let want = ((hi - lo) / eps).log2().ceil() as usize;
        if r.probes.len() != want || want != expected_steps(hi - lo, eps) || (r.lo - t).abs() > eps {
            failures.push(format!("bisection took {} steps (want {want}), lo {} vs {t}", r.probes.len(), r.lo));
        }
    }

    // Single user: matched filter.
    for s in 0..50 {
        let nt = rng.random_range(1..=8);
        let ch = random_rows(&mut rng, 1, nt);
        let p = rng.random_range(0.1..10.0);
        let sigma = rng.random_range(0.01..1.0);
        let best = p * ch.rows[0].norm_squared() / sigma;
        let c = SystemConfig {
            n_tx_antennas: nt,
            n_users: 1,
            p_max: p,
            noise_power_user: sigma,
            tau_min: 0.0,
            tau_max: 2.0 * best + 1.0,
            ..cfg.clone()
        };
        let sol = optimize_txbf(&ch, &c, s).unwrap();
        if (sol.tau - best).abs() > 1e-8 * best {
            failures.push(format!("K=1 SINR {} vs matched filter {best}", sol.tau));
        }
    }

    // Independent re-checks of lifted solutions.
    for s in 0..60 {
        let k = rng.random_range(2..=4);
        let nt = rng.random_range(k..=6);
        let ch = random_rows(&mut rng, k, nt);
        let c = SystemConfig { n_tx_antennas: nt, n_users: k, p_max: 1.0, noise_power_user: 0.2, ..cfg.clone() };
        let sol = optimize_txbf(&ch, &c, s).unwrap();
        if let Err(e) = check_lifted(&ch, &sol.lifted, sol.tau_lifted, 1.0, 0.2) {
            failures.push(format!("bisection solution: {e}"));
        }
        let tau = rng.random_range(0.0..2.0 * sol.tau_lifted.max(0.1));
        let f = solve_feasibility(&ch, tau, 1.0, 0.2, SdpSettings::default()).unwrap();
        if f.feasible {
            if let Err(e) = check_lifted(&ch, &f.lifted, tau, 1.0, 0.2) {
                failures.push(format!("feasibility solution at {tau}: {e}"));
            }
        }
    }

    Verdict {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("all checks hold ({gs_cases} gs instances, 200 SINR, 200 bisection, 50 matched filter, 60 SDR re-checks)")
        } else {
            format!("{} violations, first: {}", failures.len(), failures[0])
        },
    }
}

/// Counter identities on every run and the narrowing effectiveness at b=2.
fn complexity(store: &[JointResult]) -> Verdict {
    let base = base_config();
    let mut extra = Vec::new();
    for s in 0..20 {
        let cfg = SystemConfig { bits: 2, ..base.clone() };
        if let (Ok(r), _) = run(&cfg, Algorithm::OneD, 10, s) {
            extra.push(r);
        }
    }
    let mut violations = 0;
    let mut gs_updates = 0;
    let mut od_updates = 0;
    for res in store.iter().chain(&extra) {
        for it in &res.trace.iterations {
            for u in &it.surfaces {
                match u.method {
                    PhaseMethod::Gs => {
                        gs_updates += 1;
                        if u.candidates as u128 != u.codebook {
                            violations += 1;
                        }
                    }
                    PhaseMethod::OneD => {
                        od_updates += 1;
                        if u.evaluations > (u.sweeps * u.arc_total) as u64 {
                            violations += 1;
                        }
                    }
                    PhaseMethod::Continuous => {}
                }
            }
        }
    }
    let b2: Vec<&JointResult> =
        store.iter().filter(|r| r.tables.first().is_some_and(|t| t.grid.bits == 2)).collect();
    let small = b2.iter().filter(|r| r.tables.iter().all(|t| t.cardinality() <= 10_000)).count();
    let codebooks: Vec<String> = b2
        .iter()
        .map(|r| r.tables.iter().map(|t| t.cardinality().to_string()).collect::<Vec<_>>().join("/"))
        .collect();
    let f = fraction(small, b2.len());
    Verdict {
        pass: violations == 0 && f >= 0.8,
        detail: format!(
            "counter violations {violations} over {gs_updates} gs and {od_updates} 1-D surface updates; b=2 codebooks <= 1e4 on {small}/{} seeds ({:.0}%, need 80%); codebooks per seed {}",
            b2.len(),
            100.0 * f,
            codebooks.join(" ")
        ),
    }
}

fn report(id: usize, name: &str, v: &Verdict, start: Instant) {
    println!(
        "criterion {id} [{name}]: {} | {} | {:.1} s",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
}

fn main() {
    // The harness also runs under `cargo test -- --list` and friends.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let extra = overrides();
    if !extra.is_empty() {
        println!("acceptance: overrides {extra:?} (diagnostic run, not the default configuration)");
    }
    let mut passed = 0;
    let mut tally = |v: &Verdict| passed += v.pass as usize;

    let t = Instant::now();
    let mut store = Vec::new();
    let v = convergence(&mut store);
    report(1, "convergence", &v, t);
    tally(&v);

    let t = Instant::now();
    let fig5 = run_experiment(&preset(include_str!("../../cli/presets/fig5.spec"))).unwrap();
    let v = ordering(&fig5);
    report(2, "algorithm ordering", &v, t);
    tally(&v);

    let t = Instant::now();
    let v = dual_vs_single(&aggregate(&fig5));
    report(3, "dual vs single", &v, t);
    tally(&v);

    let t = Instant::now();
    let fig9_spec = preset(include_str!("../../cli/presets/fig9.spec"));
    let fig9 = run_experiment(&fig9_spec).unwrap();
    let fig6 = run_experiment(&preset(include_str!("../../cli/presets/fig6.spec"))).unwrap();
    let fig8 = run_experiment(&preset(include_str!("../../cli/presets/fig8.spec"))).unwrap();
    let v = monotone_trends(&aggregate(&fig6), &aggregate(&fig9), &aggregate(&fig8));
    report(4, "monotone trends", &v, t);
    tally(&v);

    let t = Instant::now();
    let v = quantization_pathology(&fig9, fig9_spec.seeds);
    report(5, "quantization pathology", &v, t);
    tally(&v);

    let t = Instant::now();
    let v = music_accuracy();
    report(6, "MUSIC accuracy", &v, t);
    tally(&v);

    let t = Instant::now();
    let v = oracles();
    report(7, "oracle equivalences", &v, t);
    tally(&v);

    let t = Instant::now();
    let v = complexity(&store);
    report(8, "complexity counters", &v, t);
    tally(&v);

    println!("acceptance: {passed}/8 criteria passed");
}
