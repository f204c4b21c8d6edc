//! Transmit beamforming: SINR evaluation, the lifted feasibility problem,
//! bisection on the common SINR target and rank-one extraction.

pub mod sdp;

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bisection::bisect;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{dot_row, hermitian_eigen_desc, outer, re_trace, CMat, CVec, C64};
use crate::phase::PhaseConfig;
use crate::rng::{stream, TAG_EXTRACT};
use crate::scenario::ChannelSet;
use sdp::{BlockMat, SdpProblem, SdpSettings};

/// Eigenvalue ratio below which a lifted matrix counts as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;
/// Relative SINR shortfall still accepted as feasible.
pub const FEASIBILITY_SLACK: f64 = 1e-7;
/// Extraction is flagged when its min-SINR falls below this share of tau.
pub const DEGRADED_SHARE: f64 = 0.95;

/// Effective BS-to-user rows for a fixed set of reflection phases.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedChannels {
    /// `h_k`, length `N_t`, applied as `h_k w` without conjugation.
    pub rows: Vec<CVec>,
    /// `H_k = h_k^H h_k`.
    pub lifted: Vec<CMat>,
}

impl CombinedChannels {
    pub fn from_rows(rows: Vec<CVec>) -> Self {
        let lifted = rows.iter().map(|h| outer(&h.map(|z| z.conj()), &h.map(|z| z.conj()))).collect();
        CombinedChannels { rows, lifted }
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn n_tx(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }
}

/// Per-element products `h_{i,k}[n] e^{j theta_n}` summed against `H_BR,i`.
pub fn combine_channels(channels: &ChannelSet, phases: &[PhaseConfig]) -> Result<CombinedChannels> {
    if phases.len() != channels.surfaces.len() {
        return Err(Error::Dimension(format!(
            "{} phase configurations for {} surfaces",
            phases.len(),
            channels.surfaces.len()
        )));
    }
    let mut rows = vec![CVec::zeros(channels.n_tx); channels.n_users];
    for (surf, theta) in channels.surfaces.iter().zip(phases) {
        if theta.len() != surf.n_elements() {
            return Err(Error::Dimension(format!(
                "phase vector of length {} for a surface of {} elements",
                theta.len(),
                surf.n_elements()
            )));
        }
        let coeff = theta.coefficients();
        for (row, user) in rows.iter_mut().zip(&surf.user_rows) {
            let weighted = CVec::from_iterator(coeff.len(), user.iter().zip(&coeff).map(|(g, c)| g * c));
            *row += surf.bs_to_ris.transpose() * weighted;
        }
    }
    Ok(CombinedChannels::from_rows(rows))
}

fn check_noise(noise: f64) -> Result<()> {
    if noise > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise power must be positive, got {noise}")))
    }
}

/// `|h_k w_k|^2 / (sum_{j != k} |h_k w_j|^2 + noise)` for every user.
pub fn sinr_per_user(combined: &CombinedChannels, beams: &[CVec], noise: f64) -> Result<Vec<f64>> {
    check_noise(noise)?;
    if beams.len() != combined.n_users() || beams.iter().any(|w| w.len() != combined.n_tx()) {
        return Err(Error::Dimension("one beam of length N_t per user is required".into()));
    }
    Ok(combined
        .rows
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let gains: Vec<f64> = beams.iter().map(|w| dot_row(h, w).norm_sqr()).collect();
            let interference: f64 = gains.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, g)| g).sum();
            gains[k] / (interference + noise)
        })
        .collect())
}

/// Lifted SINR `tr(H_k W_k) / (sum_{j != k} tr(H_k W_j) + noise)`.
pub fn sinr_lifted(combined: &CombinedChannels, lifted: &[CMat], noise: f64) -> Result<Vec<f64>> {
    check_noise(noise)?;
    if lifted.len() != combined.n_users() {
        return Err(Error::Dimension("one lifted beam per user is required".into()));
    }
    Ok(combined
        .lifted
        .iter()
        .enumerate()
        .map(|(k, hk)| {
            let gains: Vec<f64> = lifted.iter().map(|w| crate::linalg::re_trace_product(hk, w)).collect();
            let interference: f64 = gains.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, g)| g).sum();
            gains[k] / (interference + noise)
        })
        .collect())
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Outcome of one feasibility solve.
#[derive(Debug, Clone)]
pub struct Feasibility {
    pub feasible: bool,
    /// `min_k SINR_k / tau - 1` of the max-margin point (`+inf` at `tau = 0`).
    pub margin: f64,
    /// Lifted beams of the max-margin point (meaningful when feasible).
    pub lifted: Vec<CMat>,
    pub iterations: usize,
}

/// Decide whether every user can reach SINR `tau` within `p_max`.
///
/// Solved as the margin problem `max t` subject to
/// `tr(G_k X_k) - tau sum_{j != k} tr(G_k X_j) - t >= 0`, `sum tr X_k <= 1`,
/// `t >= 0`, with `G_k = p_max H_k / (noise g)` normalized by the largest
/// trace `g`. The verdict is taken on the lifted SINRs of the optimizer
/// rather than on `t` itself: at high SNR the noise term `tau / g` sits
/// below the solver accuracy, while the SINR ratio stays well scaled.
pub fn solve_feasibility(
    combined: &CombinedChannels,
    tau: f64,
    p_max: f64,
    noise: f64,
    settings: SdpSettings,
) -> Result<Feasibility> {
    check_noise(noise)?;
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("SINR target must be nonnegative, got {tau}")));
    }
    let k = combined.n_users();
    let nt = combined.n_tx();
    let g = combined.lifted.iter().map(re_trace).fold(0.0, f64::max) * p_max / noise;
    if g == 0.0 {
        return Ok(Feasibility {
            feasible: tau == 0.0,
            margin: -tau,
            lifted: vec![CMat::zeros(nt, nt); k],
            iterations: 0,
        });
    }
    let scale = C64::from(p_max / (noise * g));
    let g_hat: Vec<CMat> = combined.lifted.iter().map(|h| h * scale).collect();

    // Blocks: X_1..X_K, then scalars t, s_1..s_K, s_0.
    let mut sizes = vec![nt; k];
    sizes.extend(std::iter::repeat(1).take(k + 2));
    let t_block = k;
    let scalar = |v: f64| CMat::from_element(1, 1, C64::from(v));

    let mut c = BlockMat::zeros(&sizes);
    c.blocks[t_block] = scalar(-1.0);
    let mut a = Vec::with_capacity(k + 1);
    for u in 0..k {
        let mut ak = BlockMat::zeros(&sizes);
        for j in 0..k {
            ak.blocks[j] = if j == u { g_hat[u].clone() } else { &g_hat[u] * C64::from(-tau) };
        }
        ak.blocks[t_block] = scalar(-1.0);
        ak.blocks[t_block + 1 + u] = scalar(-1.0);
        a.push(ak);
    }
    let mut power = BlockMat::zeros(&sizes);
    for j in 0..k {
        power.blocks[j] = CMat::identity(nt, nt);
    }
    power.blocks[2 * k + 1] = scalar(1.0);
    a.push(power);
    let mut b = vec![0.0; k];
    b.push(1.0);

    let sol = sdp::solve(&SdpProblem { c, a, b }, settings)?;
    let lifted: Vec<CMat> = sol.x.blocks[..k]
        .iter()
        .map(|x| project_psd(x) * C64::from(p_max))
        .collect();
    let margin = if tau == 0.0 {
        f64::INFINITY
    } else {
        min_of(&sinr_lifted(combined, &lifted, noise)?) / tau - 1.0
    };
    Ok(Feasibility { feasible: margin >= -FEASIBILITY_SLACK, margin, lifted, iterations: sol.iterations })
}

/// Clip the negative eigenvalues of a Hermitian matrix.
fn project_psd(m: &CMat) -> CMat {
    let (ev, vecs) = hermitian_eigen_desc(m);
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for (i, &l) in ev.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(i).into_owned();
            out += outer(&v, &v) * C64::from(l);
        }
    }
    out
}

/// Independent check of a lifted solution: PSD, power, and every lifted
/// SINR within relative `1e-6` of `tau`.
pub fn check_lifted(combined: &CombinedChannels, lifted: &[CMat], tau: f64, p_max: f64, noise: f64) -> Result<()> {
    for (k, w) in lifted.iter().enumerate() {
        let lmin = hermitian_eigen_desc(w).0.last().copied().unwrap_or(0.0);
        if lmin < -1e-8 * p_max {
            return Err(Error::Solver(format!("W_{k} has eigenvalue {lmin}")));
        }
    }
    let total: f64 = lifted.iter().map(re_trace).sum();
    if total > p_max * (1.0 + 1e-6) {
        return Err(Error::Solver(format!("lifted power {total} exceeds {p_max}")));
    }
    for (k, s) in sinr_lifted(combined, lifted, noise)?.into_iter().enumerate() {
        if s < tau * (1.0 - 1e-6) {
            return Err(Error::Solver(format!("user {k} reaches lifted SINR {s}, below target {tau}")));
        }
    }
    Ok(())
}

/// Rank-one beams recovered from a lifted solution.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub beams: Vec<CVec>,
    pub sinr: Vec<f64>,
    /// Users whose lifted beam was not rank one.
    pub randomized_users: usize,
    /// Min-SINR ended below `DEGRADED_SHARE * tau`.
    pub degraded: bool,
}

fn scale_to_budget(beams: &mut [CVec], p_max: f64) {
    let total: f64 = beams.iter().map(|w| w.norm_squared()).sum();
    if total > 0.0 {
        let s = C64::from((p_max / total).sqrt());
        for w in beams.iter_mut() {
            *w *= s;
        }
    }
}

/// Principal components when every `W_k` is rank one, otherwise Gaussian
/// randomization with `draws` samples; the principal set always competes as
/// draw zero. Beams are jointly scaled to spend exactly `p_max`.
pub fn extract_rank1(
    lifted: &[CMat],
    combined: &CombinedChannels,
    tau: f64,
    p_max: f64,
    noise: f64,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Extraction> {
    let decomps: Vec<(Vec<f64>, CMat)> = lifted.iter().map(hermitian_eigen_desc).collect();
    let randomized_users = decomps
        .iter()
        .filter(|(ev, _)| ev.len() > 1 && ev[0] > 0.0 && ev[1] / ev[0] > RANK_ONE_RATIO)
        .count();
    let mut best: Vec<CVec> = decomps
        .iter()
        .map(|(ev, v)| v.column(0).into_owned() * C64::from(ev[0].max(0.0).sqrt()))
        .collect();
    scale_to_budget(&mut best, p_max);
    let mut best_sinr = sinr_per_user(combined, &best, noise)?;

    if randomized_users > 0 {
        let roots: Vec<CMat> = decomps
            .iter()
            .map(|(ev, v)| {
                let d = CMat::from_diagonal(&CVec::from_iterator(
                    ev.len(),
                    ev.iter().map(|&l| C64::from(l.max(0.0).sqrt())),
                ));
                v * d * v.adjoint()
            })
            .collect();
        let nt = combined.n_tx();
        for _ in 0..draws {
            let mut cand: Vec<CVec> = roots
                .iter()
                .zip(lifted)
                .map(|(root, w)| {
                    let r = CVec::from_iterator(
                        nt,
                        (0..nt).map(|_| {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                        }),
                    );
                    let mut v = root * r;
                    let n2 = v.norm_squared();
                    if n2 > 0.0 {
                        v *= C64::from((re_trace(w).max(0.0) / n2).sqrt());
                    }
                    v
                })
                .collect();
            scale_to_budget(&mut cand, p_max);
            let s = sinr_per_user(combined, &cand, noise)?;
            if min_of(&s) > min_of(&best_sinr) {
                best = cand;
                best_sinr = s;
            }
        }
    }
    let degraded = min_of(&best_sinr) < DEGRADED_SHARE * tau;
    Ok(Extraction { beams: best, sinr: best_sinr, randomized_users, degraded })
}

/// One feasibility probe of the transmit bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionRecord {
    pub step: usize,
    pub tau: f64,
    pub feasible: bool,
    pub solver_iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct BeamSolution {
    pub lifted: Vec<CMat>,
    pub beams: Vec<CVec>,
    /// SINRs of the extracted beams.
    pub sinr: Vec<f64>,
    /// Min-SINR of the extracted beams.
    pub tau: f64,
    /// Largest target certified feasible by the bisection.
    pub tau_lifted: f64,
    /// Min lifted SINR of the returned lifted solution.
    pub lifted_min_sinr: f64,
    pub trace: Vec<BisectionRecord>,
    pub solver_iterations: usize,
    /// Users that needed randomized extraction.
    pub rank1_failures: usize,
    pub degraded: bool,
}

impl BeamSolution {
    pub fn rank_one(&self) -> bool {
        self.rank1_failures == 0
    }
}

/// Bisect the common SINR target over `[tau_min, tau_max]`, then extract
/// beams from the last feasible lifted solution. The lower bound is probed
/// first (step 0); the bisection always makes at least one further probe.
pub fn optimize_txbf(combined: &CombinedChannels, config: &SystemConfig, seed: u64) -> Result<BeamSolution> {
    if !(config.tau_min < config.tau_max) {
        return Err(Error::Config("tau_min must be below tau_max".into()));
    }
    let settings = SdpSettings { tolerance: config.solver_tolerance, max_iterations: config.solver_max_iterations };
    let (p, noise) = (config.p_max, config.noise_power_user);
    let mut trace = Vec::new();
    let probe = |tau: f64, step: usize, trace: &mut Vec<BisectionRecord>| -> Result<Feasibility> {
        let start = Instant::now();
        let f = solve_feasibility(combined, tau, p, noise, settings)?;
        trace.push(BisectionRecord {
            step,
            tau,
            feasible: f.feasible,
            solver_iters: f.iterations,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(f)
    };

    let base = probe(config.tau_min, 0, &mut trace)?;
    if !base.feasible {
        return Err(Error::Infeasible { tau_min: config.tau_min });
    }
    let outcome = bisect(config.tau_min, config.tau_max, config.tolerance, |tau| {
        let step = trace.len();
        let f = probe(tau, step, &mut trace)?;
        Ok::<_, Error>(f.feasible.then_some(f.lifted))
    })?;
    let tau_lifted = outcome.lo;
    let lifted = outcome.best.unwrap_or(base.lifted);
    check_lifted(combined, &lifted, tau_lifted, p, noise)?;

    let mut rng = stream(seed, &[TAG_EXTRACT]);
    let ext = extract_rank1(&lifted, combined, tau_lifted, p, noise, config.randomization_draws, &mut rng)?;
    let lifted_min_sinr = min_of(&sinr_lifted(combined, &lifted, noise)?);
    let solver_iterations = trace.iter().map(|r| r.solver_iters).sum();
    Ok(BeamSolution {
        tau: min_of(&ext.sinr),
        sinr: ext.sinr,
        beams: ext.beams,
        lifted,
        tau_lifted,
        lifted_min_sinr,
        trace,
        solver_iterations,
        rank1_failures: ext.randomized_users,
        degraded: ext.degraded,
    })
}

/// Write bisection probes as `step,tau,feasible,solver_iters,wall_ms`.
/// Timings are written as zero unless `timings` is set, keeping output reproducible.
pub fn write_bisection_csv<W: Write>(trace: &[BisectionRecord], out: W, timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "tau", "feasible", "solver_iters", "wall_ms"])?;
    for r in trace {
        let ms = if timings { r.wall_ms } else { 0.0 };
        w.write_record([
            r.step.to_string(),
            r.tau.to_string(),
            r.feasible.to_string(),
            r.solver_iters.to_string(),
            ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
