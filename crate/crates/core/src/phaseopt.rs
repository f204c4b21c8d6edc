//! Discrete reflection-phase search with transmit beams held fixed: global
//! search over a narrowed codebook, element-wise 1-D search, and the
//! continuous and quantized benchmarks.

use std::io::Write;

use rayon::prelude::*;

use crate::bisection::{bisect, Probe};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{cis, CVec, C64};
use crate::phase::{wrap_phase, PhaseConfig, PhaseGrid};
use crate::scenario::ChannelSet;
use crate::sensing::FeasibleSetTable;

/// Min-SINR of the users as a function of one surface's phases.
///
/// With beams and the other surfaces fixed, `h_k w_j` is affine in the
/// coefficients `e^{j theta_n}`: `base[k][j] + sum_n q[k][j][n] e^{j theta_n}`.
#[derive(Debug, Clone)]
pub struct PhaseProblem {
    k: usize,
    n: usize,
    /// `q[(k * K + j) * N + n]`.
    q: Vec<C64>,
    base: Vec<C64>,
    noise: f64,
}

impl PhaseProblem {
    /// `phases` covers every active surface; the entry at `surface` is ignored.
    pub fn new(
        channels: &ChannelSet,
        beams: &[CVec],
        phases: &[PhaseConfig],
        surface: usize,
        noise: f64,
    ) -> Result<Self> {
        if noise <= 0.0 {
            return Err(Error::Domain(format!("noise power must be positive, got {noise}")));
        }
        if phases.len() != channels.surfaces.len() || surface >= channels.surfaces.len() {
            return Err(Error::Dimension("one phase configuration per active surface is required".into()));
        }
        let k = channels.n_users;
        if beams.len() != k || beams.iter().any(|w| w.len() != channels.n_tx) {
            return Err(Error::Dimension("one beam of length N_t per user is required".into()));
        }
        let target = &channels.surfaces[surface];
        let n = target.n_elements();
        let mut q = vec![C64::new(0.0, 0.0); k * k * n];
        let mut base = vec![C64::new(0.0, 0.0); k * k];
        for (i, (surf, theta)) in channels.surfaces.iter().zip(phases).enumerate() {
            let incident: Vec<CVec> = beams.iter().map(|w| &surf.bs_to_ris * w).collect();
            if i != surface && theta.len() != surf.n_elements() {
                return Err(Error::Dimension("phase vector length differs from surface size".into()));
            }
            let coeff = if i == surface { Vec::new() } else { theta.coefficients() };
            for (u, row) in surf.user_rows.iter().enumerate() {
                for (j, inc) in incident.iter().enumerate() {
                    for e in 0..surf.n_elements() {
                        let term = row[e] * inc[e];
                        if i == surface {
                            q[(u * k + j) * n + e] = term;
                        } else {
                            base[u * k + j] += term * coeff[e];
                        }
                    }
                }
            }
        }
        Ok(PhaseProblem { k, n, q, base, noise })
    }

    pub fn n_elements(&self) -> usize {
        self.n
    }

    pub fn n_users(&self) -> usize {
        self.k
    }

    fn coeff(&self, pair: usize, element: usize) -> C64 {
        self.q[pair * self.n + element]
    }

    /// `h_k w_j` for every `(k, j)` at the given coefficients.
    pub fn sums(&self, coeffs: &[C64]) -> Vec<C64> {
        (0..self.k * self.k)
            .map(|p| self.base[p] + (0..self.n).map(|e| self.coeff(p, e) * coeffs[e]).sum::<C64>())
            .collect()
    }

    pub fn sinr_from_sums(&self, sums: &[C64]) -> Vec<f64> {
        (0..self.k)
            .map(|u| {
                let row = &sums[u * self.k..(u + 1) * self.k];
                let interference: f64 =
                    row.iter().enumerate().filter(|&(j, _)| j != u).map(|(_, s)| s.norm_sqr()).sum();
                row[u].norm_sqr() / (interference + self.noise)
            })
            .collect()
    }

    pub fn min_sinr_from_sums(&self, sums: &[C64]) -> f64 {
        self.sinr_from_sums(sums).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn objective(&self, coeffs: &[C64]) -> f64 {
        self.min_sinr_from_sums(&self.sums(coeffs))
    }

    pub fn objective_phases(&self, phases: &[f64]) -> f64 {
        let c: Vec<C64> = phases.iter().map(|&t| cis(t)).collect();
        self.objective(&c)
    }

    /// Add `delta` times element `e`'s contribution to `sums`.
    fn shift(&self, sums: &mut [C64], element: usize, delta: C64) {
        for (p, s) in sums.iter_mut().enumerate() {
            *s += self.coeff(p, element) * delta;
        }
    }
}

/// Lexicographic enumeration of a narrowed codebook: element 0 is the most
/// significant digit and each arc is walked from its start.
#[derive(Debug, Clone)]
pub struct Codebook {
    arcs: Vec<Vec<usize>>,
    cardinality: u128,
    cursor: Option<Vec<usize>>,
}

impl Codebook {
    pub fn cardinality(&self) -> u128 {
        self.cardinality
    }
}

impl Iterator for Codebook {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.cursor.as_mut()?;
        let out: Vec<usize> = cur.iter().zip(&self.arcs).map(|(&c, arc)| arc[c]).collect();
        let mut pos = cur.len();
        loop {
            if pos == 0 {
                self.cursor = None;
                break;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < self.arcs[pos].len() {
                break;
            }
            cur[pos] = 0;
        }
        Some(out)
    }
}

/// Build the codebook of `table`, refusing when it exceeds `budget`.
pub fn enumerate_candidates(table: &FeasibleSetTable, budget: u64) -> Result<Codebook> {
    let cardinality = table.cardinality();
    if cardinality > budget as u128 {
        return Err(Error::BudgetExceeded { cardinality, budget });
    }
    let arcs: Vec<Vec<usize>> = (0..table.len()).map(|e| table.members(e)).collect();
    Ok(Codebook { cursor: Some(vec![0; arcs.len()]), arcs, cardinality })
}

/// One accepted or evaluated element update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTraceRow {
    pub sweep: usize,
    pub element: usize,
    pub chosen_index: usize,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseOptResult {
    pub config: PhaseConfig,
    /// Min-SINR recomputed at `config`.
    pub objective: f64,
    /// Codebook members scored by the global search.
    pub candidates: u64,
    /// Candidate scores computed by the 1-D search.
    pub evaluations: u64,
    pub sweeps: usize,
    pub trace: Vec<PhaseTraceRow>,
    /// Probes of the threshold bisection wrapped around the global search.
    pub bisection: Vec<Probe>,
}

/// Best member of one subtree: odometer over `free` elements starting from
/// `sums`, strict improvement only, so the first maximum in order wins.
fn search_subtree(
    problem: &PhaseProblem,
    free: &[usize],
    choices: &[Vec<(usize, C64)>],
    sums: Vec<C64>,
) -> (f64, Vec<usize>, u64) {
    let depth = free.len();
    let pairs = sums.len();
    // levels[d] holds the sums with the first d free elements applied.
    let mut levels = vec![sums; depth + 1];
    let mut digits = vec![0usize; depth];
    let fill = |levels: &mut Vec<Vec<C64>>, digits: &[usize], from: usize| {
        for d in from..depth {
            let c = choices[d][digits[d]].1;
            let (head, tail) = levels.split_at_mut(d + 1);
            let (src, dst) = (&head[d], &mut tail[0]);
            for p in 0..pairs {
                dst[p] = src[p] + problem.coeff(p, free[d]) * c;
            }
        }
    };
    fill(&mut levels, &digits, 0);
    let mut best = (f64::NEG_INFINITY, digits.clone());
    let mut count = 0u64;
    loop {
        count += 1;
        let f = problem.min_sinr_from_sums(&levels[depth]);
        if f > best.0 {
            best = (f, digits.clone());
        }
        let mut pos = depth;
        loop {
            if pos == 0 {
                return (best.0, best.1, count);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < choices[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
        fill(&mut levels, &digits, pos);
    }
}

/// Exact maximizer of min-SINR over the codebook of `table`, wrapped in the
/// threshold bisection `tau <= f*` on `[tau_min, tau_max]`.
pub fn gs_optimize(problem: &PhaseProblem, table: &FeasibleSetTable, config: &SystemConfig) -> Result<PhaseOptResult> {
    if table.len() != problem.n_elements() {
        return Err(Error::Dimension("feasible-set table and surface differ in size".into()));
    }
    let cardinality = table.cardinality();
    if cardinality > config.enumeration_budget as u128 {
        return Err(Error::BudgetExceeded { cardinality, budget: config.enumeration_budget });
    }
    let grid = table.grid;
    let members: Vec<Vec<usize>> = (0..table.len()).map(|e| table.members(e)).collect();
    let mut base = problem.base.clone();
    let mut fixed = vec![0usize; table.len()];
    let mut free = Vec::new();
    for (e, m) in members.iter().enumerate() {
        if m.len() == 1 {
            fixed[e] = m[0];
            problem.shift(&mut base, e, cis(grid.value(m[0])));
        } else {
            free.push(e);
        }
    }
    let choices: Vec<Vec<(usize, C64)>> =
        free.iter().map(|&e| members[e].iter().map(|&i| (i, cis(grid.value(i)))).collect()).collect();

    let (objective_fast, digits, candidates) = if free.is_empty() {
        (problem.min_sinr_from_sums(&base), Vec::new(), 1u64)
    } else {
        let branches: Vec<(f64, Vec<usize>, u64)> = choices[0]
            .par_iter()
            .enumerate()
            .map(|(d0, &(_, c))| {
                let mut sums = base.clone();
                problem.shift(&mut sums, free[0], c);
                let (f, mut rest, n) = search_subtree(problem, &free[1..], &choices[1..], sums);
                rest.insert(0, d0);
                (f, rest, n)
            })
            .collect();
        let mut best = (f64::NEG_INFINITY, Vec::new(), 0u64);
        for (f, d, n) in branches {
            best.2 += n;
            if f > best.0 {
                best.0 = f;
                best.1 = d;
            }
        }
        best
    };
    let mut indices = fixed;
    for (slot, (&e, &d)) in free.iter().zip(&digits).enumerate() {
        indices[e] = choices[slot][d].0;
    }
    let chosen = PhaseConfig::discrete(grid, indices.clone());
    let objective = problem.objective(&chosen.coefficients());
    debug_assert!((objective - objective_fast).abs() <= 1e-9 * objective.abs().max(1.0));

    let threshold = bisect(config.tau_min, config.tau_max, config.tolerance, |tau| {
        Ok::<_, Error>((tau <= objective).then_some(()))
    })?;
    let trace = indices
        .iter()
        .enumerate()
        .map(|(e, &i)| PhaseTraceRow { sweep: 0, element: e, chosen_index: i, objective })
        .collect();
    Ok(PhaseOptResult {
        config: chosen,
        objective,
        candidates,
        evaluations: 0,
        sweeps: 1,
        trace,
        bisection: threshold.probes,
    })
}

/// Element-wise search over each arc, sweeping elements in ascending order.
/// Starts from `start` where it lies inside the arcs, otherwise from the
/// arc points nearest the circular mean of the sensed optima.
pub fn od_optimize(
    problem: &PhaseProblem,
    table: &FeasibleSetTable,
    config: &SystemConfig,
    start: Option<&[usize]>,
) -> Result<PhaseOptResult> {
    let n = problem.n_elements();
    if table.len() != n {
        return Err(Error::Dimension("feasible-set table and surface differ in size".into()));
    }
    let grid = table.grid;
    let levels = grid.levels();
    let mut indices: Vec<usize> = (0..n)
        .map(|e| match start {
            Some(s) if table.arcs[e].contains(s[e] % levels, levels) => s[e] % levels,
            _ => table.representative(e),
        })
        .collect();
    let coeffs: Vec<C64> = indices.iter().map(|&i| cis(grid.value(i))).collect();
    let mut sums = problem.sums(&coeffs);
    let mut current = problem.min_sinr_from_sums(&sums);
    let mut trace = Vec::new();
    let mut evaluations = 0u64;
    let mut updates = 0usize;
    let mut sweeps = 0usize;
    'outer: loop {
        sweeps += 1;
        let at_start = current;
        for e in 0..n {
            if updates >= config.od_iterations {
                break 'outer;
            }
            let arc = table.arcs[e];
            if arc.len <= 1 {
                continue;
            }
            updates += 1;
            let old = cis(grid.value(indices[e]));
            let mut best = (current, indices[e]);
            for idx in arc.members(levels) {
                evaluations += 1;
                if idx == indices[e] {
                    continue;
                }
                let mut trial = sums.clone();
                problem.shift(&mut trial, e, cis(grid.value(idx)) - old);
                let f = problem.min_sinr_from_sums(&trial);
                if f > best.0 {
                    best = (f, idx);
                }
            }
            if best.1 != indices[e] {
                problem.shift(&mut sums, e, cis(grid.value(best.1)) - old);
                indices[e] = best.1;
                current = best.0;
            }
            trace.push(PhaseTraceRow { sweep: sweeps, element: e, chosen_index: indices[e], objective: current });
        }
        if current - at_start < config.tolerance {
            break;
        }
    }
    let chosen = PhaseConfig::discrete(grid, indices);
    let objective = problem.objective(&chosen.coefficients());
    Ok(PhaseOptResult { config: chosen, objective, candidates: 0, evaluations, sweeps, trace, bisection: Vec::new() })
}

const COARSE_POINTS: usize = 16;
const GOLDEN_ITERS: usize = 40;

/// Coordinate ascent on continuous phases from `start`: per element a coarse
/// scan followed by golden-section refinement; only improvements are kept.
pub fn continuous_baseline(problem: &PhaseProblem, start: &[f64], config: &SystemConfig) -> Result<PhaseOptResult> {
    let n = problem.n_elements();
    if start.len() != n {
        return Err(Error::Dimension("start phases differ from surface size".into()));
    }
    let mut phases: Vec<f64> = start.iter().map(|&t| wrap_phase(t)).collect();
    let coeffs: Vec<C64> = phases.iter().map(|&t| cis(t)).collect();
    let mut sums = problem.sums(&coeffs);
    let mut current = problem.min_sinr_from_sums(&sums);
    let mut trace = Vec::new();
    let mut evaluations = 0u64;
    let mut updates = 0usize;
    let mut sweeps = 0usize;
    let step = std::f64::consts::TAU / COARSE_POINTS as f64;
    'outer: loop {
        sweeps += 1;
        let at_start = current;
        for e in 0..n {
            if updates >= config.od_iterations {
                break 'outer;
            }
            updates += 1;
            let old = cis(phases[e]);
            let mut eval = |t: f64| {
                evaluations += 1;
                let mut trial = sums.clone();
                problem.shift(&mut trial, e, cis(t) - old);
                problem.min_sinr_from_sums(&trial)
            };
            let mut best = (current, phases[e]);
            let mut coarse = (f64::NEG_INFINITY, 0.0);
            for s in 0..COARSE_POINTS {
                let t = s as f64 * step;
                let f = eval(t);
                if f > coarse.0 {
                    coarse = (f, t);
                }
            }
            let (mut a, mut b) = (coarse.1 - step, coarse.1 + step);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
            let (mut fc, mut fd) = (eval(c), eval(d));
            for _ in 0..GOLDEN_ITERS {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - r * (b - a);
                    fc = eval(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + r * (b - a);
                    fd = eval(d);
                }
            }
            for (f, t) in [(coarse.0, coarse.1), (fc, c), (fd, d)] {
                if f > best.0 {
                    best = (f, wrap_phase(t));
                }
            }
            if best.1 != phases[e] {
                problem.shift(&mut sums, e, cis(best.1) - old);
                phases[e] = best.1;
                current = best.0;
            }
            trace.push(PhaseTraceRow { sweep: sweeps, element: e, chosen_index: 0, objective: current });
        }
        if current - at_start < config.tolerance {
            break;
        }
    }
    let chosen = PhaseConfig::continuous(phases);
    let objective = problem.objective(&chosen.coefficients());
    Ok(PhaseOptResult { config: chosen, objective, candidates: 0, evaluations, sweeps, trace, bisection: Vec::new() })
}

/// Nearest grid point of every element under circular distance.
pub fn quantize_baseline(continuous: &PhaseConfig, bits: u32) -> PhaseConfig {
    let grid = PhaseGrid::new(bits);
    PhaseConfig::discrete(grid, continuous.phases().iter().map(|&t| grid.nearest(t)).collect())
}

/// Write trace rows as `sweep,element,chosen_phase_index,objective`.
pub fn write_trace_csv<W: Write>(rows: &[PhaseTraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep", "element", "chosen_phase_index", "objective"])?;
    for r in rows {
        w.write_record([
            r.sweep.to_string(),
            r.element.to_string(),
            r.chosen_index.to_string(),
            r.objective.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
