//! The alternating optimization loop, its benchmark variants and the
//! Monte-Carlo sweep harness.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{key_values, watts_to_dbm, SystemConfig};
use crate::error::{Error, Result};
use crate::phase::{circular_mean, PhaseConfig};
use crate::phaseopt::{continuous_baseline, gs_optimize, od_optimize, quantize_baseline, PhaseOptResult, PhaseProblem};
use crate::rng::derive_seed;
use crate::scenario::{make_scenario, synth_channels, ChannelSet, Scenario};
use crate::sensing::{sense_surface, AngleEstimate, FeasibleSetTable};
use crate::txbf::{combine_channels, optimize_txbf, BeamSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Gs,
    OneD,
    Auto,
    Continuous,
    Quantized,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Gs, Algorithm::OneD, Algorithm::Auto, Algorithm::Continuous, Algorithm::Quantized];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Gs => "gs",
            Algorithm::OneD => "1d",
            Algorithm::Auto => "auto",
            Algorithm::Continuous => "continuous",
            Algorithm::Quantized => "quantized",
        }
    }

    fn is_continuous(&self) -> bool {
        matches!(self, Algorithm::Continuous | Algorithm::Quantized)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}' (expected gs, 1d, auto, continuous or quantized)")))
    }
}

/// Phase search actually used for one surface update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMethod {
    Gs,
    OneD,
    Continuous,
}

impl PhaseMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseMethod::Gs => "gs",
            PhaseMethod::OneD => "1d",
            PhaseMethod::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationCap => "iteration_cap",
        }
    }
}

/// Work done on one surface within an outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceUpdate {
    pub method: PhaseMethod,
    /// Codebook cardinality of the surface's feasible-set table.
    pub codebook: u128,
    /// Sum of the arc sizes of the surface's feasible-set table.
    pub arc_total: usize,
    pub candidates: u64,
    pub evaluations: u64,
    pub sweeps: usize,
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Min-SINR of the extracted beams for the phases entering this iteration.
    pub tau_extracted: f64,
    /// Bisection value of the lifted problem for the same phases.
    pub tau_lifted: f64,
    pub sinr: Vec<f64>,
    /// Min-SINR after the phase updates, beams unchanged.
    pub phase_objective: f64,
    pub surfaces: Vec<SurfaceUpdate>,
    pub wall_ms: f64,
    pub solver_iterations: usize,
    pub gs_candidates: u64,
    pub od_evals: u64,
    pub rank1_failures: usize,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
    /// Solver iterations of the closing transmit solve.
    pub final_solver_iterations: usize,
    pub final_rank1_failures: usize,
}

impl RunTrace {
    pub fn outer_iterations(&self) -> usize {
        self.iterations.len()
    }
}

#[derive(Debug, Clone)]
pub struct JointResult {
    pub solution: BeamSolution,
    pub phases: Vec<PhaseConfig>,
    pub trace: RunTrace,
    pub tables: Vec<FeasibleSetTable>,
    pub estimates: Vec<AngleEstimate>,
}

/// Choose the phase search for one surface.
pub fn select_method(algorithm: Algorithm, table: &FeasibleSetTable, config: &SystemConfig) -> PhaseMethod {
    match algorithm {
        Algorithm::Continuous | Algorithm::Quantized => PhaseMethod::Continuous,
        Algorithm::OneD => PhaseMethod::OneD,
        Algorithm::Gs | Algorithm::Auto => {
            let fits = table.cardinality() <= config.enumeration_budget as u128;
            let small = match (algorithm, config.size_threshold) {
                (Algorithm::Auto, Some(nth)) => table.len() < nth,
                _ => true,
            };
            if fits && small {
                PhaseMethod::Gs
            } else {
                PhaseMethod::OneD
            }
        }
    }
}

fn initial_phases(tables: &[FeasibleSetTable], algorithm: Algorithm) -> Vec<PhaseConfig> {
    tables
        .iter()
        .map(|t| {
            if algorithm.is_continuous() {
                PhaseConfig::continuous(
                    t.optima.iter().map(|o| if o.is_empty() { 0.0 } else { circular_mean(o) }).collect(),
                )
            } else {
                PhaseConfig::discrete(t.grid, t.representatives())
            }
        })
        .collect()
}

fn update_surface(
    problem: &PhaseProblem,
    method: PhaseMethod,
    table: &FeasibleSetTable,
    current: &PhaseConfig,
    config: &SystemConfig,
) -> Result<PhaseOptResult> {
    match method {
        PhaseMethod::Gs => gs_optimize(problem, table, config),
        PhaseMethod::OneD => od_optimize(problem, table, config, current.indices()),
        PhaseMethod::Continuous => continuous_baseline(problem, current.phases(), config),
    }
}

/// Sense once, then alternate transmit beamforming with per-surface phase
/// updates until the extracted min-SINR gains less than the tolerance or
/// the iteration cap is reached. A closing transmit solve on the final
/// phases competes with the best iterate.
pub fn joint_optimize(scenario: &Scenario, config: &SystemConfig, algorithm: Algorithm, seed: u64) -> Result<JointResult> {
    config.validate()?;
    let channels = synth_channels(scenario, config)?;
    joint_optimize_channels(scenario, &channels, config, algorithm, seed)
}

pub fn joint_optimize_channels(
    scenario: &Scenario,
    channels: &ChannelSet,
    config: &SystemConfig,
    algorithm: Algorithm,
    seed: u64,
) -> Result<JointResult> {
    let mut tables = Vec::new();
    let mut estimates = Vec::new();
    for i in 0..channels.surfaces.len() {
        let out = sense_surface(scenario, channels, config, i, seed)?;
        tables.push(out.table);
        estimates.push(out.estimate);
    }
    let mut phases = initial_phases(&tables, algorithm);
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut best: Option<(BeamSolution, Vec<PhaseConfig>)> = None;
    let mut termination = Termination::IterationCap;

    for l in 1..=config.outer_iterations {
        let start = Instant::now();
        let combined = combine_channels(channels, &phases)?;
        let sol = optimize_txbf(&combined, config, derive_seed(seed, &[l as u64]))?;
        let entering = phases.clone();
        let mut surfaces = Vec::new();
        let (mut gs_candidates, mut od_evals) = (0u64, 0u64);
        let mut phase_objective = sol.tau;
        for i in 0..channels.surfaces.len() {
            let problem = PhaseProblem::new(channels, &sol.beams, &phases, i, config.noise_power_user)?;
            let method = select_method(algorithm, &tables[i], config);
            let res = update_surface(&problem, method, &tables[i], &phases[i], config)?;
            gs_candidates += res.candidates;
            od_evals += res.evaluations;
            phase_objective = res.objective;
            phases[i] = res.config;
            surfaces.push(SurfaceUpdate {
                method,
                codebook: tables[i].cardinality(),
                arc_total: tables[i].total_size(),
                candidates: res.candidates,
                evaluations: res.evaluations,
                sweeps: res.sweeps,
            });
        }
        let record = IterationRecord {
            iteration: l,
            tau_extracted: sol.tau,
            tau_lifted: sol.tau_lifted,
            sinr: sol.sinr.clone(),
            phase_objective,
            surfaces,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            solver_iterations: sol.solver_iterations,
            gs_candidates,
            od_evals,
            rank1_failures: sol.rank1_failures,
        };
        let converged = iterations.last().is_some_and(|p| record.tau_extracted - p.tau_extracted < config.tolerance);
        iterations.push(record);
        if best.as_ref().is_none_or(|(b, _)| sol.tau > b.tau) {
            best = Some((sol, entering));
        }
        if converged {
            termination = Termination::Converged;
            break;
        }
    }

    if algorithm == Algorithm::Quantized {
        phases = phases.iter().map(|p| quantize_baseline(p, config.bits)).collect();
    }
    let combined = combine_channels(channels, &phases)?;
    let closing = optimize_txbf(&combined, config, derive_seed(seed, &[0]))?;
    let trace_tail = (closing.solver_iterations, closing.rank1_failures);
    let (solution, phases) = match best {
        Some((b, p)) if algorithm != Algorithm::Quantized && b.tau > closing.tau => (b, p),
        _ => (closing, phases),
    };
    Ok(JointResult {
        solution,
        phases,
        trace: RunTrace {
            iterations,
            termination,
            final_solver_iterations: trace_tail.0,
            final_rank1_failures: trace_tail.1,
        },
        tables,
        estimates,
    })
}

/// Work counters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OperationReport {
    pub gs_candidates: u64,
    pub od_evals: u64,
    pub solver_iterations: usize,
    pub rank1_failures: usize,
}

pub fn count_operations(trace: &RunTrace) -> OperationReport {
    let mut r = OperationReport {
        solver_iterations: trace.final_solver_iterations,
        rank1_failures: trace.final_rank1_failures,
        ..Default::default()
    };
    for it in &trace.iterations {
        r.gs_candidates += it.gs_candidates;
        r.od_evals += it.od_evals;
        r.solver_iterations += it.solver_iterations;
        r.rank1_failures += it.rank1_failures;
    }
    r
}

/// Apply a sweep or variant assignment; `algorithm` is handled here, all
/// other keys go to the configuration.
pub fn apply_override(config: &mut SystemConfig, algorithm: &mut Algorithm, key: &str, value: &str) -> Result<()> {
    if key == "algorithm" {
        *algorithm = value.parse()?;
        Ok(())
    } else {
        config.set(key, value)
    }
}

/// A sweep: base configuration, optional named variants, and axes whose
/// Cartesian product forms the grid of cells.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub algorithm: Algorithm,
    pub seeds: usize,
    pub master_seed: u64,
    /// Each variant is a list of overrides; an empty list means the base.
    pub variants: Vec<Vec<(String, String)>>,
    pub axes: Vec<(String, Vec<String>)>,
}

impl ExperimentSpec {
    pub fn new(base: SystemConfig, algorithm: Algorithm, seeds: usize, master_seed: u64) -> Self {
        ExperimentSpec { base, algorithm, seeds, master_seed, variants: Vec::new(), axes: Vec::new() }
    }

    /// Parse the key-value sweep format:
    /// configuration keys, `algorithm`, `seeds`, `master_seed`,
    /// `sweep.<key> = v1, v2, ...` and `variants = k=v, k=v; k=v`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::new(SystemConfig::default(), Algorithm::Gs, 1, 0);
        for (line, key, value) in key_values(text)? {
            let at = |e: Error| match e {
                Error::Config(message) => Error::Parse { line, message },
                other => other,
            };
            let uint = |v: &str| v.parse::<u64>().map_err(|_| Error::Parse { line, message: format!("{key}: expected an unsigned integer") });
            if let Some(axis) = key.strip_prefix("sweep.") {
                let values: Vec<String> =
                    value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
                spec.axes.push((axis.to_string(), values));
            } else if key == "variants" {
                spec.variants = value
                    .split(';')
                    .map(|variant| {
                        variant
                            .split(',')
                            .map(str::trim)
                            .filter(|a| !a.is_empty())
                            .map(|a| {
                                a.split_once('=')
                                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                                    .ok_or_else(|| Error::Parse { line, message: format!("bad variant assignment '{a}'") })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
            } else if key == "seeds" {
                spec.seeds = uint(&value)? as usize;
            } else if key == "master_seed" {
                spec.master_seed = uint(&value)?;
            } else {
                apply_override(&mut spec.base, &mut spec.algorithm, &key, &value).map_err(at)?;
            }
        }
        spec.base.validate()?;
        spec.cells()?;
        Ok(spec)
    }

    /// Expand variants and axes; every cell is validated.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if let Some((axis, _)) = self.axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::Config(format!("sweep axis '{axis}' has no values")));
        }
        if self.variants.iter().any(|v| v.is_empty()) && self.variants.len() > 1 {
            return Err(Error::Config("empty variant in a variant list".into()));
        }
        let variants = if self.variants.is_empty() { vec![Vec::new()] } else { self.variants.clone() };
        let mut cells = Vec::new();
        for variant in &variants {
            let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
            for (axis, values) in &self.axes {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        values.iter().map(move |v| {
                            let mut c = c.clone();
                            c.push((axis.clone(), v.clone()));
                            c
                        })
                    })
                    .collect();
            }
            for combo in combos {
                let mut config = self.base.clone();
                let mut algorithm = self.algorithm;
                for (k, v) in variant.iter().chain(&combo) {
                    apply_override(&mut config, &mut algorithm, k, v)?;
                }
                config.validate()?;
                cells.push(Cell { index: cells.len(), config, algorithm });
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub config: SystemConfig,
    pub algorithm: Algorithm,
}

/// One Monte-Carlo run.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub cell: usize,
    pub seed_index: usize,
    pub scenario_seed: u64,
    pub topology: String,
    pub algorithm: Algorithm,
    pub bits: u32,
    pub n_elements: usize,
    pub n_tx: usize,
    pub n_users: usize,
    pub p_max_dbm: f64,
    pub outer_iters: usize,
    pub tau_lifted: f64,
    pub tau_extracted: f64,
    pub min_sinr: f64,
    pub mean_sinr: f64,
    pub gs_candidates: u64,
    pub od_evals: u64,
    pub sdr_total_iters: usize,
    pub wall_ms: f64,
    pub rank1_failures: usize,
    pub status: String,
    /// `(tau_extracted, tau_lifted)` per outer iteration.
    pub iterations: Vec<(f64, f64)>,
}

impl ResultRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Scenario seed shared by every cell for the same seed index.
pub fn scenario_seed(master: u64, seed_index: usize) -> u64 {
    derive_seed(master, &[seed_index as u64])
}

/// Stream of one run, distinct per cell.
pub fn run_seed(master: u64, cell: usize, seed_index: usize) -> u64 {
    derive_seed(master, &[u64::MAX, cell as u64, seed_index as u64])
}

fn run_one(cell: &Cell, master: u64, seed_index: usize) -> ResultRow {
    let cfg = &cell.config;
    let sseed = scenario_seed(master, seed_index);
    let start = Instant::now();
    let outcome = make_scenario(cfg, sseed)
        .and_then(|sc| joint_optimize(&sc, cfg, cell.algorithm, run_seed(master, cell.index, seed_index)));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut row = result_row(cfg, cell.algorithm, sseed, &outcome, wall_ms);
    row.cell = cell.index;
    row.seed_index = seed_index;
    row
}

/// Result row of one run; `cell` and `seed_index` are left at zero.
pub fn result_row(
    cfg: &SystemConfig,
    algorithm: Algorithm,
    scenario_seed: u64,
    outcome: &Result<JointResult>,
    wall_ms: f64,
) -> ResultRow {
    let mut row = ResultRow {
        cell: 0,
        seed_index: 0,
        scenario_seed,
        topology: cfg.topology.as_str().to_string(),
        algorithm,
        bits: cfg.bits,
        n_elements: cfg.n_ris_elements(),
        n_tx: cfg.n_tx_antennas,
        n_users: cfg.n_users,
        p_max_dbm: watts_to_dbm(cfg.p_max),
        outer_iters: 0,
        tau_lifted: f64::NAN,
        tau_extracted: f64::NAN,
        min_sinr: f64::NAN,
        mean_sinr: f64::NAN,
        gs_candidates: 0,
        od_evals: 0,
        sdr_total_iters: 0,
        wall_ms,
        rank1_failures: 0,
        status: "ok".into(),
        iterations: Vec::new(),
    };
    match outcome {
        Ok(res) => {
            let ops = count_operations(&res.trace);
            let s = &res.solution;
            row.outer_iters = res.trace.outer_iterations();
            row.tau_lifted = s.tau_lifted;
            row.tau_extracted = s.tau;
            row.min_sinr = s.sinr.iter().copied().fold(f64::INFINITY, f64::min);
            row.mean_sinr = s.sinr.iter().sum::<f64>() / s.sinr.len() as f64;
            row.gs_candidates = ops.gs_candidates;
            row.od_evals = ops.od_evals;
            row.sdr_total_iters = ops.solver_iterations;
            row.rank1_failures = ops.rank1_failures;
            row.iterations = res.trace.iterations.iter().map(|r| (r.tau_extracted, r.tau_lifted)).collect();
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Run every cell for every seed in parallel; rows come back sorted by
/// `(cell, seed)`. Individual failures are recorded in their row.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let cells = spec.cells()?;
    let jobs: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..spec.seeds).map(move |s| (c, s))).collect();
    let mut rows: Vec<ResultRow> =
        jobs.par_iter().map(|&(c, s)| run_one(&cells[c], spec.master_seed, s)).collect();
    rows.sort_by_key(|r| (r.cell, r.seed_index));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub cell: usize,
    pub topology: String,
    pub algorithm: Algorithm,
    pub bits: u32,
    pub n_elements: usize,
    pub n_tx: usize,
    pub n_users: usize,
    pub p_max_dbm: f64,
    pub runs: usize,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Statistics of `tau_extracted` over the successful runs of each cell.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let cell = rows[start].cell;
        let end = start + rows[start..].iter().take_while(|r| r.cell == cell).count();
        let group = &rows[start..end];
        let mut v: Vec<f64> = group.iter().filter(|r| r.ok()).map(|r| r.tau_extracted).collect();
        v.sort_by(f64::total_cmp);
        let first = &group[0];
        out.push(AggregateRow {
            cell,
            topology: first.topology.clone(),
            algorithm: first.algorithm,
            bits: first.bits,
            n_elements: first.n_elements,
            n_tx: first.n_tx,
            n_users: first.n_users,
            p_max_dbm: first.p_max_dbm,
            runs: v.len(),
            mean: if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 },
            median: quantile(&v, 0.5),
            p10: quantile(&v, 0.1),
            p90: quantile(&v, 0.9),
        });
        start = end;
    }
    out
}

pub const RESULT_HEADER: [&str; 19] = [
    "scenario_seed",
    "topology",
    "algorithm",
    "b",
    "N",
    "N_t",
    "K",
    "p_max_dbm",
    "outer_iters",
    "tau_lifted",
    "tau_extracted",
    "min_sinr",
    "mean_sinr",
    "gs_candidates",
    "od_evals",
    "sdr_total_iters",
    "wall_ms",
    "rank1_failures",
    "status",
];

pub const AGGREGATE_HEADER: [&str; 12] =
    ["topology", "algorithm", "b", "N", "N_t", "K", "p_max_dbm", "runs", "mean", "median", "p10", "p90"];

pub const ITERATION_HEADER: [&str; 11] =
    ["topology", "algorithm", "b", "N", "N_t", "K", "p_max_dbm", "scenario_seed", "iteration", "tau_extracted", "tau_lifted"];

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

/// One row per run. `wall_ms` is written as zero unless `timings` is set.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W, timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario_seed.to_string(),
            r.topology.clone(),
            r.algorithm.to_string(),
            r.bits.to_string(),
            r.n_elements.to_string(),
            r.n_tx.to_string(),
            r.n_users.to_string(),
            fmt_f(r.p_max_dbm),
            r.outer_iters.to_string(),
            fmt_f(r.tau_lifted),
            fmt_f(r.tau_extracted),
            fmt_f(r.min_sinr),
            fmt_f(r.mean_sinr),
            r.gs_candidates.to_string(),
            r.od_evals.to_string(),
            r.sdr_total_iters.to_string(),
            fmt_f(if timings { r.wall_ms } else { 0.0 }),
            r.rank1_failures.to_string(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.topology.clone(),
            r.algorithm.to_string(),
            r.bits.to_string(),
            r.n_elements.to_string(),
            r.n_tx.to_string(),
            r.n_users.to_string(),
            fmt_f(r.p_max_dbm),
            r.runs.to_string(),
            fmt_f(r.mean),
            fmt_f(r.median),
            fmt_f(r.p10),
            fmt_f(r.p90),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration convergence rows of every run.
pub fn write_iterations_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ITERATION_HEADER)?;
    for r in rows {
        for (i, (te, tl)) in r.iterations.iter().enumerate() {
            w.write_record([
                r.topology.clone(),
                r.algorithm.to_string(),
                r.bits.to_string(),
                r.n_elements.to_string(),
                r.n_tx.to_string(),
                r.n_users.to_string(),
                fmt_f(r.p_max_dbm),
                r.scenario_seed.to_string(),
                (i + 1).to_string(),
                fmt_f(*te),
                fmt_f(*tl),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
