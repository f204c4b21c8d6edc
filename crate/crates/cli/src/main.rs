//! `dualris`: single runs, sweeps, MUSIC demos and plots for the dual-surface
//! ISAC simulator. Every artifact is written inside `--out`.

mod plot;
mod svg;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualris_core::orchestrator::{
    aggregate, result_row, run_seed, scenario_seed, write_aggregate_csv, write_iterations_csv, write_results_csv,
    JointResult,
};
use dualris_core::sensing::{sense_surface, write_angles_csv, write_spectrum_csv};
use dualris_core::txbf::write_bisection_csv;
use dualris_core::{
    joint_optimize, make_scenario, run_experiment, synth_channels, Algorithm, Error, ExperimentSpec, SystemConfig,
};

use plot::{PlotKind, Table};

/// A failed command: exit code and diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn schema(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Io(_) => 1,
            Error::Domain(_)
            | Error::Dimension(_)
            | Error::Solver(_)
            | Error::Infeasible { .. }
            | Error::BudgetExceeded { .. } => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    /// CSV plus SVG charts.
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl Preset {
    fn text(&self) -> &'static str {
        match self {
            Preset::Fig3 => include_str!("../presets/fig3.spec"),
            Preset::Fig4 => include_str!("../presets/fig4.spec"),
            Preset::Fig5 => include_str!("../presets/fig5.spec"),
            Preset::Fig6 => include_str!("../presets/fig6.spec"),
            Preset::Fig7 => include_str!("../presets/fig7.spec"),
            Preset::Fig8 => include_str!("../presets/fig8.spec"),
            Preset::Fig9 => include_str!("../presets/fig9.spec"),
        }
    }
}

#[derive(Parser)]
#[command(name = "dualris", version, about = "Sensing-assisted joint beamforming for dual-RIS ISAC downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Output {
    /// Directory receiving every artifact; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Record wall-clock times; otherwise they are written as zero.
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One joint optimization on one random deployment.
    Run {
        /// Key-value configuration file; missing keys keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_parser = parse_algorithm, default_value = "gs")]
        algorithm: Algorithm,
        #[command(flatten)]
        output: Output,
    },
    /// A Monte-Carlo sweep from a spec file or a figure preset.
    Sweep {
        /// Sweep spec file (configuration keys plus seeds, master_seed, sweep.<key>, variants).
        spec: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "spec")]
        preset: Option<Preset>,
        /// Overrides the sweep file's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the sweep file's algorithm (variants and axes still apply on top).
        #[arg(long, value_parser = parse_algorithm)]
        algorithm: Option<Algorithm>,
        #[command(flatten)]
        output: Output,
    },
    /// Sensing phase only: echo, MUSIC spectrum and estimated angles.
    MusicDemo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Surface whose sensors are used.
        #[arg(long, default_value_t = 0)]
        surface: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Render a results CSV as an SVG chart.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Path of `name` inside `out`; only plain file names are accepted.
fn artifact(out: &Path, name: &str) -> Result<PathBuf, Failure> {
    let plain = Path::new(name).components().count() == 1
        && !name.contains(['/', '\\'])
        && name != ".."
        && name != ".";
    if !plain {
        return Err(Failure::io(format!("artifact name '{name}' would leave the output directory")));
    }
    Ok(out.join(name))
}

fn create(out: &Path, name: &str) -> Result<fs::File, Failure> {
    fs::create_dir_all(out)?;
    Ok(fs::File::create(artifact(out, name)?)?)
}

fn load_config(path: Option<&Path>) -> Result<SystemConfig, Failure> {
    let cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::schema(format!("cannot read {}: {e}", p.display())))?;
            SystemConfig::parse(&text)?
        }
        None => SystemConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_trace(res: &JointResult, out: &Path, timings: bool) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(create(out, "trace.csv")?);
    let io = |e: csv::Error| Failure::io(e.to_string());
    w.write_record([
        "iteration",
        "tau_extracted",
        "tau_lifted",
        "phase_objective",
        "methods",
        "solver_iterations",
        "gs_candidates",
        "od_evals",
        "rank1_failures",
        "wall_ms",
    ])
    .map_err(io)?;
    for r in &res.trace.iterations {
        let methods: Vec<&str> = r.surfaces.iter().map(|s| s.method.as_str()).collect();
        w.write_record([
            r.iteration.to_string(),
            r.tau_extracted.to_string(),
            r.tau_lifted.to_string(),
            r.phase_objective.to_string(),
            methods.join("+"),
            r.solver_iterations.to_string(),
            r.gs_candidates.to_string(),
            r.od_evals.to_string(),
            r.rank1_failures.to_string(),
            (if timings { r.wall_ms } else { 0.0 }).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(out, "phases.csv")?);
    w.write_record(["surface", "element", "phase", "index"]).map_err(io)?;
    for (i, p) in res.phases.iter().enumerate() {
        for (e, theta) in p.phases().iter().enumerate() {
            let idx = p.indices().map_or(String::new(), |x| x[e].to_string());
            w.write_record([i.to_string(), e.to_string(), theta.to_string(), idx]).map_err(io)?;
        }
    }
    w.flush()?;
    write_bisection_csv(&res.solution.trace, create(out, "bisection.csv")?, timings)?;
    Ok(())
}

fn summary(res: &JointResult, algorithm: Algorithm, seed: u64) -> String {
    let s = &res.solution;
    let sinr: Vec<String> = s.sinr.iter().map(|v| format!("{v:.6}")).collect();
    format!(
        "algorithm={algorithm}\nseed={seed}\ntau_extracted={:.6}\ntau_lifted={:.6}\nsinr=[{}]\nouter_iterations={}\ntermination={}\nrank_one={}\n",
        s.tau,
        s.tau_lifted,
        sinr.join(", "),
        res.trace.outer_iterations(),
        res.trace.termination.as_str(),
        s.rank_one(),
    )
}

fn convergence_chart(rows: &[dualris_core::orchestrator::ResultRow], out: &Path) -> Result<(), Failure> {
    write_iterations_csv(rows, create(out, "iterations.csv")?)?;
    let table = Table::read(&artifact(out, "iterations.csv")?)?;
    let chart = plot::chart(&table, PlotKind::Convergence)?;
    create(out, PlotKind::Convergence.file_name())?.write_all(svg::line_chart(&chart).as_bytes())?;
    Ok(())
}

fn cmd_run(config: Option<&Path>, seed: u64, algorithm: Algorithm, output: &Output) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let sseed = scenario_seed(seed, 0);
    let start = Instant::now();
    let outcome = make_scenario(&cfg, sseed).and_then(|sc| joint_optimize(&sc, &cfg, algorithm, run_seed(seed, 0, 0)));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let row = result_row(&cfg, algorithm, sseed, &outcome, wall_ms);
    write_results_csv(std::slice::from_ref(&row), create(&output.out, "run.csv")?, output.timings)?;
    let res = outcome?;
    write_trace(&res, &output.out, output.timings)?;
    let text = summary(&res, algorithm, seed);
    create(&output.out, "summary.txt")?.write_all(text.as_bytes())?;
    if output.format == Format::Svg {
        convergence_chart(std::slice::from_ref(&row), &output.out)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_sweep(
    spec_path: Option<&Path>,
    preset: Option<Preset>,
    seed: Option<u64>,
    algorithm: Option<Algorithm>,
    output: &Output,
) -> Result<(), Failure> {
    let text = match (spec_path, preset) {
        (Some(p), _) => fs::read_to_string(p).map_err(|e| Failure::schema(format!("cannot read {}: {e}", p.display())))?,
        (None, Some(p)) => p.text().to_string(),
        (None, None) => return Err(Failure::schema("a spec file or --preset is required")),
    };
    let mut spec = ExperimentSpec::parse(&text)?;
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    if let Some(a) = algorithm {
        spec.algorithm = a;
    }
    let rows = run_experiment(&spec)?;
    write_results_csv(&rows, create(&output.out, "results.csv")?, output.timings)?;
    let agg = aggregate(&rows);
    write_aggregate_csv(&agg, create(&output.out, "aggregate.csv")?)?;
    write_iterations_csv(&rows, create(&output.out, "iterations.csv")?)?;
    if output.format == Format::Svg {
        convergence_chart(&rows, &output.out)?;
        let axes: Vec<String> = spec.axes.iter().map(|(k, _)| k.clone()).collect();
        if let Some(kind) = plot::kind_for_axes(&axes) {
            let table = Table::read(&artifact(&output.out, "aggregate.csv")?)?;
            let chart = plot::chart(&table, kind)?;
            create(&output.out, kind.file_name())?.write_all(svg::line_chart(&chart).as_bytes())?;
        }
    }
    let failed = rows.iter().filter(|r| !r.ok()).count();
    for a in &agg {
        println!(
            "{} {} b={} N={} N_t={} K={} p_max_dbm={}: runs={} mean_tau={:.6} median={:.6}",
            a.topology, a.algorithm, a.bits, a.n_elements, a.n_tx, a.n_users, a.p_max_dbm, a.runs, a.mean, a.median
        );
    }
    println!("rows={} failed={failed}", rows.len());
    if failed == rows.len() {
        let first = rows.first().map_or(String::new(), |r| r.status.clone());
        return Err(Failure { code: 3, message: format!("every run failed; first: {first}") });
    }
    Ok(())
}

fn cmd_music(config: Option<&Path>, seed: u64, surface: usize, output: &Output) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let sc = make_scenario(&cfg, scenario_seed(seed, 0))?;
    let ch = synth_channels(&sc, &cfg)?;
    let out = sense_surface(&sc, &ch, &cfg, surface, run_seed(seed, 0, 0))?;
    write_spectrum_csv(&out.spectrum, create(&output.out, "spectrum.csv")?)?;
    write_angles_csv(&out.estimate, create(&output.out, "angles.csv")?)?;
    let truth: Vec<(f64, f64)> = sc.sites[surface].users.iter().map(|u| (u.echo_rates.u, u.echo_rates.v)).collect();
    let mut w = csv::Writer::from_writer(create(&output.out, "truth.csv")?);
    let io = |e: csv::Error| Failure::io(e.to_string());
    w.write_record(["user", "u", "v"]).map_err(io)?;
    for (k, (u, v)) in truth.iter().enumerate() {
        w.write_record([k.to_string(), u.to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush()?;
    if output.format == Format::Svg {
        let g = &out.spectrum.grid;
        let title = format!("MUSIC spectrum, surface {surface} (circles: true echo rates)");
        let svg = svg::heatmap(&title, &g.u, &g.v, &out.spectrum.power, &truth);
        create(&output.out, "spectrum.svg")?.write_all(svg.as_bytes())?;
    }
    for (k, p) in out.estimate.peaks.iter().enumerate() {
        println!("peak {k}: u={:.4} v={:.4} height={:.3e}", p.u, p.v, p.height);
    }
    for (k, (u, v)) in truth.iter().enumerate() {
        println!("user {k}: u={u:.4} v={v:.4}");
    }
    if out.estimate.degraded {
        println!("degraded: fewer than {} peaks found", cfg.n_users);
    }
    Ok(())
}

fn cmd_plot(csv: &Path, kind: PlotKind, out: &Path) -> Result<(), Failure> {
    let table = Table::read(csv)?;
    let chart = plot::chart(&table, kind)?;
    let name = kind.file_name();
    create(out, name)?.write_all(svg::line_chart(&chart).as_bytes())?;
    println!("wrote {}", artifact(out, name)?.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, algorithm, output } => cmd_run(config.as_deref(), *seed, *algorithm, output),
        Command::Sweep { spec, preset, seed, algorithm, output } => {
            cmd_sweep(spec.as_deref(), *preset, *seed, *algorithm, output)
        }
        Command::MusicDemo { config, seed, surface, output } => cmd_music(config.as_deref(), *seed, *surface, output),
        Command::Plot { csv, kind, out } => cmd_plot(csv, *kind, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let category = match f.code {
                2 => "configuration",
                3 => "solver",
                _ => "i/o",
            };
            eprintln!("error [{category}]: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
