use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use zeno_core::config::{Config, ConfigError, Setup};
use zeno_core::dynamics::{simulate, switching_times, CavityState};
use zeno_core::figures::{self, DynamicFigure, Figure, FigureError};
use zeno_core::output::{num, Table};
use zeno_core::performance::{PerfError, PERF_KEYS};
use zeno_core::quasistatic::{solve_fixed_point, SolveError, SteadySolution};
use zeno_core::report::{perf_report, table1_rows, table1_text};

mod grid;

#[derive(Parser, Debug)]
#[command(name = "zeno", version, about = "Two-photon-absorption microresonator switch simulator")]
struct Cli {
    /// Config file overlaid on the built-in nominal parameters.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV and SVG output.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Also write an SVG plot next to each CSV.
    #[arg(long, global = true)]
    plot: bool,
    /// KEY=VALUE config overrides, applied after the config file.
    #[arg(long = "override", global = true, value_name = "K=V", num_args = 1..)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field-2 response to an assumed field-1 circulating power.
    Fig3,
    /// Field-1 response to an assumed field-2 circulating power.
    Fig4,
    /// Both response curves in the (I1R, I2R) plane.
    Fig5,
    /// CW target switched by a control pulse.
    Fig6,
    /// Equal-power pulsed target and control.
    Fig7,
    /// Self/cross two-photon rate ratio against wavelength difference.
    Fig9,
    /// Vapor density needed against detuning.
    Fig10,
    /// Vapor temperature needed against detuning.
    Fig11,
    /// Derived nominal quantities against their reference values.
    Table1,
    /// Steady state for the configured inputs and seed.
    Solve,
    /// Time-domain run with the configured drive.
    Simulate,
    /// Steady state and performance metrics over a parameter grid.
    Sweep {
        /// KEY=start:stop:steps[:log]; repeat for a multi-dimensional grid.
        #[arg(long, value_name = "SPEC", required = true)]
        grid: Vec<String>,
    },
    /// Closed-form performance figures and switch quality.
    Perf,
    /// Write 0, 1, 0 into the bistable memory.
    Memory,
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FigureError> for CliError {
    fn from(e: FigureError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<PerfError> for CliError {
    fn from(e: PerfError) -> Self {
        CliError::Solver(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = Config::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        config
            .apply_text(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    config.apply_overrides(&cli.overrides)?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn emit_table(cli: &Cli, name: &str, table: &Table) -> Result<PathBuf, CliError> {
    let path = cli.out.join(format!("{name}.csv"));
    write_file(&path, &table.to_csv())?;
    Ok(path)
}

fn emit(cli: &Cli, fig: &Figure) -> Result<(), CliError> {
    let path = emit_table(cli, fig.name, &fig.table)?;
    println!("{}: {} rows -> {}", fig.name, fig.table.rows.len(), path.display());
    if cli.plot {
        let svg = cli.out.join(format!("{}.svg", fig.name));
        write_file(&svg, &fig.plot.to_svg())?;
        println!("{}: plot -> {}", fig.name, svg.display());
    }
    Ok(())
}

fn emit_dynamic(cli: &Cli, fig: DynamicFigure) -> Result<(), CliError> {
    emit(cli, &fig.figure)?;
    println!("passivity_margin_J = {:e}", fig.series.passivity_margin());
    let lat = fig.latencies.map_err(|e| CliError::Solver(format!("{}: {e}", fig.figure.name)))?;
    println!("control_on_s = {:e}", lat.control_on_s);
    println!("control_off_s = {:e}", lat.control_off_s);
    println!("on_latency_s = {:e}", lat.on_s);
    println!("off_latency_s = {:e}", lat.off_s);
    Ok(())
}

const SOLUTION_KEYS: [&str; 10] = [
    "I1R_W",
    "I2R_W",
    "branch",
    "stable",
    "spectral_radius",
    "iterations",
    "out_1A_W",
    "out_1B_W",
    "out_2A_W",
    "out_2B_W",
];

fn solution_record(sol: &SteadySolution) -> Vec<(&'static str, String)> {
    let o = &sol.outputs;
    let values = [
        num(sol.i1r),
        num(sol.i2r),
        sol.branch.label().to_string(),
        sol.stable.to_string(),
        num(sol.spectral_radius),
        sol.iterations.to_string(),
        num(o.out_1a),
        num(o.out_1b),
        num(o.out_2a),
        num(o.out_2b),
    ];
    SOLUTION_KEYS.into_iter().zip(values).collect()
}

fn sweep_row(config: &Config, axes: &[grid::Axis], point: &[f64]) -> Result<Vec<String>, CliError> {
    let mut c = config.clone();
    for (axis, v) in axes.iter().zip(point) {
        c.set(&axis.key, &v.to_string())?;
    }
    let setup = Setup::new(c)?;
    let at = || {
        axes.iter()
            .zip(point)
            .map(|(a, v)| format!("{}={v}", a.key))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let sol = solve_fixed_point(
        &setup.cavity(),
        &setup.inputs(),
        setup.config.seed_i2r_w,
        &setup.solver(),
    )
    .map_err(|e| CliError::Solver(format!("at {}: {e}", at())))?;
    let perf = perf_report(&setup).map_err(|e| CliError::Solver(format!("at {}: {e}", at())))?;
    let mut row: Vec<String> = point.iter().map(|&v| num(v)).collect();
    row.extend(solution_record(&sol).into_iter().map(|(_, v)| v));
    row.extend(perf.entries().into_iter().map(|(_, v)| num(v)));
    Ok(row)
}

fn sweep(cli: &Cli, config: &Config, specs: &[String]) -> Result<(), CliError> {
    let axes = specs
        .iter()
        .map(|s| grid::Axis::parse(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    for a in &axes {
        config.get(&a.key)?;
    }
    let columns: Vec<String> = axes
        .iter()
        .map(|a| a.key.clone())
        .chain(SOLUTION_KEYS.iter().chain(PERF_KEYS.iter()).map(|k| k.to_string()))
        .collect();

    let pts = grid::points(&axes);
    // par_iter keeps grid order in the collected rows
    let rows = pts
        .par_iter()
        .map(|p| sweep_row(config, &axes, p))
        .collect::<Result<Vec<_>, _>>()?;
    let table = Table { columns, rows };
    let path = emit_table(cli, "sweep", &table)?;
    println!("sweep: {} points -> {}", table.rows.len(), path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    if let Command::Config = cli.command {
        print!("{}", config.to_text());
        return Ok(());
    }
    let setup = Setup::new(config.clone())?;
    match &cli.command {
        Command::Fig3 => emit(cli, &figures::fig3(&setup)?),
        Command::Fig4 => emit(cli, &figures::fig4(&setup)?),
        Command::Fig5 => {
            emit(cli, &figures::fig5(&setup)?)?;
            if setup.config.p1_w == setup.config.p2_w
                && setup.config.phase1_rad == setup.config.phase2_rad
            {
                let sym = figures::symmetric_point(&setup)?;
                println!("symmetric_I_W = {:e}", sym.i1r);
                println!("symmetric_stable = {}", sym.stable);
                println!("symmetric_spectral_radius = {:e}", sym.spectral_radius);
            }
            Ok(())
        }
        Command::Fig6 => emit_dynamic(cli, figures::fig6(&setup)?),
        Command::Fig7 => emit_dynamic(cli, figures::fig7(&setup)?),
        Command::Fig9 => emit(cli, &figures::fig9(&setup)?),
        Command::Fig10 => emit(cli, &figures::fig10(&setup)?),
        Command::Fig11 => emit(cli, &figures::fig11(&setup)?),
        Command::Table1 => {
            let rows = table1_rows(&setup).map_err(|e| CliError::Solver(e.to_string()))?;
            print!("{}", table1_text(&rows));
            Ok(())
        }
        Command::Solve => {
            let sol = solve_fixed_point(
                &setup.cavity(),
                &setup.inputs(),
                setup.config.seed_i2r_w,
                &setup.solver(),
            )?;
            for (k, v) in solution_record(&sol) {
                println!("{k} = {v}");
            }
            Ok(())
        }
        Command::Simulate => {
            let (drive, duration) =
                figures::switching_drive(&setup).map_err(|e| CliError::Config(e.to_string()))?;
            let ts = simulate(&setup.cavity(), &drive, duration, CavityState::default())
                .map_err(|e| CliError::Solver(e.to_string()))?;
            let path = emit_table(cli, "simulate", &figures::time_series_table(&ts))?;
            println!("simulate: {} samples -> {}", ts.samples.len(), path.display());
            println!("passivity_margin_J = {:e}", ts.passivity_margin());
            match switching_times(&ts, 0.9) {
                Ok(l) => {
                    println!("on_latency_s = {:e}", l.on_s);
                    println!("off_latency_s = {:e}", l.off_s);
                }
                Err(e) => println!("switching: {e}"),
            }
            Ok(())
        }
        Command::Sweep { grid } => sweep(cli, &config, grid),
        Command::Perf => {
            print!("{}", perf_report(&setup)?.to_text());
            Ok(())
        }
        Command::Memory => {
            let (fig, run) = figures::memory(&setup)?;
            emit(cli, &fig)?;
            for h in &run.holds {
                println!(
                    "wrote {} at {:e} s, held until {:e} s: {}",
                    h.written.as_char(),
                    h.start_s,
                    h.end_s,
                    if h.held { "yes" } else { "no" }
                );
            }
            println!("final_bit = {}", run.final_bit().as_char());
            Ok(())
        }
        Command::Config => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zeno: {e}");
            ExitCode::from(e.code())
        }
    }
}
