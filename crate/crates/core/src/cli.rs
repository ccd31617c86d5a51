//! Command-line front door.
//!
//! Three commands: `simulate` runs one config and exports the trajectory,
//! `optimize` runs the lesson-plan search a config describes, `reproduce`
//! runs the bundled scenarios and their checks. Exit codes are the machine
//! contract: 0 success, 1 a reproduction check failed, 2 config/schema
//! error, 3 numeric blow-up (reduce `dt`), 4 no feasible plan found.

use crate::config::{ConfigError, RunConfig};
use crate::engine::{self, EngineError};
use crate::optimizer::{self, OptimizeError};
use crate::plot;
use crate::scenarios::{self, ScenarioError, ScenarioOverrides, TaskId};
use clap::{Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "learnsim",
    version,
    about = "Simulate and optimize lesson plans for knowledge-dynamics models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Trajectory CSV only.
    Csv,
    /// CSV plus an SVG line chart.
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file and export the trajectory.
    Simulate {
        /// TOML run configuration.
        config: PathBuf,
        /// Override the time step.
        #[arg(long)]
        dt: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the lesson-plan search defined by a config file.
    Optimize {
        config: PathBuf,
        /// Override the RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the per-restart evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Override the number of restarts.
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run bundled scenarios (task1..task5, or `all`) and their checks.
    Reproduce {
        /// task1, task2, task3, task4, task5 or all.
        task: String,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::CsvSvg)]
        format: Format,
        /// Additional key=value overrides; keys must be tunables the task
        /// declares (see the README).
        #[arg(long = "set", value_parser = parse_key_val)]
        set: Vec<(String, String)>,
    },
}

fn parse_key_val(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected key=value, got `{s}`")),
    }
}

fn engine_exit(err: &EngineError) -> u8 {
    match err {
        EngineError::UnstableDt { .. } | EngineError::NonFinite { .. } => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn optimize_exit(err: &OptimizeError) -> u8 {
    match err {
        OptimizeError::NoFeasible { .. } => EXIT_INFEASIBLE,
        OptimizeError::Engine(e) => engine_exit(e),
        _ => EXIT_CONFIG,
    }
}

fn scenario_exit(err: &ScenarioError) -> u8 {
    match err {
        ScenarioError::Engine(e) => engine_exit(e),
        ScenarioError::Optimize(e) => optimize_exit(e),
        _ => EXIT_CONFIG,
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

pub fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate { config, dt, out, format } => cmd_simulate(&config, dt, &out, format),
        Command::Optimize { config, seed, budget, restarts, dt, out, format } => {
            cmd_optimize(&config, seed, budget, restarts, dt, &out, format)
        }
        Command::Reproduce { task, dt, seed, out, format, set } => {
            cmd_reproduce(&task, dt, seed, &out, format, &set)
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    RunConfig::load(path)
}

fn print_warnings(config: &RunConfig) {
    if let Ok(warnings) = config.validate() {
        for w in warnings {
            eprintln!("warning: {w}");
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExitCode> {
    fs::write(path, contents).map_err(|e| fail(EXIT_CONFIG, format!("cannot write `{}`: {e}", path.display())))
}

fn cmd_simulate(config_path: &Path, dt: Option<f64>, out: &Path, format: Format) -> ExitCode {
    let mut config = match load_config(config_path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(dt) = dt {
        config.sim.dt = dt;
        if let Err(e) = config.validate() {
            return fail(EXIT_CONFIG, e);
        }
    }
    print_warnings(&config);
    let traj = match engine::simulate(&config.model, &config.schedule, &config.policy, &config.sim) {
        Ok(t) => t,
        Err(e) => return fail(engine_exit(&e), e),
    };
    if let Err(e) = fs::create_dir_all(out) {
        return fail(EXIT_CONFIG, format!("cannot create `{}`: {e}", out.display()));
    }
    let csv_path = out.join("trajectory.csv");
    if let Err(code) = write_file(&csv_path, &engine::trajectory_to_csv(&traj)) {
        return code;
    }
    println!("wrote {}", csv_path.display());
    if format == Format::CsvSvg {
        let svg_path = out.join("plot.svg");
        let title = config_path.file_stem().map(|s| s.to_string_lossy().into_owned());
        let chart = plot::trajectory_chart(title.as_deref().unwrap_or("trajectory"), &traj);
        if let Err(code) = write_file(&svg_path, &chart) {
            return code;
        }
        println!("wrote {}", svg_path.display());
    }
    let f = traj.final_sample();
    println!(
        "final state: t = {}, z = {:.4}, z1 = {:.4}, z2 = {:.4}, work = {:.3}",
        f.t, f.z, f.z1, f.z2, f.p_cum
    );
    ExitCode::from(EXIT_OK)
}

fn cmd_optimize(
    config_path: &Path,
    seed: Option<u64>,
    budget: Option<usize>,
    restarts: Option<usize>,
    dt: Option<f64>,
    out: &Path,
    format: Format,
) -> ExitCode {
    let mut config = match load_config(config_path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(dt) = dt {
        config.sim.dt = dt;
    }
    let Some(spec) = config.optimization.as_mut() else {
        return fail(EXIT_CONFIG, "config has no [optimization] section");
    };
    if let Some(seed) = seed {
        spec.search.rng_seed = seed;
    }
    if let Some(budget) = budget {
        spec.search.budget = budget;
    }
    if let Some(restarts) = restarts {
        spec.search.restarts = restarts;
    }
    if let Err(e) = config.validate() {
        return fail(EXIT_CONFIG, e);
    }
    print_warnings(&config);
    let problem = config.optimization_problem().expect("optimization section checked above");
    let outcome = match optimizer::hill_climb(&problem) {
        Ok(o) => o,
        Err(e) => return fail(optimize_exit(&e), e),
    };
    if let Err(e) = fs::create_dir_all(out) {
        return fail(EXIT_CONFIG, format!("cannot create `{}`: {e}", out.display()));
    }
    let report = outcome.render_report();
    let report_path = out.join("report.txt");
    if let Err(code) = write_file(&report_path, &report) {
        return code;
    }
    print!("{report}");
    println!("wrote {}", report_path.display());

    // export the trajectory of the winning plan
    match problem.apply_candidate(&outcome.best) {
        Ok((schedule, policy)) => {
            let mut sim = problem.sim.clone();
            sim.t_end = problem.constraints.t_eval;
            sim.record_every = sim.record_every.max(20);
            match engine::simulate(&problem.model, &schedule, &policy, &sim) {
                Ok(traj) => {
                    let csv_path = out.join("trajectory.csv");
                    if let Err(code) = write_file(&csv_path, &engine::trajectory_to_csv(&traj)) {
                        return code;
                    }
                    println!("wrote {}", csv_path.display());
                    if format == Format::CsvSvg {
                        let svg_path = out.join("plot.svg");
                        if let Err(code) =
                            write_file(&svg_path, &plot::trajectory_chart("optimal plan", &traj))
                        {
                            return code;
                        }
                        println!("wrote {}", svg_path.display());
                    }
                }
                Err(e) => return fail(engine_exit(&e), e),
            }
        }
        Err(e) => return fail(optimize_exit(&e), e),
    }
    ExitCode::from(EXIT_OK)
}

fn cmd_reproduce(
    task: &str,
    dt: Option<f64>,
    seed: Option<u64>,
    out: &Path,
    format: Format,
    set: &[(String, String)],
) -> ExitCode {
    let tasks: Vec<TaskId> = if task.eq_ignore_ascii_case("all") {
        TaskId::all().to_vec()
    } else {
        match TaskId::parse(task) {
            Ok(id) => vec![id],
            Err(e) => return fail(EXIT_CONFIG, e),
        }
    };

    let mut any_failed = false;
    for id in tasks {
        let mut overrides = match ScenarioOverrides::from_pairs(id, set) {
            Ok(o) => o,
            Err(e) => return fail(scenario_exit(&e), e),
        };
        // convenience flags are lenient: they apply where the task uses them
        if overrides.dt.is_none() {
            overrides.dt = dt;
        }
        if overrides.seed.is_none() {
            overrides.seed = seed;
        }
        let outcome = match scenarios::run(id, &overrides) {
            Ok(o) => o,
            Err(e) => return fail(scenario_exit(&e), e),
        };
        let dir = out.join(id.name());
        match scenarios::write_artifacts(&outcome, &dir, format == Format::CsvSvg) {
            Ok(_) => {}
            Err(e) => return fail(EXIT_CONFIG, format!("cannot write artifacts to `{}`: {e}", dir.display())),
        }
        print!("{}", scenarios::render_checks(&outcome));
        if !outcome.all_passed() {
            any_failed = true;
        }
    }
    if any_failed {
        eprintln!("one or more reproduction checks failed");
        ExitCode::from(EXIT_CHECK_FAILED)
    } else {
        ExitCode::from(EXIT_OK)
    }
}
