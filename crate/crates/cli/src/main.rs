use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use secbeam::algorithms::problem_dimensions;
use secbeam::validation::SuiteSpec;
use secbeam_cli::experiment::{run_experiment, workers_from_env};
use secbeam_cli::plot::emit_plot_data;
use secbeam_cli::spec::{resolve_config, ExperimentSpec, Mode, Sweep};
use secbeam_cli::verify::{load_summary, render, save, verify};
use secbeam_cli::CliError;

/// Path-following secrecy beamforming experiments.
///
/// Exit codes: 0 ok, 1 a check failed, 2 runtime or usage error. The
/// worker count of `run` is read from SECBEAM_WORKERS.
#[derive(Parser)]
#[command(name = "secbeam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario file in `key = value` form; the reference scenario if absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides applied after the file, e.g. `--set M=6 --set eps0=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs seeded trials, optionally over a sweep axis.
    Run {
        /// secrecy, secrecy-noeve or see.
        #[arg(long, default_value = "secrecy")]
        mode: Mode,
        #[command(flatten)]
        config: ConfigArgs,
        /// `none` or AXIS:v1,v2,... with AXIS one of M, e_min_dbm, eps0, eps1.
        #[arg(long, default_value = "none")]
        sweep: Sweep,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Artifact directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Also write figure CSVs.
        #[arg(long)]
        plot: bool,
    },
    /// Runs the bound, soundness and grid-oracle checks.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 100)]
        expansions: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 10_000)]
        inequality_samples: usize,
        #[arg(long, default_value_t = 1000)]
        soundness_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seed of the tiny grid-oracle instance.
        #[arg(long, default_value_t = 0)]
        grid_seed: u64,
        #[arg(long)]
        no_grid: bool,
        /// Writes the JSON summary here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Checks an existing JSON summary instead of running the suites.
        #[arg(long, conflicts_with = "out")]
        summary: Option<PathBuf>,
    },
    /// Prints (scalar variables, linear constraints, quadratic constraints).
    Dims {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        json: bool,
    },
    /// Writes figure CSVs for an artifact directory.
    Plotdata { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means a check failed.
fn execute(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Run {
            mode,
            config,
            sweep,
            trials,
            seed_base,
            max_iter,
            out,
            plot,
        } => {
            let spec = ExperimentSpec {
                mode,
                config: config.config,
                overrides: config.overrides,
                sweep,
                trials,
                output: out,
                seed_base,
                max_iter,
            };
            let manifest = run_experiment(&spec, workers_from_env()?)?;
            for f in &manifest.failures {
                eprintln!("trial {} (seed {}, point {}) failed: {}", f.trial, f.seed, f.point, f.error.as_deref().unwrap_or(""));
            }
            print!("{}", std::fs::read_to_string(spec.output.join(secbeam_cli::experiment::AGGREGATE)).map_err(|e| CliError::io(&spec.output, e))?);
            if plot {
                for f in emit_plot_data(&spec.output)? {
                    println!("wrote {f}");
                }
            }
            Ok(true)
        }
        Command::Verify {
            config,
            expansions,
            samples,
            inequality_samples,
            soundness_samples,
            seed,
            grid_seed,
            no_grid,
            out,
            summary,
        } => {
            if let Some(path) = summary {
                let s = load_summary(&path)?;
                print!("{}", render(&s));
                return Ok(s.all_pass());
            }
            let base = resolve_config(config.config.as_deref(), &config.overrides)?;
            let suites = SuiteSpec {
                expansions,
                samples_per_bound: samples,
                samples_per_inequality: inequality_samples,
                soundness_samples,
                seed,
            };
            let outcome = verify(&base, suites, (!no_grid).then_some(grid_seed))?;
            print!("{}", render(&outcome.summary));
            if let Some(path) = out {
                save(&outcome, &path)?;
            }
            Ok(outcome.all_pass())
        }
        Command::Dims { config, json } => {
            let cfg = resolve_config(config.config.as_deref(), &config.overrides)?;
            let d = problem_dimensions(&cfg);
            if json {
                println!("{}", serde_json::to_string(&d).map_err(|e| CliError::json("stdout", e))?);
            } else {
                println!("({}, {}, {})", d.scalar_variables, d.linear_constraints, d.quadratic_constraints);
            }
            Ok(true)
        }
        Command::Plotdata { dir } => {
            for f in emit_plot_data(&dir)? {
                println!("wrote {f}");
            }
            Ok(true)
        }
    }
}
