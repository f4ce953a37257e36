use std::path::PathBuf;
use std::process::ExitCode;

use beamsim::config::{Experiment, ExperimentConfig};
use beamsim::presets::{preset, PRESET_NAMES};
use beamsim::{run_experiment, CliError, CliResult, RunOptions};
use clap::{Args, Parser, Subcommand};

/// Beamforming experiment runner.
#[derive(Parser)]
#[command(name = "beamsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean array gain per iteration for IEVD and training.
    Converge(RunArgs),
    /// Averaged PEP bound and diversity slopes per scheme.
    Pep(RunArgs),
    /// Block-error rate of the zero-padded link per scheme.
    Bler(RunArgs),
    /// Training slot counts against full channel sounding.
    Overhead(RunArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (see `beamsim presets`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Use the config's full-scale sample count.
    #[arg(long)]
    full_scale: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the sample or block count.
    #[arg(long)]
    samples: Option<usize>,
}

fn load(args: &RunArgs, experiment: Experiment) -> CliResult<ExperimentConfig> {
    let config = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset {name}; known: {}", PRESET_NAMES.join(", ")))
        })?,
        (None, None) => return Err(CliError::Config("--config or --preset is required".into())),
    };
    if config.experiment != experiment {
        return Err(CliError::Config(format!(
            "config describes a {} experiment, not {}",
            config.experiment.name(),
            experiment.name()
        )));
    }
    Ok(config)
}

fn run(args: RunArgs, experiment: Experiment) -> CliResult<()> {
    let config = load(&args, experiment)?;
    let opts = RunOptions {
        seed: args.seed,
        out: args.out,
        full_scale: args.full_scale,
        samples: args.samples,
    };
    let manifest = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| run_experiment(&config, &opts))?,
        None => run_experiment(&config, &opts)?,
    };
    for o in &manifest.outputs {
        println!("{}  {}", o.sha256, opts.out.join(&o.file).display());
    }
    eprintln!("{} finished in {:.1} s", experiment.name(), manifest.elapsed_seconds);
    Ok(())
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with config errors; 2 means infeasible
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (args, experiment) = match cli.command {
        Command::Converge(a) => (a, Experiment::Converge),
        Command::Pep(a) => (a, Experiment::Pep),
        Command::Bler(a) => (a, Experiment::Bler),
        Command::Overhead(a) => (a, Experiment::Overhead),
        Command::Presets => {
            for name in PRESET_NAMES {
                let cfg = preset(name).expect("listed preset exists");
                println!("{name}\t{}", cfg.experiment.name());
            }
            return ExitCode::SUCCESS;
        }
    };
    match run(args, experiment) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
