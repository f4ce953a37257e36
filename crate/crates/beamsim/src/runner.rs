//! Drives the library over a config and writes CSV outputs plus a manifest.

use std::path::PathBuf;
use std::time::Instant;

use beamsim_core::ievd::training_beamform;
use beamsim_core::linksim::simulate_bler;
use beamsim_core::metrics::{accumulate_trials, diversity_fit, pep_monte_carlo};
use beamsim_core::rng::{trial_stream, Purpose};
use beamsim_core::{ArrayConfig, Error, IevdConfig, LinkSimConfig, Scheme, StoppingRule, TrainingConfig};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliResult;
use crate::manifest::{OutputWriter, RunManifest};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub out: PathBuf,
    pub full_scale: bool,
    /// Overrides the config's sample count.
    pub samples: Option<usize>,
}

pub const CONVERGE_HEADER: &str = "scheme,n_t,n_r,num_paths,power,iteration,mean_gain,stderr,channels";
pub const DIVERSITY_HEADER: &str = "scheme,n_t,n_r,num_paths,slope,fit_start_db,fit_stop_db,r_squared,points";
pub const OVERHEAD_HEADER: &str = "n_t,n_r,nsenga_slots,ievd_training_slots";

/// Runs the configured experiment; the config's own seed is ignored in favor
/// of `opts.seed`.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunManifest> {
    config.validate()?;
    check_feasible(config)?;
    let start = Instant::now();
    let samples = opts.samples.unwrap_or_else(|| config.sample_count(opts.full_scale));
    if samples == 0 {
        return Err(crate::CliError::Config("sample count must be positive".into()));
    }
    let mut out = OutputWriter::new(&opts.out)?;
    match config.experiment {
        Experiment::Converge => run_converge(config, samples, opts.seed, &mut out)?,
        Experiment::Pep => run_pep(config, samples, opts.seed, &mut out)?,
        Experiment::Bler => run_bler(config, samples, opts.seed, &mut out)?,
        Experiment::Overhead => run_overhead(config, opts.seed, &mut out)?,
    }
    out.finish(RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        seed: opts.seed,
        full_scale: opts.full_scale,
        samples,
        outputs: Vec::new(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Rejects plain Park-Pan on scenarios with more paths than antennas before
/// any simulation starts.
fn check_feasible(config: &ExperimentConfig) -> CliResult<()> {
    let park_pan = config.schemes.iter().any(|s| s.to_scheme() == Scheme::ParkPan);
    if !park_pan {
        return Ok(());
    }
    for a in &config.arrays {
        for &l in &config.num_paths {
            if l > a.min_size() {
                return Err(Error::Infeasible(format!(
                    "park_pan needs L <= min(n_t, n_r); got L = {l} with {}x{} arrays (use park_pan_star)",
                    a.n_t, a.n_r
                ))
                .into());
            }
        }
    }
    Ok(())
}

fn suffix(config: &ExperimentConfig, arrays: ArrayConfig, l: usize) -> String {
    if config.arrays.len() > 1 {
        format!("L{l}_nt{}_nr{}", arrays.n_t, arrays.n_r)
    } else {
        format!("L{l}")
    }
}

fn run_converge(config: &ExperimentConfig, samples: usize, seed: u64, out: &mut OutputWriter) -> CliResult<()> {
    let ievd = IevdConfig {
        max_iterations: config.iterations,
        stopping_rule: StoppingRule::FixedCount,
        ..IevdConfig::default()
    };
    let mut schemes = vec![(Scheme::Ievd(ievd.clone()), String::new())];
    for &power in &config.powers {
        let training = TrainingConfig {
            ievd: ievd.clone(),
            power,
            noise_variance: 0.0,
        };
        schemes.push((Scheme::Training(training), power.to_string()));
    }
    let mut csv = String::from(CONVERGE_HEADER);
    csv.push('\n');
    for &arrays in &config.arrays {
        for &l in &config.num_paths {
            let scenario = config.scenario(arrays, l);
            for (scheme, power) in &schemes {
                let stats = accumulate_trials(samples, config.iterations + 1, |t| {
                    let ch = scenario.sample(&mut trial_stream(seed, t, Purpose::Channel))?;
                    let sol = scheme.beamform(&ch, &mut trial_stream(seed, t, Purpose::Scheme))?;
                    Ok(sol.gamma_trace)
                })?;
                for (n, s) in stats.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{},{},{l},{power},{n},{:.9e},{:.9e},{}\n",
                        scheme.id(),
                        arrays.n_t,
                        arrays.n_r,
                        s.mean,
                        s.stderr(),
                        s.count
                    ));
                }
            }
        }
    }
    out.write("converge.csv", &csv)
}

fn run_pep(config: &ExperimentConfig, samples: usize, seed: u64, out: &mut OutputWriter) -> CliResult<()> {
    let grid = config.grid()?;
    let mut diversity = String::from(DIVERSITY_HEADER);
    diversity.push('\n');
    for &arrays in &config.arrays {
        for &l in &config.num_paths {
            let scenario = config.scenario(arrays, l);
            for spec in &config.schemes {
                let scheme = spec.to_scheme();
                let curve = pep_monte_carlo(
                    &scenario,
                    &scheme,
                    &grid,
                    samples,
                    config.min_distance,
                    config.estimator,
                    seed,
                )?;
                out.write(&format!("pep_{}_{}.csv", scheme.id(), suffix(config, arrays, l)), &curve.to_csv())?;
                match diversity_fit(&curve, config.high_snr_fraction) {
                    Ok(fit) => diversity.push_str(&format!(
                        "{},{},{},{l},{:.6},{},{},{:.6},{}\n",
                        scheme.id(),
                        arrays.n_t,
                        arrays.n_r,
                        fit.slope,
                        fit.fit_range.0,
                        fit.fit_range.1,
                        fit.r_squared,
                        fit.points
                    )),
                    // too few positive points to fit; record the row as empty
                    Err(_) => diversity.push_str(&format!(
                        "{},{},{},{l},,,,,0\n",
                        scheme.id(),
                        arrays.n_t,
                        arrays.n_r
                    )),
                }
            }
        }
    }
    out.write("diversity.csv", &diversity)
}

fn run_bler(config: &ExperimentConfig, samples: usize, seed: u64, out: &mut OutputWriter) -> CliResult<()> {
    let link = LinkSimConfig {
        block_size: config.block_size,
        zp_length: config.zp_length,
        blocks_per_channel: config.blocks_per_channel,
        ..LinkSimConfig::new(samples, config.grid()?)
    };
    for &arrays in &config.arrays {
        for &l in &config.num_paths {
            let scenario = config.scenario(arrays, l);
            for spec in &config.schemes {
                let scheme = spec.to_scheme();
                let curve = simulate_bler(&scenario, &scheme, &link, seed)?;
                out.write(&format!("bler_{}_{}.csv", scheme.id(), suffix(config, arrays, l)), &curve.to_csv())?;
            }
        }
    }
    Ok(())
}

/// Slots measured from two training iterations on one channel per array.
fn run_overhead(config: &ExperimentConfig, seed: u64, out: &mut OutputWriter) -> CliResult<()> {
    let training = TrainingConfig {
        ievd: IevdConfig::with_iterations(2),
        ..TrainingConfig::default()
    };
    let mut csv = String::from(OVERHEAD_HEADER);
    csv.push('\n');
    for &arrays in &config.arrays {
        let ch = config
            .scenario(arrays, config.num_paths[0])
            .sample(&mut trial_stream(seed, 0, Purpose::Channel))?;
        let sol = training_beamform(&ch, &training, &mut trial_stream(seed, 0, Purpose::Scheme))?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            arrays.n_t,
            arrays.n_r,
            arrays.n_t * arrays.n_r,
            sol.slots_consumed
        ));
    }
    out.write("overhead.csv", &csv)
}
