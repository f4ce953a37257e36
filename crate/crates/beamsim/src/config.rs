//! Versioned JSON experiment description.

use std::collections::BTreeSet;
use std::path::Path;

use beamsim_core::metrics::QPSK_MIN_DISTANCE;
use beamsim_core::{
    AngleMode, ArrayConfig, ChannelEnsembleConfig, GroupingMethod, IevdConfig, PepEstimator, Scheme,
    SnrGrid, StoppingRule, TrainingConfig, TransmitAngleMode,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Converge,
    Pep,
    Bler,
    Overhead,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::Pep => "pep",
            Experiment::Bler => "bler",
            Experiment::Overhead => "overhead",
        }
    }
}

/// One scheme entry, tagged by its identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    Ievd {
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_rule")]
        stopping_rule: StoppingRule,
    },
    Training {
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_rule")]
        stopping_rule: StoppingRule,
        #[serde(default = "default_power")]
        power: usize,
        #[serde(default)]
        noise_variance: f64,
    },
    ParkPan,
    ParkPanStar,
    Mpg {
        #[serde(default)]
        grouping: GroupingMethod,
    },
}

fn default_iterations() -> usize {
    3
}

fn default_rule() -> StoppingRule {
    StoppingRule::FixedCount
}

fn default_power() -> usize {
    2
}

impl SchemeSpec {
    pub fn ievd() -> Self {
        SchemeSpec::Ievd {
            iterations: default_iterations(),
            stopping_rule: default_rule(),
        }
    }

    pub fn training() -> Self {
        SchemeSpec::Training {
            iterations: default_iterations(),
            stopping_rule: default_rule(),
            power: default_power(),
            noise_variance: 0.0,
        }
    }

    pub fn mpg() -> Self {
        SchemeSpec::Mpg {
            grouping: GroupingMethod::Angle,
        }
    }

    pub fn to_scheme(&self) -> Scheme {
        match *self {
            SchemeSpec::Ievd {
                iterations,
                stopping_rule,
            } => Scheme::Ievd(IevdConfig {
                max_iterations: iterations,
                stopping_rule,
                ..IevdConfig::default()
            }),
            SchemeSpec::Training {
                iterations,
                stopping_rule,
                power,
                noise_variance,
            } => Scheme::Training(TrainingConfig {
                ievd: IevdConfig {
                    max_iterations: iterations,
                    stopping_rule,
                    ..IevdConfig::default()
                },
                power,
                noise_variance,
            }),
            SchemeSpec::ParkPan => Scheme::ParkPan,
            SchemeSpec::ParkPanStar => Scheme::ParkPanStar,
            SchemeSpec::Mpg { grouping } => Scheme::Mpg(grouping),
        }
    }

    pub fn id(&self) -> &'static str {
        self.to_scheme().id()
    }
}

/// Inclusive SNR range in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn to_grid(self) -> CliResult<SnrGrid> {
        Ok(SnrGrid::from_db_range(self.start, self.stop, self.step)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub experiment: Experiment,
    pub arrays: Vec<ArrayConfig>,
    #[serde(default = "default_paths")]
    pub num_paths: Vec<usize>,
    #[serde(default = "default_angle_mode")]
    pub angle_mode: AngleMode,
    #[serde(default)]
    pub transmit_angle_mode: TransmitAngleMode,
    /// Coefficient variance; absent means `1/L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient_variance: Option<f64>,
    #[serde(default)]
    pub schemes: Vec<SchemeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<GridSpec>,
    /// Channels (converge), PEP samples (pep) or blocks (bler).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Replacement for `samples` under `--full-scale`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_scale_samples: Option<usize>,
    /// Power-method exponents swept by the convergence study.
    #[serde(default = "default_powers")]
    pub powers: Vec<usize>,
    /// Iterations recorded by the convergence study.
    #[serde(default = "default_converge_iterations")]
    pub iterations: usize,
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
    #[serde(default)]
    pub estimator: PepEstimator,
    #[serde(default = "default_fraction")]
    pub high_snr_fraction: f64,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    #[serde(default = "default_zp")]
    pub zp_length: usize,
    #[serde(default = "default_blocks_per_channel")]
    pub blocks_per_channel: usize,
    /// Ignored when `--seed` is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_paths() -> Vec<usize> {
    vec![1]
}

fn default_angle_mode() -> AngleMode {
    AngleMode::Random
}

fn default_samples() -> usize {
    10_000
}

fn default_powers() -> Vec<usize> {
    vec![1, 2]
}

fn default_converge_iterations() -> usize {
    5
}

fn default_min_distance() -> f64 {
    QPSK_MIN_DISTANCE
}

fn default_fraction() -> f64 {
    beamsim_core::metrics::DEFAULT_HIGH_SNR_FRACTION
}

fn default_block_size() -> usize {
    32
}

fn default_zp() -> usize {
    8
}

fn default_blocks_per_channel() -> usize {
    1
}

impl ExperimentConfig {
    /// Skeleton with every optional field at its default.
    pub fn new(experiment: Experiment, arrays: Vec<ArrayConfig>) -> Self {
        Self {
            version: CONFIG_VERSION,
            experiment,
            arrays,
            num_paths: default_paths(),
            angle_mode: default_angle_mode(),
            transmit_angle_mode: TransmitAngleMode::PerPath,
            coefficient_variance: None,
            schemes: Vec::new(),
            snr_db: None,
            samples: default_samples(),
            full_scale_samples: None,
            powers: default_powers(),
            iterations: default_converge_iterations(),
            min_distance: default_min_distance(),
            estimator: PepEstimator::default(),
            high_snr_fraction: default_fraction(),
            block_size: default_block_size(),
            zp_length: default_zp(),
            blocks_per_channel: default_blocks_per_channel(),
            seed: None,
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn sample_count(&self, full_scale: bool) -> usize {
        if full_scale {
            self.full_scale_samples.unwrap_or(self.samples)
        } else {
            self.samples
        }
    }

    pub fn scenario(&self, arrays: ArrayConfig, num_paths: usize) -> ChannelEnsembleConfig {
        ChannelEnsembleConfig {
            coefficient_variance: self.coefficient_variance,
            ..ChannelEnsembleConfig::new(arrays, num_paths, self.angle_mode.clone())
                .with_transmit_angle_mode(self.transmit_angle_mode)
        }
    }

    pub fn grid(&self) -> CliResult<SnrGrid> {
        self.snr_db
            .ok_or_else(|| CliError::Config(format!("{} needs snr_db", self.experiment.name())))?
            .to_grid()
    }

    /// Structural checks that need no simulation.
    pub fn validate(&self) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.version != CONFIG_VERSION {
            return fail(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.arrays.is_empty() {
            return fail("arrays must list at least one array size".into());
        }
        for a in &self.arrays {
            ArrayConfig::new(a.n_t, a.n_r)?;
        }
        if self.num_paths.is_empty() || self.num_paths.contains(&0) {
            return fail("num_paths must list positive path counts".into());
        }
        if self.samples == 0 || self.full_scale_samples == Some(0) {
            return fail("sample counts must be positive".into());
        }
        for &l in &self.num_paths {
            for &a in &self.arrays {
                self.scenario(a, l).validate()?;
            }
        }
        match self.experiment {
            Experiment::Converge => {
                if self.powers.is_empty() || self.powers.contains(&0) {
                    return fail("powers must list positive exponents".into());
                }
                if self.iterations == 0 {
                    return fail("iterations must be positive".into());
                }
            }
            Experiment::Pep | Experiment::Bler => {
                if self.schemes.is_empty() {
                    return fail("at least one scheme is required".into());
                }
                let mut ids = BTreeSet::new();
                for s in &self.schemes {
                    if !ids.insert(s.id()) {
                        return fail(format!("scheme {} listed twice", s.id()));
                    }
                    match s.to_scheme() {
                        Scheme::Ievd(c) => c.validate()?,
                        Scheme::Training(c) => c.validate()?,
                        _ => {}
                    }
                }
                self.grid()?;
                if self.experiment == Experiment::Pep {
                    if !(self.min_distance > 0.0) {
                        return fail("min_distance must be positive".into());
                    }
                    if !(self.high_snr_fraction > 0.0 && self.high_snr_fraction <= 1.0) {
                        return fail("high_snr_fraction must be in (0, 1]".into());
                    }
                } else if self.block_size == 0 || self.blocks_per_channel == 0 {
                    return fail("block_size and blocks_per_channel must be positive".into());
                }
            }
            Experiment::Overhead => {}
        }
        Ok(())
    }
}
