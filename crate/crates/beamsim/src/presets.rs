//! Named configurations mirroring the reference studies.

use beamsim_core::{AngleMode, ArrayConfig, TransmitAngleMode};

use crate::config::{Experiment, ExperimentConfig, GridSpec, SchemeSpec};

pub const PRESET_NAMES: &[&str] = &[
    "fig3-analog",
    "fig4-analog",
    "fig5-analog",
    "fig6-analog",
    "fig7-analog",
    "fig8-analog",
    "fig9-analog",
    "fig10-analog",
    "single-tx-random",
    "overhead",
];

fn square(n: usize) -> ArrayConfig {
    ArrayConfig::square(n).expect("positive array size")
}

fn pep(
    num_paths: Vec<usize>,
    angle_mode: AngleMode,
    transmit: TransmitAngleMode,
    schemes: Vec<SchemeSpec>,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::Pep, vec![square(8)]);
    cfg.num_paths = num_paths;
    cfg.angle_mode = angle_mode;
    cfg.transmit_angle_mode = transmit;
    cfg.schemes = schemes;
    cfg.snr_db = Some(GridSpec {
        start: -10.0,
        stop: 30.0,
        step: 2.5,
    });
    cfg.samples = 10_000;
    cfg.full_scale_samples = Some(100_000);
    cfg
}

fn bler(angle_mode: AngleMode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::Bler, vec![square(8)]);
    cfg.num_paths = vec![4];
    cfg.angle_mode = angle_mode;
    cfg.schemes = few_paths();
    cfg.snr_db = Some(GridSpec {
        start: -10.0,
        stop: 15.0,
        step: 5.0,
    });
    cfg.samples = 10_000;
    cfg.full_scale_samples = Some(10_000_000);
    cfg
}

fn few_paths() -> Vec<SchemeSpec> {
    vec![SchemeSpec::ievd(), SchemeSpec::training(), SchemeSpec::ParkPan, SchemeSpec::mpg()]
}

fn many_paths() -> Vec<SchemeSpec> {
    vec![SchemeSpec::ievd(), SchemeSpec::mpg(), SchemeSpec::ParkPanStar]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    use AngleMode::{Deterministic, Random};
    use TransmitAngleMode::{PerPath, Single};
    let cfg = match name {
        "fig3-analog" => {
            let mut cfg = ExperimentConfig::new(Experiment::Converge, vec![square(8)]);
            cfg.num_paths = vec![1, 2, 4];
            cfg.powers = vec![1, 2, 4];
            cfg.iterations = 5;
            cfg.samples = 10_000;
            cfg.full_scale_samples = Some(100_000);
            cfg
        }
        "fig4-analog" => pep(vec![1, 2, 4, 8], Deterministic, Single, few_paths()),
        "fig5-analog" => pep(vec![1, 2, 4, 8], Deterministic, PerPath, few_paths()),
        "fig6-analog" => pep(vec![1, 2, 4, 8], Random, PerPath, few_paths()),
        "fig7-analog" => pep(vec![10, 20], Deterministic, PerPath, many_paths()),
        "fig8-analog" => pep(vec![10, 20], Random, PerPath, many_paths()),
        "fig9-analog" => bler(Deterministic),
        "fig10-analog" => bler(Random),
        "single-tx-random" => pep(vec![1, 2, 4, 8], Random, Single, few_paths()),
        "overhead" => {
            let arrays = [4, 8, 16, 32].into_iter().map(square).collect();
            let mut cfg = ExperimentConfig::new(Experiment::Overhead, arrays);
            cfg.samples = 1;
            cfg
        }
        _ => return None,
    };
    Some(cfg)
}
