//! Pairwise-error-probability bounds, their Monte Carlo average over a
//! channel ensemble, and diversity-order fits.
//!
//! With unit-power symbols and unit noise density the bound for one channel is
//! `Q(d sqrt(gamma * Gamma / 2))`, `Gamma` being the array gain.
//!
//! Averaging that bound over the Rayleigh path coefficients can be done in
//! closed form inside Craig's integral
//! `Q(x) = (1/pi) int_0^{pi/2} exp(-x^2 / (2 sin^2 t)) dt`, because
//! `E[exp(-s |lambda|^2)] = 1 / (1 + s sigma^2)`. [`PepEstimator::Conditional`]
//! uses this: for schemes whose AWVs ignore the coefficients it integrates the
//! coefficients out exactly, and for scale-invariant schemes it integrates out
//! the coefficient norm given the coefficient direction. Both keep the
//! expectation of the direct estimator while removing most of its variance, so
//! bounds deep in the diversity regime are measurable with desk-scale sample
//! counts.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelEnsembleConfig, MultipathChannel};
use crate::error::{Error, Result};
use crate::ievd::array_gain;
use crate::rng::{trial_stream, Purpose};
use crate::scheme::{CoefficientDependence, Scheme};

/// Minimum distance of unit-power QPSK.
pub const QPSK_MIN_DISTANCE: f64 = std::f64::consts::SQRT_2;

/// Trials per parallel work unit. Fixed so the reduction order never depends
/// on the thread count.
pub const CHUNK: usize = 256;

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Increasing list of SNR points, kept in both dB and linear scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrGrid {
    db: Vec<f64>,
    linear: Vec<f64>,
}

impl SnrGrid {
    pub fn from_db(db: Vec<f64>) -> Result<Self> {
        if db.is_empty() {
            return Err(Error::InvalidArgument("SNR grid is empty".into()));
        }
        if db.iter().any(|v| !v.is_finite()) || db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("SNR grid must be finite and strictly increasing".into()));
        }
        let linear = db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
        Ok(Self { db, linear })
    }

    /// `start, start + step, ...` up to and including `stop` (within rounding).
    pub fn from_db_range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::InvalidArgument(format!(
                "bad SNR range {start}..{stop} step {step}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::from_db((0..count).map(|i| start + step * i as f64).collect())
    }

    pub fn db(&self) -> &[f64] {
        &self.db
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn len(&self) -> usize {
        self.db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.db.is_empty()
    }
}

/// `Q(d sqrt(gamma * Gamma / 2))` for one channel and AWV pair.
pub fn pep_bound_instant(
    channel: &MultipathChannel,
    w_t: &[Complex64],
    w_r: &[Complex64],
    gamma: f64,
    d: f64,
) -> Result<f64> {
    Ok(pep_from_gain(array_gain(channel, w_t, w_r)?, gamma, d))
}

pub fn pep_from_gain(array_gain: f64, gamma: f64, d: f64) -> f64 {
    q_function(d * (gamma * array_gain / 2.0).sqrt())
}

/// Chernoff product bound averaged over the path coefficients,
/// `prod_l (1 + d^2 gamma sigma^2 c_l / 4)^-1` with
/// `c_l = n_t n_r |w_r^H g_l|^2 |h_l^H w_t|^2` and `sigma^2 = 1/L`.
pub fn pep_product_bound(
    channel: &MultipathChannel,
    w_t: &[Complex64],
    w_r: &[Complex64],
    gamma: f64,
    d: f64,
) -> Result<f64> {
    let variance = 1.0 / channel.num_paths() as f64;
    pep_product_bound_with_variance(channel, w_t, w_r, gamma, d, variance)
}

pub fn pep_product_bound_with_variance(
    channel: &MultipathChannel,
    w_t: &[Complex64],
    w_r: &[Complex64],
    gamma: f64,
    d: f64,
    variance: f64,
) -> Result<f64> {
    Ok(channel
        .steering_responses(w_t, w_r)?
        .iter()
        .map(|r| 1.0 / (1.0 + d * d * gamma * r.norm_sqr() * variance / 4.0))
        .product())
}

/// Craig-form nodes on `(0, pi/2)`: `(1 / sin^2 t, w / pi)`.
fn craig_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(128).expect("non-zero degree"));
        let half = std::f64::consts::FRAC_PI_4;
        rule.as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| {
                let t = half * (x + 1.0);
                (1.0 / t.sin().powi(2), w * half / std::f64::consts::PI)
            })
            .collect()
    })
}

/// `E[Q(d sqrt(gamma X / 2))]` for `X = sum_l w_l E_l` with independent
/// unit-mean exponentials `E_l`.
pub fn expected_pep_exponential_mix(weights: &[f64], gamma: f64, d: f64) -> f64 {
    let s = d * d * gamma / 4.0;
    craig_nodes()
        .iter()
        .map(|&(inv_sin2, w)| {
            w * weights
                .iter()
                .map(|&x| 1.0 / (1.0 + s * x * inv_sin2))
                .product::<f64>()
        })
        .sum()
}

/// `E[Q(d sqrt(gamma X / 2))]` for `X = kappa * Gamma(shape, 1)`.
pub fn expected_pep_gamma(kappa: f64, shape: usize, gamma: f64, d: f64) -> f64 {
    let s = d * d * gamma * kappa / 4.0;
    craig_nodes()
        .iter()
        .map(|&(inv_sin2, w)| w * (1.0 + s * inv_sin2).powi(-(shape as i32)))
        .sum()
}

/// Monte Carlo estimator of the averaged bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PepEstimator {
    /// Average `Q(.)` over drawn coefficients.
    Direct,
    /// Integrate the coefficients (or their norm) out analytically when the
    /// scheme allows it, falling back to `Direct` otherwise.
    #[default]
    Conditional,
}

/// Mean and spread accumulated with the pairwise update, so merges in a
/// fixed order give reproducible results.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Averaged PEP bound per SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PepCurve {
    pub scheme: String,
    pub grid: SnrGrid,
    pub pep: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
    /// Estimator actually used.
    pub estimator: PepEstimator,
}

impl PepCurve {
    pub const CSV_HEADER: &'static str = "snr_db,pep_mean,pep_stderr,samples";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{:.9e},{:.9e},{}\n",
                self.grid.db()[i],
                self.pep[i],
                self.stderr[i],
                self.samples
            ));
        }
        out
    }
}

/// Per-trial PEP values across the grid.
fn trial_pep(
    scenario: &ChannelEnsembleConfig,
    scheme: &Scheme,
    grid: &SnrGrid,
    d: f64,
    estimator: PepEstimator,
    seed: u64,
    trial: u64,
) -> Result<Vec<f64>> {
    let channel = scenario.sample(&mut trial_stream(seed, trial, Purpose::Channel))?;
    let sol = scheme
        .beamform(&channel, &mut trial_stream(seed, trial, Purpose::Scheme))
        .map_err(|e| Error::DrawFailed {
            scheme: scheme.id(),
            trial,
            source: Box::new(e),
        })?;
    let variance = scenario.variance();
    let values = match (estimator, scheme.coefficient_dependence()) {
        (PepEstimator::Conditional, CoefficientDependence::AnglesOnly) => {
            let weights: Vec<f64> = channel
                .steering_responses(&sol.w_t, &sol.w_r)?
                .iter()
                .map(|r| r.norm_sqr() * variance)
                .collect();
            grid.linear()
                .iter()
                .map(|&g| expected_pep_exponential_mix(&weights, g, d))
                .collect()
        }
        (PepEstimator::Conditional, CoefficientDependence::ScaleInvariant) => {
            let norm2: f64 = channel.coefficients().iter().map(|z| z.norm_sqr()).sum();
            let gain = array_gain(&channel, &sol.w_t, &sol.w_r)?;
            let kappa = if norm2 > 0.0 { gain / norm2 * variance } else { 0.0 };
            grid.linear()
                .iter()
                .map(|&g| expected_pep_gamma(kappa, channel.num_paths(), g, d))
                .collect()
        }
        _ => {
            let gain = array_gain(&channel, &sol.w_t, &sol.w_r)?;
            grid.linear().iter().map(|&g| pep_from_gain(gain, g, d)).collect()
        }
    };
    Ok(values)
}

/// Runs `f(trial)` for `0..count` in fixed-size chunks, in parallel, and folds
/// every chunk's per-point statistics in trial order. The result does not
/// depend on the number of worker threads.
pub fn accumulate_trials<F>(count: usize, points: usize, f: F) -> Result<Vec<RunningStats>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let chunks: Vec<Result<Vec<RunningStats>>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut stats = vec![RunningStats::default(); points];
            for t in (c * CHUNK)..((c + 1) * CHUNK).min(count) {
                for (s, v) in stats.iter_mut().zip(f(t as u64)?) {
                    s.push(v);
                }
            }
            Ok(stats)
        })
        .collect();
    let mut total = vec![RunningStats::default(); points];
    for chunk in chunks {
        for (t, s) in total.iter_mut().zip(chunk?) {
            t.merge(&s);
        }
    }
    Ok(total)
}

/// Ensemble average of the PEP bound. Trial `t` draws its channel and the
/// scheme's randomness from streams derived from `(seed, t)`, so the result is
/// independent of the thread count.
pub fn pep_monte_carlo(
    scenario: &ChannelEnsembleConfig,
    scheme: &Scheme,
    grid: &SnrGrid,
    samples: usize,
    d: f64,
    estimator: PepEstimator,
    seed: u64,
) -> Result<PepCurve> {
    scenario.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("minimum distance must be positive, got {d}")));
    }
    let effective = match scheme.coefficient_dependence() {
        CoefficientDependence::Arbitrary => PepEstimator::Direct,
        _ => estimator,
    };
    let stats = accumulate_trials(samples, grid.len(), |t| {
        trial_pep(scenario, scheme, grid, d, effective, seed, t)
    })?;
    Ok(PepCurve {
        scheme: scheme.id().to_string(),
        grid: grid.clone(),
        pep: stats.iter().map(|s| s.mean).collect(),
        stderr: stats.iter().map(|s| s.stderr()).collect(),
        samples,
        estimator: effective,
    })
}

/// Negated high-SNR slope of log10(error) against log10(SNR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityFit {
    pub slope: f64,
    /// SNR range (dB) of the points used.
    pub fit_range: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
    pub warnings: Vec<String>,
}

pub const DEFAULT_HIGH_SNR_FRACTION: f64 = 0.4;

/// Least-squares fit over the top `high_snr_fraction` of the grid (at least
/// three points). Points whose error value is not positive are dropped with a
/// warning.
pub fn diversity_fit_points(grid: &SnrGrid, values: &[f64], high_snr_fraction: f64) -> Result<DiversityFit> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "diversity fit",
            expected: grid.len(),
            actual: values.len(),
        });
    }
    if !(high_snr_fraction > 0.0 && high_snr_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "high-SNR fraction must be in (0, 1], got {high_snr_fraction}"
        )));
    }
    let n = grid.len();
    let take = ((n as f64 * high_snr_fraction).ceil() as usize).max(3).min(n);
    let mut warnings = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dbs = Vec::new();
    for i in (n - take)..n {
        let v = values[i];
        if v > 0.0 && v.is_finite() {
            xs.push(grid.linear()[i].log10());
            ys.push(v.log10());
            dbs.push(grid.db()[i]);
        } else {
            warnings.push(format!("dropped {} dB: value {v} not positive", grid.db()[i]));
        }
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "only {} usable points for a diversity fit",
            xs.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(DiversityFit {
        slope: -slope,
        fit_range: (dbs[0], *dbs.last().expect("three points")),
        r_squared,
        points: xs.len(),
        warnings,
    })
}

pub fn diversity_fit(curve: &PepCurve, high_snr_fraction: f64) -> Result<DiversityFit> {
    diversity_fit_points(&curve.grid, &curve.pep, high_snr_fraction)
}
