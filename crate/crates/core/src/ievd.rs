//! Iterative eigenvector beamforming on full CSI and its ping-pong training
//! realization.
//!
//! Both alternate between the two ends: the transmit AWV becomes the principal
//! eigenvector of `sum_l H_l^H w_r w_r^H H_l`, then the receive AWV the principal
//! eigenvector of `sum_l H_l w_t w_t^H H_l^H`. Each update maximizes the array
//! gain for the other end held fixed, so the gain never decreases.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::MultipathChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, dot, normalized, principal_eigvec_exact, principal_eigvec_power,
    random_unit_vector, CMatrix,
};
use crate::solution::BeamformingSolution;

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum StoppingRule {
    /// Always run `max_iterations`.
    FixedCount,
    /// Stop once `gamma[n] / gamma[n-1] < mu`, checked from `n = 2` on.
    GainRatio { mu: f64 },
}

/// Starting AWV pair. Only the receive AWV influences the iterates; the
/// transmit AWV just sets the iteration-0 gain.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialAwv {
    Random,
    Supplied {
        w_t: Vec<Complex64>,
        w_r: Vec<Complex64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IevdConfig {
    pub max_iterations: usize,
    pub stopping_rule: StoppingRule,
    pub initial: InitialAwv,
}

impl Default for IevdConfig {
    fn default() -> Self {
        Self {
            max_iterations: 3,
            stopping_rule: StoppingRule::FixedCount,
            initial: InitialAwv::Random,
        }
    }
}

impl IevdConfig {
    pub fn with_iterations(max_iterations: usize) -> Self {
        Self {
            max_iterations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if let StoppingRule::GainRatio { mu } = self.stopping_rule {
            if !(mu > 1.0 && mu.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "gain-ratio threshold must exceed 1, got {mu}"
                )));
            }
        }
        Ok(())
    }

    fn should_stop(&self, trace: &[f64]) -> bool {
        let StoppingRule::GainRatio { mu } = self.stopping_rule else {
            return false;
        };
        let n = trace.len() - 1;
        if n < 2 {
            return false;
        }
        let (prev, cur) = (trace[n - 1], trace[n]);
        let ratio = if prev > 0.0 {
            cur / prev
        } else if cur > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        ratio < mu
    }
}

/// Over-the-air realization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub ievd: IevdConfig,
    /// Power-method exponent `K`.
    pub power: usize,
    pub noise_variance: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            ievd: IevdConfig::default(),
            power: 2,
            noise_variance: 0.0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.ievd.validate()?;
        if self.power == 0 {
            return Err(Error::InvalidArgument("power K must be at least 1".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// `sum_l |w_r^H H_l w_t|^2`.
pub fn array_gain(channel: &MultipathChannel, w_t: &[Complex64], w_r: &[Complex64]) -> Result<f64> {
    Ok(channel
        .path_responses(w_t, w_r)?
        .iter()
        .map(|z| z.norm_sqr())
        .sum())
}

fn initial_pair<R: Rng + ?Sized>(
    channel: &MultipathChannel,
    initial: &InitialAwv,
    rng: &mut R,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let arrays = channel.arrays();
    match initial {
        InitialAwv::Random => {
            let w_r = random_unit_vector(arrays.n_r, rng);
            let w_t = random_unit_vector(arrays.n_t, rng);
            Ok((w_t, w_r))
        }
        InitialAwv::Supplied { w_t, w_r } => {
            if w_t.len() != arrays.n_t || w_r.len() != arrays.n_r {
                return Err(Error::DimensionMismatch {
                    context: "initial AWVs",
                    expected: arrays.n_t + arrays.n_r,
                    actual: w_t.len() + w_r.len(),
                });
            }
            let w_t = normalized(w_t).ok_or(Error::NonFinite("initial w_t"))?;
            let w_r = normalized(w_r).ok_or(Error::NonFinite("initial w_r"))?;
            Ok((w_t, w_r))
        }
    }
}

/// `sum_l H_l^H w_r w_r^H H_l`, built from the rank-one path structure.
pub fn transmit_quadratic_form(channel: &MultipathChannel, w_r: &[Complex64]) -> CMatrix {
    let a = channel.arrays();
    let scale = (a.n_t * a.n_r) as f64;
    let mut m = CMatrix::zeros(a.n_t, a.n_t);
    for (l, p) in channel.paths().iter().enumerate() {
        let w = scale * p.lambda.norm_sqr() * dot(channel.rx_steering(l), w_r).norm_sqr();
        m.add_outer_hermitian(channel.tx_steering(l), w);
    }
    m
}

/// `sum_l H_l w_t w_t^H H_l^H`.
pub fn receive_quadratic_form(channel: &MultipathChannel, w_t: &[Complex64]) -> CMatrix {
    let a = channel.arrays();
    let scale = (a.n_t * a.n_r) as f64;
    let mut m = CMatrix::zeros(a.n_r, a.n_r);
    for (l, p) in channel.paths().iter().enumerate() {
        let w = scale * p.lambda.norm_sqr() * dot(channel.tx_steering(l), w_t).norm_sqr();
        m.add_outer_hermitian(channel.rx_steering(l), w);
    }
    m
}

/// Alternating exact-eigenvector updates with full channel knowledge.
pub fn ievd_beamform<R: Rng + ?Sized>(
    channel: &MultipathChannel,
    config: &IevdConfig,
    rng: &mut R,
) -> Result<BeamformingSolution> {
    config.validate()?;
    let (mut w_t, mut w_r) = initial_pair(channel, &config.initial, rng)?;
    let mut trace = vec![array_gain(channel, &w_t, &w_r)?];
    for _ in 0..config.max_iterations {
        w_t = principal_eigvec_exact(&transmit_quadratic_form(channel, &w_r))?;
        w_r = principal_eigvec_exact(&receive_quadratic_form(channel, &w_t))?;
        trace.push(array_gain(channel, &w_t, &w_r)?);
        if config.should_stop(&trace) {
            break;
        }
    }
    Ok(BeamformingSolution {
        iterations_used: trace.len() - 1,
        gamma_trace: trace,
        ..BeamformingSolution::one_shot("ievd", w_t, w_r)
    })
}

/// Simulated reciprocal link that is the only channel access the training
/// protocol gets. Every call occupies one training slot and returns one
/// complex sample per path (the paths are resolvable by delay).
pub struct ReciprocalLink<'a, R: Rng + ?Sized> {
    channel: &'a MultipathChannel,
    noise_sd: f64,
    rng: &'a mut R,
    slots: usize,
}

impl<'a, R: Rng + ?Sized> ReciprocalLink<'a, R> {
    pub fn new(channel: &'a MultipathChannel, noise_variance: f64, rng: &'a mut R) -> Self {
        Self {
            channel,
            noise_sd: (noise_variance / 2.0).sqrt(),
            rng,
            slots: 0,
        }
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    fn noise(&mut self) -> Complex64 {
        if self.noise_sd == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(re, im) * self.noise_sd
    }

    fn scale(&self) -> f64 {
        let a = self.channel.arrays();
        ((a.n_t * a.n_r) as f64).sqrt()
    }

    /// Destination sends with `w_r`, source listens with `listen`:
    /// `listen^H H_l^H w_r` per path.
    pub fn probe_reverse(&mut self, w_r: &[Complex64], listen: &[Complex64]) -> Vec<Complex64> {
        self.slots += 1;
        let s = self.scale();
        (0..self.channel.num_paths())
            .map(|l| {
                let lambda = self.channel.paths()[l].lambda;
                let clean = lambda.conj()
                    * s
                    * dot(self.channel.rx_steering(l), w_r)
                    * dot(listen, self.channel.tx_steering(l));
                clean + self.noise()
            })
            .collect()
    }

    /// Source sends with `w_t`, destination listens with `listen`:
    /// `listen^H H_l w_t` per path.
    pub fn probe_forward(&mut self, w_t: &[Complex64], listen: &[Complex64]) -> Vec<Complex64> {
        self.slots += 1;
        let s = self.scale();
        (0..self.channel.num_paths())
            .map(|l| {
                let lambda = self.channel.paths()[l].lambda;
                let clean = lambda
                    * s
                    * dot(self.channel.tx_steering(l), w_t)
                    * dot(listen, self.channel.rx_steering(l));
                clean + self.noise()
            })
            .collect()
    }

    /// `n_t` reverse slots listening on each basis vector; returns
    /// `r[l] ~ H_l^H w_r` for every path.
    pub fn scan_at_source(&mut self, w_r: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.channel.arrays().n_t;
        let mut r = vec![vec![Complex64::new(0.0, 0.0); n]; self.channel.num_paths()];
        for i in 0..n {
            for (l, sample) in self.probe_reverse(w_r, &basis_vector(n, i)).into_iter().enumerate() {
                r[l][i] = sample;
            }
        }
        r
    }

    /// `n_r` forward slots; returns `rbar[l] ~ H_l w_t`.
    pub fn scan_at_destination(&mut self, w_t: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.channel.arrays().n_r;
        let mut r = vec![vec![Complex64::new(0.0, 0.0); n]; self.channel.num_paths()];
        for j in 0..n {
            for (l, sample) in self.probe_forward(w_t, &basis_vector(n, j)).into_iter().enumerate() {
                r[l][j] = sample;
            }
        }
        r
    }
}

fn sample_covariance(samples: &[Vec<Complex64>]) -> CMatrix {
    let n = samples[0].len();
    let mut m = CMatrix::zeros(n, n);
    for r in samples {
        m.add_outer_hermitian(r, 1.0);
    }
    m
}

/// Ping-pong training: each iteration spends `n_t + n_r` slots and replaces
/// the eigen-decompositions by `K` power steps seeded with the first basis
/// vector. The gain trace is evaluated on the true channel for reporting only.
pub fn training_beamform<R: Rng + ?Sized>(
    channel: &MultipathChannel,
    config: &TrainingConfig,
    rng: &mut R,
) -> Result<BeamformingSolution> {
    config.validate()?;
    let (mut w_t, mut w_r) = initial_pair(channel, &config.ievd.initial, rng)?;
    let mut trace = vec![array_gain(channel, &w_t, &w_r)?];
    let mut degenerate = 0;
    let arrays = channel.arrays();
    let e1_t = basis_vector(arrays.n_t, 0);
    let e1_r = basis_vector(arrays.n_r, 0);
    let mut link = ReciprocalLink::new(channel, config.noise_variance, rng);
    for _ in 0..config.ievd.max_iterations {
        let r_s = sample_covariance(&link.scan_at_source(&w_r));
        let step = principal_eigvec_power(&r_s, &e1_t, config.power)?;
        degenerate += usize::from(step.degenerate);
        w_t = step.vector;

        let r_d = sample_covariance(&link.scan_at_destination(&w_t));
        let step = principal_eigvec_power(&r_d, &e1_r, config.power)?;
        degenerate += usize::from(step.degenerate);
        w_r = step.vector;

        trace.push(array_gain(channel, &w_t, &w_r)?);
        if config.ievd.should_stop(&trace) {
            break;
        }
    }
    Ok(BeamformingSolution {
        iterations_used: trace.len() - 1,
        gamma_trace: trace,
        slots_consumed: link.slots(),
        degenerate_steps: degenerate,
        ..BeamformingSolution::one_shot("training", w_t, w_r)
    })
}

/// Per-path steering-vector estimates from one training round.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringEstimate {
    /// Unit transmit steering estimate, `None` when the path was unobservable.
    pub h: Option<Vec<Complex64>>,
    pub g: Option<Vec<Complex64>>,
}

impl SteeringEstimate {
    pub fn observable(&self) -> bool {
        self.h.is_some() && self.g.is_some()
    }
}

/// Below this norm a path's training sample is treated as absent.
pub const UNOBSERVABLE_NORM: f64 = 1e-10;

/// Normalizes the per-path training samples `H_l^H w_r` and `H_l w_t`, which
/// are scaled copies of `h_l` and `g_l`.
pub fn estimate_steering_vectors<R: Rng + ?Sized>(
    channel: &MultipathChannel,
    w_t: &[Complex64],
    w_r: &[Complex64],
    noise_variance: f64,
    rng: &mut R,
) -> Result<Vec<SteeringEstimate>> {
    let arrays = channel.arrays();
    if w_t.len() != arrays.n_t || w_r.len() != arrays.n_r {
        return Err(Error::DimensionMismatch {
            context: "probe AWVs",
            expected: arrays.n_t + arrays.n_r,
            actual: w_t.len() + w_r.len(),
        });
    }
    let mut link = ReciprocalLink::new(channel, noise_variance, rng);
    let r = link.scan_at_source(w_r);
    let r_bar = link.scan_at_destination(w_t);
    let estimate = |v: &[Complex64]| {
        if crate::linalg::norm(v) < UNOBSERVABLE_NORM {
            None
        } else {
            normalized(v)
        }
    };
    Ok(r.iter()
        .zip(&r_bar)
        .map(|(r, rb)| SteeringEstimate {
            h: estimate(r),
            g: estimate(rb),
        })
        .collect())
}
