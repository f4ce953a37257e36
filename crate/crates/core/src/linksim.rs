//! Zero-padded single-carrier block transmission over the post-beamforming
//! SISO channel, with MMSE block equalization and block-error counting.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{ChannelEnsembleConfig, SisoChannel};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve_banded, CMatrix};
use crate::metrics::{accumulate_trials, SnrGrid};
use crate::rng::{trial_stream, Purpose};
use crate::scheme::Scheme;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray-mapped QPSK: the first bit of a pair picks the sign of the in-phase
/// part, the second the quadrature part, and a zero bit means positive, so
/// `00 -> (1 + j)/sqrt(2)`.
pub fn qpsk_modulate(bits: &[bool]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "QPSK needs an even bit count, got {}",
            bits.len()
        )));
    }
    let level = |b: bool| if b { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    Ok(bits
        .chunks_exact(2)
        .map(|p| Complex64::new(level(p[0]), level(p[1])))
        .collect())
}

/// Hard decisions on the quadrant of each symbol.
pub fn qpsk_demodulate(symbols: &[Complex64]) -> Vec<bool> {
    symbols
        .iter()
        .flat_map(|s| [s.re < 0.0, s.im < 0.0])
        .collect()
}

/// Tall `(P + zp) x P` convolution matrix of the taps.
pub fn convolution_matrix(siso: &SisoChannel, block_size: usize, zp_length: usize) -> CMatrix {
    let mut h = CMatrix::zeros(block_size + zp_length, block_size);
    for j in 0..block_size {
        for (m, &tap) in siso.taps.iter().enumerate() {
            if j + m < block_size + zp_length {
                h[(j + m, j)] = tap;
            }
        }
    }
    h
}

fn check_guard(siso: &SisoChannel, zp_length: usize) -> Result<()> {
    if siso.order() > zp_length {
        return Err(Error::InvalidArgument(format!(
            "channel order {} exceeds zero-padding guard {zp_length}",
            siso.order()
        )));
    }
    Ok(())
}

/// Unit-variance circularly-symmetric complex Gaussian samples.
pub fn complex_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * FRAC_1_SQRT_2
        })
        .collect()
}

/// `sqrt(gamma) H_c s + noise` for a given noise realization.
pub fn zp_receive(
    siso: &SisoChannel,
    symbols: &[Complex64],
    gamma: f64,
    zp_length: usize,
    noise: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_guard(siso, zp_length)?;
    let len = symbols.len() + zp_length;
    if noise.len() != len {
        return Err(Error::DimensionMismatch {
            context: "ZP noise block",
            expected: len,
            actual: noise.len(),
        });
    }
    let amp = gamma.sqrt();
    let mut y = noise.to_vec();
    for (j, &s) in symbols.iter().enumerate() {
        for (m, &tap) in siso.taps.iter().enumerate() {
            y[j + m] += amp * tap * s;
        }
    }
    Ok(y)
}

/// Transmits one zero-padded block and adds fresh unit-variance noise.
pub fn zp_transmit_receive<R: Rng + ?Sized>(
    siso: &SisoChannel,
    symbols: &[Complex64],
    gamma: f64,
    zp_length: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_guard(siso, zp_length)?;
    let noise = complex_noise(symbols.len() + zp_length, rng);
    zp_receive(siso, symbols, gamma, zp_length, &noise)
}

/// `(H_c^H H_c + I/gamma)^-1 H_c^H y / sqrt(gamma)`.
pub fn mmse_equalize(
    siso: &SisoChannel,
    received: &[Complex64],
    gamma: f64,
    block_size: usize,
) -> Result<Vec<Complex64>> {
    if received.len() < block_size {
        return Err(Error::DimensionMismatch {
            context: "MMSE input",
            expected: block_size,
            actual: received.len(),
        });
    }
    let zp_length = received.len() - block_size;
    check_guard(siso, zp_length)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("SNR must be positive, got {gamma}")));
    }
    let h = convolution_matrix(siso, block_size, zp_length);
    let mut normal = h.gram();
    for i in 0..block_size {
        normal[(i, i)] += 1.0 / gamma;
    }
    let rhs = h.adjoint_mul_vec(received)?;
    let x = cholesky_solve_banded(&normal, siso.order(), &rhs)?;
    let scale = 1.0 / gamma.sqrt();
    Ok(x.into_iter().map(|z| z * scale).collect())
}

/// Settings of the block-error simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSimConfig {
    pub block_size: usize,
    pub zp_length: usize,
    pub blocks: usize,
    pub grid: SnrGrid,
    /// Consecutive blocks that share one channel draw (1 redraws every block).
    pub blocks_per_channel: usize,
}

impl LinkSimConfig {
    pub fn new(blocks: usize, grid: SnrGrid) -> Self {
        Self {
            block_size: 32,
            zp_length: 8,
            blocks,
            grid,
            blocks_per_channel: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 || self.blocks == 0 || self.blocks_per_channel == 0 {
            return Err(Error::InvalidArgument(
                "block size, block count and blocks per channel must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Block-error rate per SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct BlerCurve {
    pub scheme: String,
    pub grid: SnrGrid,
    pub bler: Vec<f64>,
    pub blocks: usize,
}

impl BlerCurve {
    pub const CSV_HEADER: &'static str = "snr_db,bler,blocks,stderr";

    /// Binomial standard error of each point.
    pub fn stderr(&self) -> Vec<f64> {
        self.bler
            .iter()
            .map(|&p| (p * (1.0 - p) / self.blocks as f64).sqrt())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for ((db, p), se) in self.grid.db().iter().zip(&self.bler).zip(self.stderr()) {
            out.push_str(&format!("{db},{p:.9e},{},{se:.9e}\n", self.blocks));
        }
        out
    }
}

/// One block at every SNR point: 1.0 where any bit was wrong. The channel,
/// bits and noise are shared by all SNR points of the block.
fn block_errors(
    scenario: &ChannelEnsembleConfig,
    scheme: &Scheme,
    config: &LinkSimConfig,
    seed: u64,
    trial: u64,
) -> Result<Vec<f64>> {
    let draw = trial / config.blocks_per_channel as u64;
    let channel = scenario.sample(&mut trial_stream(seed, draw, Purpose::Channel))?;
    let sol = scheme
        .beamform(&channel, &mut trial_stream(seed, draw, Purpose::Scheme))
        .map_err(|e| Error::DrawFailed {
            scheme: scheme.id(),
            trial,
            source: Box::new(e),
        })?;
    let siso = channel.siso_equivalent(&sol.w_t, &sol.w_r)?;
    let mut payload = trial_stream(seed, trial, Purpose::Payload);
    let bits: Vec<bool> = (0..2 * config.block_size).map(|_| payload.random()).collect();
    let symbols = qpsk_modulate(&bits)?;
    let noise = complex_noise(config.block_size + config.zp_length, &mut payload);
    config
        .grid
        .linear()
        .iter()
        .map(|&gamma| {
            let y = zp_receive(&siso, &symbols, gamma, config.zp_length, &noise)?;
            let est = mmse_equalize(&siso, &y, gamma, config.block_size)?;
            Ok(if qpsk_demodulate(&est) == bits { 0.0 } else { 1.0 })
        })
        .collect()
}

/// BLER of `scheme` over the ensemble; block `t` uses streams derived from
/// `(seed, t)` and redraws angles (when random) and coefficients.
pub fn simulate_bler(
    scenario: &ChannelEnsembleConfig,
    scheme: &Scheme,
    config: &LinkSimConfig,
    seed: u64,
) -> Result<BlerCurve> {
    scenario.validate()?;
    config.validate()?;
    let stats = accumulate_trials(config.blocks, config.grid.len(), |t| {
        block_errors(scenario, scheme, config, seed, t)
    })?;
    Ok(BlerCurve {
        scheme: scheme.id().to_string(),
        grid: config.grid.clone(),
        bler: stats.iter().map(|s| s.mean).collect(),
        blocks: config.blocks,
    })
}
