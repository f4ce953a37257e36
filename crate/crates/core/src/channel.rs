//! Frequency-selective steering channel between two uniform linear arrays.
//!
//! Path `l` contributes the rank-one tap `sqrt(n_r n_t) g_l lambda_l h_l^H` at
//! symbol delay `tau_l`, where `h_l`/`g_l` are the transmit/receive steering
//! vectors at cosine angles `omega_t`/`omega_r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, is_finite, CMatrix};

/// Antenna counts at each end of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_t: usize,
    pub n_r: usize,
}

impl ArrayConfig {
    pub fn new(n_t: usize, n_r: usize) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return Err(Error::InvalidArgument(format!(
                "array sizes must be positive, got n_t={n_t}, n_r={n_r}"
            )));
        }
        Ok(Self { n_t, n_r })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn min_size(&self) -> usize {
        self.n_t.min(self.n_r)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if (-1.0..1.0).contains(&omega) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "cosine angle {omega} outside [-1, 1)"
        )))
    }
}

/// ULA response `(1/sqrt(n)) exp(j pi k omega)`, `k = 0..n`.
pub fn steering_vector(n: usize, omega: f64) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("steering vector needs n >= 1".into()));
    }
    check_omega(omega)?;
    let amp = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|k| Complex64::from_polar(amp, PI * k as f64 * omega))
        .collect())
}

/// Cosine angle of a physical steering angle in radians.
pub fn cosine_angle(phi: f64) -> f64 {
    phi.cos()
}

/// One resolvable propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub omega_t: f64,
    pub omega_r: f64,
    pub lambda: Complex64,
    pub tau: usize,
}

/// Validated L-path channel with cached steering vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    arrays: ArrayConfig,
    paths: Vec<PathComponent>,
    tx_steering: Vec<Vec<Complex64>>,
    rx_steering: Vec<Vec<Complex64>>,
}

impl MultipathChannel {
    pub fn new(arrays: ArrayConfig, paths: Vec<PathComponent>) -> Result<Self> {
        ArrayConfig::new(arrays.n_t, arrays.n_r)?;
        if paths.is_empty() {
            return Err(Error::InvalidArgument("channel needs at least one path".into()));
        }
        let mut delays: Vec<usize> = paths.iter().map(|p| p.tau).collect();
        delays.sort_unstable();
        if delays.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("path delays must be distinct".into()));
        }
        if paths
            .iter()
            .any(|p| !(p.lambda.re.is_finite() && p.lambda.im.is_finite()))
        {
            return Err(Error::NonFinite("path coefficient"));
        }
        let tx_steering = paths
            .iter()
            .map(|p| steering_vector(arrays.n_t, p.omega_t))
            .collect::<Result<_>>()?;
        let rx_steering = paths
            .iter()
            .map(|p| steering_vector(arrays.n_r, p.omega_r))
            .collect::<Result<_>>()?;
        Ok(Self {
            arrays,
            paths,
            tx_steering,
            rx_steering,
        })
    }

    pub fn arrays(&self) -> ArrayConfig {
        self.arrays
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    /// Transmit steering vector `h_l`.
    pub fn tx_steering(&self, ell: usize) -> &[Complex64] {
        &self.tx_steering[ell]
    }

    /// Receive steering vector `g_l`.
    pub fn rx_steering(&self, ell: usize) -> &[Complex64] {
        &self.rx_steering[ell]
    }

    pub fn tx_steering_all(&self) -> &[Vec<Complex64>] {
        &self.tx_steering
    }

    pub fn rx_steering_all(&self) -> &[Vec<Complex64>] {
        &self.rx_steering
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.paths.iter().map(|p| p.lambda).collect()
    }

    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.tau).max().unwrap_or(0)
    }

    fn array_scale(&self) -> f64 {
        ((self.arrays.n_t * self.arrays.n_r) as f64).sqrt()
    }

    /// Same geometry with different coefficients.
    pub fn with_coefficients(&self, lambdas: &[Complex64]) -> Result<Self> {
        if lambdas.len() != self.paths.len() {
            return Err(Error::DimensionMismatch {
                context: "with_coefficients",
                expected: self.paths.len(),
                actual: lambdas.len(),
            });
        }
        if !is_finite(lambdas) {
            return Err(Error::NonFinite("path coefficient"));
        }
        let mut out = self.clone();
        for (p, &l) in out.paths.iter_mut().zip(lambdas) {
            p.lambda = l;
        }
        Ok(out)
    }

    /// Dense `n_r x n_t` tap matrix of path `ell`.
    pub fn path_matrix(&self, ell: usize) -> Result<CMatrix> {
        if ell >= self.paths.len() {
            return Err(Error::InvalidArgument(format!(
                "path index {ell} out of range for {} paths",
                self.paths.len()
            )));
        }
        let scale = self.paths[ell].lambda * self.array_scale();
        Ok(CMatrix::outer(
            &self.rx_steering[ell],
            &self.tx_steering[ell],
            scale,
        ))
    }

    fn check_awvs(&self, w_t: &[Complex64], w_r: &[Complex64]) -> Result<()> {
        if w_t.len() != self.arrays.n_t {
            return Err(Error::DimensionMismatch {
                context: "transmit AWV",
                expected: self.arrays.n_t,
                actual: w_t.len(),
            });
        }
        if w_r.len() != self.arrays.n_r {
            return Err(Error::DimensionMismatch {
                context: "receive AWV",
                expected: self.arrays.n_r,
                actual: w_r.len(),
            });
        }
        Ok(())
    }

    /// Beamformed gain of every path without its coefficient:
    /// `sqrt(n_t n_r) (w_r^H g_l)(h_l^H w_t)`.
    pub fn steering_responses(&self, w_t: &[Complex64], w_r: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_awvs(w_t, w_r)?;
        let s = self.array_scale();
        Ok((0..self.paths.len())
            .map(|l| dot(w_r, &self.rx_steering[l]) * dot(&self.tx_steering[l], w_t) * s)
            .collect())
    }

    /// Per-path beamformed gains `w_r^H H_l w_t`.
    pub fn path_responses(&self, w_t: &[Complex64], w_r: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self
            .steering_responses(w_t, w_r)?
            .into_iter()
            .zip(&self.paths)
            .map(|(r, p)| r * p.lambda)
            .collect())
    }

    /// Tap sequence seen after beamforming at both ends.
    pub fn siso_equivalent(&self, w_t: &[Complex64], w_r: &[Complex64]) -> Result<SisoChannel> {
        let responses = self.path_responses(w_t, w_r)?;
        let mut taps = vec![Complex64::new(0.0, 0.0); self.max_delay() + 1];
        for (p, r) in self.paths.iter().zip(responses) {
            taps[p.tau] = r;
        }
        Ok(SisoChannel { taps })
    }

    pub fn to_fixture(&self) -> ChannelFixture {
        ChannelFixture {
            n_t: self.arrays.n_t,
            n_r: self.arrays.n_r,
            paths: self
                .paths
                .iter()
                .map(|p| PathFixture {
                    omega_t: p.omega_t,
                    omega_r: p.omega_r,
                    lambda_re: p.lambda.re,
                    lambda_im: p.lambda.im,
                    tau: p.tau,
                })
                .collect(),
        }
    }

    pub fn from_fixture(fixture: &ChannelFixture) -> Result<Self> {
        let arrays = ArrayConfig::new(fixture.n_t, fixture.n_r)?;
        let paths = fixture
            .paths
            .iter()
            .map(|p| PathComponent {
                omega_t: p.omega_t,
                omega_r: p.omega_r,
                lambda: Complex64::new(p.lambda_re, p.lambda_im),
                tau: p.tau,
            })
            .collect();
        Self::new(arrays, paths)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_fixture()).expect("fixture serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fixture: ChannelFixture = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("channel fixture: {e}")))?;
        Self::from_fixture(&fixture)
    }
}

/// JSON form of a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFixture {
    pub n_t: usize,
    pub n_r: usize,
    pub paths: Vec<PathFixture>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFixture {
    pub omega_t: f64,
    pub omega_r: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub tau: usize,
}

/// Post-beamforming scalar channel; `taps[m]` is the gain at delay `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SisoChannel {
    pub taps: Vec<Complex64>,
}

impl SisoChannel {
    pub fn order(&self) -> usize {
        self.taps.len().saturating_sub(1)
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// How path angles are chosen for each draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    /// `omega_l = -1 + 2 l / L` at both ends.
    Deterministic,
    /// Independent uniform draws on `[-1, 1)`.
    Random,
    /// Explicit `(omega_t, omega_r)` per path.
    Fixed(Vec<(f64, f64)>),
}

/// Whether every path leaves the transmitter along one common direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmitAngleMode {
    #[default]
    PerPath,
    /// All paths share the transmit angle of path 0: the first grid point in
    /// deterministic mode, one uniform draw per channel in random mode.
    Single,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayAssignment {
    /// `tau_l = l`.
    #[default]
    Consecutive,
    Fixed(Vec<usize>),
}

/// Distribution of channels used by every Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEnsembleConfig {
    pub arrays: ArrayConfig,
    pub num_paths: usize,
    pub angle_mode: AngleMode,
    #[serde(default)]
    pub transmit_angle_mode: TransmitAngleMode,
    /// Variance of each coefficient; `None` means `1/L`.
    #[serde(default)]
    pub coefficient_variance: Option<f64>,
    #[serde(default)]
    pub delays: DelayAssignment,
}

impl ChannelEnsembleConfig {
    pub fn new(arrays: ArrayConfig, num_paths: usize, angle_mode: AngleMode) -> Self {
        Self {
            arrays,
            num_paths,
            angle_mode,
            transmit_angle_mode: TransmitAngleMode::PerPath,
            coefficient_variance: None,
            delays: DelayAssignment::Consecutive,
        }
    }

    pub fn with_transmit_angle_mode(mut self, mode: TransmitAngleMode) -> Self {
        self.transmit_angle_mode = mode;
        self
    }

    pub fn variance(&self) -> f64 {
        self.coefficient_variance
            .unwrap_or(1.0 / self.num_paths as f64)
    }

    pub fn validate(&self) -> Result<()> {
        ArrayConfig::new(self.arrays.n_t, self.arrays.n_r)?;
        if self.num_paths == 0 {
            return Err(Error::InvalidArgument("num_paths must be at least 1".into()));
        }
        let var = self.variance();
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient variance must be positive, got {var}"
            )));
        }
        if let AngleMode::Fixed(list) = &self.angle_mode {
            if list.len() != self.num_paths {
                return Err(Error::DimensionMismatch {
                    context: "fixed angle list",
                    expected: self.num_paths,
                    actual: list.len(),
                });
            }
            for &(t, r) in list {
                check_omega(t)?;
                check_omega(r)?;
            }
        }
        if let DelayAssignment::Fixed(d) = &self.delays {
            if d.len() != self.num_paths {
                return Err(Error::DimensionMismatch {
                    context: "fixed delay list",
                    expected: self.num_paths,
                    actual: d.len(),
                });
            }
        }
        Ok(())
    }

    /// True when every draw has the same angles.
    pub fn angles_are_fixed(&self) -> bool {
        !matches!(self.angle_mode, AngleMode::Random)
    }

    /// Draws `(omega_t, omega_r)` for every path.
    pub fn sample_angles<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<(f64, f64)> {
        let l = self.num_paths;
        let mut angles: Vec<(f64, f64)> = match &self.angle_mode {
            AngleMode::Deterministic => (0..l)
                .map(|i| {
                    let w = -1.0 + 2.0 * i as f64 / l as f64;
                    (w, w)
                })
                .collect(),
            AngleMode::Random => (0..l)
                .map(|_| (uniform_cosine(rng), uniform_cosine(rng)))
                .collect(),
            AngleMode::Fixed(list) => list.clone(),
        };
        if self.transmit_angle_mode == TransmitAngleMode::Single {
            let common = angles[0].0;
            for a in angles.iter_mut() {
                a.0 = common;
            }
        }
        angles
    }

    /// Draws i.i.d. circularly-symmetric complex Gaussian coefficients.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let sd = (self.variance() / 2.0).sqrt();
        (0..self.num_paths)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * sd, im * sd)
            })
            .collect()
    }

    pub fn delay_list(&self) -> Vec<usize> {
        match &self.delays {
            DelayAssignment::Consecutive => (0..self.num_paths).collect(),
            DelayAssignment::Fixed(d) => d.clone(),
        }
    }

    /// Angles first, then coefficients, from the same stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MultipathChannel> {
        self.validate()?;
        let angles = self.sample_angles(rng);
        let lambdas = self.sample_coefficients(rng);
        let paths = angles
            .into_iter()
            .zip(lambdas)
            .zip(self.delay_list())
            .map(|(((omega_t, omega_r), lambda), tau)| PathComponent {
                omega_t,
                omega_r,
                lambda,
                tau,
            })
            .collect();
        MultipathChannel::new(self.arrays, paths)
    }
}

fn uniform_cosine<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 2u - 1 with u in [0, 1) stays in [-1, 1)
    2.0 * rng.random::<f64>() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_vector_examples() {
        let v = steering_vector(4, 0.0).unwrap();
        assert!(v.iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-15));
        let v = steering_vector(2, -1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((v[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((v[1] - c(-s, 0.0)).norm() < 1e-15);
        assert!(steering_vector(4, 1.0).is_err());
        assert!(steering_vector(0, 0.0).is_err());
    }

    #[test]
    fn dft_spaced_steering_vectors_are_orthogonal() {
        let base = steering_vector(8, 0.25).unwrap();
        assert!((dot(&base, &base).norm() - 1.0).abs() < 1e-12);
        for m in [-4i32, -3, -2, -1, 1, 2] {
            let omega = 0.25 + 2.0 / 8.0 * m as f64;
            let other = steering_vector(8, omega).unwrap();
            // direct summation of the geometric series
            let direct: Complex64 = (0..8)
                .map(|k| Complex64::from_polar(1.0 / 8.0, PI * k as f64 * (omega - 0.25)))
                .sum();
            assert!(direct.norm() < 1e-12);
            assert!(dot(&base, &other).norm() < 1e-12);
        }
    }

    #[test]
    fn deterministic_angles_follow_grid() {
        let cfg = ChannelEnsembleConfig::new(ArrayConfig::square(8).unwrap(), 4, AngleMode::Deterministic);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = cfg.sample(&mut rng).unwrap();
        let want = [-1.0, -0.5, 0.0, 0.5];
        for (p, w) in ch.paths().iter().zip(want) {
            assert_eq!(p.omega_t, w);
            assert_eq!(p.omega_r, w);
        }
        assert_eq!(ch.paths().iter().map(|p| p.tau).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_transmit_angle_is_shared() {
        let cfg = ChannelEnsembleConfig::new(ArrayConfig::square(8).unwrap(), 3, AngleMode::Random)
            .with_transmit_angle_mode(TransmitAngleMode::Single);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = cfg.sample(&mut rng).unwrap();
        let t0 = ch.paths()[0].omega_t;
        assert!(ch.paths().iter().all(|p| p.omega_t == t0));
        assert!(ch.paths()[0].omega_r != ch.paths()[1].omega_r);
    }

    #[test]
    fn coefficient_power_is_unit_on_average() {
        for l in [1usize, 4, 10] {
            let cfg = ChannelEnsembleConfig::new(ArrayConfig::square(2).unwrap(), l, AngleMode::Random);
            let mut rng = ChaCha8Rng::seed_from_u64(l as u64);
            let n = 100_000;
            let total: f64 = (0..n)
                .map(|_| cfg.sample_coefficients(&mut rng).iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum();
            assert!((total / n as f64 - 1.0).abs() < 0.02, "L={l}");
        }
    }

    #[test]
    fn path_matrix_scalar_and_rank_one() {
        let ch = MultipathChannel::new(
            ArrayConfig::new(1, 1).unwrap(),
            vec![PathComponent { omega_t: 0.3, omega_r: -0.2, lambda: c(0.7, -0.1), tau: 0 }],
        )
        .unwrap();
        let m = ch.path_matrix(0).unwrap();
        assert!((m[(0, 0)] - c(0.7, -0.1)).norm() < 1e-15);

        let cfg = ChannelEnsembleConfig::new(ArrayConfig::new(6, 5).unwrap(), 3, AngleMode::Random);
        let ch = cfg.sample(&mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for l in 0..3 {
            let m = ch.path_matrix(l).unwrap();
            let fro = m.frobenius_norm();
            assert!((fro - 30f64.sqrt() * ch.paths()[l].lambda.norm()).abs() < 1e-9);
            let dense = nalgebra::DMatrix::from_fn(5, 6, |i, j| m[(i, j)]);
            let sv = dense.singular_values();
            let mut sv: Vec<f64> = sv.iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            assert!(sv[1] < 1e-10, "{sv:?}");
        }
        assert!(ch.path_matrix(3).is_err());
    }

    #[test]
    fn siso_taps_land_on_delays() {
        let arrays = ArrayConfig::square(4).unwrap();
        let paths = vec![
            PathComponent { omega_t: 0.1, omega_r: 0.2, lambda: c(1.0, 0.5), tau: 0 },
            PathComponent { omega_t: -0.4, omega_r: 0.6, lambda: c(-0.3, 0.2), tau: 3 },
        ];
        let ch = MultipathChannel::new(arrays, paths).unwrap();
        let w_t = steering_vector(4, 0.0).unwrap();
        let w_r = steering_vector(4, 0.5).unwrap();
        let siso = ch.siso_equivalent(&w_t, &w_r).unwrap();
        assert_eq!(siso.taps.len(), 4);
        assert_eq!(siso.taps[1], c(0.0, 0.0));
        assert_eq!(siso.taps[2], c(0.0, 0.0));
        for l in 0..2 {
            let direct = dot(&w_r, &ch.path_matrix(l).unwrap().mul_vec(&w_t).unwrap());
            assert!((siso.taps[ch.paths()[l].tau] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn matched_single_path_tap() {
        let arrays = ArrayConfig::new(4, 8).unwrap();
        let lambda = c(0.4, -0.9);
        let ch = MultipathChannel::new(
            arrays,
            vec![PathComponent { omega_t: 0.3, omega_r: -0.7, lambda, tau: 0 }],
        )
        .unwrap();
        let siso = ch
            .siso_equivalent(&ch.tx_steering(0).to_vec(), &ch.rx_steering(0).to_vec())
            .unwrap();
        assert!((siso.taps[0] - lambda * 32f64.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn rejects_duplicate_delays_and_bad_angles() {
        let arrays = ArrayConfig::square(2).unwrap();
        let p = PathComponent { omega_t: 0.0, omega_r: 0.0, lambda: c(1.0, 0.0), tau: 1 };
        assert!(MultipathChannel::new(arrays, vec![p, p]).is_err());
        let bad = PathComponent { omega_t: 1.0, ..p };
        assert!(MultipathChannel::new(arrays, vec![bad]).is_err());
        assert!(MultipathChannel::new(arrays, vec![]).is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let cfg = ChannelEnsembleConfig::new(ArrayConfig::new(3, 5).unwrap(), 4, AngleMode::Random);
        let ch = cfg.sample(&mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let back = MultipathChannel::from_json(&ch.to_json()).unwrap();
        assert_eq!(ch, back);
        assert!(MultipathChannel::from_json(r#"{"n_t":1,"n_r":1,"paths":[],"x":1}"#).is_err());
    }

    #[test]
    fn steering_norm_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(1..=64);
            let v = steering_vector(n, uniform_cosine(&mut rng)).unwrap();
            assert!((norm(&v) - 1.0).abs() < 1e-12);
        }
    }
}
