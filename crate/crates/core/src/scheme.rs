use rand::Rng;

use crate::channel::MultipathChannel;
use crate::error::Result;
use crate::grouping::{
    mpg_beamform, parkpan_beamform, parkpan_star_beamform, GainVectors, GroupingMethod, SteeringSet,
};
use crate::ievd::{ievd_beamform, training_beamform, IevdConfig, TrainingConfig};
use crate::solution::BeamformingSolution;

/// A beamforming scheme with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Ievd(IevdConfig),
    Training(TrainingConfig),
    ParkPan,
    ParkPanStar,
    Mpg(GroupingMethod),
}

/// How a scheme's AWVs depend on the path coefficients of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientDependence {
    /// AWVs are a function of the steering angles alone.
    AnglesOnly,
    /// AWVs are unchanged when all coefficients are scaled by one positive
    /// constant.
    ScaleInvariant,
    /// No structure to exploit.
    Arbitrary,
}

impl Scheme {
    pub fn id(&self) -> &'static str {
        match self {
            Scheme::Ievd(_) => "ievd",
            Scheme::Training(_) => "training",
            Scheme::ParkPan => "park_pan",
            Scheme::ParkPanStar => "park_pan_star",
            Scheme::Mpg(_) => "mpg",
        }
    }

    pub fn coefficient_dependence(&self) -> CoefficientDependence {
        match self {
            Scheme::ParkPan | Scheme::ParkPanStar | Scheme::Mpg(_) => CoefficientDependence::AnglesOnly,
            Scheme::Ievd(_) => CoefficientDependence::ScaleInvariant,
            Scheme::Training(t) if t.noise_variance == 0.0 => CoefficientDependence::ScaleInvariant,
            Scheme::Training(_) => CoefficientDependence::Arbitrary,
        }
    }

    /// Computes AWVs for one channel. `rng` feeds random initial AWVs, probe
    /// noise and subset selection.
    pub fn beamform<R: Rng + ?Sized>(
        &self,
        channel: &MultipathChannel,
        rng: &mut R,
    ) -> Result<BeamformingSolution> {
        match self {
            Scheme::Ievd(cfg) => ievd_beamform(channel, cfg, rng),
            Scheme::Training(cfg) => training_beamform(channel, cfg, rng),
            Scheme::ParkPan => parkpan_beamform(
                &SteeringSet::from_channel(channel),
                &GainVectors::ones(channel.num_paths()),
            ),
            Scheme::ParkPanStar => parkpan_star_beamform(
                &SteeringSet::from_channel(channel),
                &GainVectors::ones(channel.num_paths()),
                rng,
            ),
            Scheme::Mpg(method) => mpg_beamform(&SteeringSet::from_channel(channel), *method),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{AngleMode, ArrayConfig, ChannelEnsembleConfig};
    use crate::linalg::angular_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scale_invariant_schemes_ignore_common_gain() {
        let cfg = ChannelEnsembleConfig::new(ArrayConfig::square(8).unwrap(), 4, AngleMode::Random);
        let ch = cfg.sample(&mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let scaled: Vec<_> = ch.coefficients().iter().map(|z| z * 7.5).collect();
        let ch2 = ch.with_coefficients(&scaled).unwrap();
        for scheme in [Scheme::Ievd(IevdConfig::default()), Scheme::Training(TrainingConfig::default())] {
            assert_eq!(scheme.coefficient_dependence(), CoefficientDependence::ScaleInvariant);
            let a = scheme.beamform(&ch, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            let b = scheme.beamform(&ch2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            assert!(angular_distance(&a.w_t, &b.w_t) < 1e-6);
            assert!(angular_distance(&a.w_r, &b.w_r) < 1e-6);
        }
    }

    #[test]
    fn angle_only_schemes_ignore_coefficients() {
        let cfg = ChannelEnsembleConfig::new(ArrayConfig::square(8).unwrap(), 12, AngleMode::Random);
        let ch = cfg.sample(&mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let other = cfg.sample_coefficients(&mut ChaCha8Rng::seed_from_u64(5));
        let ch2 = ch.with_coefficients(&other).unwrap();
        for scheme in [Scheme::ParkPanStar, Scheme::Mpg(GroupingMethod::Angle)] {
            let a = scheme.beamform(&ch, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let b = scheme.beamform(&ch2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert_eq!(a.w_t, b.w_t);
            assert_eq!(a.w_r, b.w_r);
        }
    }
}
