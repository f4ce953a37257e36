//! Joint transmit/receive beamforming for frequency-selective mmWave
//! steering channels.
//!
//! The crate covers channel generation ([`channel`]), the iterative
//! eigenvector scheme and its over-the-air training protocol ([`ievd`]),
//! pseudo-inverse designs with and without multipath grouping ([`grouping`]),
//! error-probability bounds and diversity fits ([`metrics`]) and a zero-padded
//! single-carrier link simulator ([`linksim`]).

pub mod channel;
pub mod error;
pub mod grouping;
pub mod ievd;
pub mod linalg;
pub mod linksim;
pub mod metrics;
pub mod rng;
pub mod scheme;
pub mod solution;

pub use num_complex::Complex64;

pub use channel::{
    steering_vector, AngleMode, ArrayConfig, ChannelEnsembleConfig, DelayAssignment,
    MultipathChannel, PathComponent, SisoChannel, TransmitAngleMode,
};
pub use error::{Error, Result};
pub use grouping::{GroupingMethod, MultipathGroups, SteeringSet};
pub use ievd::{array_gain, IevdConfig, StoppingRule, TrainingConfig};
pub use solution::BeamformingSolution;
pub use linksim::{BlerCurve, LinkSimConfig};
pub use metrics::{DiversityFit, PepCurve, PepEstimator, SnrGrid};
pub use scheme::Scheme;
