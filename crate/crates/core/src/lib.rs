//! Multiparameter estimation of linear functions on networks of qubit
//! sensors: probe states, function geometry, quantum Fisher information,
//! asymptotic bounds and their optimisation, and a Bayesian engine for the
//! finite-data regime.

pub mod bayes;
pub mod crb;
pub mod error;
pub mod fisher;
pub mod functions;
pub mod network;

pub use bayes::{MeasurementRecord, PosteriorGrid, PriorBox, UncertaintyCurve};
pub use error::{Error, Result};
pub use fisher::{InfoKind, InfoMatrix};
pub use functions::{GeometryReport, LinearFunctionSet};
pub use network::{CorrelationProfile, PureState, StrengthMatrix};
