//! Finite-data Bayesian analysis of the two-sensor probe.

pub mod likelihood;
pub mod mse;
pub mod posterior;
pub mod prior;
pub mod record;

pub use likelihood::{likelihood_single, likelihood_with_gradient, outcome_distribution, Outcome};
pub use mse::{
    bayes_mse, bayes_mse_list, curve_from_samples, default_mu_list, gamma_probe_crb, isotonic_decreasing,
    log_spaced_mus, mse_samples, mu_tau, prior_function_variance, sustained_crossing, uncertainty_curve, CurveEntry,
    LossSamples, MseEstimate, MseEstimator, MseSettings, UncertaintyCurve, DEFAULT_MC_SAMPLES, DEFAULT_THRESHOLD,
};
pub use posterior::{
    optimal_estimates, posterior, posterior_landscape, LikelihoodTable, Peak, PosteriorGrid, PosteriorMoments,
    DEFAULT_RESOLUTION,
};
pub use prior::PriorBox;
pub use record::{simulate_record, stream_rng, MeasurementRecord, OutcomeSampler};
