use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::posterior::{LikelihoodTable, DEFAULT_RESOLUTION};
use super::prior::PriorBox;
use super::record::{stream_rng, OutcomeSampler};
use crate::crb::crb_general;
use crate::error::{Error, Result};
use crate::fisher::qfi_pure;
use crate::functions::LinearFunctionSet;
use crate::network::PureState;

pub const DEFAULT_MC_SAMPLES: usize = 2000;
pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_CURVE_POINTS: usize = 60;
pub const DEFAULT_MU_MAX: u64 = 2000;

/// How the loss of one Monte Carlo draw is scored.
///
/// Both forms estimate the same expectation. `PosteriorVariance` scores a
/// draw by the posterior expected loss `Tr(W Vᵀ (Σ_post + δδᵀ) V)`, which has
/// much lower variance; `SquaredError` scores it by the realised loss of the
/// estimate against the simulated truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseEstimator {
    PosteriorVariance,
    SquaredError,
}

/// Monte Carlo and quadrature settings for the Bayesian error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseSettings {
    pub mc_samples: usize,
    pub resolution: usize,
    pub seed: u64,
    pub estimator: MseEstimator,
    /// Fixed shift added to the posterior mean before scoring. Zero gives the
    /// optimal estimator.
    pub offset: [f64; 2],
    /// Thread count; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for MseSettings {
    fn default() -> Self {
        MseSettings {
            mc_samples: DEFAULT_MC_SAMPLES,
            resolution: DEFAULT_RESOLUTION,
            seed: 0,
            estimator: MseEstimator::PosteriorVariance,
            offset: [0.0; 2],
            workers: None,
        }
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseEstimate {
    pub mse: f64,
    pub stderr: f64,
}

/// One point of an uncertainty curve. `crb` and `ratio` are absent when the
/// probe's quantum Fisher information is singular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub mu: u64,
    pub mse: f64,
    pub mc_stderr: f64,
    pub crb: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyCurve {
    pub gamma: f64,
    pub entries: Vec<CurveEntry>,
    pub mc_samples: usize,
    pub resolution: usize,
    pub seed: u64,
    pub threshold: f64,
    pub mu_tau: Option<u64>,
}

impl UncertaintyCurve {
    pub fn mus(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.mu).collect()
    }

    /// Entry at a given μ, if listed.
    pub fn at(&self, mu: u64) -> Option<&CurveEntry> {
        self.entries.iter().find(|e| e.mu == mu)
    }
}

/// `n` distinct integers log-spaced over `[lo, hi]`, ascending. Rounding
/// collisions at the low end are dropped, so fewer than `n` may come back.
pub fn log_spaced_mus(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    if n == 0 || hi < lo {
        return Vec::new();
    }
    if n == 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as u64)
        .collect();
    if lo == 0 {
        out[0] = 0;
    }
    out.dedup();
    out
}

/// The default trial grid: 60 log-spaced points over `[1, 2000]`.
pub fn default_mu_list() -> Vec<u64> {
    log_spaced_mus(1, DEFAULT_MU_MAX, DEFAULT_CURVE_POINTS)
}

/// Weighted quadratic form `M = V W Vᵀ`, so the loss for a parameter error
/// `e` is `eᵀ M e`.
fn loss_matrix(funcs: &LinearFunctionSet) -> [[f64; 2]; 2] {
    let v = funcs.coefficients();
    let mut m = [[0.0; 2]; 2];
    for (f, w) in v.column_iter().zip(funcs.weights().iter()) {
        for r in 0..2 {
            for s in 0..2 {
                m[r][s] += w * f[r] * f[s];
            }
        }
    }
    m
}

fn quad(m: &[[f64; 2]; 2], e: [f64; 2]) -> f64 {
    m[0][0] * e[0] * e[0] + 2.0 * m[0][1] * e[0] * e[1] + m[1][1] * e[1] * e[1]
}

fn validate(funcs: &LinearFunctionSet, prior: &PriorBox, mu_list: &[u64], settings: &MseSettings) -> Result<()> {
    if funcs.num_params() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: funcs.num_params(),
        });
    }
    if prior.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: prior.dim(),
        });
    }
    if settings.mc_samples == 0 {
        return Err(Error::invalid("mc_samples", "must be at least 1"));
    }
    if settings.offset.iter().any(|o| !o.is_finite()) {
        return Err(Error::invalid("offset", "must be finite"));
    }
    if mu_list.is_empty() {
        return Err(Error::invalid("mu_list", "must not be empty"));
    }
    if mu_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("mu_list", "must be strictly ascending"));
    }
    if settings.workers == Some(0) {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    Ok(())
}

/// Losses of every Monte Carlo draw, `per_sample[s][k]` for draw `s` at
/// `mu_list[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSamples {
    pub mu_list: Vec<u64>,
    pub per_sample: Vec<Vec<f64>>,
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> MseEstimate {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let var = if n > 1 {
        values.map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    MseEstimate {
        mse: mean,
        stderr: (var / nf).sqrt(),
    }
}

impl LossSamples {
    pub fn estimate(&self, k: usize) -> MseEstimate {
        mean_and_stderr(self.per_sample.iter().map(|l| l[k]), self.per_sample.len())
    }

    pub fn estimates(&self) -> Vec<MseEstimate> {
        (0..self.mu_list.len()).map(|k| self.estimate(k)).collect()
    }

    /// Mean of `self − other` at `mu_list[k]` with the standard error of the
    /// paired differences. Both runs must share the seed, sample count and
    /// trial grid, so draw `s` of each uses the same generator stream.
    pub fn paired_difference(&self, other: &LossSamples, k: usize) -> Result<MseEstimate> {
        if self.mu_list != other.mu_list || self.per_sample.len() != other.per_sample.len() {
            return Err(Error::invalid("samples", "runs differ in trial grid or sample count"));
        }
        Ok(mean_and_stderr(
            self.per_sample.iter().zip(&other.per_sample).map(|(a, b)| a[k] - b[k]),
            self.per_sample.len(),
        ))
    }
}

/// Per-draw losses of the posterior-mean estimators at every `μ` in
/// `mu_list`.
///
/// Each Monte Carlo draw uses its own generator stream, draws `θ'` from the
/// prior and extends one record across the ascending list, so neighbouring
/// points share randomness and the result does not depend on thread count.
pub fn mse_samples(
    gamma: f64,
    funcs: &LinearFunctionSet,
    prior: &PriorBox,
    mu_list: &[u64],
    settings: &MseSettings,
) -> Result<LossSamples> {
    validate(funcs, prior, mu_list, settings)?;
    let table = LikelihoodTable::new(gamma, prior, settings.resolution)?;
    let m = loss_matrix(funcs);
    let delta = settings.offset;

    let run_one = |sample: usize| -> Result<Vec<f64>> {
        let mut rng = stream_rng(settings.seed, sample as u64 + 1);
        let t = prior.sample(&mut rng);
        let truth = [t[0], t[1]];
        let sampler = OutcomeSampler::new(truth, gamma);
        let mut counts = [0u64; 4];
        let mut drawn = 0u64;
        let mut scratch = Vec::new();
        let mut losses = Vec::with_capacity(mu_list.len());
        for &mu in mu_list {
            while drawn < mu {
                counts[sampler.draw(&mut rng).index()] += 1;
                drawn += 1;
            }
            let mom = table.moments(&counts, &mut scratch)?;
            let loss = match settings.estimator {
                MseEstimator::PosteriorVariance => {
                    let c = mom.covariance;
                    m[0][0] * c[0][0] + 2.0 * m[0][1] * c[0][1] + m[1][1] * c[1][1] + quad(&m, delta)
                }
                MseEstimator::SquaredError => quad(
                    &m,
                    [
                        mom.mean[0] + delta[0] - truth[0],
                        mom.mean[1] + delta[1] - truth[1],
                    ],
                ),
            };
            losses.push(loss);
        }
        Ok(losses)
    };

    let run_all = || -> Result<Vec<Vec<f64>>> { (0..settings.mc_samples).into_par_iter().map(run_one).collect() };
    let per_sample = match settings.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(run_all)?,
        None => run_all()?,
    };

    Ok(LossSamples {
        mu_list: mu_list.to_vec(),
        per_sample,
    })
}

/// Bayesian weighted MSE of the posterior-mean estimators at every `μ` in
/// `mu_list`, with Monte Carlo standard errors.
pub fn bayes_mse_list(
    gamma: f64,
    funcs: &LinearFunctionSet,
    prior: &PriorBox,
    mu_list: &[u64],
    settings: &MseSettings,
) -> Result<Vec<MseEstimate>> {
    Ok(mse_samples(gamma, funcs, prior, mu_list, settings)?.estimates())
}

/// Bayesian weighted MSE at a single `μ`.
pub fn bayes_mse(
    gamma: f64,
    funcs: &LinearFunctionSet,
    prior: &PriorBox,
    mu: u64,
    settings: &MseSettings,
) -> Result<MseEstimate> {
    Ok(bayes_mse_list(gamma, funcs, prior, &[mu], settings)?[0])
}

/// Quantum Cramér–Rao bound of the two-sensor γ-probe; `None` when its
/// quantum Fisher information is singular.
pub fn gamma_probe_crb(gamma: f64, funcs: &LinearFunctionSet, mu: u64) -> Result<Option<f64>> {
    let fq = qfi_pure(&PureState::gamma_state_2(gamma)?);
    if !fq.invertible {
        return Ok(None);
    }
    crb_general(funcs, &fq, mu).map(Some)
}

/// MSE curve over `mu_list` with the matching bound and `μ_τ`.
pub fn uncertainty_curve(
    gamma: f64,
    funcs: &LinearFunctionSet,
    prior: &PriorBox,
    mu_list: &[u64],
    settings: &MseSettings,
    threshold: f64,
) -> Result<UncertaintyCurve> {
    check_threshold(threshold)?;
    let samples = mse_samples(gamma, funcs, prior, mu_list, settings)?;
    curve_from_samples(gamma, funcs, &samples, settings, threshold)
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::invalid("threshold", "must be positive"));
    }
    Ok(())
}

/// Summarises Monte Carlo losses from [`mse_samples`] into a curve.
pub fn curve_from_samples(
    gamma: f64,
    funcs: &LinearFunctionSet,
    samples: &LossSamples,
    settings: &MseSettings,
    threshold: f64,
) -> Result<UncertaintyCurve> {
    check_threshold(threshold)?;
    let unit = gamma_probe_crb(gamma, funcs, 1)?;
    let entries = samples
        .mu_list
        .iter()
        .zip(samples.estimates())
        .map(|(&mu, e)| {
            let crb = if mu == 0 { None } else { unit.map(|c| c / mu as f64) };
            CurveEntry {
                mu,
                mse: e.mse,
                mc_stderr: e.stderr,
                crb,
                ratio: crb.map(|c| (e.mse - c) / c),
            }
        })
        .collect();
    let mut curve = UncertaintyCurve {
        gamma,
        entries,
        mc_samples: samples.per_sample.len(),
        resolution: settings.resolution,
        seed: settings.seed,
        threshold,
        mu_tau: None,
    };
    curve.mu_tau = mu_tau(&curve, threshold);
    Ok(curve)
}

/// Smallest listed `μ` from which curve `a` lies below curve `b` at every
/// larger listed `μ`. Both curves must share the trial grid.
pub fn sustained_crossing(a: &UncertaintyCurve, b: &UncertaintyCurve) -> Result<Option<u64>> {
    if a.mus() != b.mus() {
        return Err(Error::invalid("curves", "trial grids differ"));
    }
    let below: Vec<bool> = a.entries.iter().zip(&b.entries).map(|(x, y)| x.mse < y.mse).collect();
    let start = below.iter().rposition(|x| !x).map_or(0, |i| i + 1);
    Ok(a.entries.get(start).map(|e| e.mu))
}

/// Pool-adjacent-violators fit of a non-increasing sequence.
pub fn isotonic_decreasing(values: &[f64]) -> Vec<f64> {
    // Blocks of (sum, count).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 >= s1 / n1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(s, n)| std::iter::repeat_n(s / n as f64, n))
        .collect()
}

/// Smallest listed `μ` from which the relative error `|mse − crb| / crb`
/// stays at or below `threshold`.
///
/// The relative error is smoothed by a non-increasing isotonic fit before
/// thresholding, so a single noisy dip does not count as convergence.
/// Returns `None` when the bound is absent or the threshold is never met.
pub fn mu_tau(curve: &UncertaintyCurve, threshold: f64) -> Option<u64> {
    let pts: Vec<(u64, f64)> = curve
        .entries
        .iter()
        .filter(|e| e.mu > 0)
        .map(|e| e.ratio.map(|r| (e.mu, r.abs())))
        .collect::<Option<_>>()?;
    let fit = isotonic_decreasing(&pts.iter().map(|p| p.1).collect::<Vec<_>>());
    fit.iter().position(|&r| r <= threshold).map(|i| pts[i].0)
}

/// Prior variance of the functions, `Σ_j w_j f_jᵀ diag(W²/12) f_j`: the
/// Bayesian error with no data.
pub fn prior_function_variance(funcs: &LinearFunctionSet, prior: &PriorBox) -> Result<f64> {
    if funcs.num_params() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            actual: funcs.num_params(),
        });
    }
    let sigma = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(prior.variances()));
    Ok(funcs.weighted_trace(&sigma))
}
