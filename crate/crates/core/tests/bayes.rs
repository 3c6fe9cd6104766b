use std::f64::consts::FRAC_PI_2;

use sensornet::bayes::{
    bayes_mse_list, gamma_probe_crb, mse_samples, posterior, simulate_record, MseEstimator, MseSettings,
};
use sensornet::{LinearFunctionSet, PriorBox};

fn settings(mc: usize, seed: u64) -> MseSettings {
    MseSettings {
        mc_samples: mc,
        seed,
        ..MseSettings::default()
    }
}

#[test]
fn credible_area_shrinks_with_trials() {
    let prior = PriorBox::quarter_period_2d();
    let truth = [0.7, 0.9];
    for seed in 0..20 {
        let areas: Vec<f64> = [0usize, 25, 400]
            .iter()
            .map(|&mu| {
                let rec = simulate_record(0.531, truth, mu, seed);
                posterior(&rec, &prior, 100).unwrap().credible_area(0.9)
            })
            .collect();
        assert!(areas[1] < areas[0] && areas[2] < areas[1], "seed {seed}: {areas:?}");
    }
}

#[test]
fn posterior_mean_beats_shifted_estimates() {
    let f = LinearFunctionSet::two_sensor_example();
    let prior = PriorBox::quarter_period_2d();
    let mus = [50u64];
    let base = MseSettings {
        estimator: MseEstimator::SquaredError,
        ..settings(400, 3)
    };
    let optimal = mse_samples(0.531, &f, &prior, &mus, &base).unwrap();
    for offset in [[0.05, 0.0], [-0.05, 0.0], [0.0, 0.05], [0.0, -0.05], [0.05, 0.05]] {
        let shifted = mse_samples(0.531, &f, &prior, &mus, &MseSettings { offset, ..base.clone() }).unwrap();
        let diff = shifted.paired_difference(&optimal, 0).unwrap();
        assert!(diff.mse > -3.0 * diff.stderr, "offset {offset:?}: {diff:?}");
    }
}

#[test]
fn error_falls_with_trials() {
    let f = LinearFunctionSet::two_sensor_example();
    let prior = PriorBox::quarter_period_2d();
    let mus = [1u64, 10, 100, 1000];
    let est = bayes_mse_list(0.531, &f, &prior, &mus, &settings(200, 5)).unwrap();
    assert!(est.windows(2).all(|w| w[1].mse < w[0].mse), "{est:?}");
}

/// Ordering against the asymptotic bound. Few trials leave the prior doing
/// most of the work, and the Bayesian error sits well below the local bound;
/// by a thousand trials the two agree to a few percent.
#[test]
fn bound_reached_from_below() {
    let f = LinearFunctionSet::two_sensor_example();
    let prior = PriorBox::quarter_period_2d();
    let mus = [1u64, 1000];
    let est = bayes_mse_list(0.531, &f, &prior, &mus, &settings(400, 11)).unwrap();
    let crb: Vec<f64> = mus.iter().map(|&m| gamma_probe_crb(0.531, &f, m).unwrap().unwrap()).collect();

    assert!(est[0].mse + 3.0 * est[0].stderr < crb[0], "{:?} vs {}", est[0], crb[0]);
    let r = (est[1].mse - crb[1]) / crb[1];
    assert!(r.abs() < 0.1, "relative gap {r}");
}

#[test]
fn empty_record_posterior_has_prior_moments() {
    let prior = PriorBox::quarter_period_2d();
    let post = posterior(&simulate_record(0.7, [0.3, 0.4], 0, 0), &prior, 200).unwrap();
    let m = post.mean();
    let c = post.covariance();
    let var = FRAC_PI_2 * FRAC_PI_2 / 12.0;
    for i in 0..2 {
        assert!((m[i] - prior.center()[i]).abs() < 1e-12);
        // Midpoint rule on a uniform density: w²/12 (1 - 1/g²).
        assert!((c[i][i] - var * (1.0 - 1.0 / 200f64.powi(2))).abs() < 1e-12);
    }
    assert!(c[0][1].abs() < 1e-12);
}
