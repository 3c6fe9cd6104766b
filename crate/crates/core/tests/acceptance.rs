//! End-to-end checks of the published numbers. Runs as a plain binary
//! (`harness = false`) so every criterion prints one line; exits non-zero if
//! any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sensornet::bayes::{
    bayes_mse, curve_from_samples, default_mu_list, likelihood_single, mse_samples, outcome_distribution,
    posterior, posterior_landscape, simulate_record, sustained_crossing, LossSamples, MseSettings, Outcome,
    DEFAULT_THRESHOLD,
};
use sensornet::crb::{balanced_gamma, gamma_opt, h_factor, h_slope, j_opt, verify_jopt_is_minimum};
use sensornet::fisher::{phase_grid, povm_fisher_gap, qfi_inverse_closed_form, qfi_pure, qfi_sensor_symmetric};
use sensornet::functions::{x_eigendecomposition, x_matrix};
use sensornet::network::{gamma_state_strength, PRODUCT_TOLERANCE};
use sensornet::{LinearFunctionSet, PriorBox, PureState, UncertaintyCurve};

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn example_geometry() -> f64 {
    LinearFunctionSet::two_sensor_example().geometry().unwrap().geometry
}

fn criterion_1() -> Verdict {
    let r = LinearFunctionSet::two_sensor_example().geometry().unwrap();
    let closed = (8.0 + 10.0 * PI + 2.0 * PI * PI) / (20.0 + 5.0 * PI * PI);
    let pass = (r.geometry - closed).abs() <= 1e-9 && (r.normalization - 1.0).abs() <= 1e-12;
    check(
        pass,
        format!("G = {:.12} (closed form {closed:.12}), N = {:.15}", r.geometry, r.normalization),
    )
}

fn criterion_2() -> Verdict {
    let g = example_geometry();
    let gamma = gamma_opt(g).unwrap();
    let j = j_opt(g, 2).unwrap();
    check(
        (gamma - 0.531).abs() <= 1e-3 && (j - 0.561).abs() <= 1e-3,
        format!("gamma_opt = {gamma:.6}, j_opt = {j:.6}"),
    )
}

fn criterion_3() -> Verdict {
    let roots = balanced_gamma(1.0, 0.531, example_geometry()).unwrap();
    let pass = roots.len() == 2 && (roots[0] - 0.334).abs() <= 1e-3 && (roots[1] - 0.842).abs() <= 1e-3;
    check(pass, format!("roots = {roots:?}"))
}

fn criterion_4() -> Verdict {
    let grid = phase_grid(10, 0.0, FRAC_PI_2);
    let mut worst = 0.0f64;
    for gamma in [0.2, 0.334, 0.531, 1.0, 2.0] {
        worst = worst.max(povm_fisher_gap(gamma, &grid).unwrap());
    }
    check(worst <= 1e-9, format!("max |F - F_q| = {worst:.3e}"))
}

fn criterion_5() -> Verdict {
    let f = LinearFunctionSet::two_sensor_example();
    let prior = PriorBox::quarter_period_2d();
    let settings = MseSettings {
        mc_samples: 5000,
        resolution: 200,
        ..MseSettings::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (gamma, target) in [(0.334, 0.158), (0.842, 0.173)] {
        let e = bayes_mse(gamma, &f, &prior, 1, &settings).unwrap();
        let gap = (e.mse - target).abs();
        // Targets carry three decimals, so the Monte Carlo check is against
        // the rounding interval around them.
        let outside = (gap - 5e-4).max(0.0);
        pass &= gap <= 0.005 && outside <= 3.0 * e.stderr;
        parts.push(format!("gamma {gamma}: {:.5} ± {:.5} (target {target})", e.mse, e.stderr));
    }
    check(pass, parts.join("; "))
}

/// Shared Monte Carlo run for the curve criteria: all four strategies on one
/// seed and trial grid, so draws pair up across strategies.
struct CurveRun {
    gammas: Vec<f64>,
    samples: Vec<LossSamples>,
    curves: Vec<UncertaintyCurve>,
}

/// Draws behind the `μ_τ` estimates. The relative error crosses 5% on a
/// shallow slope, so its standard error has to stay well under the change
/// across one grid step; 2000 draws leave it near 0.007 and the crossing
/// wanders over several grid points.
const TAU_MC_SAMPLES: usize = 16_000;

impl CurveRun {
    fn new(mc_samples: usize, gammas: &[f64]) -> Self {
        let f = LinearFunctionSet::two_sensor_example();
        let prior = PriorBox::quarter_period_2d();
        let settings = MseSettings {
            mc_samples,
            resolution: 200,
            seed: 0,
            ..MseSettings::default()
        };
        let mus = default_mu_list();
        let samples: Vec<LossSamples> = gammas
            .iter()
            .map(|&g| mse_samples(g, &f, &prior, &mus, &settings).unwrap())
            .collect();
        let curves = gammas
            .iter()
            .zip(&samples)
            .map(|(&g, s)| curve_from_samples(g, &f, s, &settings, DEFAULT_THRESHOLD).unwrap())
            .collect();
        CurveRun {
            gammas: gammas.to_vec(),
            samples,
            curves,
        }
    }

    fn index(&self, gamma: f64) -> usize {
        self.gammas.iter().position(|&g| g == gamma).unwrap()
    }
}

fn criterion_6(run: &CurveRun) -> Verdict {
    let a = &run.curves[run.index(0.531)];
    let b = &run.curves[run.index(0.334)];
    match sustained_crossing(a, b).unwrap() {
        Some(mu) => check((30..=50).contains(&mu), format!("curves cross at mu = {mu}")),
        None => check(false, "no sustained crossing"),
    }
}

fn criterion_7(run: &CurveRun, fine: &CurveRun) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (gamma, expected) in [(1.0, 458.0), (0.531, 43.0), (0.334, 537.0)] {
        let got = fine.curves[fine.index(gamma)].mu_tau;
        let ok = got.is_some_and(|m| (m as f64 - expected).abs() <= 0.2 * expected);
        pass &= ok;
        parts.push(format!(
            "gamma {gamma}: {got:?} (expected {expected} ± 20%; {:?} at {} draws)",
            run.curves[run.index(gamma)].mu_tau,
            run.curves[0].mc_samples
        ));
    }
    let bell = &run.curves[run.index(0.0)];
    let no_limit = bell.entries.iter().all(|e| e.crb.is_none()) && bell.mu_tau.is_none();
    pass &= no_limit;
    parts.push(format!(
        "gamma 0: {}",
        if no_limit { "no asymptotic limit" } else { "unexpected bound" }
    ));
    check(pass, parts.join("; "))
}

fn criterion_8(run: &CurveRun) -> Verdict {
    let mut failures = Vec::new();
    let mut check_best = |best: usize, k: usize, mu: u64| {
        for other in 0..run.gammas.len() {
            if other == best {
                continue;
            }
            let d = run.samples[other].paired_difference(&run.samples[best], k).unwrap();
            if d.mse <= 3.0 * d.stderr {
                failures.push(format!(
                    "mu {mu}: gamma {} vs {} margin {:.2e} ± {:.2e}",
                    run.gammas[best], run.gammas[other], d.mse, d.stderr
                ));
            }
        }
    };
    let mus = run.curves[0].mus();
    let (mut early, mut late) = (0, 0);
    for (k, &mu) in mus.iter().enumerate() {
        if (1..=8).contains(&mu) {
            early += 1;
            check_best(run.index(0.0), k, mu);
        } else if mu >= 60 {
            late += 1;
            check_best(run.index(0.531), k, mu);
        }
    }
    check(
        failures.is_empty() && early > 0 && late > 0,
        if failures.is_empty() {
            format!("{early} early and {late} late grid points ordered")
        } else {
            failures.join("; ")
        },
    )
}

// Quick deterministic versions of the property suites.
fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |what: &str, ok: bool| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // Closed-form information matrix against the state-vector route.
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(2..=8usize);
        let gamma: f64 = rng.random_range(-4.0..4.0);
        let direct = qfi_pure(&PureState::gamma_state(gamma, d).unwrap());
        let closed = qfi_sensor_symmetric(0.25, gamma_state_strength(gamma, d), d).unwrap();
        worst = worst.max((&direct.matrix - &closed.matrix).abs().max());
    }
    fail("qfi closed form", worst <= 1e-10);

    // Inverse identity.
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(2..=10usize);
        let lo = 1.0 / (1.0 - d as f64);
        let j = lo + rng.random_range(0.01..0.99) * (1.0 - lo);
        let v: f64 = rng.random_range(0.01..0.25);
        let f = qfi_sensor_symmetric(v, j, d).unwrap().matrix;
        let inv = qfi_inverse_closed_form(v, j, d).unwrap();
        worst = worst.max((&f * inv - DMatrix::identity(d, d)).abs().max());
    }
    fail("inverse identity", worst <= 1e-10);

    // Geometry bounds and saturation.
    let mut ok = true;
    for _ in 0..100 {
        let d = rng.random_range(2..=6usize);
        let l = rng.random_range(1..=4usize);
        let v = DMatrix::from_fn(d, l, |_, _| rng.random_range(-3.0..3.0));
        let g = LinearFunctionSet::uniform(v.clone()).unwrap().geometry().unwrap().geometry;
        ok &= g >= -1.0 - 1e-12 && g <= d as f64 - 1.0 + 1e-12;

        let mut centred = v.clone();
        for mut c in centred.column_iter_mut() {
            let m = c.mean();
            c.add_scalar_mut(-m);
        }
        if centred.column_iter().all(|c| c.norm() > 1e-6) {
            let g = LinearFunctionSet::uniform(centred).unwrap().geometry().unwrap().geometry;
            ok &= (g + 1.0).abs() < 1e-10;
        }
        let along = DMatrix::from_fn(d, l, |_, j| v[(0, j)] + 3.5);
        let g = LinearFunctionSet::uniform(along).unwrap().geometry().unwrap().geometry;
        ok &= (g - (d as f64 - 1.0)).abs() < 1e-10;
    }
    fail("geometry bounds", ok);

    // j_opt monotone, minimal and with the right slope signs.
    for d in [2usize, 3, 5, 10] {
        let gs: Vec<f64> = (1..1000).map(|i| -1.0 + d as f64 * i as f64 / 1000.0).collect();
        let js: Vec<f64> = gs.iter().map(|&g| j_opt(g, d).unwrap()).collect();
        fail(&format!("j_opt monotone d={d}"), js.windows(2).all(|w| w[1] > w[0]));

        let lo = 1.0 / (1.0 - d as f64);
        let mut optimal = true;
        let mut slopes = true;
        for (&g, &j) in gs.iter().zip(&js).step_by(10) {
            let best = h_factor(j, g, d).unwrap();
            for t in 1..100 {
                let other = lo + (1.0 - lo) * t as f64 / 100.0;
                optimal &= best <= h_factor(other, g, d).unwrap() * (1.0 + 1e-12);
            }
            let eps = 1e-4 * (1.0 - lo);
            slopes &= verify_jopt_is_minimum(g, d);
            slopes &= h_slope(lo + eps, g, d).unwrap() < 0.0 && h_slope(1.0 - eps, g, d).unwrap() > 0.0;
        }
        fail(&format!("j_opt optimal d={d}"), optimal);
        fail(&format!("slope signs d={d}"), slopes);
    }

    // Eigendecomposition of the all-pairs matrix.
    let mut worst = 0.0f64;
    for d in 2..=10 {
        let (vals, u) = x_eigendecomposition(d).unwrap();
        let x = x_matrix(d);
        worst = worst.max((&x * &u - &u * DMatrix::from_diagonal(&vals)).abs().max());
        worst = worst.max((u.transpose() * &u - DMatrix::identity(d, d)).abs().max());
        let mut expected = DVector::from_element(d, -1.0);
        expected[0] = d as f64 - 1.0;
        worst = worst.max((vals - expected).abs().max());
    }
    fail("eigendecomposition", worst <= 1e-10);

    // Likelihood completeness and periodicity.
    let mut ok = true;
    for _ in 0..1000 {
        let gamma = rng.random_range(-5.0..5.0);
        let t = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        ok &= (outcome_distribution(t, gamma).iter().sum::<f64>() - 1.0).abs() < 1e-12;
        let shifted = [t[0] + 2.0 * PI * rng.random_range(-3..=3) as f64, t[1] - 2.0 * PI];
        for o in Outcome::ALL {
            ok &= (likelihood_single(o, t, gamma) - likelihood_single(o, shifted, gamma)).abs() < 1e-12;
        }
    }
    fail("likelihood", ok);

    // Three-sensor probes at γ = ±1.
    fail(
        "three-sensor product probe",
        PureState::gamma_state(1.0, 3).unwrap().is_product_state(PRODUCT_TOLERANCE),
    );
    fail(
        "three-sensor entangled probe",
        !PureState::gamma_state(-1.0, 3).unwrap().is_product_state(PRODUCT_TOLERANCE),
    );

    if failures.is_empty() {
        check(true, "all suites hold")
    } else {
        check(false, failures.join(", "))
    }
}

fn criterion_10() -> Verdict {
    let truth = [1.0, 2.0];
    let (mu, res, seed) = (100usize, 200usize, 0u64);
    let mut pass = true;
    let mut parts = Vec::new();
    for gamma in [1.0, 0.9, 0.531, 0.334] {
        let full = posterior_landscape(gamma, truth, mu, res, seed).unwrap().peak_count(true);
        let record = simulate_record(gamma, truth, mu, seed);
        let window = PriorBox::new(truth.to_vec(), vec![PI, PI]).unwrap();
        let local = posterior(&record, &window, res).unwrap().peak_count(false);
        pass &= full >= 2 && local == 1;
        parts.push(format!("gamma {gamma}: {full} peaks, {local} near truth"));
    }

    let ridge = posterior_landscape(0.0, truth, mu, res, seed).unwrap();
    let peaks = ridge.peaks(true);
    let step = ridge.step();
    let sums: Vec<f64> = peaks.iter().map(|p| (p.theta[0] + p.theta[1]).rem_euclid(PI)).collect();
    let spread = sums
        .iter()
        .map(|s| {
            let d = (s - sums[0]).rem_euclid(PI);
            d.min(PI - d)
        })
        .fold(0.0, f64::max);
    let ridge_ok = peaks.len() > 1 && spread <= 2.0 * (step[0] + step[1]);
    pass &= ridge_ok;
    parts.push(format!(
        "gamma 0: {} ridge cells, sum spread {spread:.4} rad",
        peaks.len()
    ));
    check(pass, parts.join("; "))
}

fn report(n: usize, started: Instant, o: Verdict) -> bool {
    println!(
        "criterion {n}: {} ({:.1} s) {}",
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        o.detail
    );
    o.pass
}

fn main() -> ExitCode {
    let mut all = true;
    let fast: [(usize, fn() -> Verdict); 5] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (5, criterion_5)];
    for (n, f) in fast {
        let t = Instant::now();
        all &= report(n, t, f());
    }

    let t = Instant::now();
    let run = CurveRun::new(2000, &[1.0, 0.531, 0.334, 0.0]);
    println!("2000-draw curves computed in {:.1} s", t.elapsed().as_secs_f64());
    let t = Instant::now();
    all &= report(6, t, criterion_6(&run));
    all &= report(8, t, criterion_8(&run));

    let t = Instant::now();
    let fine = CurveRun::new(TAU_MC_SAMPLES, &[1.0, 0.531, 0.334]);
    all &= report(7, t, criterion_7(&run, &fine));

    for (n, f) in [(9, criterion_9 as fn() -> Verdict), (10, criterion_10)] {
        let t = Instant::now();
        all &= report(n, t, f());
    }

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
