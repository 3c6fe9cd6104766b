use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use sensornet::bayes::{likelihood_single, outcome_distribution, Outcome};
use sensornet::crb::{balanced_gamma, crb_general, crb_sensor_symmetric, eps_qbit, gamma_opt, h_factor, h_slope, j_opt};
use sensornet::fisher::{classical_fim_povm2, qfi_inverse_closed_form, qfi_pure, qfi_sensor_symmetric};
use sensornet::functions::x_matrix;
use sensornet::network::{gamma_family_strength_range, gamma_state_strength, PRODUCT_TOLERANCE};
use sensornet::{LinearFunctionSet, PureState};

const TAU: f64 = std::f64::consts::TAU;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn random_state(d: usize) -> impl Strategy<Value = PureState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << d).prop_filter_map("non-zero", move |re_im| {
        let amps: Vec<Complex64> = re_im.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        (n > 1e-3).then(|| PureState::new(d, amps.iter().map(|a| a / n).collect()).unwrap())
    })
}

/// Random function set: `d × l` coefficients, offsets, weights summing to one.
fn random_functions(d: usize, l: usize) -> impl Strategy<Value = LinearFunctionSet> {
    (
        prop::collection::vec(-3.0f64..3.0, d * l),
        prop::collection::vec(-5.0f64..5.0, l),
        prop::collection::vec(0.05f64..1.0, l),
    )
        .prop_filter_map("non-zero", move |(v, a, w)| {
            let total: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / total).collect();
            LinearFunctionSet::new(
                DMatrix::from_column_slice(d, l, &v),
                DVector::from_vec(a),
                DVector::from_vec(w),
            )
            .ok()
        })
}

fn dims_and_functions() -> impl Strategy<Value = (usize, LinearFunctionSet)> {
    (2usize..=6, 1usize..=4).prop_flat_map(|(d, l)| (Just(d), random_functions(d, l)))
}

/// Valid `(d, J)` strictly inside the invertible interval.
fn dim_and_strength() -> impl Strategy<Value = (usize, f64)> {
    (2usize..=10).prop_flat_map(|d| {
        let lo = 1.0 / (1.0 - d as f64);
        (Just(d), (lo + 1e-3)..(1.0 - 1e-3))
    })
}

// ------------------------------------------------------------ network

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn encoding_preserves_norm(
        (d, state, theta) in (1usize..=5).prop_flat_map(|d| (Just(d), random_state(d), prop::collection::vec(-10.0f64..10.0, d)))
    ) {
        let enc = state.apply_encoding(&theta).unwrap();
        prop_assert!((enc.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(enc.num_qubits(), d);
    }

    #[test]
    fn full_period_encoding_leaves_probabilities(
        (d, state) in (1usize..=4).prop_flat_map(|d| (Just(d), random_state(d))),
        povm in random_state(1),
    ) {
        let enc = state.apply_encoding(&vec![TAU; d]).unwrap();
        // Global phase only: every amplitude ratio is ±1.
        let ratios: Vec<Complex64> = state.amplitudes().iter().zip(enc.amplitudes())
            .filter(|(a, _)| a.norm() > 1e-9).map(|(a, b)| b / a).collect();
        for r in &ratios {
            prop_assert!((r - ratios[0]).norm() < 1e-12);
            prop_assert!((r.re.abs() - 1.0).abs() < 1e-12 && r.im.abs() < 1e-12);
        }
        // Projection of the first qubit onto a random pure state is unchanged.
        let u = povm.amplitudes();
        let project = |s: &PureState| -> f64 {
            let half = 1 << (d - 1);
            (0..half).map(|rest| {
                let a = u[0].conj() * s.amplitudes()[rest] + u[1].conj() * s.amplitudes()[half + rest];
                a.norm_sqr()
            }).sum()
        };
        prop_assert!((project(&state) - project(&enc)).abs() < 1e-12);
    }

    #[test]
    fn gamma_family_is_sensor_symmetric(gamma in -5.0f64..5.0, d in 2usize..=6) {
        let p = PureState::gamma_state(gamma, d).unwrap().correlation_profile();
        prop_assert!(p.sensor_symmetric);
        prop_assert!((p.common_v.unwrap() - 0.25).abs() < 1e-10);
        let oracle = (1.0 - gamma * gamma) / (1.0 + ((1u64 << (d - 1)) - 1) as f64 * gamma * gamma);
        prop_assert!((p.common_j.unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn gamma_family_strength_intervals(gamma in -20.0f64..20.0, d in 2usize..=8) {
        let j = gamma_state_strength(gamma, d);
        let (lo, _) = gamma_family_strength_range(d);
        if gamma.abs() <= 1.0 {
            prop_assert!((0.0..=1.0).contains(&j));
        } else {
            prop_assert!(j < 0.0 && j > lo);
        }
    }

    #[test]
    fn strengths_are_bounded((d, state) in (2usize..=4).prop_flat_map(|d| (Just(d), random_state(d)))) {
        let p = state.correlation_profile();
        for i in 0..d {
            for k in 0..d {
                if let Some(j) = p.strengths.get(i, k) {
                    prop_assert!(j.abs() <= 1.0 + 1e-12);
                    let c = p.covariances[i][k] / (p.variances[i] * p.variances[k]).sqrt();
                    prop_assert!((j - c).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tensor_products_are_product_states(
        factors in prop::collection::vec(((-1.0f64..1.0), (-1.0f64..1.0), (-1.0f64..1.0), (-1.0f64..1.0)), 1..=5)
    ) {
        let f: Vec<[Complex64; 2]> = factors.iter()
            .filter(|(a, b, c, e)| a * a + b * b + c * c + e * e > 1e-4)
            .map(|&(a, b, c, e)| [Complex64::new(a, b), Complex64::new(c, e)])
            .collect();
        prop_assume!(!f.is_empty());
        let s = PureState::tensor_product(&f).unwrap();
        prop_assert!(s.is_product_state(PRODUCT_TOLERANCE));
    }

    /// 1 − purity of one qubit of the two-sensor probe is
    /// `(1 − γ²)² / [2 (1 + γ²)²]`, so the probe is resolved as entangled once
    /// `|γ² − 1|` exceeds a few `√tol`.
    #[test]
    fn two_sensor_probe_entangled_away_from_unit_gamma(gamma in -10.0f64..10.0) {
        let tol = PRODUCT_TOLERANCE;
        prop_assume!((gamma * gamma - 1.0).abs() > 10.0 * tol.sqrt());
        prop_assert!(!PureState::gamma_state_2(gamma).unwrap().is_product_state(tol));
    }
}

#[test]
fn two_sensor_probe_product_exactly_at_unit_gamma() {
    for g in [1.0, -1.0] {
        assert!(PureState::gamma_state_2(g).unwrap().is_product_state(PRODUCT_TOLERANCE));
    }
}

// ------------------------------------------------------------ functions

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn geometry_within_bounds((d, f) in dims_and_functions()) {
        let g = f.geometry().unwrap().geometry;
        prop_assert!(g >= -1.0 - 1e-12 && g <= d as f64 - 1.0 + 1e-12, "G = {g}");
    }

    #[test]
    fn matrix_and_angle_forms_agree((d, f) in dims_and_functions()) {
        let r = f.geometry().unwrap();
        let v = f.coefficients();
        let x = x_matrix(d);
        let matrix_form: f64 = v.column_iter().zip(f.weights().iter())
            .map(|(c, w)| w * (c.transpose() * &x * c)[(0, 0)]).sum::<f64>() / r.normalization;
        let angle_form: f64 = v.column_iter().zip(f.weights().iter()).zip(&r.angles)
            .map(|((c, w), phi)| match phi {
                Some(phi) => w * c.norm_squared() * (d as f64 * phi.cos().powi(2) - 1.0),
                None => 0.0,
            }).sum::<f64>() / r.normalization;
        prop_assert!((matrix_form - r.geometry).abs() < 1e-10);
        prop_assert!((angle_form - r.geometry).abs() < 1e-10);
    }

    #[test]
    fn offsets_do_not_matter((_d, f) in dims_and_functions(), shift in -10.0f64..10.0) {
        let shifted = LinearFunctionSet::new(
            f.coefficients().clone(),
            f.offsets().add_scalar(shift),
            f.weights().clone(),
        ).unwrap();
        let (a, b) = (f.geometry().unwrap(), shifted.geometry().unwrap());
        prop_assert_eq!(a.normalization, b.normalization);
        prop_assert_eq!(a.geometry, b.geometry);
    }

    #[test]
    fn functions_orthogonal_to_ones_saturate_lower_bound(
        (d, raw) in (2usize..=6).prop_flat_map(|d| (Just(d), prop::collection::vec(-2.0f64..2.0, d * 3)))
    ) {
        let mut v = DMatrix::from_column_slice(d, 3, &raw);
        for mut c in v.column_iter_mut() {
            let mean = c.sum() / d as f64;
            c.add_scalar_mut(-mean);
        }
        prop_assume!(v.column_iter().all(|c| c.norm() > 1e-3));
        let f = LinearFunctionSet::uniform(v).unwrap();
        prop_assert!((f.geometry().unwrap().geometry + 1.0).abs() < 1e-10);
    }

    #[test]
    fn functions_along_ones_saturate_upper_bound(
        d in 2usize..=8, scales in prop::collection::vec(prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], 1..=4)
    ) {
        let l = scales.len();
        let v = DMatrix::from_fn(d, l, |_, j| scales[j]);
        let f = LinearFunctionSet::uniform(v).unwrap();
        prop_assert!((f.geometry().unwrap().geometry - (d as f64 - 1.0)).abs() < 1e-10);
    }
}

// ------------------------------------------------------------ fisher

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn closed_form_matches_direct_qfi(gamma in -4.0f64..4.0, d in 2usize..=8) {
        let direct = qfi_pure(&PureState::gamma_state(gamma, d).unwrap());
        let closed = qfi_sensor_symmetric(0.25, gamma_state_strength(gamma, d), d).unwrap();
        prop_assert!((&direct.matrix - &closed.matrix).abs().max() < 1e-10);
    }

    #[test]
    fn closed_form_inverse((d, j) in dim_and_strength(), v in 0.01f64..0.25) {
        let f = qfi_sensor_symmetric(v, j, d).unwrap();
        let inv = qfi_inverse_closed_form(v, j, d).unwrap();
        let residual = (&f.matrix * &inv - DMatrix::identity(d, d)).abs().max();
        prop_assert!(residual < 1e-10, "residual {residual}");
        let dense = f.matrix.clone().try_inverse().unwrap();
        prop_assert!((&dense - &inv).abs().max() < 1e-10 * dense.abs().max().max(1.0));
    }

    #[test]
    fn characteristic_polynomial_vanishes_at_closed_form_eigenvalues((d, j) in dim_and_strength(), v in 0.01f64..0.25) {
        let f = qfi_sensor_symmetric(v, j, d).unwrap();
        let l1 = 4.0 * v * (1.0 + (d as f64 - 1.0) * j);
        let l2 = 4.0 * v * (1.0 - j);
        // det(F - λI) = 0 iff F - λI has a zero eigenvalue.
        for l in [l1, l2] {
            let shifted = (&f.matrix - DMatrix::identity(d, d) * l).symmetric_eigenvalues();
            let smallest = shifted.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
            prop_assert!(smallest < 1e-12 * l1.abs().max(l2.abs()), "{smallest} at {l}");
        }
    }

    #[test]
    fn classical_information_never_exceeds_quantum(
        gamma in prop_oneof![-5.0f64..-0.05, 0.05f64..5.0], t1 in -7.0f64..7.0, t2 in -7.0f64..7.0
    ) {
        let fq = qfi_pure(&PureState::gamma_state_2(gamma).unwrap());
        let fc = classical_fim_povm2(gamma, [t1, t2]).unwrap();
        let gap = &fq.matrix - &fc.matrix;
        for e in gap.symmetric_eigenvalues().iter() {
            prop_assert!(*e >= -1e-9);
        }
    }
}

// ------------------------------------------------------------ bounds and optimiser

#[test]
fn j_opt_strictly_increasing_on_fine_grid() {
    for d in [2usize, 3, 5, 10] {
        let n = 1000;
        let grid: Vec<f64> = (1..=n).map(|i| -1.0 + d as f64 * i as f64 / (n + 1) as f64).collect();
        let js: Vec<f64> = grid.iter().map(|&g| j_opt(g, d).unwrap()).collect();
        assert!(js.windows(2).all(|w| w[1] > w[0]), "d = {d}");
    }
}

/// The approach to both ends is square-root-like: a distance `ε` in `G` moves
/// `J` by about `sqrt(ε d / (d-1))`.
#[test]
fn j_opt_endpoint_limits() {
    let eps = 1e-6;
    for d in [2usize, 3, 5, 10] {
        let lo = j_opt(-1.0 + eps, d).unwrap();
        let hi = j_opt(d as f64 - 1.0 - eps, d).unwrap();
        let slack = 2.0 * (eps * d as f64).sqrt();
        assert!((lo - 1.0 / (1.0 - d as f64)).abs() < slack, "d = {d}: {lo}");
        assert!((hi - 1.0).abs() < slack, "d = {d}: {hi}");
    }
}

#[test]
fn slope_changes_sign_at_optimum() {
    for d in [2usize, 3, 5, 10] {
        let lo = 1.0 / (1.0 - d as f64);
        for i in 1..50 {
            let g = -1.0 + d as f64 * i as f64 / 50.0;
            let j = j_opt(g, d).unwrap();
            let eps = 1e-4 * (1.0 - lo);
            assert!(h_slope(lo + eps, g, d).unwrap() < 0.0, "d = {d}, G = {g}");
            assert!(h_slope(1.0 - eps, g, d).unwrap() > 0.0, "d = {d}, G = {g}");
            if j - lo > 2.0 * eps {
                assert!(h_slope(j - eps, g, d).unwrap() < 0.0);
            }
            if 1.0 - j > 2.0 * eps {
                assert!(h_slope(j + eps, g, d).unwrap() > 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn j_opt_minimises_h(
        (d, g) in (2usize..=10).prop_flat_map(|d| (Just(d), (-1.0 + 1e-3)..(d as f64 - 1.0 - 1e-3))),
        fracs in prop::collection::vec(1e-6f64..(1.0 - 1e-6), 100),
    ) {
        let best = h_factor(j_opt(g, d).unwrap(), g, d).unwrap();
        let lo = 1.0 / (1.0 - d as f64);
        for t in fracs {
            let j = lo + t * (1.0 - lo);
            prop_assert!(best <= h_factor(j, g, d).unwrap() * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn general_and_symmetric_bounds_agree(
        (d, f) in dims_and_functions(), t in 0.01f64..0.99, v in 0.02f64..0.25, mu in 1u64..1000,
    ) {
        let lo = 1.0 / (1.0 - d as f64);
        let j = lo + t * (1.0 - lo);
        let fq = qfi_sensor_symmetric(v, j, d).unwrap();
        let r = f.geometry().unwrap();
        let general = crb_general(&f, &fq, mu).unwrap();
        let sym = crb_sensor_symmetric(r.normalization, v, j, r.geometry, d, mu).unwrap();
        prop_assert!((general - sym.value).abs() <= 1e-10 * general.max(1.0), "{general} vs {}", sym.value);
        prop_assert!((sym.at(1).value - sym.value * mu as f64).abs() <= 1e-10 * sym.at(1).value);
    }

    #[test]
    fn gamma_opt_round_trips_through_strength(g in -0.999f64..0.999) {
        let gamma = gamma_opt(g).unwrap();
        prop_assert!(gamma >= 0.0);
        let j = (1.0 - gamma * gamma) / (1.0 + gamma * gamma);
        prop_assert!((j - j_opt(g, 2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn two_sensor_bound_formula_matches_general_bound(
        gamma in prop_oneof![-4.0f64..-0.05, 0.05f64..4.0], mu in 1u64..100,
    ) {
        let f = LinearFunctionSet::two_sensor_example();
        let r = f.geometry().unwrap();
        let fq = qfi_pure(&PureState::gamma_state_2(gamma).unwrap());
        let a = r.normalization * eps_qbit(gamma, r.geometry, mu).unwrap();
        let b = crb_general(&f, &fq, mu).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a);
    }
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn balanced_roots_hit_the_midpoint(g in -0.9f64..0.9, ent in 0.05f64..0.9) {
        let target = 0.5 * (eps_qbit(1.0, g, 1).unwrap() + eps_qbit(ent, g, 1).unwrap());
        let roots = balanced_gamma(1.0, ent, g).unwrap();
        prop_assert!(!roots.is_empty());
        prop_assert!(roots.windows(2).all(|w| w[0] < w[1]));
        for x in roots {
            let residual = (eps_qbit(x, g, 1).unwrap() - target).abs();
            prop_assert!(residual < 1e-10 * target.max(1.0), "residual {residual} at {x}");
        }
    }
}

#[test]
fn eps_qbit_minimum_by_golden_section() {
    let g = LinearFunctionSet::two_sensor_example().geometry().unwrap().geometry;
    let f = |x: f64| eps_qbit(x, g, 1).unwrap();
    let (mut a, mut b) = (0.05, 5.0);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-10 {
        let (c, d) = (b - r * (b - a), a + r * (b - a));
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    assert!((0.5 * (a + b) - gamma_opt(g).unwrap()).abs() < 1e-6);
}

// ------------------------------------------------------------ likelihood

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn likelihood_complete(gamma in -10.0f64..10.0, t1 in -20.0f64..20.0, t2 in -20.0f64..20.0) {
        let p = outcome_distribution([t1, t2], gamma);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn likelihood_periodic(
        gamma in -10.0f64..10.0, t1 in -6.0f64..6.0, t2 in -6.0f64..6.0, m1 in -3i32..=3, m2 in -3i32..=3,
    ) {
        for o in Outcome::ALL {
            let a = likelihood_single(o, [t1, t2], gamma);
            let b = likelihood_single(o, [t1 + TAU * m1 as f64, t2 + TAU * m2 as f64], gamma);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_probe_sees_only_the_sum(t1 in -6.0f64..6.0, t2 in -6.0f64..6.0, s in -3.0f64..3.0) {
        for o in Outcome::ALL {
            let a = likelihood_single(o, [t1, t2], 0.0);
            let b = likelihood_single(o, [t1 + s, t2 - s], 0.0);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
