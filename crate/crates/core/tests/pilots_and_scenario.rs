//! Pilot-book and deployment invariants over randomised inputs.

use approx::assert_relative_eq;
use proptest::prelude::*;

use coexist_core::pilots::{
    closed_form_power, device_errors, error_feasible, error_floor, expected_cross_correlation, gram_stats, make_orthogonal_book,
    make_random_assignment_book, make_wbe_book, min_power_vector, welch_lower_bound, Estimator,
};
use coexist_core::scenario::{beta_from_distance, path_loss_db, place_devices, DeviceClass, Scenario, SystemParams};

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn wbe_books_meet_the_welch_bound_with_equality(length in 1usize..=16, extra in 0usize..=32) {
        let count = length + extra;
        let book = make_wbe_book(length, count, None).unwrap();
        let stats = gram_stats(&book).unwrap();
        let (np, km) = (length as f64, count as f64);
        prop_assert!((stats.welch_sum - km * km / np).abs() <= 1e-9 * km * km / np);
        for r in &stats.row_sums {
            prop_assert!((r - km / np).abs() <= 1e-9 * km / np);
        }
        prop_assert!((stats.spectral_radius - km / np).abs() <= 1e-8 * km / np);
    }

    #[test]
    fn random_books_never_beat_the_welch_bound(length in 1usize..=12, extra in 0usize..=24, seed in any::<u64>()) {
        let count = length + extra;
        let book = make_random_assignment_book(length, count, seed).unwrap();
        let stats = gram_stats(&book).unwrap();
        let bound = welch_lower_bound(length, count);
        prop_assert!(stats.welch_sum >= bound * (1.0 - 1e-12));
        // ρ(Φ̄) ≥ Σ_ij Φ̄_ij / K for a symmetric nonnegative matrix
        prop_assert!(stats.spectral_radius >= stats.welch_sum / count as f64 * (1.0 - 1e-9));
    }

    #[test]
    fn wbe_closed_form_matches_the_linear_system(
        length in 2usize..=10,
        extra in 1usize..=10,
        betas_db in prop::collection::vec(-130.0f64..-70.0, 20),
        slack in 0.05f64..2.0,
        lmmse in any::<bool>(),
    ) {
        let count = length + extra;
        let estimator = if lmmse { Estimator::Lmmse } else { Estimator::Ls };
        let floor = error_floor(count, length, estimator).unwrap();
        let e = match estimator {
            Estimator::Ls => floor + slack,
            Estimator::Lmmse => floor + (1.0 - floor) * slack / 2.5,
        };
        let betas: Vec<f64> = betas_db[..count].iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let stats = gram_stats(&make_wbe_book(length, count, None).unwrap()).unwrap();
        prop_assert!(error_feasible(&stats, e, estimator).unwrap());
        let solved = min_power_vector(&stats, &betas, e, 2e-13, length, estimator).unwrap();
        let closed = closed_form_power(&betas, e, 2e-13, length, count, estimator).unwrap();
        for (a, b) in solved.iter().zip(&closed) {
            prop_assert!((a - b).abs() <= 1e-7 * b);
        }
        // the minimum powers put every device exactly on the target error
        for err in device_errors(&stats, &betas, &solved, 2e-13, length, estimator) {
            prop_assert!((err - e).abs() <= 1e-7 * e.max(1e-3));
        }
    }

    #[test]
    fn lower_target_errors_cost_more_power(length in 2usize..=10, extra in 1usize..=10, a in 0.05f64..1.0, b in 0.05f64..1.0) {
        let count = length + extra;
        let floor = error_floor(count, length, Estimator::Ls).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let q_lo = closed_form_power(&[1.0], floor + lo, 1.0, length, count, Estimator::Ls).unwrap()[0];
        let q_hi = closed_form_power(&[1.0], floor + hi, 1.0, length, count, Estimator::Ls).unwrap()[0];
        prop_assert!(q_lo > q_hi);
    }

    #[test]
    fn path_loss_grows_with_distance(d1 in 1.0f64..5000.0, d2 in 1.0f64..5000.0) {
        prop_assume!((d1 - d2).abs() > 1e-9);
        let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(path_loss_db(near).unwrap() < path_loss_db(far).unwrap());
        let b = beta_from_distance(far).unwrap();
        prop_assert!((b.log10() * -10.0 - path_loss_db(far).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn placements_stay_in_the_annulus(seed in any::<u64>(), humans in 0usize..8, machines in 1usize..60) {
        let mut params = SystemParams::table_one(64, 100, seed);
        params.humans = humans;
        params.machines = machines;
        let s = place_devices(&params).unwrap();
        prop_assert_eq!(s.len(), humans + machines);
        for (i, d) in s.devices().iter().enumerate() {
            prop_assert_eq!(d.id, i);
            prop_assert!(d.distance_m >= 20.0 && d.distance_m <= 250.0);
            let expect = if i < humans { DeviceClass::Human } else { DeviceClass::Machine };
            prop_assert_eq!(d.class, expect);
        }
        // β_min is the cell-edge gain, a lower bound for every placed device
        prop_assert_eq!(s.beta_min(), beta_from_distance(250.0).unwrap());
        prop_assert!(s.devices().iter().all(|d| d.beta >= s.beta_min()));
        let back = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn orthogonal_books_have_identity_gram() {
    let book = make_orthogonal_book(5, 5).unwrap();
    let g = book.sequences().adjoint() * book.sequences();
    for i in 0..5 {
        for j in 0..5 {
            assert_relative_eq!(g[(i, j)].re, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            assert_relative_eq!(g[(i, j)].im, 0.0, epsilon = 1e-15);
        }
    }
    assert!(make_orthogonal_book(4, 5).is_err());
    assert_relative_eq!(gram_stats(&make_orthogonal_book(8, 5).unwrap()).unwrap().welch_sum, 5.0, epsilon = 1e-12);
}

#[test]
fn expected_cross_correlation_by_family() {
    let rpa = make_random_assignment_book(10, 20, 3).unwrap();
    assert_relative_eq!(expected_cross_correlation(&rpa, 0, 1).unwrap(), 0.1, epsilon = 1e-15);
    let orth = make_orthogonal_book(6, 6).unwrap();
    assert_eq!(expected_cross_correlation(&orth, 1, 4).unwrap(), 0.0);
    let wbe = make_wbe_book(10, 20, None).unwrap();
    for i in 0..20 {
        let off: f64 = (0..20).filter(|&j| j != i).map(|j| expected_cross_correlation(&wbe, i, j).unwrap()).sum();
        assert_relative_eq!(off, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn single_pilot_books_collide_everywhere() {
    let stats = gram_stats(&make_random_assignment_book(1, 5, 11).unwrap()).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_relative_eq!(stats.phi[(i, j)], if i == j { 0.0 } else { 1.0 }, epsilon = 1e-15);
        }
    }
    // five unit-modulus scalars: every one of the 25 products has modulus one
    assert_relative_eq!(welch_lower_bound(1, 5), 25.0);
    assert_relative_eq!(stats.welch_sum, 25.0, epsilon = 1e-12);
}

#[test]
fn mean_squared_distance_matches_uniform_area() {
    let mut params = SystemParams::table_one(64, 100, 99);
    params.humans = 0;
    params.machines = 20_000;
    let s = place_devices(&params).unwrap();
    let mean: f64 = s.devices().iter().map(|d| d.distance_m * d.distance_m).sum::<f64>() / 20_000.0;
    let (a, b) = (20.0f64 * 20.0, 250.0f64 * 250.0);
    // d² is uniform on [a, b]; four standard errors of the sample mean
    let tol = 4.0 * (b - a) / 12f64.sqrt() / 20_000f64.sqrt();
    assert!((mean - (a + b) / 2.0).abs() < tol, "mean d² {mean} vs {}", (a + b) / 2.0);
}
