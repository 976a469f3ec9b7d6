mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use common::*;
use hbf_core::linalg::{c64, hermitian_eigen, max_abs, CMat};
use hbf_core::model::{
    array_response, generate_channels, interference_cov, mse_matrix, snr_to_power, spectral_efficiency,
    spectral_efficiency_digital, ChannelSet, HybridState, Path, PathParams, SystemConfig,
};
use hbf_core::pdd::{update_ubb, update_w, SubproblemWorkspace};
use proptest::prelude::*;

fn log2det_by_eigen(m: &CMat) -> f64 {
    hermitian_eigen(m).values.iter().map(|v| v.log2()).sum()
}

#[test]
fn array_response_examples() {
    let a = array_response(0.0, 4);
    assert!(a.iter().all(|z| (z - c64(0.5, 0.0)).norm() < 1e-15));
    let b = array_response(PI / 2.0, 2);
    assert!((b[0] - c64(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((b[1] - c64(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((array_response(0.7, 64).norm() - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn array_response_is_unit_norm(theta in -10.0f64..10.0, n in 1usize..200) {
        prop_assert!((array_response(theta, n).norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_aligned_path_gives_all_ones() {
    let cfg = SystemConfig::new(6, 3, 1, 1, 1, 1).unwrap();
    let params = PathParams { num_paths: 1, paths: vec![vec![Path { gain: c64(1.0, 0.0), arrival: 0.0, departure: 0.0 }]] };
    let ch = ChannelSet::from_paths(&cfg, params, 0);
    assert_eq!(ch.h[0].shape(), (3, 6));
    assert!(max_abs(&(&ch.h[0] - CMat::from_element(3, 6, c64(1.0, 0.0)))) < 1e-14);
}

#[test]
fn channels_are_deterministic_and_match_their_paths() {
    let cfg = SystemConfig::new(16, 4, 4, 2, 2, 2).unwrap();
    let a = generate_channels(&cfg, 15, 42);
    let b = generate_channels(&cfg, 15, 42);
    assert_eq!(a, b);
    assert_ne!(a.h[0], generate_channels(&cfg, 15, 43).h[0]);
    assert_ne!(a.h[0], a.h[1]);
    let rebuilt = ChannelSet::from_paths(&cfg, a.params.clone(), 42);
    assert!(max_abs(&(&rebuilt.h[1] - &a.h[1])) < 1e-13);
    for user in &a.params.paths {
        assert_eq!(user.len(), 15);
        for p in user {
            assert!((0.0..2.0 * PI).contains(&p.arrival) && (0.0..2.0 * PI).contains(&p.departure));
        }
    }
}

#[test]
fn channel_energy_matches_array_size_on_average() {
    // E ||H_k||^2 = N M for unit-variance gains and unit-norm responses
    let cfg = SystemConfig::new(64, 16, 1, 1, 1, 1).unwrap();
    let seeds = 1000;
    let mean: f64 = (0..seeds).map(|s| generate_channels(&cfg, 15, s).h[0].norm_squared() / 1024.0).sum::<f64>() / seeds as f64;
    assert!((mean - 1.0).abs() < 0.1, "mean normalized energy {mean}");
}

#[test]
fn snr_conversion() {
    assert_eq!(snr_to_power(0.0, 1.0), 1.0);
    assert!((snr_to_power(10.0, 1.0) - 10.0).abs() < 1e-12);
    assert!((snr_to_power(-10.0, 2.0) - 0.2).abs() < 1e-15);
}

#[test]
fn interference_cov_matches_naive_sum() {
    let mut r = rng_for(1);
    let cfg = SystemConfig::new(6, 4, 4, 3, 2, 2).unwrap().with_noise(0.7);
    let h = gaussian(&mut r, 4, 6);
    let u = gaussian(&mut r, 4, 3);
    let x = vec![gaussian(&mut r, 6, 2), gaussian(&mut r, 6, 2)];
    for k in 0..2 {
        let j = 1 - k;
        // full receive covariance first, projection last
        let full = CMat::identity(4, 4).scale(0.7) + &h * &x[j] * x[j].adjoint() * h.adjoint();
        let naive = u.adjoint() * full * &u;
        assert!(max_abs(&(interference_cov(&cfg, &h, &u, &x, k) - naive)) < 1e-12);
    }
    let single = SystemConfig::new(6, 4, 4, 3, 1, 2).unwrap();
    let cov = interference_cov(&single, &h, &u, &x[..1], 0);
    assert!(max_abs(&(cov - u.adjoint() * &u)) < 1e-13);
}

#[test]
fn mse_examples() {
    let cfg = SystemConfig::new(1, 1, 1, 1, 1, 1).unwrap();
    let e = mse_matrix(&cfg, &scalar(1.0), &scalar(1.0), &scalar(0.0), &[scalar(0.0)], 0);
    assert!((e[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
    let e = mse_matrix(&cfg, &scalar(1.0), &scalar(1.0), &scalar(0.5), &[scalar(1.0)], 0);
    assert!((e[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn mse_is_hermitian_psd_on_random_instances() {
    let mut r = rng_for(2);
    let cfg = SystemConfig::new(8, 4, 4, 2, 2, 2).unwrap();
    for _ in 0..20 {
        let h = gaussian(&mut r, 4, 8);
        let x = vec![gaussian(&mut r, 8, 2), gaussian(&mut r, 8, 2)];
        let e = mse_matrix(&cfg, &h, &gaussian(&mut r, 4, 2), &gaussian(&mut r, 2, 2), &x, 1);
        assert!(max_abs(&(&e - e.adjoint())) < 1e-12 * (1.0 + max_abs(&e)));
        assert!(hermitian_eigen(&e).values[0] >= -1e-12 * (1.0 + max_abs(&e)));
    }
}

#[test]
fn rate_examples() {
    let cfg = SystemConfig::new(1, 1, 1, 1, 1, 1).unwrap();
    let ch = ChannelSet { h: vec![scalar(1.0)], params: PathParams { num_paths: 0, paths: vec![vec![]] }, seed: 0 };
    let st = HybridState { v_rf: scalar(1.0), v_bb: vec![scalar(1.0)], u_rf: vec![scalar(1.0)], u_bb: vec![scalar(1.0)] };
    assert!((spectral_efficiency(&cfg, &ch, &st) - 1.0).abs() < 1e-14);
    let mut zero = st.clone();
    zero.v_bb[0] = scalar(0.0);
    assert_eq!(spectral_efficiency(&cfg, &ch, &zero), 0.0);
}

#[test]
fn rate_equals_weighted_log_det_at_mmse_combiner() {
    for seed in 0..10 {
        let (cfg, ch) = small_instance(seed);
        let mut r = rng_for(100 + seed);
        let st = random_hybrid(&mut r, &cfg);
        let x = st.precoders();
        let ws = SubproblemWorkspace::new(&cfg, &ch, &x);
        let mut sum = 0.0;
        for k in 0..cfg.num_users {
            let ubb = update_ubb(&ws.a_k[k], &ch.h[k], &st.u_rf[k], &x[k]);
            let w = update_w(&ch.h[k], &st.u_rf[k], &ubb, &x[k], k).unwrap();
            sum += log2det_by_eigen(&w);
            // the weight is the inverse MSE at the MMSE combiner
            let e = mse_matrix(&cfg, &ch.h[k], &st.u_rf[k], &ubb, &x, k);
            let prod = &e * &w - CMat::identity(1, 1);
            assert!(max_abs(&prod) < 1e-9);
        }
        let rate = spectral_efficiency(&cfg, &ch, &st);
        assert!((rate - sum).abs() <= 1e-9 * rate.abs().max(1.0), "{rate} vs {sum}");
    }
}

#[test]
fn rate_is_invariant_to_combiner_rotation() {
    let mut r = rng_for(3);
    let cfg = SystemConfig::new(8, 6, 4, 3, 2, 2).unwrap().with_snr_db(3.0);
    let ch = generate_channels(&cfg, 15, 9);
    for _ in 0..10 {
        let st = random_hybrid(&mut r, &cfg);
        let base = spectral_efficiency(&cfg, &ch, &st);
        let mut rotated = st.clone();
        for u in &mut rotated.u_rf {
            *u = &*u * random_unitary(&mut r, 3);
        }
        let rot = spectral_efficiency(&cfg, &ch, &rotated);
        assert!((base - rot).abs() <= 1e-9 * base.max(1.0), "{base} vs {rot}");
    }
}

#[test]
fn single_user_identity_combiner_matches_capacity_formula() {
    let mut r = rng_for(4);
    let cfg = SystemConfig::new(6, 4, 4, 4, 1, 3).unwrap().with_noise(0.5);
    let ch = generate_channels(&cfg, 15, 5);
    let x = gaussian(&mut r, 6, 3);
    let st = HybridState { v_rf: CMat::identity(6, 4), v_bb: vec![x.rows(0, 4).into_owned()], u_rf: vec![CMat::identity(4, 4)], u_bb: vec![CMat::zeros(4, 3)] };
    let eff = st.precoders()[0].clone();
    let g = &ch.h[0] * &eff;
    let direct = log2det_by_eigen(&(CMat::identity(4, 4) + (&g * g.adjoint()).scale(1.0 / 0.5)));
    assert!((spectral_efficiency(&cfg, &ch, &st) - direct).abs() < 1e-10 * direct);
    let digital = spectral_efficiency_digital(&cfg, &ch, &[eff]).total;
    assert!((digital - direct).abs() < 1e-10 * direct);
}

#[test]
fn rate_is_never_negative_and_regularization_is_flagged() {
    let cfg = SystemConfig::new(2, 2, 2, 2, 1, 1).unwrap();
    let ch = ChannelSet { h: vec![CMat::zeros(2, 2)], params: PathParams { num_paths: 0, paths: vec![vec![]] }, seed: 0 };
    // a zero combiner makes the noise covariance singular
    let st = HybridState { v_rf: CMat::identity(2, 2), v_bb: vec![CMat::zeros(2, 1)], u_rf: vec![CMat::zeros(2, 2)], u_bb: vec![CMat::zeros(2, 1)] };
    let report = hbf_core::model::spectral_efficiency_report(&cfg, &ch, &st);
    assert!(report.regularized);
    assert_eq!(report.total, 0.0);
}
