mod support;

use icecast_core::kalman::{
    build_model, fit, forecast, initial_state, kf_filter, kf_predict, kf_smooth, kf_update, simulate, FilterState,
    StateSpaceModel, TrendKind, DEFAULT_SEASONAL_PERIOD,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracles::joint_gaussian;

fn level(q: f64, r: f64) -> StateSpaceModel {
    build_model(TrendKind::Level, 0, DEFAULT_SEASONAL_PERIOD)
        .unwrap()
        .with_components(&[q], r)
        .unwrap()
}

fn scalar_state(m: f64, p: f64, t: i64) -> FilterState {
    FilterState::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, p), t)
}

fn random_config(rng: &mut ChaCha8Rng) -> (StateSpaceModel, FilterState, Vec<Option<f64>>) {
    let (kind, harmonics) = match rng.gen_range(0..3) {
        0 => (TrendKind::Level, 0),
        1 => (TrendKind::Trend, 0),
        _ => (TrendKind::Level, 1),
    };
    let period = rng.gen_range(3.0..40.0);
    let base = build_model(kind, harmonics, period).unwrap();
    let comps: Vec<f64> = (0..base.component_count()).map(|_| rng.gen_range(1e-3..0.5)).collect();
    let model = base.with_components(&comps, rng.gen_range(1e-3..0.5)).unwrap();
    let n = model.state_dim();
    let mean = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-0.5..1.0)));
    let a = DMatrix::from_iterator(n, n, (0..n * n).map(|_| rng.gen_range(-0.5..0.5)));
    let cov = &a * a.transpose() + DMatrix::identity(n, n) * rng.gen_range(0.1..1.5);
    let len = rng.gen_range(1..=5);
    let ys = (0..len)
        .map(|_| (rng.gen::<f64>() > 0.2).then(|| rng.gen_range(0.0..1.0)))
        .collect();
    (model, FilterState::new(mean, cov, -1), ys)
}

#[test]
fn filter_and_smoother_match_joint_gaussian() {
    let mut rng = ChaCha8Rng::seed_from_u64(2012);
    for case in 0..200 {
        let (model, init, ys) = random_config(&mut rng);
        let exact = joint_gaussian(
            &model.transition,
            &model.observation,
            &model.process_cov(),
            model.obs_var,
            &init.mean,
            &init.cov,
            &ys,
        );
        let run = kf_filter(&ys, &model, &init).unwrap();
        let smoothed = kf_smooth(&run, &model).unwrap();
        assert!(
            (run.log_likelihood - exact.log_likelihood).abs() < 1e-9,
            "case {case}: loglik {} vs {}",
            run.log_likelihood,
            exact.log_likelihood
        );
        for (t, state) in run.filtered().enumerate() {
            let err = (&state.mean - &exact.filtered_means[t]).amax();
            assert!(err < 1e-9, "case {case} t {t}: filtered mean error {err}");
        }
        for (t, state) in smoothed.iter().enumerate() {
            let err = (&state.mean - &exact.smoothed_means[t]).amax();
            assert!(err < 1e-9, "case {case} t {t}: smoothed mean error {err}");
        }
    }
}

#[test]
fn three_step_level_series() {
    let model = level(0.01, 0.02);
    let init = scalar_state(0.4, 1.0, -1);
    let ys = [Some(0.45), Some(0.6), Some(0.52)];
    let exact = joint_gaussian(
        &model.transition,
        &model.observation,
        &model.process_cov(),
        model.obs_var,
        &init.mean,
        &init.cov,
        &ys,
    );
    let run = kf_filter(&ys, &model, &init).unwrap();
    assert!((run.log_likelihood - exact.log_likelihood).abs() < 1e-9);
    let smoothed = kf_smooth(&run, &model).unwrap();
    for t in 0..3 {
        assert!((smoothed[t].mean[0] - exact.smoothed_means[t][0]).abs() < 1e-9);
    }
}

#[test]
fn one_step_update_is_exact() {
    let out = kf_update(&scalar_state(0.5, 0.05, 0), &level(0.0, 0.02), 0.7).unwrap();
    let gain = (out.state.mean[0] - 0.5) / out.innovation;
    assert!((gain - 5.0 / 7.0).abs() < 1e-12);
    assert!((out.state.mean[0] - 9.0 / 14.0).abs() < 1e-12);
    assert!((out.state.cov[(0, 0)] - 1.0 / 70.0).abs() < 1e-12);
    assert!((out.innovation_var - 0.07).abs() < 1e-15);
}

#[test]
fn gap_variance_grows_linearly() {
    let q = 3.7e-3;
    let model = level(q, 0.02);
    for g in 1..=50u32 {
        let p = 0.0123;
        let mut state = scalar_state(0.3, p, 0);
        for _ in 0..g {
            state = kf_predict(&state, &model).unwrap();
        }
        let expected = p + f64::from(g) * q;
        assert!((state.cov[(0, 0)] - expected).abs() < 1e-12, "g = {g}");

        let mut series = vec![Some(0.3)];
        series.extend(std::iter::repeat(None).take(g as usize));
        let run = kf_filter(&series, &model, &scalar_state(0.3, 1.0, -1)).unwrap();
        let after_obs = run.steps[0].filtered.cov[(0, 0)];
        let last = run.last().unwrap().cov[(0, 0)];
        assert!((last - (after_obs + f64::from(g) * q)).abs() < 1e-12);
    }
}

#[test]
fn covariance_stays_symmetric_over_many_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let model = build_model(TrendKind::Trend, 1, 30.0)
        .unwrap()
        .with_components(&[1e-4, 1e-6, 1e-5], 1e-3)
        .unwrap();
    let mut state = FilterState::new(DVector::zeros(4), DMatrix::identity(4, 4), -1);
    for step in 0..10_000 {
        state = kf_predict(&state, &model).unwrap();
        if rng.gen::<f64>() < 0.8 {
            state = kf_update(&state, &model, rng.gen_range(0.0..1.0)).unwrap().state;
        }
        assert_eq!(state.cov, state.cov.transpose(), "step {step}");
        assert!(state.cov.diagonal().iter().all(|&d| d >= 0.0), "step {step}");
    }
}

#[test]
fn fit_beats_generating_parameters() {
    let truth = level(1e-4, 1e-3);
    let ys: Vec<Option<f64>> = simulate(&truth, &DVector::from_element(1, 0.5), 2000, 42)
        .unwrap()
        .into_iter()
        .map(Some)
        .collect();
    let result = fit(&ys, TrendKind::Level, 0, DEFAULT_SEASONAL_PERIOD).unwrap();
    let at_truth = kf_filter(&ys, &truth, &initial_state(&truth, &ys)).unwrap().log_likelihood;
    assert!(
        result.log_likelihood >= at_truth - 1e-6,
        "fitted {} < truth {}",
        result.log_likelihood,
        at_truth
    );
    assert!(result.trace.windows(2).all(|w| w[1] >= w[0]));
    assert!(result.converged);

    let again = fit(&ys, TrendKind::Level, 0, DEFAULT_SEASONAL_PERIOD).unwrap();
    assert_eq!(again, result);
}

#[test]
fn seasonal_fit_runs_with_gaps() {
    let truth = build_model(TrendKind::Level, 1, 60.0)
        .unwrap()
        .with_components(&[2e-5, 1e-6], 4e-4)
        .unwrap();
    let ys: Vec<Option<f64>> = simulate(&truth, &DVector::from_vec(vec![0.5, 0.3, 0.0]), 400, 3)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, y)| (i % 11 != 5).then_some(y))
        .collect();
    let result = fit(&ys, TrendKind::Level, 1, 60.0).unwrap();
    assert!(result.trace.windows(2).all(|w| w[1] >= w[0]));
    let mut init = initial_state(&truth, &ys);
    init.t = -1;
    let at_truth = kf_filter(&ys, &truth, &init).unwrap().log_likelihood;
    assert!(result.log_likelihood >= at_truth - 1e-6);
}

#[test]
fn simulated_harmonic_matches_sinusoid() {
    let period = 30.0;
    let amplitude = 0.25;
    let model = build_model(TrendKind::Level, 1, period).unwrap();
    let ys = simulate(&model, &DVector::from_vec(vec![0.5, amplitude, 0.0]), 120, 5).unwrap();
    for (t, y) in ys.iter().enumerate() {
        let expected = 0.5 + amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).cos();
        assert!((y - expected).abs() < 1e-9, "t = {t}");
    }
    // Empirical period from successive maxima.
    let peaks: Vec<usize> = (1..ys.len() - 1)
        .filter(|&t| ys[t] >= ys[t - 1] && ys[t] > ys[t + 1])
        .collect();
    for w in peaks.windows(2) {
        assert!(((w[1] - w[0]) as f64 - period).abs() <= 1.0);
    }
}

#[test]
fn forecast_mean_is_flat_for_level_model() {
    let model = level(0.05, 1e-4);
    let fc = forecast(&scalar_state(0.42, 0.003, 10), &model, 40).unwrap();
    assert!(fc.iter().all(|f| f.mean == 0.42));
    for (j, f) in fc.iter().enumerate() {
        let expected = 0.003 + (j + 1) as f64 * 0.05 + 1e-4;
        assert!((f.variance - expected).abs() < 1e-12);
    }
}
