use proptest::prelude::*;
use rand::Rng;

use robust_td::env::*;
use robust_td::matrix::{dot, norm2, Matrix};
use robust_td::oracle::{feature_gram, stationary_distribution};
use robust_td::rng_from_seed;
use robust_td::td::*;

fn small_env(seed: u64, noise: NoiseSpec) -> (MarkovRewardProcess, FeatureMap, Evaluation) {
    let (mrp, f) = make_random_mrp(12, 3, 0.9, noise, 30.0, seed).unwrap();
    let eval = Evaluation::exact(&mrp).unwrap();
    (mrp, f, eval)
}

#[test]
fn schedule_values() {
    assert_eq!(ClipSchedule::MomentGrowth { u: 1.0, p: 1.0 }.radius(4), 2.0);
    assert_eq!(ClipSchedule::Linear.radius(7), 7.0);
    assert_eq!(ClipSchedule::Unbounded.radius(1), f64::INFINITY);
    let eta = StepSchedule::ExpectedIid { rho: 30.0, gamma: 0.9, u: 1.0, p: 1.0, horizon: 10_000 }.step(1);
    assert!((eta - 0.06).abs() < 1e-12);
    let eta = StepSchedule::Diminishing { gamma: 0.9, lambda_min: 0.25 }.step(10);
    assert!((eta - 4.0).abs() < 1e-12);
    assert!(StepSchedule::Diminishing { gamma: 0.9, lambda_min: 0.0 }.validate().is_err());
    let hp = ClipSchedule::HighProbability { u: 2.0, p: 0.5, delta: 0.1 }.radius(100);
    assert!((hp - (200.0 / 40f64.ln()).powf(1.0 / 1.5)).abs() < 1e-12);
}

#[test]
fn moment_bound_values() {
    assert_eq!(u_bound(1.0, 1.0, 1.0), 9.0);
    assert_eq!(u_bound(2.5, 0.0, 0.4), 2.5);
    // The second branch wins once ρ is large relative to u₀.
    let (u0, rho, p) = (1.0f64, 100.0f64, 0.2f64);
    let second = u0 + 2f64.powf(2.0 * p + 3.0) * rho.powf(1.0 + p);
    assert!(u_bound(u0, rho, p) <= second);
}

#[test]
fn semi_gradient_examples() {
    let phi = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let f = FeatureMap::new(phi, None).unwrap();
    let tr = Transition { x: 0, reward: 1.0, x_next: 1, t: 1 };
    assert_eq!(semi_gradient(&[0.0, 0.0], &tr, &f, 0.9), vec![1.0, 0.0]);
    let tr = Transition { x: 1, reward: 0.0, x_next: 1, t: 1 };
    assert_eq!(semi_gradient(&[0.3, -0.7], &tr, &f, 1.0), vec![0.0, 0.0]);
}

#[test]
fn clip_gate_boundaries() {
    let g = [3.0, 4.0];
    assert_eq!(clip_gate(&g, 5.0), g.to_vec());
    assert_eq!(clip_gate(&g, 2.5), vec![0.0, 0.0]);
    assert_eq!(clip_gate(&g, f64::INFINITY), g.to_vec());
}

#[test]
fn projection_examples() {
    let p = project_ball(&[3.0, 4.0], 1.0);
    assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    assert_eq!(project_ball(&[0.1, 0.2], 1.0), vec![0.1, 0.2]);
}

#[test]
fn expected_semi_gradient_vanishes_at_the_solution() {
    let (mrp, f, eval) = small_env(3, NoiseSpec::None);
    let ts = f.theta_star.clone().unwrap();
    let mut total = vec![0.0; 3];
    for x in 0..12 {
        let next: f64 = (0..12).map(|y| mrp.transition[(x, y)] * f.predict(&ts, y)).sum();
        let err = mrp.mean_reward[x] + 0.9 * next - f.predict(&ts, x);
        for (t, p) in total.iter_mut().zip(f.features(x)) {
            *t += eval.mu[x] * err * p;
        }
    }
    assert!(norm2(&total) < 1e-10);
}

#[test]
fn deterministic_chain_keeps_the_solution_fixed() {
    // On a deterministic cycle every transition is the expected one, so Θ★ never moves.
    let n = 5;
    let mut p = Matrix::zeros(n, n);
    for x in 0..n {
        p[(x, (x + 1) % n)] = 1.0;
    }
    let r = vec![0.5, -0.2, 0.1, 0.9, -1.0];
    let mrp = MarkovRewardProcess::with_reducible_chain(p, r, 0.9, NoiseSpec::None).unwrap();
    let v = robust_td::oracle::exact_value(&mrp.transition, &mrp.mean_reward, 0.9).unwrap().v;
    let f = FeatureMap::one_hot(n);
    let eval = Evaluation { v: v.clone(), mu: vec![0.2; n] };
    let mut cfg = TdConfig::new(
        500,
        100.0,
        1.0,
        1.0,
        ClipSchedule::Linear,
        StepSchedule::Fixed { eta: 0.3 },
    );
    cfg.init = Some(v.clone());
    let stream = IidSampler::new(&mrp, &[0.2; 5], rng_from_seed(1)).unwrap().take(500);
    let res = run_robust_td_on_stream(&f, 0.9, &eval, &cfg, stream, 1).unwrap();
    assert!(res.theta_final.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn iterates_stay_in_the_ball_and_move_at_most_eta_b() {
    let (mrp, f, eval) = small_env(5, NoiseSpec::pareto(1.2));
    let mut cfg = TdConfig::new(
        3000,
        2.0,
        0.15,
        10.0,
        ClipSchedule::MomentGrowth { u: 10.0, p: 0.15 },
        StepSchedule::Fixed { eta: 0.2 },
    );
    cfg.keep_iterates = true;
    let stream = IidSampler::new(&mrp, &eval.mu, rng_from_seed(2)).unwrap();
    let res = run_robust_td_on_stream(&f, 0.9, &eval, &cfg, stream, 2).unwrap();
    assert_eq!(res.iterates.len(), 3001);
    for (i, w) in res.iterates.windows(2).enumerate() {
        let t = i + 1;
        assert!(norm2(&w[1]) <= 2.0 * (1.0 + 1e-12));
        let step: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
        assert!(norm2(&step) <= 0.2 * cfg.clip.radius(t) * (1.0 + 1e-12) + 1e-15);
    }
    // Θ̄(T) is the plain average of Θ(1..=T).
    let mut sum = vec![0.0; 3];
    for th in &res.iterates[..3000] {
        sum.iter_mut().zip(th).for_each(|(s, v)| *s += v);
    }
    let avg: Vec<f64> = sum.iter().map(|s| s / 3000.0).collect();
    assert!(avg.iter().zip(&res.theta_avg).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn clip_count_agrees_with_gradient_log() {
    let (mrp, f, eval) = small_env(6, NoiseSpec::pareto(1.2));
    let mut cfg = TdConfig::new(
        5000,
        5.0,
        0.15,
        3.0,
        ClipSchedule::MomentGrowth { u: 3.0, p: 0.15 },
        StepSchedule::Fixed { eta: 0.05 },
    );
    cfg.grad_log_stride = Some(1);
    let stream = IidSampler::new(&mrp, &eval.mu, rng_from_seed(9)).unwrap();
    let res = run_robust_td_on_stream(&f, 0.9, &eval, &cfg, stream, 9).unwrap();
    let dropped = res.grad_log.iter().filter(|g| g.dropped).count();
    assert_eq!(res.clip_count, dropped);
    assert!(res.clip_count > 0);
    assert!(res.grad_log.iter().all(|g| g.dropped == (g.norm > g.radius)));
    assert_eq!(res.final_point().unwrap().clip_count, res.clip_count);
}

#[test]
fn error_curve_follows_the_grid() {
    let (mrp, f, eval) = small_env(7, NoiseSpec::None);
    let mut cfg = TdConfig::expected_error(1000, 30.0, 0.9, 4.0, 1.0);
    cfg.record = RecordGrid::Stride { every: 100 };
    let res = run_robust_td_with(&mrp, &f, &eval, &cfg, 3).unwrap();
    let ts: Vec<usize> = res.error_curve.iter().map(|p| p.t).collect();
    assert_eq!(ts, RecordGrid::Stride { every: 100 }.points(1000));
    assert_eq!(ts[0], 1);
    assert_eq!(*ts.last().unwrap(), 1000);
    assert_eq!(RecordGrid::Geometric.points(20), vec![1, 2, 4, 8, 10, 16, 20]);
}

#[test]
fn projection_survives_norm_overflow() {
    let p = project_ball(&[1e300, 1e300], 1.0);
    let s = 0.5f64.sqrt();
    assert!((p[0] - s).abs() < 1e-15 && (p[1] - s).abs() < 1e-15);
    let p = project_ball(&[f64::MAX, f64::MAX], f64::MAX);
    assert!(p.iter().all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn short_stream_is_an_error() {
    let (mrp, f, eval) = small_env(8, NoiseSpec::None);
    let cfg = TdConfig::expected_error(100, 30.0, 0.9, 4.0, 1.0);
    let stream = IidSampler::new(&mrp, &eval.mu, rng_from_seed(0)).unwrap().take(10);
    assert!(run_robust_td_on_stream(&f, 0.9, &eval, &cfg, stream, 0).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = TdConfig::expected_error(100, 30.0, 0.9, 4.0, 1.0);
    cfg.radius = -1.0;
    cfg.init = Some(vec![0.0; 2]);
    match cfg.validate(3) {
        Err(robust_td::Error::Config(problems)) => assert_eq!(problems.len(), 2),
        other => panic!("expected two problems, got {other:?}"),
    }
}

#[test]
fn unbounded_overflow_is_recorded_not_masked() {
    let (mrp, f, eval) = small_env(10, NoiseSpec::None);
    let cfg = TdConfig::new(
        50,
        f64::MAX,
        1.0,
        1.0,
        ClipSchedule::Unbounded,
        StepSchedule::Fixed { eta: 1e300 },
    );
    let res = run_robust_td_with(&mrp, &f, &eval, &cfg, 0).unwrap();
    let div = res.divergence.as_ref().expect("overflow should be reported");
    assert!(div.t <= 50);
    assert_eq!(res.final_point().unwrap().t, div.t);
}

#[test]
fn noiseless_run_converges() {
    let (mrp, f) = make_random_mrp(64, 4, 0.9, NoiseSpec::None, 30.0, 1).unwrap();
    let eval = Evaluation::exact(&mrp).unwrap();
    let lambda_min = feature_gram(&eval.mu, &f).unwrap().lambda_min;
    let cfg = TdConfig::full_rank(100_000, 30.0, 0.9, lambda_min, 1.0, 1.0);
    let res = run_robust_td_with(&mrp, &f, &eval, &cfg, 17).unwrap();
    assert!(res.final_point().unwrap().mse_last <= 1e-4, "{:?}", res.final_point());
}

#[test]
fn empirical_gradient_moment_within_bound() {
    let (mrp, f) = make_random_mrp(16, 3, 0.9, NoiseSpec::pareto(1.4), 5.0, 2).unwrap();
    let mu = stationary_distribution(&mrp.transition).unwrap().mu;
    let p = NoiseSpec::pareto(1.4).default_moment_order();
    let u = u_bound(mrp.noise.moment_bound(p, 1.0), 5.0, p);
    let mut rng = rng_from_seed(4);
    for _ in 0..5 {
        let mut theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let n = norm2(&theta);
        theta.iter_mut().for_each(|v| *v *= 5.0 * rng.random::<f64>() / n);
        let stream = IidSampler::new(&mrp, &mu, rng_from_seed(rng.random())).unwrap();
        let m: f64 = stream
            .take(200_000)
            .map(|tr| norm2(&semi_gradient(&theta, &tr, &f, 0.9)).powf(1.0 + p))
            .sum::<f64>()
            / 200_000.0;
        assert!(m <= u, "{m} > {u}");
    }
}

#[test]
fn bounds_shrink_with_horizon() {
    use robust_td::td::bounds;
    let a = bounds::expected_iid(30.0, 9.0, 0.5, 0.9, 1000);
    let b = bounds::expected_iid(30.0, 9.0, 0.5, 0.9, 100_000);
    assert!(b < a);
    let want = 6.0 * 30.0 * 9f64.powf(1.0 / 1.5) / (0.1 * 1000f64.powf(0.5 / 1.5));
    assert!((a - want).abs() < 1e-9 * want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive(
        x in prop::collection::vec(-50.0f64..50.0, 4),
        y in prop::collection::vec(-50.0f64..50.0, 4),
        rho in 0.1f64..40.0,
    ) {
        let px = project_ball(&x, rho);
        let py = project_ball(&y, rho);
        prop_assert!(norm2(&px) <= rho * (1.0 + 1e-12));
        let ppx = project_ball(&px, rho);
        prop_assert!(px.iter().zip(&ppx).all(|(a, b)| (a - b).abs() <= 1e-12 * rho));
        let dp: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        prop_assert!(norm2(&dp) <= norm2(&d) + 1e-12);
    }

    #[test]
    fn clip_gate_is_all_or_nothing(g in prop::collection::vec(-10.0f64..10.0, 1..6), b in 0.0f64..20.0) {
        let out = clip_gate(&g, b);
        if norm2(&g) <= b {
            prop_assert_eq!(out, g);
        } else {
            prop_assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn semi_gradient_is_td_error_times_feature(seed in any::<u64>()) {
        let (mrp, f, eval) = small_env(seed % 20, NoiseSpec::pareto(1.3));
        let mut rng = rng_from_seed(seed);
        let theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let tr = IidSampler::new(&mrp, &eval.mu, rng).unwrap().next().unwrap();
        let g = semi_gradient(&theta, &tr, &f, 0.9);
        let delta = tr.reward + 0.9 * dot(&theta, f.features(tr.x_next)) - dot(&theta, f.features(tr.x));
        for (gi, pi) in g.iter().zip(f.features(tr.x)) {
            prop_assert!((gi - delta * pi).abs() <= 1e-12 * (1.0 + delta.abs()));
        }
    }
}
