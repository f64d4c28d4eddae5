use proptest::prelude::*;
use rand::Rng;

use robust_td::env::*;
use robust_td::matrix::{dot, Matrix};
use robust_td::nac::*;
use robust_td::oracle::{concentrability, discounted_visitation, exact_q, stationary_distribution};
use robust_td::rng_from_seed;
use robust_td::td::{ClipSchedule, StepSchedule, TdConfig};

fn random_features(n_pairs: usize, dim: usize, seed: u64) -> FeatureMap {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::new();
    for _ in 0..n_pairs {
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        rows.push(v.into_iter().map(|x| x / n).collect());
    }
    FeatureMap::new(Matrix::from_rows(&rows).unwrap(), None).unwrap()
}

fn random_weights(dim: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..dim).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

#[test]
fn softmax_examples() {
    let mdp = make_random_mdp(4, 3, 0.9, NoiseSpec::None, 0).unwrap();
    let pi = LogLinearPolicy::uniform(&mdp);
    assert!(pi.table().as_slice().iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));

    let phi = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let f = FeatureMap::new(phi, None).unwrap();
    let pi = LogLinearPolicy::new(vec![0.0, 2f64.ln(), 3f64.ln()], &f, 3).unwrap();
    let p = pi.probs(0);
    for (got, want) in p.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
        assert!((got - want).abs() < 1e-15);
    }
}

#[test]
fn identical_action_features_give_uniform_policy() {
    let phi = Matrix::from_rows(&[vec![0.6, 0.8], vec![0.6, 0.8], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let f = FeatureMap::new(phi, None).unwrap();
    let pi = LogLinearPolicy::new(vec![17.0, -3.0], &f, 2).unwrap();
    assert_eq!(pi.probs(0), vec![0.5, 0.5]);
    assert_eq!(pi.log_gradient(1, 0), vec![0.0, 0.0]);
}

#[test]
fn extreme_weights_stay_positive_and_normalized() {
    let f = random_features(12, 4, 1);
    for scale in [1e3, 1e6] {
        let pi = LogLinearPolicy::new(random_weights(4, scale, 2), &f, 3).unwrap();
        for s in 0..4 {
            let p = pi.probs(s);
            assert!(p.iter().all(|&v| v > 0.0 && v.is_finite()));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn log_gradient_matches_finite_differences() {
    let f = random_features(15, 4, 3);
    for seed in 0..5 {
        let w = random_weights(4, 2.0, seed);
        let pi = LogLinearPolicy::new(w.clone(), &f, 3).unwrap();
        for s in 0..5 {
            for a in 0..3 {
                let g = pi.log_gradient(s, a);
                for i in 0..4 {
                    let h = 1e-5;
                    let mut wp = w.clone();
                    wp[i] += h;
                    let mut wm = w.clone();
                    wm[i] -= h;
                    let lp = LogLinearPolicy::new(wp, &f, 3).unwrap().log_prob(s, a);
                    let lm = LogLinearPolicy::new(wm, &f, 3).unwrap().log_prob(s, a);
                    assert!((g[i] - (lp - lm) / (2.0 * h)).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn optimal_policy_on_two_states_by_enumeration() {
    let p0 = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let p1 = Matrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
    let r = Matrix::from_rows(&[vec![0.1, 1.0], vec![-0.5, 0.2]]).unwrap();
    let mdp = MarkovDecisionProcess::new(vec![p0, p1], r, 0.9, NoiseSpec::None, FeatureMap::one_hot(4)).unwrap();
    let lambda = [0.5, 0.5];
    let mut best = (f64::NEG_INFINITY, vec![]);
    for a0 in 0..2 {
        for a1 in 0..2 {
            let mut table = Matrix::zeros(2, 2);
            table[(0, a0)] = 1.0;
            table[(1, a1)] = 1.0;
            let v = exact_q(&mdp, &table).unwrap().value_at(&lambda);
            if v > best.0 {
                best = (v, vec![a0, a1]);
            }
        }
    }
    let opt = exact_optimal_policy(&mdp).unwrap();
    assert_eq!(opt.actions, best.1);
    assert!((dot(&opt.v, &lambda) - best.0).abs() < 1e-9);
}

#[test]
fn optimal_value_dominates_random_policies() {
    let mdp = make_random_mdp(8, 3, 0.9, NoiseSpec::None, 5).unwrap();
    let lambda = vec![1.0 / 8.0; 8];
    let v_star = dot(&exact_optimal_policy(&mdp).unwrap().v, &lambda);
    for seed in 0..100 {
        let pi = LogLinearPolicy::for_mdp(random_weights(24, 3.0, seed), &mdp).unwrap();
        let v = exact_q(&mdp, &pi.table()).unwrap().value_at(&lambda);
        assert!(v_star - v >= -1e-9);
    }
}

#[test]
fn single_iteration_returns_the_uniform_value() {
    let mdp = make_random_mdp(5, 2, 0.9, NoiseSpec::pareto(1.4), 8).unwrap();
    let cfg = NacConfig::theory(&mdp, 1, 200, 0.1, None).unwrap();
    let res = run_robust_nac(&mdp, &cfg, 3).unwrap();
    let uniform = exact_q(&mdp, &LogLinearPolicy::uniform(&mdp).table()).unwrap();
    assert_eq!(res.records.len(), 1);
    assert!((res.records[0].value_exact - uniform.value_at(&cfg.initial_dist)).abs() < 1e-12);
}

#[test]
fn single_action_has_zero_gap() {
    let mdp = make_random_mdp(6, 1, 0.9, NoiseSpec::pareto(1.4), 2).unwrap();
    let mut cfg = NacConfig::theory(&mdp, 5, 200, 0.1, None).unwrap();
    cfg.actor_step = 0.0;
    let res = run_robust_nac(&mdp, &cfg, 1).unwrap();
    assert!(res.records.iter().all(|r| r.gap.abs() < 1e-12));
}

#[test]
fn recorded_values_never_exceed_the_optimum() {
    let mdp = make_random_mdp(6, 3, 0.9, NoiseSpec::pareto(1.4), 12).unwrap();
    let mut cfg = NacConfig::theory(&mdp, 15, 1000, 0.1, Some(30.0)).unwrap();
    cfg.actor_step = 0.5;
    cfg.critic.step = StepSchedule::Fixed { eta: 0.05 };
    let res = run_robust_nac(&mdp, &cfg, 4).unwrap();
    assert!(res.records.iter().all(|r| r.value_exact <= res.v_star + 1e-9));
    let mins = res.running_min_gap();
    assert!(mins.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*mins.last().unwrap(), res.best_iterate_gap);
}

#[test]
fn concentrability_diagnostic_matches_oracle() {
    let mdp = make_random_mdp(5, 2, 0.9, NoiseSpec::None, 3).unwrap();
    let cfg = NacConfig::theory(&mdp, 1, 100, 0.1, None).unwrap();
    let res = run_robust_nac(&mdp, &cfg, 0).unwrap();
    let opt = exact_optimal_policy(&mdp).unwrap();
    let d = discounted_visitation(&mdp.state_kernel(&opt.table), &cfg.initial_dist, 0.9).unwrap();
    let num: Vec<f64> = (0..10).map(|i| d[i / 2] * opt.table[(i / 2, i % 2)]).collect();
    let table = LogLinearPolicy::uniform(&mdp).table();
    let mu = stationary_distribution(&induced_mrp(&mdp, &table).unwrap().transition).unwrap().mu;
    assert!((res.records[0].c_conc - concentrability(&num, &mu)).abs() < 1e-9);
}

#[test]
fn actor_update_is_linear_in_the_critic() {
    // Scaling the critic output by c and α by 1/c leaves W unchanged. With
    // one-hot features and zero initialization, scaling the rewards scales Θ̄.
    let base = make_random_mdp(4, 2, 0.9, NoiseSpec::None, 6).unwrap();
    let half = Matrix::from_row_major(4, 2, base.mean_reward.as_slice().iter().map(|r| 0.5 * r).collect()).unwrap();
    let scaled = MarkovDecisionProcess::new(base.kernels.clone(), half, 0.9, NoiseSpec::None, FeatureMap::one_hot(8)).unwrap();
    let critic = TdConfig::new(500, 1e3, 1.0, 1.0, ClipSchedule::Unbounded, StepSchedule::Fixed { eta: 0.125 });
    let cfg = |alpha: f64| NacConfig {
        iterations: 6,
        critic: critic.clone(),
        actor_step: alpha,
        initial_dist: vec![0.25; 4],
        delta: 0.1,
        weight_stride: 1,
    };
    let a = run_robust_nac(&base, &cfg(0.5), 9).unwrap();
    let b = run_robust_nac(&scaled, &cfg(1.0), 9).unwrap();
    for ((_, wa), (_, wb)) in a.weight_snapshots.iter().zip(&b.weight_snapshots) {
        assert!(wa.iter().zip(wb).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

#[test]
fn noiseless_tabular_critic_learns_q() {
    let mdp = make_random_mdp(4, 2, 0.9, NoiseSpec::None, 10).unwrap();
    let table = LogLinearPolicy::uniform(&mdp).table();
    let mu = stationary_distribution(&induced_mrp(&mdp, &table).unwrap().transition).unwrap().mu;
    let lambda_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let mut cfg = NacConfig::theory(&mdp, 1, 100_000, 0.1, None).unwrap();
    cfg.critic.step = StepSchedule::Diminishing { gamma: 0.9, lambda_min };
    cfg.critic.clip = ClipSchedule::Unbounded;
    let res = run_robust_nac(&mdp, &cfg, 2).unwrap();
    assert!(res.records[0].critic_mse <= 1e-3, "{}", res.records[0].critic_mse);
}

#[test]
fn tuned_run_closes_the_gap() {
    let mdp = make_random_mdp(8, 3, 0.9, NoiseSpec::pareto(1.4), 4).unwrap();
    let mut cfg = NacConfig::theory(&mdp, 50, 2000, 0.1, None).unwrap();
    cfg.actor_step = 1.0;
    cfg.critic.step = StepSchedule::Fixed { eta: 0.05 };
    let res = run_robust_nac(&mdp, &cfg, 7).unwrap();
    let first = res.records[0].gap;
    assert!(res.best_iterate_gap < 0.05 * first, "{} vs {}", res.best_iterate_gap, first);
}

#[test]
fn invalid_nac_config_lists_problems() {
    let mdp = make_random_mdp(3, 2, 0.9, NoiseSpec::None, 0).unwrap();
    let mut cfg = NacConfig::theory(&mdp, 2, 10, 0.1, None).unwrap();
    cfg.delta = 2.0;
    cfg.initial_dist = vec![1.0, 1.0, 1.0];
    cfg.actor_step = -1.0;
    match cfg.validate(&mdp) {
        Err(robust_td::Error::Config(p)) => assert_eq!(p.len(), 3),
        other => panic!("{other:?}"),
    }
    assert!(NacConfig::theory(&mdp, 0, 10, 0.1, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_identity(seed in any::<u64>(), scale in 0.0f64..20.0) {
        let f = random_features(12, 3, seed);
        let pi = LogLinearPolicy::new(random_weights(3, scale, seed ^ 7), &f, 4).unwrap();
        for s in 0..3 {
            let p = pi.probs(s);
            let mut total = vec![0.0; 3];
            for (a, pa) in p.iter().enumerate() {
                for (t, g) in total.iter_mut().zip(pi.log_gradient(s, a)) {
                    *t += pa * g;
                }
            }
            prop_assert!(total.iter().all(|v| v.abs() <= 1e-12));
        }
    }
}
