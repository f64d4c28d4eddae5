//! Robust natural actor-critic with log-linear (softmax) policies.
//!
//! Each outer iteration evaluates the current policy with a Robust TD critic
//! on the chain induced over state-action pairs, then moves the policy
//! weights along the averaged critic parameter.

use serde::{Deserialize, Serialize};

use crate::env::{check_distribution, induced_mrp, FeatureMap, MarkovDecisionProcess, REWARD_BOUND};
use crate::error::{invalid, Error, Result};
use crate::matrix::{dot, Matrix};
use crate::oracle::{self, concentrability, discounted_visitation, exact_q, stationary_distribution};
use crate::td::{self, run_robust_td_with, ClipSchedule, Evaluation, StepSchedule, TdConfig};
use crate::derive_seed;

/// `π_W(a|s) ∝ exp(Wᵀ Φ(s, a))`.
#[derive(Clone, Debug)]
pub struct LogLinearPolicy<'a> {
    pub weights: Vec<f64>,
    features: &'a FeatureMap,
    n_actions: usize,
}

impl<'a> LogLinearPolicy<'a> {
    pub fn new(weights: Vec<f64>, features: &'a FeatureMap, n_actions: usize) -> Result<Self> {
        if weights.len() != features.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} policy weights", features.dim()),
                found: weights.len().to_string(),
            });
        }
        if n_actions == 0 || features.n_states() % n_actions != 0 {
            return Err(invalid("n_actions", "feature rows must be a multiple of the action count"));
        }
        Ok(Self {
            weights,
            features,
            n_actions,
        })
    }

    /// Zero weights: the uniform (maximum-entropy) policy.
    pub fn uniform(mdp: &'a MarkovDecisionProcess) -> Self {
        Self {
            weights: vec![0.0; mdp.features.dim()],
            features: &mdp.features,
            n_actions: mdp.n_actions,
        }
    }

    pub fn for_mdp(weights: Vec<f64>, mdp: &'a MarkovDecisionProcess) -> Result<Self> {
        Self::new(weights, &mdp.features, mdp.n_actions)
    }

    pub fn n_states(&self) -> usize {
        self.features.n_states() / self.n_actions
    }

    /// Action distribution at `s`. Logits are shifted by their maximum before
    /// exponentiation, and every probability is floored at the smallest normal
    /// `f64` so no action ever gets exactly zero mass.
    pub fn probs(&self, s: usize) -> Vec<f64> {
        let base = s * self.n_actions;
        let logits: Vec<f64> = (0..self.n_actions)
            .map(|a| self.features.predict(&self.weights, base + a))
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v = (*v / sum).max(f64::MIN_POSITIVE));
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        p
    }

    /// `n_states × n_actions` table of `π(a|s)`.
    pub fn table(&self) -> Matrix {
        let n = self.n_states();
        let mut m = Matrix::zeros(n, self.n_actions);
        for s in 0..n {
            m.row_mut(s).copy_from_slice(&self.probs(s));
        }
        m
    }

    pub fn log_prob(&self, s: usize, a: usize) -> f64 {
        let base = s * self.n_actions;
        let logits: Vec<f64> = (0..self.n_actions)
            .map(|b| self.features.predict(&self.weights, base + b))
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        logits[a] - lse
    }

    /// `∇_W log π_W(a|s) = Φ(s,a) − Σ_a' π_W(a'|s) Φ(s,a')`.
    pub fn log_gradient(&self, s: usize, a: usize) -> Vec<f64> {
        let base = s * self.n_actions;
        let probs = self.probs(s);
        let mut g = self.features.features(base + a).to_vec();
        for (b, pb) in probs.iter().enumerate() {
            for (gi, f) in g.iter_mut().zip(self.features.features(base + b)) {
                *gi -= pb * f;
            }
        }
        g
    }
}

/// Deterministic optimal policy from value iteration on the mean-reward MDP.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalPolicy {
    pub actions: Vec<usize>,
    pub table: Matrix,
    /// Exact value of the greedy policy.
    pub v: Vec<f64>,
}

const VALUE_ITERATION_TOL: f64 = 1e-12;
const VALUE_ITERATION_MAX: usize = 10_000_000;

pub fn exact_optimal_policy(mdp: &MarkovDecisionProcess) -> Result<OptimalPolicy> {
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let backup = |v: &[f64], s: usize, a: usize| -> f64 {
        mdp.mean_reward[(s, a)] + mdp.discount * dot(mdp.kernels[a].row(s), v)
    };
    let mut v = vec![0.0; ns];
    let mut iterations = 0;
    loop {
        let next: Vec<f64> = (0..ns)
            .map(|s| (0..na).map(|a| backup(&v, s, a)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let change = crate::matrix::sup_norm(
            &next.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        v = next;
        iterations += 1;
        if change <= VALUE_ITERATION_TOL {
            break;
        }
        if iterations >= VALUE_ITERATION_MAX {
            return Err(Error::NoConvergence { iterations, residual: change });
        }
    }
    let actions: Vec<usize> = (0..ns)
        .map(|s| {
            (0..na).fold(0, |best, a| if backup(&v, s, a) > backup(&v, s, best) { a } else { best })
        })
        .collect();
    let mut table = Matrix::zeros(ns, na);
    for (s, &a) in actions.iter().enumerate() {
        table[(s, a)] = 1.0;
    }
    let v = exact_q(mdp, &table)?.v;
    Ok(OptimalPolicy { actions, table, v })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NacConfig {
    /// Outer iterations `K`.
    pub iterations: usize,
    /// Critic settings; `init` is ignored (every critic starts at zero).
    pub critic: TdConfig,
    /// Actor learning rate `α`.
    pub actor_step: f64,
    /// Initial state distribution `λ`.
    pub initial_dist: Vec<f64>,
    pub delta: f64,
    /// Keep `W(k)` every this many iterations.
    #[serde(default = "default_stride")]
    pub weight_stride: usize,
}

fn default_stride() -> usize {
    1
}

impl NacConfig {
    /// Schedules from the finite-time analysis: constant clipping radius
    /// `(uT/ln(4T/δ))^(1/(1+p))`, critic step with `L = ln(4K/δ)`, and
    /// `α = √(ln|A|) / (ρ√K)`. `radius` defaults to [`default_critic_radius`].
    pub fn theory(
        mdp: &MarkovDecisionProcess,
        iterations: usize,
        horizon: usize,
        delta: f64,
        radius: Option<f64>,
    ) -> Result<Self> {
        if iterations < 1 {
            return Err(invalid("iterations", "need at least one outer iteration"));
        }
        let rho = radius.unwrap_or_else(|| default_critic_radius(mdp));
        let p = mdp.noise.default_moment_order();
        let u = td::u_bound(mdp.noise.moment_bound(p, REWARD_BOUND), rho, p);
        let log_term = (4.0 * iterations as f64 / delta).ln();
        let critic = TdConfig::new(
            horizon,
            rho,
            p,
            u,
            ClipSchedule::FixedHorizon { u, p, horizon, delta },
            StepSchedule::HighProbability {
                rho,
                gamma: mdp.discount,
                u,
                p,
                horizon,
                log_term,
            },
        );
        let actor_step = (mdp.n_actions as f64).ln().sqrt() / (rho * (iterations as f64).sqrt());
        Ok(Self {
            iterations,
            critic,
            actor_step,
            initial_dist: vec![1.0 / mdp.n_states as f64; mdp.n_states],
            delta,
            weight_stride: 1,
        })
    }

    pub fn validate(&self, mdp: &MarkovDecisionProcess) -> Result<()> {
        let mut problems = Vec::new();
        if self.iterations < 1 {
            problems.push("iterations must be at least 1".to_string());
        }
        if !(self.actor_step >= 0.0 && self.actor_step.is_finite())
            || (self.actor_step == 0.0 && mdp.n_actions > 1)
        {
            problems.push(format!("actor step must be positive, got {}", self.actor_step));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            problems.push(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if let Err(e) = check_distribution(&self.initial_dist, mdp.n_states) {
            problems.push(format!("initial distribution: {e}"));
        }
        let mut critic = self.critic.clone();
        critic.init = None;
        if let Err(e) = critic.validate(mdp.features.dim()) {
            problems.push(format!("critic: {e}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// `√(|S||A|) · max|r| / (1−γ)`: bounds `‖Q^π‖₂` for every policy when the
/// state-action features are one-hot.
pub fn default_critic_radius(mdp: &MarkovDecisionProcess) -> f64 {
    let r = mdp.max_abs_reward().max(f64::MIN_POSITIVE);
    (mdp.n_pairs() as f64).sqrt() * r / (1.0 - mdp.discount)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NacIterRecord {
    pub k: usize,
    /// Exact `V^{π_k}(λ)`.
    pub value_exact: f64,
    /// `V*(λ) − V^{π_k}(λ)`.
    pub gap: f64,
    /// μ^{π_k}-MSE of the averaged critic against the exact `Q^{π_k}`.
    pub critic_mse: f64,
    pub c_conc: f64,
    pub clip_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NacRunResult {
    pub records: Vec<NacIterRecord>,
    pub v_star: f64,
    pub best_iterate_gap: f64,
    /// `(k, W(k))` at the configured stride.
    pub weight_snapshots: Vec<(usize, Vec<f64>)>,
    pub final_weights: Vec<f64>,
    pub seed: u64,
}

impl NacRunResult {
    /// `min_{j <= k} gap_j` for every `k`.
    pub fn running_min_gap(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(f64::INFINITY, |m, r| {
                *m = m.min(r.gap);
                Some(*m)
            })
            .collect()
    }
}

/// Runs `K` outer iterations. The critic of iteration `k` draws a fresh iid
/// dataset from the exact stationary distribution of the induced chain.
pub fn run_robust_nac(mdp: &MarkovDecisionProcess, config: &NacConfig, seed: u64) -> Result<NacRunResult> {
    config.validate(mdp)?;
    let mut critic_cfg = config.critic.clone();
    critic_cfg.init = None;

    let optimal = exact_optimal_policy(mdp)?;
    let v_star = dot(&optimal.v, &config.initial_dist);
    let d_star = discounted_visitation(&mdp.state_kernel(&optimal.table), &config.initial_dist, mdp.discount)?;
    let d_star_sa: Vec<f64> = (0..mdp.n_pairs())
        .map(|i| d_star[i / mdp.n_actions] * optimal.table[(i / mdp.n_actions, i % mdp.n_actions)])
        .collect();

    let mut weights = vec![0.0; mdp.features.dim()];
    let mut records = Vec::with_capacity(config.iterations);
    let mut snapshots = Vec::new();
    let stride = config.weight_stride.max(1);

    for k in 1..=config.iterations {
        let policy = LogLinearPolicy::for_mdp(weights.clone(), mdp)?;
        let table = policy.table();
        if k == 1 || k % stride == 0 {
            snapshots.push((k, weights.clone()));
        }
        let induced = induced_mrp(mdp, &table)?;
        let mu = stationary_distribution(&induced.transition)
            .map_err(|e| Error::NotErgodic(format!("chain induced at iteration {k}: {e}")))?
            .mu;
        let values = exact_q(mdp, &table)?;
        let value_exact = values.value_at(&config.initial_dist);
        let eval = Evaluation { v: values.q, mu };

        let critic = run_robust_td_with(&induced, &mdp.features, &eval, &critic_cfg, derive_seed(seed, k as u64))?;
        if let Some(div) = &critic.divergence {
            return Err(Error::Diverged(format!("critic at iteration {k}, step {}: {}", div.t, div.reason)));
        }
        let critic_mse = oracle::mu_mse(&critic.theta_avg, &mdp.features, &eval.v, &eval.mu);
        records.push(NacIterRecord {
            k,
            value_exact,
            gap: v_star - value_exact,
            critic_mse,
            c_conc: concentrability(&d_star_sa, &eval.mu),
            clip_fraction: critic.clip_fraction(critic_cfg.horizon),
        });
        for (w, th) in weights.iter_mut().zip(&critic.theta_avg) {
            *w += config.actor_step * th;
        }
    }
    let best_iterate_gap = records.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    Ok(NacRunResult {
        records,
        v_star,
        best_iterate_gap,
        weight_snapshots: snapshots,
        final_weights: weights,
        seed,
    })
}

/// High-probability bound on the best-iterate gap after `K` iterations with
/// `T` critic steps each.
#[allow(clippy::too_many_arguments)]
pub fn best_iterate_bound(
    rho: f64,
    n_actions: usize,
    gamma: f64,
    iterations: usize,
    u: f64,
    p: f64,
    horizon: usize,
    c_conc: f64,
    delta: f64,
) -> f64 {
    let k = iterations as f64;
    let log_term = (4.0 * k / delta).ln();
    let actor = 2.0 * rho * (n_actions as f64).ln().sqrt() / ((1.0 - gamma) * k.sqrt());
    let critic = u.powf(1.0 / (1.0 + p)) * c_conc * rho
        / ((1.0 - gamma).powi(3) * (horizon as f64).powf(p / (1.0 + p)))
        * (3.0 * log_term.powf(-(1.0 - p) / (2.0 * (1.0 + p))) + 7.0 * log_term.powf(p / (1.0 + p)));
    actor + critic.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_random_mdp, NoiseSpec};

    fn three_action_features() -> FeatureMap {
        // One state, three actions, features chosen so that W = (1, 0) gives
        // logits (0, ln 2, ln 3).
        let phi = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![2f64.ln() / 2.0, 0.0],
            vec![3f64.ln() / 2.0, 0.0],
        ])
        .unwrap();
        FeatureMap::new(phi, None).unwrap()
    }

    #[test]
    fn softmax_hand_example() {
        let f = three_action_features();
        let pol = LogLinearPolicy::new(vec![2.0, 0.0], &f, 3).unwrap();
        let p = pol.probs(0);
        for (got, want) in p.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((got - want).abs() < 1e-15, "{p:?}");
        }
    }

    #[test]
    fn zero_weights_are_uniform() {
        let mdp = make_random_mdp(4, 3, 0.9, NoiseSpec::None, 1).unwrap();
        let pol = LogLinearPolicy::uniform(&mdp);
        for s in 0..4 {
            assert!(pol.probs(s).iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn extreme_logits_stay_positive() {
        let f = three_action_features();
        let pol = LogLinearPolicy::new(vec![1e6, 0.0], &f, 3).unwrap();
        let p = pol.probs(0);
        assert!(p.iter().all(|v| *v > 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_action_mdp_has_zero_gap() {
        let mdp = make_random_mdp(5, 1, 0.8, NoiseSpec::pareto(1.4), 2).unwrap();
        let mut cfg = NacConfig::theory(&mdp, 3, 200, 0.1, None).unwrap();
        cfg.critic.record = crate::td::RecordGrid::Stride { every: 200 };
        let res = run_robust_nac(&mdp, &cfg, 9).unwrap();
        assert!(res.records.iter().all(|r| r.gap.abs() < 1e-9));
    }
}
