//! Markov reward and decision processes with heavy-tailed additive reward noise,
//! plus the transition samplers used by the learners.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::{dot, norm2, Matrix};
use crate::rng_from_seed;

/// Tolerance on row sums of transition matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance on user-supplied probability vectors (μ, policy rows).
pub const DISTRIBUTION_TOL: f64 = 1e-10;

/// Additive, state-independent reward noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    /// `N - E[N]` with `N ~ Pareto(scale, tail_index)`.
    ParetoCentered {
        tail_index: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

fn default_scale() -> f64 {
    1.0
}

/// Inverse CDF of `Pareto(scale, tail_index)` evaluated at `u ∈ (0, 1]`,
/// written in the survival form `scale * u^(-1/tail_index)`.
pub fn pareto_inverse_cdf(u: f64, scale: f64, tail_index: f64) -> f64 {
    scale * u.powf(-1.0 / tail_index)
}

impl NoiseSpec {
    pub fn pareto(tail_index: f64) -> Self {
        NoiseSpec::ParetoCentered {
            tail_index,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let NoiseSpec::ParetoCentered { tail_index, scale } = *self {
            if !(tail_index > 1.0) || !tail_index.is_finite() {
                return Err(invalid("tail_index", format!("must be > 1, got {tail_index}")));
            }
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(invalid("scale", format!("must be > 0, got {scale}")));
            }
        }
        Ok(())
    }

    /// Mean of the uncentered draw (the amount subtracted when centering).
    pub fn raw_mean(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::ParetoCentered { tail_index, scale } => {
                scale * tail_index / (tail_index - 1.0)
            }
        }
    }

    /// `E[N^q]` of the uncentered draw; infinite iff `q >= tail_index`.
    pub fn raw_moment(&self, q: f64) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::ParetoCentered { tail_index, scale } => {
                if q >= tail_index {
                    f64::INFINITY
                } else {
                    tail_index * scale.powf(q) / (tail_index - q)
                }
            }
        }
    }

    pub fn has_finite_moment(&self, q: f64) -> bool {
        self.raw_moment(q).is_finite()
    }

    /// Moment order `p` fed to the schedules: `min(1, tail_index - 1 - 0.05)`.
    pub fn default_moment_order(&self) -> f64 {
        match *self {
            NoiseSpec::None => 1.0,
            NoiseSpec::ParetoCentered { tail_index, .. } => (tail_index - 1.0 - 0.05).min(1.0),
        }
    }

    /// Upper bound on `E|r + N - E N|^(1+p)` for every `|r| <= reward_bound`.
    ///
    /// Minkowski twice: `‖r + N - EN‖_q <= |r| + ‖N‖_q + EN` with `q = 1 + p`,
    /// using the closed-form Pareto moment for `‖N‖_q`.
    pub fn moment_bound(&self, p: f64, reward_bound: f64) -> f64 {
        let q = 1.0 + p;
        let lq = match self {
            NoiseSpec::None => reward_bound,
            NoiseSpec::ParetoCentered { .. } => {
                reward_bound + self.raw_moment(q).powf(1.0 / q) + self.raw_mean()
            }
        };
        lq.powf(q)
    }

    /// One centered draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::ParetoCentered { tail_index, scale } => {
                // random::<f64>() is in [0, 1), so u is in (0, 1].
                let u = 1.0 - rng.random::<f64>();
                pareto_inverse_cdf(u, scale, tail_index) - self.raw_mean()
            }
        }
    }
}

/// Per-state feature vectors, stored as the rows of `phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub phi: Matrix,
    pub theta_star: Option<Vec<f64>>,
}

impl FeatureMap {
    pub fn new(phi: Matrix, theta_star: Option<Vec<f64>>) -> Result<Self> {
        for (x, row) in phi.iter_rows().enumerate() {
            let n = norm2(row);
            if n > 1.0 + 1e-12 {
                return Err(invalid("phi", format!("feature of state {x} has norm {n} > 1")));
            }
        }
        if let Some(th) = &theta_star {
            if th.len() != phi.cols() {
                return Err(Error::ShapeMismatch {
                    expected: format!("theta_star of length {}", phi.cols()),
                    found: th.len().to_string(),
                });
            }
        }
        Ok(Self { phi, theta_star })
    }

    /// Tabular features: `Φ(x) = e_x`.
    pub fn one_hot(n: usize) -> Self {
        Self {
            phi: Matrix::identity(n),
            theta_star: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    pub fn n_states(&self) -> usize {
        self.phi.rows()
    }

    #[inline]
    pub fn features(&self, x: usize) -> &[f64] {
        self.phi.row(x)
    }

    #[inline]
    pub fn predict(&self, theta: &[f64], x: usize) -> f64 {
        dot(theta, self.phi.row(x))
    }

    /// `ΨΘ` over all states.
    pub fn predict_all(&self, theta: &[f64]) -> Vec<f64> {
        self.phi.mul_vec(theta)
    }

    pub fn check_radius(&self, rho: f64) -> Result<()> {
        if let Some(th) = &self.theta_star {
            let n = norm2(th);
            if n > rho * (1.0 + 1e-12) {
                return Err(invalid(
                    "projection_radius",
                    format!("‖Θ*‖₂ = {n} exceeds radius {rho}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub x: usize,
    pub reward: f64,
    pub x_next: usize,
    /// 1-based step index.
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovRewardProcess {
    pub transition: Matrix,
    pub mean_reward: Vec<f64>,
    pub discount: f64,
    pub noise: NoiseSpec,
}

impl MarkovRewardProcess {
    /// Validates stochasticity, reward range, discount, noise and ergodicity.
    pub fn new(
        transition: Matrix,
        mean_reward: Vec<f64>,
        discount: f64,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let mrp = Self::with_reducible_chain(transition, mean_reward, discount, noise)?;
        check_ergodic(&mrp.transition)?;
        Ok(mrp)
    }

    /// Same validation as [`MarkovRewardProcess::new`] minus the ergodicity check.
    /// Needed for degenerate chains (e.g. `P = I`) and for chains induced by
    /// deterministic policies.
    pub fn with_reducible_chain(
        transition: Matrix,
        mean_reward: Vec<f64>,
        discount: f64,
        noise: NoiseSpec,
    ) -> Result<Self> {
        check_discount(discount)?;
        noise.validate()?;
        check_stochastic(&transition)?;
        if mean_reward.len() != transition.rows() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} mean rewards", transition.rows()),
                found: mean_reward.len().to_string(),
            });
        }
        check_rewards(&mean_reward)?;
        Ok(Self {
            transition,
            mean_reward,
            discount,
            noise,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transition.rows()
    }

    #[inline]
    pub fn sample_reward<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> f64 {
        self.mean_reward[x] + self.noise.sample(rng)
    }
}

/// Finite MDP. State-action pairs are flattened as `s * n_actions + a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovDecisionProcess {
    pub n_states: usize,
    pub n_actions: usize,
    /// One row-stochastic `n_states × n_states` kernel per action.
    pub kernels: Vec<Matrix>,
    /// `n_states × n_actions`.
    pub mean_reward: Matrix,
    pub discount: f64,
    pub noise: NoiseSpec,
    pub features: FeatureMap,
}

impl MarkovDecisionProcess {
    pub fn new(
        kernels: Vec<Matrix>,
        mean_reward: Matrix,
        discount: f64,
        noise: NoiseSpec,
        features: FeatureMap,
    ) -> Result<Self> {
        check_discount(discount)?;
        noise.validate()?;
        let n_actions = kernels.len();
        if n_actions == 0 {
            return Err(invalid("kernels", "at least one action is required"));
        }
        let n_states = kernels[0].rows();
        for k in &kernels {
            if k.rows() != n_states || !k.is_square() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n_states}x{n_states} kernels"),
                    found: format!("{}x{}", k.rows(), k.cols()),
                });
            }
            check_stochastic(k)?;
        }
        if mean_reward.rows() != n_states || mean_reward.cols() != n_actions {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_states}x{n_actions} reward table"),
                found: format!("{}x{}", mean_reward.rows(), mean_reward.cols()),
            });
        }
        check_rewards(mean_reward.as_slice())?;
        if features.n_states() != n_states * n_actions {
            return Err(Error::ShapeMismatch {
                expected: format!("{} state-action feature rows", n_states * n_actions),
                found: features.n_states().to_string(),
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            kernels,
            mean_reward,
            discount,
            noise,
            features,
        })
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn max_abs_reward(&self) -> f64 {
        crate::matrix::sup_norm(self.mean_reward.as_slice())
    }

    /// State-level kernel `P_π(s, s') = Σ_a π(a|s) P_a(s, s')`.
    pub fn state_kernel(&self, policy: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.n_states, self.n_states);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let w = policy[(s, a)];
                if w == 0.0 {
                    continue;
                }
                for (o, p) in out.row_mut(s).iter_mut().zip(self.kernels[a].row(s)) {
                    *o += w * p;
                }
            }
        }
        out
    }
}

fn check_discount(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("discount", format!("must lie in [0, 1), got {gamma}")));
    }
    Ok(())
}

/// Mean rewards must lie in `[-REWARD_BOUND, REWARD_BOUND]`.
pub const REWARD_BOUND: f64 = 1.0;

fn check_rewards(r: &[f64]) -> Result<()> {
    for (index, &value) in r.iter().enumerate() {
        if !(value.abs() <= REWARD_BOUND + 1e-12) {
            return Err(Error::RewardOutOfRange { index, value });
        }
    }
    Ok(())
}

pub fn check_stochastic(p: &Matrix) -> Result<()> {
    if !p.is_square() {
        return Err(Error::ShapeMismatch {
            expected: "square transition matrix".into(),
            found: format!("{}x{}", p.rows(), p.cols()),
        });
    }
    for (row, r) in p.iter_rows().enumerate() {
        let sum: f64 = r.iter().sum();
        let min = r.iter().copied().fold(f64::INFINITY, f64::min);
        if (sum - 1.0).abs() > STOCHASTIC_TOL || min < 0.0 || !sum.is_finite() {
            return Err(Error::NotStochastic { row, sum, min });
        }
    }
    Ok(())
}

pub fn check_distribution(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("distribution over {n} states"),
            found: v.len().to_string(),
        });
    }
    let sum: f64 = v.iter().sum();
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::NotDistribution(format!("sum = {sum}")));
    }
    Ok(())
}

/// Irreducibility via forward and backward reachability from state 0;
/// aperiodicity via the gcd of BFS level differences along every edge.
pub fn check_ergodic(p: &Matrix) -> Result<()> {
    let n = p.rows();
    if n == 0 {
        return Err(Error::NotErgodic("empty state space".into()));
    }
    let level = |forward: bool| -> Vec<Option<usize>> {
        let mut level = vec![None; n];
        level[0] = Some(0);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let li = level[i].unwrap();
            for j in 0..n {
                let w = if forward { p[(i, j)] } else { p[(j, i)] };
                if w > 0.0 && level[j].is_none() {
                    level[j] = Some(li + 1);
                    queue.push_back(j);
                }
            }
        }
        level
    };
    let fwd = level(true);
    if let Some(j) = fwd.iter().position(Option::is_none) {
        return Err(Error::NotErgodic(format!("state {j} unreachable from state 0")));
    }
    if let Some(j) = level(false).iter().position(Option::is_none) {
        return Err(Error::NotErgodic(format!("state 0 unreachable from state {j}")));
    }
    let mut period = 0usize;
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                let (li, lj) = (fwd[i].unwrap() as i64, fwd[j].unwrap() as i64);
                period = gcd(period, (li + 1 - lj).unsigned_abs() as usize);
            }
        }
    }
    if period != 1 {
        return Err(Error::NotErgodic(format!("chain is periodic with period {period}")));
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn uniform_stochastic_row<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            return row.into_iter().map(|v| v / sum).collect();
        }
    }
}

fn random_kernel<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| uniform_stochastic_row(rng, n)).collect();
    Matrix::from_rows(&rows).expect("square by construction")
}

/// Normalized Gaussian features plus `Θ* = 3U/√d`, and a mean reward chosen
/// so that `V = ΨΘ*` exactly. Θ* and r are rescaled together when needed so
/// that `max|r| <= 1` and `‖Θ*‖₂ <= rho`.
fn realizable_rewards<R: Rng + ?Sized>(
    rng: &mut R,
    transition: &Matrix,
    dim: usize,
    gamma: f64,
    rho: f64,
) -> (Vec<f64>, FeatureMap) {
    let n = transition.rows();
    let mut phi = Matrix::zeros(n, dim);
    for x in 0..n {
        loop {
            let row: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let nrm = norm2(&row);
            if nrm > 0.0 {
                for (o, v) in phi.row_mut(x).iter_mut().zip(&row) {
                    *o = v / nrm;
                }
                break;
            }
        }
    }
    let scale0 = 3.0 / (dim as f64).sqrt();
    let mut theta: Vec<f64> = (0..dim).map(|_| scale0 * rng.random::<f64>()).collect();
    let v = phi.mul_vec(&theta);
    let pv = transition.mul_vec(&v);
    let mut r: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| a - gamma * b).collect();

    let max_r = crate::matrix::sup_norm(&r);
    let tn = norm2(&theta);
    let mut c = 1.0f64;
    if max_r > 1.0 {
        c = c.min(1.0 / max_r);
    }
    if tn > rho {
        c = c.min(rho / tn);
    }
    if c < 1.0 {
        theta.iter_mut().for_each(|t| *t *= c);
        r.iter_mut().for_each(|t| *t *= c);
    }
    (r, FeatureMap { phi, theta_star: Some(theta) })
}

fn check_common(n_states: usize, dim: usize, gamma: f64, noise: &NoiseSpec, rho: f64) -> Result<()> {
    if n_states < 2 {
        return Err(invalid("n_states", "need at least 2 states"));
    }
    if dim == 0 {
        return Err(invalid("dim", "feature dimension must be positive"));
    }
    if !(rho > 0.0) {
        return Err(invalid("rho", "projection radius must be positive"));
    }
    check_discount(gamma)?;
    noise.validate()
}

/// Random MRP: `P(x, x') ~ Unif(0, 1)` then row-normalized, with realizable rewards.
pub fn make_random_mrp(
    n_states: usize,
    dim: usize,
    gamma: f64,
    noise: NoiseSpec,
    rho: f64,
    seed: u64,
) -> Result<(MarkovRewardProcess, FeatureMap)> {
    check_common(n_states, dim, gamma, &noise, rho)?;
    let mut rng = rng_from_seed(seed);
    let p = random_kernel(&mut rng, n_states);
    let (r, features) = realizable_rewards(&mut rng, &p, dim, gamma, rho);
    Ok((MarkovRewardProcess::new(p, r, gamma, noise)?, features))
}

/// Circular random walk: stay with probability 1/3, otherwise move to one of the
/// 16 states within circular distance 8 with probability 1/24 each.
pub fn make_circular_walk(
    n_states: usize,
    dim: usize,
    gamma: f64,
    noise: NoiseSpec,
    rho: f64,
    seed: u64,
) -> Result<(MarkovRewardProcess, FeatureMap)> {
    if n_states <= 17 {
        return Err(invalid("n_states", format!("circular walk needs more than 17 states, got {n_states}")));
    }
    check_common(n_states, dim, gamma, &noise, rho)?;
    let mut p = Matrix::zeros(n_states, n_states);
    for x in 0..n_states {
        p[(x, x)] = 1.0 / 3.0;
        for k in 1..=8 {
            p[(x, (x + k) % n_states)] = 1.0 / 24.0;
            p[(x, (x + n_states - k) % n_states)] = 1.0 / 24.0;
        }
    }
    let mut rng = rng_from_seed(seed);
    let (r, features) = realizable_rewards(&mut rng, &p, dim, gamma, rho);
    Ok((MarkovRewardProcess::new(p, r, gamma, noise)?, features))
}

/// Random MDP with uniform-then-normalized kernels per action, mean rewards
/// `r(s, a) ~ Unif(-1, 1)` and tabular state-action features.
pub fn make_random_mdp(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    noise: NoiseSpec,
    seed: u64,
) -> Result<MarkovDecisionProcess> {
    if n_states < 1 || n_actions < 1 {
        return Err(invalid("n_states", "need at least one state and one action"));
    }
    let mut rng = rng_from_seed(seed);
    let kernels: Vec<Matrix> = (0..n_actions).map(|_| random_kernel(&mut rng, n_states)).collect();
    let r: Vec<f64> = (0..n_states * n_actions)
        .map(|_| 2.0 * rng.random::<f64>() - 1.0)
        .collect();
    let mean_reward = Matrix::from_row_major(n_states, n_actions, r)?;
    let mdp = MarkovDecisionProcess::new(
        kernels,
        mean_reward,
        gamma,
        noise,
        FeatureMap::one_hot(n_states * n_actions),
    )?;
    // Any softmax policy mixes the kernels with positive weights, so checking
    // the uniform mixture covers ergodicity of every induced chain's state part.
    let uniform = Matrix::from_row_major(
        n_states,
        n_actions,
        vec![1.0 / n_actions as f64; n_states * n_actions],
    )?;
    check_ergodic(&mdp.state_kernel(&uniform))?;
    Ok(mdp)
}

/// Markov reward process over state-action pairs induced by `policy`
/// (an `n_states × n_actions` table of `π(a|s)`):
/// `P((s,a),(s',a')) = P_a(s,s') π(a'|s')`.
pub fn induced_mrp(mdp: &MarkovDecisionProcess, policy: &Matrix) -> Result<MarkovRewardProcess> {
    if policy.rows() != mdp.n_states || policy.cols() != mdp.n_actions {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} policy table", mdp.n_states, mdp.n_actions),
            found: format!("{}x{}", policy.rows(), policy.cols()),
        });
    }
    for s in 0..mdp.n_states {
        check_distribution(policy.row(s), mdp.n_actions)
            .map_err(|e| Error::NotDistribution(format!("policy row {s}: {e}")))?;
    }
    let n = mdp.n_pairs();
    let mut p = Matrix::zeros(n, n);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let row = mdp.index(s, a);
            let kernel = mdp.kernels[a].row(s);
            for (s2, &ps) in kernel.iter().enumerate() {
                if ps == 0.0 {
                    continue;
                }
                for a2 in 0..mdp.n_actions {
                    p[(row, mdp.index(s2, a2))] = ps * policy[(s2, a2)];
                }
            }
        }
    }
    // Renormalize rows so accumulated rounding stays inside the 1e-12 tolerance.
    for i in 0..n {
        let sum: f64 = p.row(i).iter().sum();
        p.row_mut(i).iter_mut().for_each(|v| *v /= sum);
    }
    MarkovRewardProcess::with_reducible_chain(
        p,
        mdp.mean_reward.as_slice().to_vec(),
        mdp.discount,
        mdp.noise,
    )
}

/// Per-row categorical samplers for a transition matrix.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    rows: Vec<WeightedIndex<f64>>,
}

impl TransitionTable {
    pub fn new(p: &Matrix) -> Result<Self> {
        let rows = p
            .iter_rows()
            .enumerate()
            .map(|(i, r)| {
                WeightedIndex::new(r.iter().copied())
                    .map_err(|e| Error::NotDistribution(format!("row {i}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    #[inline]
    pub fn next_state<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        self.rows[x].sample(rng)
    }
}

/// Iid sampling: `X_t ~ μ`, `X_t' ~ P(X_t, ·)`, reward `r(X_t) + noise`.
pub struct IidSampler<'a, R> {
    mrp: &'a MarkovRewardProcess,
    table: TransitionTable,
    mu: WeightedIndex<f64>,
    rng: R,
    t: usize,
}

impl<'a, R: Rng> IidSampler<'a, R> {
    pub fn new(mrp: &'a MarkovRewardProcess, mu: &[f64], rng: R) -> Result<Self> {
        check_distribution(mu, mrp.n_states())?;
        let mu = WeightedIndex::new(mu.iter().copied())
            .map_err(|e| Error::NotDistribution(e.to_string()))?;
        Ok(Self {
            mrp,
            table: TransitionTable::new(&mrp.transition)?,
            mu,
            rng,
            t: 0,
        })
    }
}

impl<R: Rng> Iterator for IidSampler<'_, R> {
    type Item = Transition;

    fn next(&mut self) -> Option<Transition> {
        self.t += 1;
        let x = self.mu.sample(&mut self.rng);
        let x_next = self.table.next_state(x, &mut self.rng);
        let reward = self.mrp.sample_reward(x, &mut self.rng);
        Some(Transition {
            x,
            reward,
            x_next,
            t: self.t,
        })
    }
}

/// A single trajectory started from `X_1 ~ μ`; `x_next` of step t is `x` of step t+1.
pub struct MarkovSampler<'a, R> {
    mrp: &'a MarkovRewardProcess,
    table: TransitionTable,
    state: usize,
    rng: R,
    t: usize,
}

impl<'a, R: Rng> MarkovSampler<'a, R> {
    pub fn new(mrp: &'a MarkovRewardProcess, mu: &[f64], mut rng: R) -> Result<Self> {
        check_distribution(mu, mrp.n_states())?;
        let start = WeightedIndex::new(mu.iter().copied())
            .map_err(|e| Error::NotDistribution(e.to_string()))?
            .sample(&mut rng);
        Ok(Self {
            mrp,
            table: TransitionTable::new(&mrp.transition)?,
            state: start,
            rng,
            t: 0,
        })
    }
}

impl<R: Rng> Iterator for MarkovSampler<'_, R> {
    type Item = Transition;

    fn next(&mut self) -> Option<Transition> {
        self.t += 1;
        let x = self.state;
        let x_next = self.table.next_state(x, &mut self.rng);
        let reward = self.mrp.sample_reward(x, &mut self.rng);
        self.state = x_next;
        Some(Transition {
            x,
            reward,
            x_next,
            t: self.t,
        })
    }
}

/// How an environment file was built. Stored alongside the matrices so the
/// environment can be regenerated from `(recipe, seed)` as well as loaded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum EnvRecipe {
    RandomMrp {
        n_states: usize,
        dim: usize,
        gamma: f64,
        noise: NoiseSpec,
        rho: f64,
    },
    CircularWalk {
        n_states: usize,
        dim: usize,
        gamma: f64,
        noise: NoiseSpec,
        rho: f64,
    },
    RandomMdp {
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        noise: NoiseSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Environment {
    Mrp {
        mrp: MarkovRewardProcess,
        features: FeatureMap,
    },
    Mdp {
        mdp: MarkovDecisionProcess,
    },
}

impl EnvRecipe {
    pub fn build(&self, seed: u64) -> Result<Environment> {
        Ok(match *self {
            EnvRecipe::RandomMrp { n_states, dim, gamma, noise, rho } => {
                let (mrp, features) = make_random_mrp(n_states, dim, gamma, noise, rho, seed)?;
                Environment::Mrp { mrp, features }
            }
            EnvRecipe::CircularWalk { n_states, dim, gamma, noise, rho } => {
                let (mrp, features) = make_circular_walk(n_states, dim, gamma, noise, rho, seed)?;
                Environment::Mrp { mrp, features }
            }
            EnvRecipe::RandomMdp { n_states, n_actions, gamma, noise } => Environment::Mdp {
                mdp: make_random_mdp(n_states, n_actions, gamma, noise, seed)?,
            },
        })
    }
}

/// On-disk environment: JSON with row-major matrices and the construction seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvFile {
    pub seed: u64,
    pub recipe: Option<EnvRecipe>,
    pub env: Environment,
}

impl EnvFile {
    pub fn generate(recipe: EnvRecipe, seed: u64) -> Result<Self> {
        let env = recipe.build(seed)?;
        Ok(Self {
            seed,
            recipe: Some(recipe),
            env,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: EnvFile = serde_json::from_str(s)?;
        file.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Re-runs constructor validation on deserialized data.
    fn validate(&self) -> Result<()> {
        match &self.env {
            Environment::Mrp { mrp, features } => {
                MarkovRewardProcess::new(
                    mrp.transition.clone(),
                    mrp.mean_reward.clone(),
                    mrp.discount,
                    mrp.noise,
                )?;
                FeatureMap::new(features.phi.clone(), features.theta_star.clone())?;
                if features.n_states() != mrp.n_states() {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{} feature rows", mrp.n_states()),
                        found: features.n_states().to_string(),
                    });
                }
            }
            Environment::Mdp { mdp } => {
                MarkovDecisionProcess::new(
                    mdp.kernels.clone(),
                    mdp.mean_reward.clone(),
                    mdp.discount,
                    mdp.noise,
                    mdp.features.clone(),
                )?;
            }
        }
        Ok(())
    }
}
