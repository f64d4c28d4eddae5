//! Robust TD learning: projected linear TD(0) whose semi-gradient is dropped
//! whenever its norm exceeds a time-varying clipping radius.

use serde::{Deserialize, Serialize};

use crate::env::{FeatureMap, IidSampler, MarkovRewardProcess, MarkovSampler, Transition};
use crate::error::{invalid, Error, Result};
use crate::matrix::{dot, norm2};
use crate::oracle::{self, exact_value, stationary_distribution};
use crate::rng_from_seed;

/// Clipping radius sequence `b_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClipSchedule {
    /// `b_t = (u t)^(1/(1+p))`.
    MomentGrowth { u: f64, p: f64 },
    /// `b_t = t`.
    Linear,
    /// `b_t = (u t / L)^(1/(1+p))` with `L = ln(4/δ)`.
    HighProbability { u: f64, p: f64, delta: f64 },
    /// Constant `b = (u T / ln(4T/δ))^(1/(1+p))` over a horizon of `T` steps.
    FixedHorizon { u: f64, p: f64, horizon: usize, delta: f64 },
    /// No clipping (plain projected TD).
    Unbounded,
}

impl ClipSchedule {
    pub fn radius(&self, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            ClipSchedule::MomentGrowth { u, p } => (u * t).powf(1.0 / (1.0 + p)),
            ClipSchedule::Linear => t,
            ClipSchedule::HighProbability { u, p, delta } => {
                (u * t / (4.0 / delta).ln()).powf(1.0 / (1.0 + p))
            }
            ClipSchedule::FixedHorizon { u, p, horizon, delta } => {
                let h = horizon as f64;
                (u * h / (4.0 * h / delta).ln()).powf(1.0 / (1.0 + p))
            }
            ClipSchedule::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, ClipSchedule::Unbounded)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ClipSchedule::MomentGrowth { u, p } => check_up(u, p),
            ClipSchedule::HighProbability { u, p, delta } => {
                check_up(u, p)?;
                check_delta(delta)
            }
            ClipSchedule::FixedHorizon { u, p, horizon, delta } => {
                check_up(u, p)?;
                check_delta(delta)?;
                if horizon < 1 {
                    return Err(invalid("horizon", "must be at least 1"));
                }
                if (4.0 * horizon as f64 / delta).ln() <= 0.0 {
                    return Err(invalid("delta", "log(4T/δ) must be positive"));
                }
                Ok(())
            }
            ClipSchedule::Linear | ClipSchedule::Unbounded => Ok(()),
        }
    }
}

/// Step-size sequence `η_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Fixed { eta: f64 },
    /// `η = 2ρ(1−γ) / (uT)^(1/(1+p))`.
    ExpectedIid { rho: f64, gamma: f64, u: f64, p: f64, horizon: usize },
    /// `η_t = 1 / ((1−γ) t λ_min)`.
    Diminishing { gamma: f64, lambda_min: f64 },
    /// `η = √2 ρ (uT)^(−1/(1+p))`.
    Markovian { rho: f64, u: f64, p: f64, horizon: usize },
    /// `η = √2 (1−γ) ρ L^((1−p)/(2(1+p))) / (uT)^(1/(1+p))`.
    HighProbability { rho: f64, gamma: f64, u: f64, p: f64, horizon: usize, log_term: f64 },
}

impl StepSchedule {
    /// High-probability step with `L = ln(4/δ)`.
    pub fn high_probability(rho: f64, gamma: f64, u: f64, p: f64, horizon: usize, delta: f64) -> Self {
        StepSchedule::HighProbability {
            rho,
            gamma,
            u,
            p,
            horizon,
            log_term: (4.0 / delta).ln(),
        }
    }

    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Fixed { eta } => eta,
            StepSchedule::ExpectedIid { rho, gamma, u, p, horizon } => {
                2.0 * rho * (1.0 - gamma) / (u * horizon as f64).powf(1.0 / (1.0 + p))
            }
            StepSchedule::Diminishing { gamma, lambda_min } => {
                1.0 / ((1.0 - gamma) * t as f64 * lambda_min)
            }
            StepSchedule::Markovian { rho, u, p, horizon } => {
                2f64.sqrt() * rho * (u * horizon as f64).powf(-1.0 / (1.0 + p))
            }
            StepSchedule::HighProbability { rho, gamma, u, p, horizon, log_term } => {
                2f64.sqrt() * (1.0 - gamma) * rho * log_term.powf((1.0 - p) / (2.0 * (1.0 + p)))
                    / (u * horizon as f64).powf(1.0 / (1.0 + p))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        match *self {
            StepSchedule::Fixed { eta } => pos("eta", eta),
            StepSchedule::ExpectedIid { rho, gamma, u, p, horizon } => {
                pos("rho", rho)?;
                check_gamma(gamma)?;
                check_up(u, p)?;
                check_horizon(horizon)
            }
            StepSchedule::Diminishing { gamma, lambda_min } => {
                check_gamma(gamma)?;
                if !(lambda_min > 0.0) {
                    return Err(invalid(
                        "lambda_min",
                        format!("diminishing steps need a full-rank feature Gram matrix, got λ_min = {lambda_min}"),
                    ));
                }
                Ok(())
            }
            StepSchedule::Markovian { rho, u, p, horizon } => {
                pos("rho", rho)?;
                check_up(u, p)?;
                check_horizon(horizon)
            }
            StepSchedule::HighProbability { rho, gamma, u, p, horizon, log_term } => {
                pos("rho", rho)?;
                check_gamma(gamma)?;
                check_up(u, p)?;
                check_horizon(horizon)?;
                pos("log_term", log_term)
            }
        }
    }
}

fn check_up(u: f64, p: f64) -> Result<()> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(invalid("u", format!("moment bound must be positive and finite, got {u}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("p", format!("moment order must lie in (0, 1], got {p}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    Ok(())
}

fn check_horizon(h: usize) -> Result<()> {
    if h < 1 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    Ok(())
}

/// Moment bound on the semi-gradient norm over the projection ball:
/// `u = min{(u₀^(1/(1+p)) + 2ρ)^(1+p), u₀ + 2^(2p+3) ρ^(1+p)}`.
pub fn u_bound(u0: f64, rho: f64, p: f64) -> f64 {
    let q = 1.0 + p;
    let minkowski = (u0.powf(1.0 / q) + 2.0 * rho).powf(q);
    let triangle = u0 + 2f64.powf(2.0 * p + 3.0) * rho.powf(q);
    minkowski.min(triangle)
}

/// TD semi-gradient `(R + γ⟨Θ,Φ(x')⟩ − ⟨Θ,Φ(x)⟩) Φ(x)`, written into `out`.
#[inline]
pub fn semi_gradient_into(theta: &[f64], tr: &Transition, features: &FeatureMap, gamma: f64, out: &mut [f64]) {
    let phi = features.features(tr.x);
    let td_error = tr.reward + gamma * features.predict(theta, tr.x_next) - dot(theta, phi);
    for (o, f) in out.iter_mut().zip(phi) {
        *o = td_error * f;
    }
}

pub fn semi_gradient(theta: &[f64], tr: &Transition, features: &FeatureMap, gamma: f64) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    semi_gradient_into(theta, tr, features, gamma, &mut g);
    g
}

/// `g · 1{‖g‖₂ <= b}`: the gradient survives intact or is dropped entirely.
pub fn clip_gate(g: &[f64], b: f64) -> Vec<f64> {
    if norm2(g) <= b {
        g.to_vec()
    } else {
        vec![0.0; g.len()]
    }
}

/// Euclidean projection onto the ball of radius `rho`, in place.
#[inline]
pub fn project_ball_in_place(theta: &mut [f64], rho: f64) {
    let n = norm2(theta);
    if n.is_infinite() && rho.is_finite() && theta.iter().all(|v| v.is_finite()) {
        // The sum of squares overflowed; normalize the direction without it.
        let m = theta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let r = theta.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
        theta.iter_mut().for_each(|v| *v = rho * ((*v / m) / r));
        return;
    }
    if n > rho {
        let s = rho / n;
        theta.iter_mut().for_each(|v| *v *= s);
    }
}

pub fn project_ball(theta: &[f64], rho: f64) -> Vec<f64> {
    let mut out = theta.to_vec();
    project_ball_in_place(&mut out, rho);
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Iid,
    Markovian,
}

/// Which steps get an error-curve entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordGrid {
    /// Powers of two, powers of ten, and the final step.
    Geometric,
    /// Every `every` steps, plus step 1 and the final step.
    Stride { every: usize },
}

impl Default for RecordGrid {
    fn default() -> Self {
        RecordGrid::Geometric
    }
}

impl RecordGrid {
    pub fn points(&self, horizon: usize) -> Vec<usize> {
        let mut pts = vec![1, horizon];
        match *self {
            RecordGrid::Geometric => {
                let mut p = 1usize;
                while p <= horizon {
                    pts.push(p);
                    p = p.saturating_mul(2);
                }
                let mut p = 1usize;
                while p <= horizon {
                    pts.push(p);
                    p = p.saturating_mul(10);
                }
            }
            RecordGrid::Stride { every } => {
                let every = every.max(1);
                pts.extend((every..=horizon).step_by(every));
            }
        }
        pts.retain(|&t| t >= 1 && t <= horizon);
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdConfig {
    pub horizon: usize,
    pub radius: f64,
    /// Moment order `p`.
    pub p: f64,
    /// Semi-gradient moment bound `u`.
    pub u: f64,
    pub clip: ClipSchedule,
    pub step: StepSchedule,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub record: RecordGrid,
    /// `Θ(1)`; zero when absent.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    /// Log `‖g_t‖₂` every this many steps.
    #[serde(default)]
    pub grad_log_stride: Option<usize>,
    /// Keep every iterate `Θ(1..=T+1)` in the result (small horizons only).
    #[serde(default)]
    pub keep_iterates: bool,
}

impl TdConfig {
    pub fn new(horizon: usize, radius: f64, p: f64, u: f64, clip: ClipSchedule, step: StepSchedule) -> Self {
        Self {
            horizon,
            radius,
            p,
            u,
            clip,
            step,
            sampling: Sampling::Iid,
            record: RecordGrid::Geometric,
            init: None,
            grad_log_stride: None,
            keep_iterates: false,
        }
    }

    /// `b_t = (ut)^(1/(1+p))` with the constant step that bounds the averaged
    /// iterate's expected error under iid sampling.
    pub fn expected_error(horizon: usize, radius: f64, gamma: f64, u: f64, p: f64) -> Self {
        Self::new(
            horizon,
            radius,
            p,
            u,
            ClipSchedule::MomentGrowth { u, p },
            StepSchedule::ExpectedIid { rho: radius, gamma, u, p, horizon },
        )
    }

    /// `b_t = t` with `η_t = 1/((1−γ) t λ_min)` (full-rank features).
    pub fn full_rank(horizon: usize, radius: f64, gamma: f64, lambda_min: f64, u: f64, p: f64) -> Self {
        Self::new(
            horizon,
            radius,
            p,
            u,
            ClipSchedule::Linear,
            StepSchedule::Diminishing { gamma, lambda_min },
        )
    }

    /// Single-trajectory sampling with the constant step `√2 ρ (uT)^(−1/(1+p))`.
    pub fn markovian(horizon: usize, radius: f64, u: f64, p: f64) -> Self {
        let mut c = Self::new(
            horizon,
            radius,
            p,
            u,
            ClipSchedule::MomentGrowth { u, p },
            StepSchedule::Markovian { rho: radius, u, p, horizon },
        );
        c.sampling = Sampling::Markovian;
        c
    }

    /// Schedules whose bound holds with probability at least `1 − δ`.
    pub fn high_probability(horizon: usize, radius: f64, gamma: f64, u: f64, p: f64, delta: f64) -> Self {
        Self::new(
            horizon,
            radius,
            p,
            u,
            ClipSchedule::HighProbability { u, p, delta },
            StepSchedule::high_probability(radius, gamma, u, p, horizon, delta),
        )
    }

    pub fn with_clip(mut self, clip: ClipSchedule) -> Self {
        self.clip = clip;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut problems = Vec::new();
        let mut push = |r: Result<()>| {
            if let Err(e) = r {
                problems.push(e.to_string());
            }
        };
        push(check_horizon(self.horizon));
        push(if self.radius > 0.0 && self.radius.is_finite() {
            Ok(())
        } else {
            Err(invalid("radius", format!("must be positive, got {}", self.radius)))
        });
        push(check_up(self.u, self.p));
        push(self.clip.validate());
        push(self.step.validate());
        if let Some(init) = &self.init {
            push(if init.len() != dim {
                Err(invalid("init", format!("length {} != feature dimension {dim}", init.len())))
            } else if norm2(init) > self.radius * (1.0 + 1e-12) {
                Err(invalid("init", "initial iterate lies outside the projection ball"))
            } else {
                Ok(())
            });
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Exact targets used to score iterates.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub v: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Evaluation {
    pub fn exact(mrp: &MarkovRewardProcess) -> Result<Self> {
        let mu = stationary_distribution(&mrp.transition)?.mu;
        let v = exact_value(&mrp.transition, &mrp.mean_reward, mrp.discount)?.v;
        Ok(Self { v, mu })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub t: usize,
    /// μ-MSE of `Θ̄(t) = (1/t) Σ_{s<=t} Θ(s)`.
    pub mse_avg: f64,
    /// μ-MSE of `Θ(t+1)`, the iterate after `t` updates.
    pub mse_last: f64,
    /// `max_x` squared error of `Θ(t+1)`.
    pub sup_sq_last: f64,
    /// Dropped gradients among steps `1..=t`.
    pub clip_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradRecord {
    pub t: usize,
    pub norm: f64,
    pub radius: f64,
    pub dropped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub t: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdRunResult {
    pub theta_final: Vec<f64>,
    pub theta_avg: Vec<f64>,
    pub error_curve: Vec<ErrorPoint>,
    pub clip_count: usize,
    pub seed: u64,
    pub grad_log: Vec<GradRecord>,
    pub iterates: Vec<Vec<f64>>,
    /// Set when an iterate became non-finite; the curve then ends at that step.
    pub divergence: Option<Divergence>,
}

impl TdRunResult {
    pub fn final_point(&self) -> Option<&ErrorPoint> {
        self.error_curve.last()
    }

    pub fn clip_fraction(&self, horizon: usize) -> f64 {
        self.clip_count as f64 / horizon.max(1) as f64
    }
}

/// Shared bookkeeping for the averaged iterate and the error curve.
struct Recorder<'a> {
    features: &'a FeatureMap,
    eval: &'a Evaluation,
    grid: Vec<usize>,
    next: usize,
    sum: Vec<f64>,
    curve: Vec<ErrorPoint>,
}

impl<'a> Recorder<'a> {
    fn new(features: &'a FeatureMap, eval: &'a Evaluation, config: &TdConfig) -> Self {
        Self {
            features,
            eval,
            grid: config.record.points(config.horizon),
            next: 0,
            sum: vec![0.0; features.dim()],
            curve: Vec::new(),
        }
    }

    #[inline]
    fn accumulate(&mut self, theta: &[f64]) {
        for (s, v) in self.sum.iter_mut().zip(theta) {
            *s += v;
        }
    }

    fn average(&self, t: usize) -> Vec<f64> {
        self.sum.iter().map(|s| s / t as f64).collect()
    }

    #[inline]
    fn maybe_record(&mut self, t: usize, theta_next: &[f64], clip_count: usize, force: bool) {
        if !(force || self.grid.get(self.next) == Some(&t)) {
            return;
        }
        while self.grid.get(self.next).is_some_and(|&g| g <= t) {
            self.next += 1;
        }
        let avg = self.average(t);
        self.curve.push(ErrorPoint {
            t,
            mse_avg: oracle::mu_mse(&avg, self.features, &self.eval.v, &self.eval.mu),
            mse_last: oracle::mu_mse(theta_next, self.features, &self.eval.v, &self.eval.mu),
            sup_sq_last: oracle::sup_sq_error(theta_next, self.features, &self.eval.v),
            clip_count,
        });
    }
}

fn initial_iterate(config: &TdConfig, dim: usize) -> Vec<f64> {
    config.init.clone().unwrap_or_else(|| vec![0.0; dim])
}

fn stream_ended(t: usize, horizon: usize) -> Error {
    Error::Empty(format!("transition stream ended after {} of {horizon} steps", t - 1))
}

/// Robust TD over an arbitrary transition stream. Consumes exactly
/// `config.horizon` transitions.
pub fn run_robust_td_on_stream<I>(
    features: &FeatureMap,
    gamma: f64,
    eval: &Evaluation,
    config: &TdConfig,
    stream: I,
    seed: u64,
) -> Result<TdRunResult>
where
    I: IntoIterator<Item = Transition>,
{
    let d = features.dim();
    config.validate(d)?;
    let mut stream = stream.into_iter();
    let mut theta = initial_iterate(config, d);
    let mut g = vec![0.0; d];
    let mut rec = Recorder::new(features, eval, config);
    let mut clip_count = 0usize;
    let mut grad_log = Vec::new();
    let mut iterates = Vec::new();
    let mut divergence = None;

    for t in 1..=config.horizon {
        let tr = stream.next().ok_or_else(|| stream_ended(t, config.horizon))?;
        rec.accumulate(&theta);
        if config.keep_iterates {
            iterates.push(theta.clone());
        }
        semi_gradient_into(&theta, &tr, features, gamma, &mut g);
        let gnorm = norm2(&g);
        let b = config.clip.radius(t);
        let accepted = gnorm <= b;
        if accepted {
            let eta = config.step.step(t);
            for (th, gi) in theta.iter_mut().zip(&g) {
                *th += eta * gi;
            }
        } else {
            clip_count += 1;
        }
        project_ball_in_place(&mut theta, config.radius);
        if let Some(stride) = config.grad_log_stride {
            if t % stride.max(1) == 0 {
                grad_log.push(GradRecord {
                    t,
                    norm: gnorm,
                    radius: b,
                    dropped: !accepted,
                });
            }
        }
        if theta.iter().any(|v| !v.is_finite()) {
            rec.maybe_record(t, &theta, clip_count, true);
            divergence = Some(Divergence {
                t,
                reason: format!("non-finite iterate (‖g‖₂ = {gnorm}, b_t = {b})"),
            });
            break;
        }
        rec.maybe_record(t, &theta, clip_count, false);
    }
    if config.keep_iterates {
        iterates.push(theta.clone());
    }
    let steps = rec.curve.last().map_or(config.horizon, |p| p.t);
    let theta_avg = rec.average(steps.max(1));
    Ok(TdRunResult {
        theta_final: theta,
        theta_avg,
        error_curve: rec.curve,
        clip_count,
        seed,
        grad_log,
        iterates,
        divergence,
    })
}

/// Plain projected TD(0) with the same step schedule and no clipping.
/// Kept as a separate loop so it can serve as a reference for the robust
/// variant with an unbounded clipping radius.
pub fn run_plain_td_on_stream<I>(
    features: &FeatureMap,
    gamma: f64,
    eval: &Evaluation,
    config: &TdConfig,
    stream: I,
    seed: u64,
) -> Result<TdRunResult>
where
    I: IntoIterator<Item = Transition>,
{
    let d = features.dim();
    config.validate(d)?;
    let mut stream = stream.into_iter();
    let mut theta = initial_iterate(config, d);
    let mut rec = Recorder::new(features, eval, config);
    let mut iterates = Vec::new();
    let mut divergence = None;

    for t in 1..=config.horizon {
        let tr = stream.next().ok_or_else(|| stream_ended(t, config.horizon))?;
        rec.accumulate(&theta);
        if config.keep_iterates {
            iterates.push(theta.clone());
        }
        let phi = features.features(tr.x);
        let phi_next = features.features(tr.x_next);
        let delta = tr.reward + gamma * dot(&theta, phi_next) - dot(&theta, phi);
        let eta = config.step.step(t);
        for (th, f) in theta.iter_mut().zip(phi) {
            *th += eta * (delta * f);
        }
        project_ball_in_place(&mut theta, config.radius);
        if theta.iter().any(|v| !v.is_finite()) {
            rec.maybe_record(t, &theta, 0, true);
            divergence = Some(Divergence {
                t,
                reason: "non-finite iterate".into(),
            });
            break;
        }
        rec.maybe_record(t, &theta, 0, false);
    }
    if config.keep_iterates {
        iterates.push(theta.clone());
    }
    let steps = rec.curve.last().map_or(config.horizon, |p| p.t);
    let theta_avg = rec.average(steps.max(1));
    Ok(TdRunResult {
        theta_final: theta,
        theta_avg,
        error_curve: rec.curve,
        clip_count: 0,
        seed,
        grad_log: Vec::new(),
        iterates,
        divergence,
    })
}

/// Robust TD on `mrp`, sampling transitions as configured from a seeded RNG.
pub fn run_robust_td(
    mrp: &MarkovRewardProcess,
    features: &FeatureMap,
    config: &TdConfig,
    seed: u64,
) -> Result<TdRunResult> {
    let eval = Evaluation::exact(mrp)?;
    run_robust_td_with(mrp, features, &eval, config, seed)
}

/// As [`run_robust_td`], reusing a precomputed [`Evaluation`].
pub fn run_robust_td_with(
    mrp: &MarkovRewardProcess,
    features: &FeatureMap,
    eval: &Evaluation,
    config: &TdConfig,
    seed: u64,
) -> Result<TdRunResult> {
    if features.n_states() != mrp.n_states() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} feature rows", mrp.n_states()),
            found: features.n_states().to_string(),
        });
    }
    let rng = rng_from_seed(seed);
    match config.sampling {
        Sampling::Iid => {
            let s = IidSampler::new(mrp, &eval.mu, rng)?;
            run_robust_td_on_stream(features, mrp.discount, eval, config, s, seed)
        }
        Sampling::Markovian => {
            let s = MarkovSampler::new(mrp, &eval.mu, rng)?;
            run_robust_td_on_stream(features, mrp.discount, eval, config, s, seed)
        }
    }
}

/// Closed-form error bounds for the schedules above.
pub mod bounds {
    /// Expected μ-MSE of `Θ̄(T)` under iid sampling with the moment-growth radius:
    /// `6ρu^(1/(1+p)) / ((1−γ) T^(p/(1+p)))`.
    pub fn expected_iid(rho: f64, u: f64, p: f64, gamma: f64, horizon: usize) -> f64 {
        6.0 * rho * u.powf(1.0 / (1.0 + p)) / ((1.0 - gamma) * (horizon as f64).powf(p / (1.0 + p)))
    }

    /// `u/(1−γ) · (4ρ + 1/((1−γ)λ_min))`.
    pub fn full_rank_constant(u: f64, lambda_min: f64, gamma: f64, rho: f64) -> f64 {
        u / (1.0 - gamma) * (4.0 * rho + 1.0 / ((1.0 - gamma) * lambda_min))
    }

    fn full_rank_rate(p: f64, horizon: usize) -> f64 {
        let t = horizon as f64;
        if p != 1.0 {
            t.powf(-p) / (1.0 - p)
        } else {
            (std::f64::consts::E * t).ln() / t
        }
    }

    /// Expected μ-MSE of `Θ̄(T)` with `b_t = t` and diminishing steps.
    pub fn full_rank_average(u: f64, lambda_min: f64, gamma: f64, rho: f64, p: f64, horizon: usize) -> f64 {
        full_rank_constant(u, lambda_min, gamma, rho) * full_rank_rate(p, horizon)
    }

    /// Expected sup-norm squared error of the last iterate `Θ(T+1)`.
    pub fn full_rank_last(u: f64, lambda_min: f64, gamma: f64, rho: f64, p: f64, horizon: usize) -> f64 {
        full_rank_average(u, lambda_min, gamma, rho, p, horizon) / lambda_min
    }

    /// Markovian-sampling bound with mixing time `tau`.
    pub fn markovian(rho: f64, u: f64, p: f64, gamma: f64, horizon: usize, tau: usize) -> f64 {
        let t = horizon as f64;
        7.0 * rho * u.powf(1.0 / (1.0 + p)) / ((1.0 - gamma) * t.powf(p / (1.0 + p)))
            + 2.0 * 2f64.sqrt() * rho * (1.0 + 2.0 * rho) * (4.0 * rho + tau as f64 * (1.0 + 6.0 * rho))
                / ((1.0 - gamma) * t.powf(1.0 / (1.0 + p)))
    }

    /// Bound on the μ-MSE of `Θ̄(T)` holding with probability `1 − δ`, where
    /// `log_term = ln(4/δ)`.
    pub fn high_probability(rho: f64, u: f64, p: f64, gamma: f64, horizon: usize, log_term: f64) -> f64 {
        rho * u.powf(1.0 / (1.0 + p)) / ((1.0 - gamma) * (horizon as f64).powf(p / (1.0 + p)))
            * (3.0 * log_term.powf(-(1.0 - p) / (2.0 * (1.0 + p))) + 7.0 * log_term.powf(p / (1.0 + p)))
    }
}
