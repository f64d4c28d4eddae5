//! Experiment specifications and their resolution into algorithm configs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{EnvFile, EnvRecipe, Environment, FeatureMap, MarkovDecisionProcess, MarkovRewardProcess, REWARD_BOUND};
use crate::error::{Error, Result};
use crate::matrix::norm2;
use crate::nac::NacConfig;
use crate::oracle::feature_gram;
use crate::td::{u_bound, ClipSchedule, Evaluation, RecordGrid, Sampling, StepSchedule, TdConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RobustTd,
    PlainTd,
    RobustNac,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::RobustTd => "robust_td",
            Algorithm::PlainTd => "plain_td",
            Algorithm::RobustNac => "robust_nac",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [Algorithm::RobustTd, Algorithm::PlainTd, Algorithm::RobustNac]
            .into_iter()
            .find(|a| a.tag() == tag)
    }

    pub fn is_td(self) -> bool {
        !matches!(self, Algorithm::RobustNac)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    /// `(ut)^(1/(1+p))`
    MomentGrowth,
    /// `t`
    Linear,
    /// `(ut/ln(4/δ))^(1/(1+p))`
    HighProbability,
    /// `(uT/ln(4T/δ))^(1/(1+p))`
    FixedHorizon,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    ExpectedIid,
    Diminishing,
    Markovian,
    HighProbability,
    Fixed,
}

/// TD parameters. Unset values are derived from the environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdSettings {
    pub horizon: usize,
    /// Projection radius. Falls back to the recipe's `rho`.
    pub radius: Option<f64>,
    /// Use `‖Θ*‖₂`, the smallest radius containing the true parameter.
    pub minimal_radius: bool,
    /// Moment order; defaults to `min(1, α − 1.05)` for Pareto noise, 1 without noise.
    pub p: Option<f64>,
    /// Reward moment bound `u₀`; defaults to the closed-form Pareto bound.
    pub u0: Option<f64>,
    /// Gradient moment bound; defaults to `u_bound(u₀, ρ, p)`.
    pub u: Option<f64>,
    pub clip: ClipKind,
    pub step: StepKind,
    /// Step size for [`StepKind::Fixed`].
    pub eta: Option<f64>,
    pub delta: f64,
    pub sampling: Sampling,
    pub record: RecordGrid,
    pub grad_log_stride: Option<usize>,
}

impl Default for TdSettings {
    fn default() -> Self {
        Self {
            horizon: 100_000,
            radius: None,
            minimal_radius: false,
            p: None,
            u0: None,
            u: None,
            clip: ClipKind::Linear,
            step: StepKind::Diminishing,
            eta: None,
            delta: 0.1,
            sampling: Sampling::Iid,
            record: RecordGrid::Geometric,
            grad_log_stride: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NacSettings {
    pub iterations: usize,
    /// Critic horizon `T`.
    pub horizon: usize,
    pub delta: f64,
    pub radius: Option<f64>,
    pub actor_step: Option<f64>,
    pub weight_stride: usize,
    /// Replace the constant critic radius with a per-step schedule.
    pub critic_clip: Option<ClipKind>,
    pub critic_eta: Option<f64>,
}

impl Default for NacSettings {
    fn default() -> Self {
        Self {
            iterations: 50,
            horizon: 2000,
            delta: 0.1,
            radius: None,
            actor_step: None,
            weight_stride: 10,
            critic_clip: None,
            critic_eta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Build the environment from a recipe and `base_seed`...
    #[serde(default)]
    pub env: Option<EnvRecipe>,
    /// ...or load it from a file written by `gen-env`.
    #[serde(default)]
    pub env_file: Option<PathBuf>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub td: TdSettings,
    #[serde(default)]
    pub nac: NacSettings,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

fn default_trials() -> usize {
    200
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, env: EnvRecipe, algorithms: Vec<Algorithm>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            env: Some(env),
            env_file: None,
            algorithms,
            td: TdSettings::default(),
            nac: NacSettings::default(),
            n_trials: default_trials(),
            base_seed: 0,
            output_dir: output_dir.into(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Hex SHA-256 of the canonical JSON form with `output_dir` blanked,
    /// truncated to 16 characters. Equal specs hash equally wherever they run.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical)?;
        let digest = Sha256::digest(&json);
        Ok(hex::encode(digest)[..16].to_string())
    }

    /// Checks every field that can be checked without building the environment
    /// and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_trials < 1 {
            problems.push("n_trials must be at least 1".to_string());
        }
        if self.algorithms.is_empty() {
            problems.push("algorithms must name at least one algorithm".to_string());
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            problems.push("algorithms contains duplicates".to_string());
        }
        match (&self.env, &self.env_file) {
            (None, None) => problems.push("either env or env_file must be given".to_string()),
            (Some(_), Some(_)) => problems.push("env and env_file are mutually exclusive".to_string()),
            _ => {}
        }
        if let Some(recipe) = &self.env {
            let is_mdp = matches!(recipe, EnvRecipe::RandomMdp { .. });
            for a in &self.algorithms {
                if a.is_td() == is_mdp {
                    problems.push(format!("algorithm {} does not run on a {} recipe", a.tag(), recipe_name(recipe)));
                }
            }
        }
        if self.algorithms.iter().any(|a| a.is_td()) {
            problems.extend(self.td.problems());
        }
        if self.algorithms.contains(&Algorithm::RobustNac) {
            problems.extend(self.nac.problems());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// The shared environment: loaded from `env_file` or built from `(env, base_seed)`.
    pub fn environment(&self) -> Result<EnvFile> {
        match (&self.env, &self.env_file) {
            (Some(recipe), None) => EnvFile::generate(recipe.clone(), self.base_seed),
            (None, Some(path)) => EnvFile::load(path),
            _ => Err(Error::Config(vec!["exactly one of env and env_file must be given".into()])),
        }
    }
}

fn recipe_name(r: &EnvRecipe) -> &'static str {
    match r {
        EnvRecipe::RandomMrp { .. } => "random_mrp",
        EnvRecipe::CircularWalk { .. } => "circular_walk",
        EnvRecipe::RandomMdp { .. } => "random_mdp",
    }
}

fn positive(name: &str, v: Option<f64>, out: &mut Vec<String>) {
    if let Some(v) = v {
        if !(v > 0.0 && v.is_finite()) {
            out.push(format!("{name} must be positive and finite, got {v}"));
        }
    }
}

impl TdSettings {
    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.horizon < 1 {
            out.push("td.horizon must be at least 1".into());
        }
        positive("td.radius", self.radius, &mut out);
        positive("td.u0", self.u0, &mut out);
        positive("td.u", self.u, &mut out);
        positive("td.eta", self.eta, &mut out);
        if self.radius.is_some() && self.minimal_radius {
            out.push("td.radius and td.minimal_radius are mutually exclusive".into());
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                out.push(format!("td.p must lie in (0, 1], got {p}"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            out.push(format!("td.delta must lie in (0, 1), got {}", self.delta));
        }
        if self.step == StepKind::Fixed && self.eta.is_none() {
            out.push("td.step = fixed needs td.eta".into());
        }
        if let Some(0) = self.grad_log_stride {
            out.push("td.grad_log_stride must be positive".into());
        }
        if let RecordGrid::Stride { every: 0 } = self.record {
            out.push("td.record.every must be positive".into());
        }
        out
    }

    /// Projection radius for an environment.
    pub fn resolve_radius(&self, recipe: Option<&EnvRecipe>, features: &FeatureMap) -> Result<f64> {
        if self.minimal_radius {
            let ts = features
                .theta_star
                .as_ref()
                .ok_or_else(|| Error::Config(vec!["td.minimal_radius needs a realizable environment".into()]))?;
            return Ok(norm2(ts));
        }
        if let Some(r) = self.radius {
            return Ok(r);
        }
        match recipe {
            Some(EnvRecipe::RandomMrp { rho, .. }) | Some(EnvRecipe::CircularWalk { rho, .. }) => Ok(*rho),
            _ => Err(Error::Config(vec!["td.radius is required when the environment has no recipe radius".into()])),
        }
    }

    /// Builds the TD configuration for an environment.
    pub fn resolve(
        &self,
        recipe: Option<&EnvRecipe>,
        mrp: &MarkovRewardProcess,
        features: &FeatureMap,
        eval: &Evaluation,
    ) -> Result<TdConfig> {
        let rho = self.resolve_radius(recipe, features)?;
        let p = self.p.unwrap_or_else(|| mrp.noise.default_moment_order());
        let u0 = self.u0.unwrap_or_else(|| mrp.noise.moment_bound(p, REWARD_BOUND));
        let u = self.u.unwrap_or_else(|| u_bound(u0, rho, p));
        let gamma = mrp.discount;
        let horizon = self.horizon;
        let clip = match self.clip {
            ClipKind::MomentGrowth => ClipSchedule::MomentGrowth { u, p },
            ClipKind::Linear => ClipSchedule::Linear,
            ClipKind::HighProbability => ClipSchedule::HighProbability { u, p, delta: self.delta },
            ClipKind::FixedHorizon => ClipSchedule::FixedHorizon { u, p, horizon, delta: self.delta },
            ClipKind::Unbounded => ClipSchedule::Unbounded,
        };
        let step = match self.step {
            StepKind::ExpectedIid => StepSchedule::ExpectedIid { rho, gamma, u, p, horizon },
            StepKind::Diminishing => StepSchedule::Diminishing {
                gamma,
                lambda_min: feature_gram(&eval.mu, features)?.lambda_min,
            },
            StepKind::Markovian => StepSchedule::Markovian { rho, u, p, horizon },
            StepKind::HighProbability => StepSchedule::high_probability(rho, gamma, u, p, horizon, self.delta),
            StepKind::Fixed => StepSchedule::Fixed {
                eta: self.eta.unwrap_or(f64::NAN),
            },
        };
        let mut cfg = TdConfig::new(horizon, rho, p, u, clip, step);
        cfg.sampling = self.sampling;
        cfg.record = self.record;
        cfg.grad_log_stride = self.grad_log_stride;
        cfg.validate(features.dim())?;
        Ok(cfg)
    }
}

impl NacSettings {
    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.iterations < 1 {
            out.push("nac.iterations must be at least 1".into());
        }
        if self.horizon < 1 {
            out.push("nac.horizon must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            out.push(format!("nac.delta must lie in (0, 1), got {}", self.delta));
        }
        if self.weight_stride < 1 {
            out.push("nac.weight_stride must be at least 1".into());
        }
        positive("nac.radius", self.radius, &mut out);
        positive("nac.actor_step", self.actor_step, &mut out);
        positive("nac.critic_eta", self.critic_eta, &mut out);
        out
    }

    /// Theory schedules with any explicit overrides applied.
    pub fn resolve(&self, mdp: &MarkovDecisionProcess) -> Result<NacConfig> {
        let mut cfg = NacConfig::theory(mdp, self.iterations, self.horizon, self.delta, self.radius)?;
        let (u, p) = (cfg.critic.u, cfg.critic.p);
        if let Some(kind) = self.critic_clip {
            cfg.critic.clip = match kind {
                ClipKind::MomentGrowth => ClipSchedule::MomentGrowth { u, p },
                ClipKind::Linear => ClipSchedule::Linear,
                ClipKind::HighProbability => ClipSchedule::HighProbability { u, p, delta: self.delta },
                ClipKind::FixedHorizon => cfg.critic.clip,
                ClipKind::Unbounded => ClipSchedule::Unbounded,
            };
        }
        if let Some(eta) = self.critic_eta {
            cfg.critic.step = StepSchedule::Fixed { eta };
        }
        if let Some(a) = self.actor_step {
            cfg.actor_step = a;
        }
        cfg.weight_stride = self.weight_stride;
        cfg.validate(mdp)?;
        Ok(cfg)
    }
}

/// Borrowed view of an MRP environment.
pub(crate) fn as_mrp(env: &Environment) -> Result<(&MarkovRewardProcess, &FeatureMap)> {
    match env {
        Environment::Mrp { mrp, features } => Ok((mrp, features)),
        Environment::Mdp { .. } => Err(Error::Config(vec!["TD algorithms need a Markov reward process".into()])),
    }
}

pub(crate) fn as_mdp(env: &Environment) -> Result<&MarkovDecisionProcess> {
    match env {
        Environment::Mdp { mdp } => Ok(mdp),
        Environment::Mrp { .. } => Err(Error::Config(vec!["robust_nac needs a Markov decision process".into()])),
    }
}
