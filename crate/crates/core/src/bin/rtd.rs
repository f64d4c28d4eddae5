use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_td::env::{EnvFile, EnvRecipe, NoiseSpec};
use robust_td::harness::{
    self, run_experiment_with_workers, Algorithm, ClipKind, ExperimentSpec, StepKind,
};
use robust_td::td::Sampling;

#[derive(Parser)]
#[command(name = "rtd", version, about = "Robust TD learning and natural actor-critic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an environment and write it as JSON.
    GenEnv {
        #[command(flatten)]
        env: EnvFlags,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run Robust TD (and optionally plain TD) trials.
    RunTd {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        env: EnvFlags,
        #[command(flatten)]
        td: TdFlags,
    },
    /// Run Robust natural actor-critic trials.
    RunNac {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        env: EnvFlags,
        #[command(flatten)]
        nac: NacFlags,
    },
    /// Rebuild aggregate CSVs and plots from the trial CSVs in a directory.
    Report {
        dir: PathBuf,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum RecipeKind {
    RandomMrp,
    CircularWalk,
    RandomMdp,
}

#[derive(Args)]
struct EnvFlags {
    #[arg(long, value_enum)]
    recipe: Option<RecipeKind>,
    #[arg(long)]
    n_states: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_actions: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Pareto tail index of the reward noise; omit for noiseless rewards.
    #[arg(long)]
    tail_index: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
}

impl EnvFlags {
    fn any(&self) -> bool {
        self.recipe.is_some()
            || self.n_states.is_some()
            || self.dim.is_some()
            || self.n_actions.is_some()
            || self.gamma.is_some()
            || self.tail_index.is_some()
            || self.rho.is_some()
    }

    /// Applies the flags on top of `base`, or builds a recipe from scratch.
    fn recipe(&self, base: Option<EnvRecipe>) -> Result<Option<EnvRecipe>> {
        if !self.any() {
            return Ok(base);
        }
        let noise = self.tail_index.map(NoiseSpec::pareto);
        let kind = self.recipe.or(match &base {
            Some(EnvRecipe::RandomMrp { .. }) => Some(RecipeKind::RandomMrp),
            Some(EnvRecipe::CircularWalk { .. }) => Some(RecipeKind::CircularWalk),
            Some(EnvRecipe::RandomMdp { .. }) => Some(RecipeKind::RandomMdp),
            None => None,
        });
        let Some(kind) = kind else {
            bail!("--recipe is required when no environment is configured");
        };
        let (b_n, b_d, b_a, b_g, b_noise, b_rho) = match base {
            Some(EnvRecipe::RandomMrp { n_states, dim, gamma, noise, rho })
            | Some(EnvRecipe::CircularWalk { n_states, dim, gamma, noise, rho }) => {
                (Some(n_states), Some(dim), None, Some(gamma), Some(noise), Some(rho))
            }
            Some(EnvRecipe::RandomMdp { n_states, n_actions, gamma, noise }) => {
                (Some(n_states), None, Some(n_actions), Some(gamma), Some(noise), None)
            }
            None => (None, None, None, None, None, None),
        };
        let need = |v: Option<usize>, name: &str| v.with_context(|| format!("--{name} is required"));
        let n_states = need(self.n_states.or(b_n), "n-states")?;
        let gamma = self.gamma.or(b_g).unwrap_or(0.9);
        let noise = noise.or(b_noise).unwrap_or(NoiseSpec::None);
        Ok(Some(match kind {
            RecipeKind::RandomMdp => EnvRecipe::RandomMdp {
                n_states,
                n_actions: need(self.n_actions.or(b_a), "n-actions")?,
                gamma,
                noise,
            },
            RecipeKind::RandomMrp | RecipeKind::CircularWalk => {
                let dim = need(self.dim.or(b_d), "dim")?;
                let rho = self.rho.or(b_rho).unwrap_or(30.0);
                if matches!(kind, RecipeKind::RandomMrp) {
                    EnvRecipe::RandomMrp { n_states, dim, gamma, noise, rho }
                } else {
                    EnvRecipe::CircularWalk { n_states, dim, gamma, noise, rho }
                }
            }
        }))
    }
}

#[derive(Args)]
struct CommonFlags {
    /// TOML experiment spec; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    env_file: Option<PathBuf>,
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    #[arg(long, env = harness::WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TdFlags {
    /// Comma-separated subset of robust_td,plain_td.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    minimal_radius: bool,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long, value_enum)]
    clip: Option<ClipArg>,
    #[arg(long, value_enum)]
    step: Option<StepArg>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    markovian: bool,
}

#[derive(Args)]
struct NacFlags {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    critic_horizon: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    actor_step: Option<f64>,
    #[arg(long)]
    critic_eta: Option<f64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum ClipArg {
    MomentGrowth,
    Linear,
    HighProbability,
    FixedHorizon,
    Unbounded,
}

#[derive(Copy, Clone, ValueEnum)]
enum StepArg {
    ExpectedIid,
    Diminishing,
    Markovian,
    HighProbability,
    Fixed,
}

impl From<ClipArg> for ClipKind {
    fn from(c: ClipArg) -> Self {
        match c {
            ClipArg::MomentGrowth => ClipKind::MomentGrowth,
            ClipArg::Linear => ClipKind::Linear,
            ClipArg::HighProbability => ClipKind::HighProbability,
            ClipArg::FixedHorizon => ClipKind::FixedHorizon,
            ClipArg::Unbounded => ClipKind::Unbounded,
        }
    }
}

impl From<StepArg> for StepKind {
    fn from(s: StepArg) -> Self {
        match s {
            StepArg::ExpectedIid => StepKind::ExpectedIid,
            StepArg::Diminishing => StepKind::Diminishing,
            StepArg::Markovian => StepKind::Markovian,
            StepArg::HighProbability => StepKind::HighProbability,
            StepArg::Fixed => StepKind::Fixed,
        }
    }
}

fn base_spec(common: &CommonFlags, env: &EnvFlags, default_algos: Vec<Algorithm>) -> Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(path) => ExperimentSpec::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentSpec {
            name: "experiment".into(),
            env: None,
            env_file: None,
            algorithms: default_algos,
            td: Default::default(),
            nac: Default::default(),
            n_trials: 200,
            base_seed: 0,
            output_dir: PathBuf::new(),
        },
    };
    spec.env = env.recipe(spec.env.take())?;
    if let Some(f) = &common.env_file {
        spec.env_file = Some(f.clone());
        if !env.any() {
            spec.env = None;
        }
    }
    if let Some(v) = &common.name {
        spec.name = v.clone();
    }
    if let Some(v) = common.n_trials {
        spec.n_trials = v;
    }
    if let Some(v) = common.base_seed {
        spec.base_seed = v;
    }
    if let Some(v) = &common.output_dir {
        spec.output_dir = v.clone();
    }
    if spec.output_dir.as_os_str().is_empty() {
        bail!("--output-dir is required when the config does not set output_dir");
    }
    Ok(spec)
}

fn run(spec: ExperimentSpec, workers: Option<usize>) -> Result<()> {
    let workers = workers.unwrap_or_else(harness::worker_count);
    let res = run_experiment_with_workers(&spec, workers)?;
    println!("spec {} ({}), {} trials -> {}", spec.name, res.spec_hash, spec.n_trials, res.output_dir.display());
    for a in &res.report.aggregates {
        if let Some(p) = a.last() {
            println!(
                "{:<11} {:<9} t={:<8} mean={:.6e} median={:.6e} q10={:.6e} q90={:.6e}",
                a.algorithm, a.metric, p.t, p.mean, p.median, p.q10, p.q90
            );
        }
    }
    let unpaired = res.unpaired_trials();
    if !unpaired.is_empty() {
        eprintln!("warning: robust and plain streams differ in trials {unpaired:?}");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenEnv { env, seed, out } => {
            let recipe = env.recipe(None)?.context("--recipe is required")?;
            let file = EnvFile::generate(recipe, seed)?;
            file.save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::RunTd { common, env, td } => {
            let mut spec = base_spec(&common, &env, vec![Algorithm::RobustTd, Algorithm::PlainTd])?;
            if let Some(names) = &td.algorithms {
                spec.algorithms = names
                    .iter()
                    .map(|n| Algorithm::from_tag(n.trim()).with_context(|| format!("unknown algorithm {n}")))
                    .collect::<Result<_>>()?;
            }
            let s = &mut spec.td;
            if let Some(v) = td.horizon {
                s.horizon = v;
            }
            if let Some(v) = td.radius {
                s.radius = Some(v);
                s.minimal_radius = false;
            }
            if td.minimal_radius {
                s.minimal_radius = true;
                s.radius = None;
            }
            if let Some(v) = td.p {
                s.p = Some(v);
            }
            if let Some(v) = td.u {
                s.u = Some(v);
            }
            if let Some(v) = td.clip {
                s.clip = v.into();
            }
            if let Some(v) = td.step {
                s.step = v.into();
            }
            if let Some(v) = td.eta {
                s.eta = Some(v);
            }
            if let Some(v) = td.delta {
                s.delta = v;
            }
            if td.markovian {
                s.sampling = Sampling::Markovian;
            }
            run(spec, common.workers)?;
        }
        Command::RunNac { common, env, nac } => {
            let mut spec = base_spec(&common, &env, vec![Algorithm::RobustNac])?;
            spec.algorithms = vec![Algorithm::RobustNac];
            let s = &mut spec.nac;
            if let Some(v) = nac.iterations {
                s.iterations = v;
            }
            if let Some(v) = nac.critic_horizon {
                s.horizon = v;
            }
            if let Some(v) = nac.delta {
                s.delta = v;
            }
            if let Some(v) = nac.radius {
                s.radius = Some(v);
            }
            if let Some(v) = nac.actor_step {
                s.actor_step = Some(v);
            }
            if let Some(v) = nac.critic_eta {
                s.critic_eta = Some(v);
            }
            run(spec, common.workers)?;
        }
        Command::Report { dir } => {
            let rep = harness::report(&dir)?;
            for p in &rep.plots {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
