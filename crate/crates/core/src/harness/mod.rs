//! Seeded multi-trial experiments: one shared environment, per-trial CSVs with
//! metadata sidecars, aggregate curves and SVG figures.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! spec.toml  env.json  run.json  streams.csv
//! trials/{algorithm}_trial_{i:04}.csv      (+ .meta.json)
//! weights/robust_nac_trial_{i:04}.csv      (+ .meta.json)
//! aggregate/{algorithm}_{metric}.csv       (+ .meta.json)
//! plots/*.svg
//! ```

pub mod aggregate;
pub mod output;
pub mod plot;
pub mod spec;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::env::{EnvFile, FeatureMap, IidSampler, MarkovRewardProcess, MarkovSampler, Transition};
use crate::error::{Error, Result};
use crate::nac::{run_robust_nac, NacConfig, NacRunResult};
use crate::td::{
    run_plain_td_on_stream, run_robust_td_on_stream, ErrorPoint, Evaluation, Sampling, TdConfig, TdRunResult,
};
use crate::{derive_seed, rng_from_seed};

pub use aggregate::{aggregate, AggregateCurve, AggregatePoint};
pub use plot::{emit_plots, PlotSet};
pub use spec::{Algorithm, ClipKind, ExperimentSpec, NacSettings, StepKind, TdSettings};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "RTD_WORKERS";

/// Horizons up to this many steps are drawn once and replayed for every
/// algorithm; longer streams are regenerated from the trial seed instead.
pub const PREDRAW_LIMIT: usize = 2_000_000;

pub const TD_METRICS: [&str; 2] = ["mse_avg", "mse_last"];
pub const NAC_METRICS: [&str; 2] = ["gap", "best_gap"];

/// Worker count from `RTD_WORKERS`, falling back to the number of CPUs.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Seed of trial `i`.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    derive_seed(base_seed, trial as u64)
}

/// Transitions a TD trial consumes, as a boxed iterator.
pub fn transition_stream<'a>(
    mrp: &'a MarkovRewardProcess,
    mu: &[f64],
    sampling: Sampling,
    seed: u64,
) -> Result<Box<dyn Iterator<Item = Transition> + Send + 'a>> {
    let rng = rng_from_seed(seed);
    Ok(match sampling {
        Sampling::Iid => Box::new(IidSampler::new(mrp, mu, rng)?),
        Sampling::Markovian => Box::new(MarkovSampler::new(mrp, mu, rng)?),
    })
}

/// Feeds every transition of a stream into SHA-256.
pub fn hash_transition(h: &mut Sha256, tr: &Transition) {
    h.update((tr.t as u64).to_le_bytes());
    h.update((tr.x as u64).to_le_bytes());
    h.update(tr.reward.to_bits().to_le_bytes());
    h.update((tr.x_next as u64).to_le_bytes());
}

/// Hex digest of the first `len` transitions of a stream.
pub fn stream_checksum(stream: impl IntoIterator<Item = Transition>, len: usize) -> String {
    let mut h = Sha256::new();
    for tr in stream.into_iter().take(len) {
        hash_transition(&mut h, &tr);
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug)]
pub struct TdTrial {
    pub algorithm: Algorithm,
    pub trial: usize,
    /// SHA-256 of the transitions this run consumed.
    pub stream_sha256: String,
    pub result: TdRunResult,
}

#[derive(Clone, Debug)]
pub struct NacTrial {
    pub trial: usize,
    pub result: NacRunResult,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub output_dir: PathBuf,
    pub spec_hash: String,
    pub env: EnvFile,
    pub td_config: Option<TdConfig>,
    pub nac_config: Option<NacConfig>,
    /// Ordered by trial, then by the order of `spec.algorithms`.
    pub td_trials: Vec<TdTrial>,
    pub nac_trials: Vec<NacTrial>,
    pub report: Report,
}

impl ExperimentResult {
    /// Per-trial `(t, value)` curves of one TD metric, ordered by trial.
    pub fn td_curves(&self, algorithm: Algorithm, metric: &str) -> Vec<Vec<(usize, f64)>> {
        self.td_trials
            .iter()
            .filter(|t| t.algorithm == algorithm)
            .map(|t| td_metric(&t.result.error_curve, metric))
            .collect()
    }

    pub fn aggregate(&self, algorithm: Algorithm, metric: &str) -> Option<&AggregateCurve> {
        self.report
            .aggregates
            .iter()
            .find(|a| a.algorithm == algorithm.tag() && a.metric == metric)
    }

    /// Trials whose robust and plain runs consumed different streams.
    pub fn unpaired_trials(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for r in self.td_trials.iter().filter(|t| t.algorithm == Algorithm::RobustTd) {
            let p = self
                .td_trials
                .iter()
                .find(|p| p.algorithm == Algorithm::PlainTd && p.trial == r.trial);
            if let Some(p) = p {
                if p.stream_sha256 != r.stream_sha256 {
                    out.push(r.trial);
                }
            }
        }
        out
    }
}

fn td_metric(curve: &[ErrorPoint], metric: &str) -> Vec<(usize, f64)> {
    curve
        .iter()
        .map(|p| (p.t, if metric == "mse_last" { p.mse_last } else { p.mse_avg }))
        .collect()
}

/// Pads a diverged run's curve with NaN up to the full recording grid.
fn pad_curve(result: &mut TdRunResult, grid: &[usize]) {
    let last_t = result.error_curve.last().map_or(0, |p| p.t);
    let clip = result.clip_count;
    for &t in grid.iter().filter(|&&t| t > last_t) {
        result.error_curve.push(ErrorPoint {
            t,
            mse_avg: f64::NAN,
            mse_last: f64::NAN,
            sup_sq_last: f64::NAN,
            clip_count: clip,
        });
    }
}

fn trial_csv(dir: &Path, algorithm: Algorithm, trial: usize) -> PathBuf {
    dir.join("trials").join(format!("{}_trial_{trial:04}.csv", algorithm.tag()))
}

#[derive(Serialize)]
struct ScheduleSample {
    t: usize,
    eta: f64,
    b: f64,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    name: &'a str,
    spec_hash: &'a str,
    base_seed: u64,
    n_trials: usize,
    td_config: Option<&'a TdConfig>,
    schedule_samples: Vec<ScheduleSample>,
    nac_config: Option<&'a NacConfig>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Empty(format!("cannot start worker pool: {e}")))
}

/// Runs every trial of `spec` on [`worker_count`] threads, writes all
/// artifacts and returns the in-memory results.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_with_workers(spec, worker_count())
}

/// As [`run_experiment`] with an explicit thread count. Output does not depend
/// on `workers`.
pub fn run_experiment_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let env = spec.environment()?;
    let dir = spec.output_dir.clone();
    for sub in ["trials", "aggregate", "plots"] {
        std::fs::create_dir_all(dir.join(sub))?;
    }
    let spec_hash = spec.hash()?;
    std::fs::write(dir.join("spec.toml"), spec.to_toml()?)?;
    env.save(&dir.join("env.json"))?;

    let has_td = spec.algorithms.iter().any(|a| a.is_td());
    let has_nac = spec.algorithms.contains(&Algorithm::RobustNac);
    let pool = pool(workers)?;

    let mut td_config = None;
    let mut td_trials = Vec::new();
    if has_td {
        let (mrp, features) = spec::as_mrp(&env.env)?;
        let eval = Evaluation::exact(mrp)?;
        let cfg = spec.td.resolve(env.recipe.as_ref(), mrp, features, &eval)?;
        let algos: Vec<Algorithm> = spec.algorithms.iter().copied().filter(|a| a.is_td()).collect();
        let per_trial: Vec<Result<Vec<TdTrial>>> = pool.install(|| {
            (0..spec.n_trials)
                .into_par_iter()
                .map(|i| run_td_trial(spec, &spec_hash, mrp, features, &eval, &cfg, &algos, i))
                .collect()
        });
        for r in per_trial {
            td_trials.extend(r?);
        }
        write_streams(&dir, spec.base_seed, &td_trials)?;
        td_config = Some(cfg);
    }

    let mut nac_config = None;
    let mut nac_trials = Vec::new();
    if has_nac {
        let mdp = spec::as_mdp(&env.env)?;
        let cfg = spec.nac.resolve(mdp)?;
        std::fs::create_dir_all(dir.join("weights"))?;
        let runs: Vec<Result<NacTrial>> = pool.install(|| {
            (0..spec.n_trials)
                .into_par_iter()
                .map(|i| {
                    let result = run_robust_nac(mdp, &cfg, trial_seed(spec.base_seed, i))?;
                    output::write_nac_trial(&trial_csv(&dir, Algorithm::RobustNac, i), &result, &spec_hash)?;
                    let w = dir.join("weights").join(format!("robust_nac_trial_{i:04}.csv"));
                    output::write_weights(&w, &result, &spec_hash)?;
                    Ok(NacTrial { trial: i, result })
                })
                .collect()
        });
        nac_trials = runs.into_iter().collect::<Result<_>>()?;
        nac_config = Some(cfg);
    }

    let schedule_samples = td_config
        .as_ref()
        .map(|c| {
            c.record
                .points(c.horizon)
                .into_iter()
                .map(|t| ScheduleSample {
                    t,
                    eta: c.step.step(t),
                    b: c.clip.radius(t),
                })
                .collect()
        })
        .unwrap_or_default();
    let meta = RunMetadata {
        name: &spec.name,
        spec_hash: &spec_hash,
        base_seed: spec.base_seed,
        n_trials: spec.n_trials,
        td_config: td_config.as_ref(),
        schedule_samples,
        nac_config: nac_config.as_ref(),
    };
    std::fs::write(dir.join("run.json"), serde_json::to_string_pretty(&meta)?)?;

    let report = report(&dir)?;
    Ok(ExperimentResult {
        output_dir: dir,
        spec_hash,
        env,
        td_config,
        nac_config,
        td_trials,
        nac_trials,
        report,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_td_trial(
    spec: &ExperimentSpec,
    spec_hash: &str,
    mrp: &MarkovRewardProcess,
    features: &FeatureMap,
    eval: &Evaluation,
    cfg: &TdConfig,
    algos: &[Algorithm],
    trial: usize,
) -> Result<Vec<TdTrial>> {
    let seed = trial_seed(spec.base_seed, trial);
    let predrawn: Option<Vec<Transition>> = if cfg.horizon <= PREDRAW_LIMIT {
        Some(transition_stream(mrp, &eval.mu, cfg.sampling, seed)?.take(cfg.horizon).collect())
    } else {
        None
    };
    let grid = cfg.record.points(cfg.horizon);
    let mut out = Vec::with_capacity(algos.len());
    for &algorithm in algos {
        let source: Box<dyn Iterator<Item = Transition> + Send> = match &predrawn {
            Some(v) => Box::new(v.iter().copied()),
            None => transition_stream(mrp, &eval.mu, cfg.sampling, seed)?,
        };
        let mut hasher = Sha256::new();
        let stream = source.inspect(|tr| hash_transition(&mut hasher, tr));
        let mut result = match algorithm {
            Algorithm::RobustTd => run_robust_td_on_stream(features, mrp.discount, eval, cfg, stream, seed)?,
            Algorithm::PlainTd => run_plain_td_on_stream(features, mrp.discount, eval, cfg, stream, seed)?,
            Algorithm::RobustNac => unreachable!("filtered out by the caller"),
        };
        let stream_sha256 = hex::encode(hasher.finalize());
        pad_curve(&mut result, &grid);
        let path = trial_csv(&spec.output_dir, algorithm, trial);
        output::write_td_trial(&path, trial, &result, spec_hash)?;
        out.push(TdTrial {
            algorithm,
            trial,
            stream_sha256,
            result,
        });
    }
    Ok(out)
}

fn write_streams(dir: &Path, base_seed: u64, trials: &[TdTrial]) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("streams.csv"))?;
    w.write_record(["trial", "seed", "algorithm", "stream_sha256"])?;
    for t in trials {
        w.write_record([
            t.trial.to_string(),
            trial_seed(base_seed, t.trial).to_string(),
            t.algorithm.tag().to_string(),
            t.stream_sha256.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregates and figures rebuilt from the CSVs in an output directory.
#[derive(Clone, Debug)]
pub struct Report {
    pub aggregates: Vec<AggregateCurve>,
    pub plots: Vec<PathBuf>,
}

/// Reads `trials/*.csv` under `dir`, writes `aggregate/*.csv` and `plots/*.svg`.
pub fn report(dir: &Path) -> Result<Report> {
    let spec_path = dir.join("spec.toml");
    let (spec_hash, seed) = if spec_path.exists() {
        let spec = ExperimentSpec::load(&spec_path)?;
        (spec.hash()?, spec.base_seed)
    } else {
        (String::new(), 0)
    };
    let trials_dir = dir.join("trials");
    let mut files: Vec<PathBuf> = match std::fs::read_dir(&trials_dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(_) => Vec::new(),
    };
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty(format!("no trial CSVs under {}", trials_dir.display())));
    }

    let mut sets: Vec<PlotSet> = Vec::new();
    for algorithm in [Algorithm::PlainTd, Algorithm::RobustTd, Algorithm::RobustNac] {
        let prefix = format!("{}_trial_", algorithm.tag());
        let mine: Vec<&PathBuf> = files
            .iter()
            .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with(&prefix)))
            .collect();
        if mine.is_empty() {
            continue;
        }
        if algorithm.is_td() {
            let mut by_metric: [Vec<Vec<(usize, f64)>>; 2] = [Vec::new(), Vec::new()];
            for path in &mine {
                let (_, rows) = output::read_td_trial(path)?;
                by_metric[0].push(rows.iter().map(|r| (r.0, r.1)).collect());
                by_metric[1].push(rows.iter().map(|r| (r.0, r.2)).collect());
            }
            for (metric, curves) in TD_METRICS.iter().zip(by_metric) {
                sets.push(plot_set(algorithm, metric, curves)?);
            }
        } else {
            let mut gaps = Vec::new();
            let mut best = Vec::new();
            for path in &mine {
                let g = output::read_nac_gaps(path)?;
                let mut m = f64::INFINITY;
                best.push(
                    g.iter()
                        .map(|&(k, v)| {
                            m = m.min(v);
                            (k, m)
                        })
                        .collect(),
                );
                gaps.push(g);
            }
            sets.push(plot_set(algorithm, NAC_METRICS[0], gaps)?);
            sets.push(plot_set(algorithm, NAC_METRICS[1], best)?);
        }
    }

    let agg_dir = dir.join("aggregate");
    std::fs::create_dir_all(&agg_dir)?;
    for s in &sets {
        let path = agg_dir.join(format!("{}_{}.csv", s.algorithm, s.metric));
        output::write_aggregate(&path, &s.aggregate, &spec_hash, seed)?;
    }
    let plots = emit_plots(&dir.join("plots"), &sets)?;
    Ok(Report {
        aggregates: sets.into_iter().map(|s| s.aggregate).collect(),
        plots,
    })
}

fn plot_set(algorithm: Algorithm, metric: &str, trials: Vec<Vec<(usize, f64)>>) -> Result<PlotSet> {
    let aggregate = aggregate(algorithm.tag(), metric, &trials)?;
    Ok(PlotSet {
        algorithm: algorithm.tag().to_string(),
        metric: metric.to_string(),
        trials,
        aggregate,
    })
}
