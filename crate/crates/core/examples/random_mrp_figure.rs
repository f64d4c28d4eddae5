//! Multi-trial experiment on a random MRP: per-trial CSVs, aggregates and SVG
//! plots under `target/random_mrp_figure` (or the first argument).

use robust_td::env::{EnvRecipe, NoiseSpec};
use robust_td::harness::{run_experiment, Algorithm, ExperimentSpec};

fn main() -> robust_td::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/random_mrp_figure".into());
    let recipe = EnvRecipe::RandomMrp { n_states: 128, dim: 16, gamma: 0.9, noise: NoiseSpec::pareto(1.2), rho: 30.0 };
    let mut spec = ExperimentSpec::new("random_mrp", recipe, vec![Algorithm::RobustTd, Algorithm::PlainTd], out);
    spec.n_trials = 40;
    spec.base_seed = 2024;
    spec.td.horizon = 20_000;

    let res = run_experiment(&spec)?;
    for a in &res.report.aggregates {
        let p = a.last().unwrap();
        println!("{:<10} {:<8} mean {:.4e}  median {:.4e}  q90 {:.4e}", a.algorithm, a.metric, p.mean, p.median, p.q90);
    }
    println!("{} plots in {}", res.report.plots.len(), res.output_dir.join("plots").display());
    Ok(())
}
