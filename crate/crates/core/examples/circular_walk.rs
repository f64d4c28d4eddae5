//! Robust TD on the circular random walk, with Markovian sampling along a
//! single trajectory.

use robust_td::env::{make_circular_walk, NoiseSpec};
use robust_td::oracle::stationary_distribution;
use robust_td::td::{run_robust_td, u_bound, TdConfig};

fn main() -> robust_td::Result<()> {
    let noise = NoiseSpec::pareto(1.2);
    let (mrp, features) = make_circular_walk(128, 8, 0.9, noise, 30.0, 1)?;
    let mu = stationary_distribution(&mrp.transition)?.mu;
    println!("stationary law uniform: {}", mu.iter().all(|m| (m - 1.0 / 128.0).abs() < 1e-12));

    let p = noise.default_moment_order();
    let u = u_bound(noise.moment_bound(p, 1.0), 30.0, p);
    for horizon in [1_000, 10_000, 100_000] {
        let cfg = TdConfig::markovian(horizon, 30.0, u, p);
        let res = run_robust_td(&mrp, &features, &cfg, 5)?;
        let last = res.final_point().unwrap();
        println!("T = {horizon:>6}: μ-MSE(Θ̄) = {:.4e}, dropped {} gradients", last.mse_avg, res.clip_count);
    }
    Ok(())
}
