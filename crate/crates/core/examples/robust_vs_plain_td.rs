//! Robust and plain TD on one heavy-tailed environment, fed the same
//! transition stream.

use robust_td::env::{make_random_mrp, IidSampler, NoiseSpec, Transition};
use robust_td::oracle::feature_gram;
use robust_td::rng_from_seed;
use robust_td::td::{run_plain_td_on_stream, run_robust_td_on_stream, Evaluation, TdConfig};

fn main() -> robust_td::Result<()> {
    let (mrp, features) = make_random_mrp(64, 4, 0.9, NoiseSpec::pareto(1.4), 30.0, 7)?;
    let eval = Evaluation::exact(&mrp)?;
    let lambda_min = feature_gram(&eval.mu, &features)?.lambda_min;
    let horizon = 100_000;
    let cfg = TdConfig::full_rank(horizon, 30.0, 0.9, lambda_min, 1.0, 0.35);

    println!("λ_min = {lambda_min:.4}");
    println!("{:>5} {:>12} {:>12} {:>8}", "seed", "robust", "plain", "clipped");
    for seed in 0..8u64 {
        let stream: Vec<Transition> = IidSampler::new(&mrp, &eval.mu, rng_from_seed(seed))?.take(horizon).collect();
        let robust = run_robust_td_on_stream(&features, 0.9, &eval, &cfg, stream.iter().copied(), seed)?;
        let plain = run_plain_td_on_stream(&features, 0.9, &eval, &cfg, stream, seed)?;
        println!(
            "{seed:>5} {:>12.4e} {:>12.4e} {:>8}",
            robust.final_point().unwrap().mse_last,
            plain.final_point().unwrap().mse_last,
            robust.clip_count
        );
    }
    Ok(())
}
