//! iid and single-trajectory sampling from the same chain.

use robust_td::env::{make_random_mrp, IidSampler, MarkovSampler, NoiseSpec, Transition};
use robust_td::matrix::l1_distance;
use robust_td::oracle::stationary_distribution;
use robust_td::rng_from_seed;

fn occupancy(stream: &[Transition], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for tr in stream {
        c[tr.x] += 1.0 / stream.len() as f64;
    }
    c
}

fn main() -> robust_td::Result<()> {
    let (mrp, _) = make_random_mrp(10, 2, 0.9, NoiseSpec::pareto(1.4), 30.0, 2)?;
    let mu = stationary_distribution(&mrp.transition)?.mu;
    for len in [1_000, 100_000] {
        let iid: Vec<Transition> = IidSampler::new(&mrp, &mu, rng_from_seed(1))?.take(len).collect();
        let chain: Vec<Transition> = MarkovSampler::new(&mrp, &mu, rng_from_seed(1))?.take(len).collect();
        let linked = chain.windows(2).all(|w| w[0].x_next == w[1].x);
        println!(
            "n = {len:>6}: TV(iid, μ) = {:.4}  TV(trajectory, μ) = {:.4}  trajectory linked: {linked}",
            0.5 * l1_distance(&occupancy(&iid, 10), &mu),
            0.5 * l1_distance(&occupancy(&chain, 10), &mu),
        );
    }
    Ok(())
}
