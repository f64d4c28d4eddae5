//! Centered Pareto noise: the running second moment never settles, while a
//! low-order moment does.

use robust_td::env::NoiseSpec;
use robust_td::rng_from_seed;

fn main() {
    let alpha = 1.4;
    let noise = NoiseSpec::pareto(alpha);
    let p = noise.default_moment_order();
    println!("tail index {alpha}: E N = {:.3}, moment order p = {p:.2}", noise.raw_mean());
    println!("E|r + N - EN|^(1+p) <= {:.3} for |r| <= 1", noise.moment_bound(p, 1.0));

    let mut rng = rng_from_seed(0);
    let (mut sum2, mut sum_half, mut n) = (0.0, 0.0, 0usize);
    println!("{:>10} {:>14} {:>14}", "draws", "mean N²", "mean |N|^0.5");
    for k in 1..=7 {
        let target = 10usize.pow(k);
        while n < target {
            let x = noise.sample(&mut rng);
            sum2 += x * x;
            sum_half += x.abs().sqrt();
            n += 1;
        }
        println!("{n:>10} {:>14.3} {:>14.3}", sum2 / n as f64, sum_half / n as f64);
    }
}
