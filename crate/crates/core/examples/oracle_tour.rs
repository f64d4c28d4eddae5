//! Exact quantities used to score learning runs.

use robust_td::env::{make_random_mdp, make_random_mrp, NoiseSpec};
use robust_td::matrix::Matrix;
use robust_td::oracle::*;

fn main() -> robust_td::Result<()> {
    let (mrp, features) = make_random_mrp(32, 4, 0.9, NoiseSpec::None, 30.0, 3)?;
    let mu = stationary_distribution(&mrp.transition)?.mu;
    let v = exact_value(&mrp.transition, &mrp.mean_reward, 0.9)?.v;
    let gram = feature_gram(&mu, &features)?;
    println!("stationary residual  {:.2e}", stationary_residual(&mrp.transition, &mu));
    println!("λ_min(Λ)             {:.5}", gram.lambda_min);
    println!("μ-MSE at Θ = 0       {:.5}", mu_mse(&[0.0; 4], &features, &v, &mu));
    println!("μ-MSE at Θ★          {:.2e}", mu_mse(features.theta_star.as_ref().unwrap(), &features, &v, &mu));
    for t in [1, 2, 4, 8] {
        println!("max TV after {t} steps {:.3e}", max_tv_distance(&mrp.transition, &mu, t));
    }
    println!("mixing time (m = 2, ζ = 0.5, ρ = 30, u = 100, T = 1e5, p = 0.3): {}", mixing_time(2.0, 0.5, 30.0, 100.0, 1e5, 0.3)?);

    let mdp = make_random_mdp(5, 2, 0.9, NoiseSpec::None, 1)?;
    let uniform = Matrix::from_row_major(5, 2, vec![0.5; 10])?;
    let q = exact_q(&mdp, &uniform)?;
    let lambda = vec![0.2; 5];
    let d = discounted_visitation(&mdp.state_kernel(&uniform), &lambda, 0.9)?;
    println!("V^unif(λ) = {:.4}, visitation {:?}", q.value_at(&lambda), d.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>());
    Ok(())
}
