//! Robust natural actor-critic on a small random MDP: once with the
//! analytical schedules, once with hand-tuned ones.

use robust_td::env::{make_random_mdp, NoiseSpec};
use robust_td::nac::{run_robust_nac, NacConfig};
use robust_td::td::StepSchedule;

fn main() -> robust_td::Result<()> {
    let mdp = make_random_mdp(8, 3, 0.9, NoiseSpec::pareto(1.4), 11)?;
    let theory = NacConfig::theory(&mdp, 50, 2000, 0.1, None)?;
    let mut tuned = theory.clone();
    tuned.actor_step = 1.0;
    tuned.critic.step = StepSchedule::Fixed { eta: 0.05 };

    for (name, cfg) in [("theory", &theory), ("tuned", &tuned)] {
        let res = run_robust_nac(&mdp, cfg, 1)?;
        let first = res.records[0].gap;
        println!(
            "{name:<7} α = {:.3e}  gap(k=1) = {first:.4}  best gap = {:.4}  final critic μ-MSE = {:.3e}",
            cfg.actor_step,
            res.best_iterate_gap,
            res.records.last().unwrap().critic_mse
        );
    }
    Ok(())
}
