//! Save an environment to JSON, reload it, and check it matches a rebuild
//! from its recipe and seed.

use robust_td::env::{EnvFile, EnvRecipe, Environment, NoiseSpec};

fn main() -> robust_td::Result<()> {
    let recipe = EnvRecipe::RandomMdp { n_states: 6, n_actions: 3, gamma: 0.95, noise: NoiseSpec::pareto(1.3) };
    let file = EnvFile::generate(recipe.clone(), 99)?;
    let dir = std::env::temp_dir().join("robust_td_env_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("mdp.json");
    file.save(&path)?;

    let loaded = EnvFile::load(&path)?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    println!("reloaded equals original: {}", loaded == file);
    println!("rebuild from recipe equals file: {}", recipe.build(loaded.seed)? == loaded.env);
    if let Environment::Mdp { mdp } = &loaded.env {
        println!("{} states, {} actions, γ = {}", mdp.n_states, mdp.n_actions, mdp.discount);
    }
    Ok(())
}
