use std::path::Path;
use std::process::{Command, Output};

fn rtd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtd"))
        .args(args)
        .env_remove("RTD_WORKERS")
        .output()
        .expect("failed to start rtd")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "rtd failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_env_then_run_td_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let env = tmp.path().join("env.json");
    ok(&rtd(&[
        "gen-env", "--recipe", "random-mrp", "--n-states", "12", "--dim", "3", "--tail-index", "1.4", "--seed", "3",
        "--out", s(&env),
    ]));
    let loaded = robust_td::env::EnvFile::load(&env).unwrap();
    assert_eq!(loaded.seed, 3);

    let out_dir = tmp.path().join("td");
    let stdout = ok(&rtd(&[
        "run-td", "--env-file", s(&env), "--n-trials", "3", "--horizon", "500", "--output-dir", s(&out_dir),
        "--workers", "2",
    ]));
    assert!(stdout.contains("robust_td") && stdout.contains("plain_td"), "{stdout}");
    assert!(out_dir.join("trials/plain_td_trial_0002.csv").exists());
    assert!(out_dir.join("plots/comparison_mse_avg.svg").exists());
}

#[test]
fn config_file_with_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let mut spec = robust_td::harness::ExperimentSpec::new(
        "cfg",
        robust_td::env::EnvRecipe::CircularWalk {
            n_states: 20,
            dim: 2,
            gamma: 0.9,
            noise: robust_td::env::NoiseSpec::pareto(1.2),
            rho: 30.0,
        },
        vec![robust_td::harness::Algorithm::RobustTd],
        "/nowhere",
    );
    spec.n_trials = 50;
    spec.td.horizon = 300;
    let cfg = tmp.path().join("spec.toml");
    std::fs::write(&cfg, spec.to_toml().unwrap()).unwrap();
    ok(&rtd(&["run-td", "--config", s(&cfg), "--n-trials", "2", "--output-dir", s(&out_dir), "--markovian"]));
    let written = robust_td::harness::ExperimentSpec::load(&out_dir.join("spec.toml")).unwrap();
    assert_eq!(written.n_trials, 2);
    assert_eq!(written.td.horizon, 300);
    assert_eq!(written.td.sampling, robust_td::td::Sampling::Markovian);
    assert_eq!(written.algorithms, vec![robust_td::harness::Algorithm::RobustTd]);
}

#[test]
fn run_nac_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("nac");
    ok(&rtd(&[
        "run-nac", "--recipe", "random-mdp", "--n-states", "3", "--n-actions", "2", "--iterations", "3",
        "--critic-horizon", "100", "--n-trials", "2", "--output-dir", s(&out_dir),
    ]));
    std::fs::remove_dir_all(out_dir.join("plots")).unwrap();
    let stdout = ok(&rtd(&["report", s(&out_dir)]));
    assert!(stdout.contains("robust_nac_gap_trials.svg"), "{stdout}");
}

#[test]
fn bad_input_fails_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rtd(&["report", s(tmp.path())]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());

    let out = rtd(&["run-td", "--recipe", "random-mrp", "--n-states", "8", "--dim", "2", "--n-trials", "0",
        "--output-dir", s(&tmp.path().join("x"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_trials"));

    let out = rtd(&["run-td", "--recipe", "random-mrp", "--n-states", "8", "--output-dir", s(tmp.path())]);
    assert!(!out.status.success());
}
