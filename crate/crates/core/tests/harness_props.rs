use std::path::Path;

use proptest::prelude::*;

use robust_td::env::{EnvRecipe, NoiseSpec};
use robust_td::harness::aggregate::{median, nearest_rank};
use robust_td::harness::*;
use robust_td::td::{RecordGrid, Sampling};

fn small_mrp(noise: NoiseSpec) -> EnvRecipe {
    EnvRecipe::RandomMrp { n_states: 16, dim: 3, gamma: 0.9, noise, rho: 30.0 }
}

fn small_spec(dir: &Path) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(
        "small",
        small_mrp(NoiseSpec::pareto(1.4)),
        vec![Algorithm::RobustTd, Algorithm::PlainTd],
        dir,
    );
    spec.n_trials = 6;
    spec.base_seed = 42;
    spec.td.horizon = 2000;
    spec
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let a = small_spec(&tmp.path().join("a"));
    let mut b = a.clone();
    b.output_dir = tmp.path().join("b");
    run_experiment_with_workers(&a, 1).unwrap();
    run_experiment_with_workers(&b, 4).unwrap();
    let fa = files_under(&a.output_dir);
    let fb = files_under(&b.output_dir);
    assert_eq!(fa.len(), fb.len());
    assert!(fa.len() > 20);
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na == "spec.toml" {
            let strip = |b: &[u8]| -> String {
                String::from_utf8_lossy(b).lines().filter(|l| !l.starts_with("output_dir")).collect()
            };
            assert_eq!(strip(ba), strip(bb));
        } else {
            assert!(ba == bb, "{na} differs");
        }
    }
}

#[test]
fn experiment_layout_and_pairing() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_spec(tmp.path());
    let res = run_experiment(&spec).unwrap();
    assert_eq!(res.td_trials.len(), 12);
    assert!(res.unpaired_trials().is_empty());
    for name in ["spec.toml", "env.json", "streams.csv", "run.json"] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }
    assert!(tmp.path().join("trials/robust_td_trial_0005.csv").exists());
    assert!(tmp.path().join("trials/robust_td_trial_0005.csv.meta.json").exists());
    assert!(tmp.path().join("aggregate").is_dir());
    assert!(tmp.path().join("plots/comparison_mse_avg.svg").exists());
    let agg = res.aggregate(Algorithm::RobustTd, "mse_avg").unwrap();
    assert_eq!(agg.n_trials, 6);
    assert!(agg.points.iter().all(|p| p.q10 <= p.median && p.median <= p.q90));
    // The recorded environment reloads to the one used.
    let env = robust_td::env::EnvFile::load(&tmp.path().join("env.json")).unwrap();
    assert_eq!(env, res.env);
    // Trial seeds differ.
    let seeds: std::collections::BTreeSet<u64> = (0..6).map(|i| trial_seed(42, i)).collect();
    assert_eq!(seeds.len(), 6);
}

#[test]
fn noiseless_single_trial_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let recipe = EnvRecipe::RandomMrp { n_states: 64, dim: 4, gamma: 0.9, noise: NoiseSpec::None, rho: 30.0 };
    let mut spec = ExperimentSpec::new("noiseless", recipe, vec![Algorithm::RobustTd], tmp.path());
    spec.n_trials = 1;
    spec.base_seed = 5;
    spec.td.horizon = 100_000;
    let res = run_experiment(&spec).unwrap();
    let last = res.td_trials[0].result.final_point().unwrap();
    assert!(last.mse_last <= 1e-4, "{last:?}");
}

#[test]
fn nac_experiment_writes_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let recipe = EnvRecipe::RandomMdp { n_states: 4, n_actions: 2, gamma: 0.9, noise: NoiseSpec::pareto(1.4) };
    let mut spec = ExperimentSpec::new("nac", recipe, vec![Algorithm::RobustNac], tmp.path());
    spec.n_trials = 2;
    spec.nac.iterations = 5;
    spec.nac.horizon = 200;
    spec.nac.weight_stride = 2;
    let res = run_experiment(&spec).unwrap();
    assert_eq!(res.nac_trials.len(), 2);
    assert!(tmp.path().join("weights/robust_nac_trial_0001.csv").exists());
    let gaps = output::read_nac_gaps(&tmp.path().join("trials/robust_nac_trial_0000.csv")).unwrap();
    assert_eq!(gaps.len(), 5);
    assert!(res.aggregate(Algorithm::RobustNac, "best_gap").is_some());
}

#[test]
fn aggregate_examples() {
    let a = aggregate("x", "m", &[vec![(1, 2.0), (10, 0.5)]]).unwrap();
    for p in &a.points {
        assert!(p.mean == p.median && p.median == p.q10 && p.q10 == p.q90);
    }
    let a = aggregate("x", "m", &[vec![(1, 1.0)], vec![(1, 3.0)]]).unwrap();
    assert_eq!((a.points[0].mean, a.points[0].median), (2.0, 2.0));
    assert!(aggregate("x", "m", &[]).is_err());
    assert!(aggregate("x", "m", &[vec![(1, 1.0)], vec![(2, 1.0)]]).is_err());
}

#[test]
fn quantiles_of_a_known_population() {
    // Curve i is the constant i/1000; the population at every t is {0.001, ..., 1}.
    let mut order: Vec<usize> = (1..=1000).collect();
    let mut state = 12345u64;
    for i in (1..order.len()).rev() {
        state = robust_td::mix64(state);
        order.swap(i, (state % (i as u64 + 1)) as usize);
    }
    let curves: Vec<Vec<(usize, f64)>> = order.iter().map(|&i| vec![(1, i as f64 / 1000.0), (2, i as f64 / 1000.0)]).collect();
    let a = aggregate("x", "m", &curves).unwrap();
    for p in &a.points {
        assert_eq!(p.q10, 0.1);
        assert_eq!(p.q90, 0.9);
        assert_eq!(p.median, 0.5 * (0.5 + 0.501));
        assert!((p.mean - 0.5005).abs() < 1e-12);
    }
    assert_eq!(nearest_rank(&[1.0, 2.0, 3.0], 0.0), 1.0);
    assert_eq!(nearest_rank(&[1.0, 2.0, 3.0], 1.0), 3.0);
    assert_eq!(median(&[1.0, 2.0, 3.0]), 2.0);
}

#[test]
fn plots_need_data() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(emit_plots(tmp.path(), &[]).is_err());
    let agg = aggregate("robust_td", "mse_avg", &[vec![(1, 1.0), (10, 0.1)]]).unwrap();
    let empty = PlotSet { algorithm: "robust_td".into(), metric: "mse_avg".into(), trials: vec![], aggregate: agg.clone() };
    assert!(emit_plots(tmp.path(), &[empty]).is_err());
    let one = PlotSet {
        algorithm: "robust_td".into(),
        metric: "mse_avg".into(),
        trials: vec![vec![(1, 1.0), (10, 0.1)]],
        aggregate: agg,
    };
    let written = emit_plots(tmp.path(), &[one]).unwrap();
    assert_eq!(written.len(), 1);
    let svg = std::fs::read_to_string(&written[0]).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains(">t<") && svg.contains("μ-MSE"));
}

#[test]
fn report_on_an_empty_directory_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(report(tmp.path()).is_err());
}

#[test]
fn report_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_spec(tmp.path());
    run_experiment(&spec).unwrap();
    let before = files_under(&tmp.path().join("aggregate"));
    std::fs::remove_dir_all(tmp.path().join("aggregate")).unwrap();
    report(tmp.path()).unwrap();
    assert_eq!(before, files_under(&tmp.path().join("aggregate")));
}

#[test]
fn validate_reports_every_problem() {
    let mut spec = small_spec(Path::new("/tmp/unused"));
    spec.n_trials = 0;
    spec.algorithms = vec![Algorithm::RobustTd, Algorithm::RobustTd, Algorithm::RobustNac];
    spec.td.p = Some(1.5);
    spec.td.delta = 0.0;
    spec.td.radius = Some(-1.0);
    let Err(robust_td::Error::Config(problems)) = spec.validate() else {
        panic!("expected a configuration error");
    };
    // n_trials, duplicates, NAC on an MRP recipe, p, delta, radius.
    assert!(problems.len() >= 6, "{problems:?}");
    assert!(run_experiment(&spec).is_err());
}

#[test]
fn hash_ignores_output_dir_only() {
    let a = small_spec(Path::new("/tmp/a"));
    let mut b = a.clone();
    b.output_dir = "/elsewhere".into();
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    b.base_seed += 1;
    assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    assert_eq!(a.hash().unwrap().len(), 16);
}

#[test]
fn unknown_toml_fields_are_rejected() {
    let spec = small_spec(Path::new("/tmp/x"));
    let text = spec.to_toml().unwrap().replace("[td]", "[td]\nhorizn = 5");
    assert!(ExperimentSpec::from_toml(&text).is_err());
}

fn clip_kind() -> impl Strategy<Value = ClipKind> {
    prop_oneof![
        Just(ClipKind::MomentGrowth),
        Just(ClipKind::Linear),
        Just(ClipKind::HighProbability),
        Just(ClipKind::FixedHorizon),
        Just(ClipKind::Unbounded),
    ]
}

fn step_kind() -> impl Strategy<Value = StepKind> {
    prop_oneof![
        Just(StepKind::ExpectedIid),
        Just(StepKind::Diminishing),
        Just(StepKind::Markovian),
        Just(StepKind::HighProbability),
        Just(StepKind::Fixed),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spec_round_trips_through_toml(
        name in "[a-z][a-z0-9_]{0,12}",
        n_trials in 1usize..1000,
        base_seed in any::<u64>(),
        horizon in 1usize..10_000_000,
        radius in prop::option::of(0.01f64..1e4),
        p in prop::option::of(0.01f64..1.0),
        eta in prop::option::of(1e-8f64..10.0),
        tail in 1.01f64..5.0,
        clip in clip_kind(),
        step in step_kind(),
        markov in any::<bool>(),
        stride in prop::option::of(1usize..1000),
    ) {
        let mut spec = ExperimentSpec::new(
            name,
            small_mrp(NoiseSpec::pareto(tail)),
            vec![Algorithm::PlainTd, Algorithm::RobustTd],
            "/tmp/out",
        );
        spec.n_trials = n_trials;
        spec.base_seed = base_seed;
        spec.td.horizon = horizon;
        spec.td.radius = radius;
        spec.td.p = p;
        spec.td.eta = eta;
        spec.td.clip = clip;
        spec.td.step = step;
        spec.td.sampling = if markov { Sampling::Markovian } else { Sampling::Iid };
        spec.td.record = match stride {
            Some(every) => RecordGrid::Stride { every },
            None => RecordGrid::Geometric,
        };
        let text = spec.to_toml().unwrap();
        let back = ExperimentSpec::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(back.hash().unwrap(), spec.hash().unwrap());
    }

    #[test]
    fn aggregate_ignores_trial_order(vals in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 3), 1..40), seed in any::<u64>()) {
        let curves: Vec<Vec<(usize, f64)>> = vals.iter().map(|v| vec![(1, v[0]), (2, v[1]), (4, v[2])]).collect();
        let mut shuffled = curves.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = robust_td::mix64(s);
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let a = aggregate("x", "m", &curves).unwrap();
        let b = aggregate("x", "m", &shuffled).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert_eq!(p.median, q.median);
            prop_assert_eq!(p.q10, q.q10);
            prop_assert_eq!(p.q90, q.q90);
            prop_assert!((p.mean - q.mean).abs() <= 1e-12 * (1.0 + p.mean.abs()));
            prop_assert!(p.q10 <= p.median && p.median <= p.q90);
        }
    }
}
