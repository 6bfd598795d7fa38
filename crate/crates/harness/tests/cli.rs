use std::path::Path;
use std::process::Command;

use ovdx::config::{Algorithm, ExperimentConfig};
use ovdx::heatmap::VisitGrid;
use ovdx::metrics::read_metrics;
use ovdx::runner::{metrics_path, run_experiment, summary_path, visits_path};
use ovdx::summary::{summarize_dir, Summary};
use proptest::prelude::*;

fn ovdx(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ovdx"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// A run small enough for a unit test: a few epochs of a tiny agent.
fn quick_overrides() -> Vec<&'static str> {
    vec![
        "--set",
        "epochs=3",
        "--set",
        "steps_per_epoch=40",
        "--set",
        "warmup_steps=40",
        "--set",
        "eval_episodes=2",
        "--set",
        "agent.batch_size=16",
        "--set",
        "agent.hidden=[8]",
        "--set",
        "agent.quantiles=5",
    ]
}

fn train(dir: &Path, extra: &[&str]) -> std::process::Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["train", "--out-dir", out, "--jobs", "2"];
    args.extend(quick_overrides());
    args.extend_from_slice(extra);
    ovdx(&args)
}

#[test]
fn train_summarize_heatmap_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), &["--seeds", "3,5", "--algo", "ovde_q"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    for seed in [3, 5] {
        let rows = read_metrics(&metrics_path(dir.path(), seed)).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.epoch).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        let grid =
            VisitGrid::from_csv(&std::fs::read_to_string(visits_path(dir.path(), seed)).unwrap())
                .unwrap();
        assert_eq!((grid.width(), grid.height()), (50, 50));
        assert_eq!(grid.total(), 3 * 40);
    }
    let resolved = ExperimentConfig::from_toml(
        &std::fs::read_to_string(dir.path().join("config.toml")).unwrap(),
    )
    .unwrap();
    assert_eq!(resolved.algorithm, Algorithm::OvdeQ);
    assert_eq!(resolved.seeds, vec![3, 5]);

    let emitted =
        Summary::from_toml(&std::fs::read_to_string(summary_path(dir.path())).unwrap()).unwrap();
    assert_eq!(summarize_dir(dir.path()).unwrap(), emitted);
    let out = ovdx(&["summarize", "--in-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let rewritten =
        Summary::from_toml(&std::fs::read_to_string(summary_path(dir.path())).unwrap()).unwrap();
    assert_eq!(rewritten, emitted);

    let out = ovdx(&["heatmap", "--in-dir", dir.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let pgm = std::fs::read_to_string(dir.path().join("heatmap_seed3.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n"));
    assert!(pgm.contains("origin top-left"));
    let grid = VisitGrid::from_csv(
        &std::fs::read_to_string(dir.path().join("heatmap_seed5.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(grid.total(), 120);
}

#[test]
fn single_epoch_gives_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), &["--seeds", "1", "--set", "epochs=1"]);
    assert!(out.status.success());
    assert_eq!(read_metrics(&metrics_path(dir.path(), 1)).unwrap().len(), 1);
}

#[test]
fn repeated_runs_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert!(train(dir.path(), &["--seeds", "2", "--algo", "ovde_g"])
            .status
            .success());
    }
    for name in ["metrics_seed2.csv", "visits_seed2.csv", "summary.toml"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn every_algorithm_trains() {
    for algo in Algorithm::ALL {
        let mut config = ExperimentConfig::from_toml_with(
            "",
            &[
                "epochs=2",
                "steps_per_epoch=30",
                "warmup_steps=20",
                "eval_episodes=1",
                "agent.batch_size=8",
                "agent.hidden=[8]",
                "seeds=[0]",
            ],
        )
        .unwrap();
        config.algorithm = algo;
        let dir = tempfile::tempdir().unwrap();
        let (summary, runs) = run_experiment(&config, dir.path(), 1).unwrap();
        assert_eq!(runs[0].metrics.len(), 2, "{algo}");
        assert_eq!(summary.seeds.len(), 1);
        let optimistic = runs[0].metrics[1].shift_norm_mean > 0.0;
        assert_eq!(optimistic, algo.explores_optimistically(), "{algo}");
    }
}

#[test]
fn invalid_config_fails_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[explorer]\nc_norm = -1.0\n").unwrap();
    let out = ovdx(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("explorer.c_norm"));

    let out = ovdx(&[
        "train",
        "--algo",
        "ppo",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn empty_directories_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        !ovdx(&["summarize", "--in-dir", dir.path().to_str().unwrap()])
            .status
            .success()
    );
    assert!(
        !ovdx(&["heatmap", "--in-dir", dir.path().to_str().unwrap()])
            .status
            .success()
    );
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        prop::sample::select(Algorithm::ALL.to_vec()),
        prop::collection::vec(any::<u32>(), 1..5),
        (1usize..5000, 1usize..500, 0usize..5000, 1usize..20),
        (
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..1.0f64,
            1usize..512,
            1usize..64,
        ),
        (0.0..1.0f64, 0.0..10.0f64, 1e-3..1.0f64, 0usize..8),
        (
            prop::array::uniform4(0.0..2.0f64),
            1e-3..0.5f64,
            1usize..500,
        ),
    )
        .prop_map(
            |(
                algorithm,
                seeds,
                (epochs, spe, warm, evals),
                (gamma, tau, lr, batch, n),
                (alpha, beta, c, k),
                (noise, radius, steps),
            )| {
                let mut cfg = ExperimentConfig {
                    algorithm,
                    seeds: seeds.into_iter().map(u64::from).collect(),
                    ..Default::default()
                };
                cfg.epochs = epochs;
                cfg.steps_per_epoch = spe;
                cfg.warmup_steps = warm;
                cfg.eval_episodes = evals;
                cfg.agent.gamma = gamma;
                cfg.agent.tau = tau;
                cfg.agent.learning_rate = lr;
                cfg.agent.batch_size = batch;
                cfg.agent.quantiles = n;
                cfg.explorer.explore_alpha = alpha;
                cfg.explorer.beta = beta;
                cfg.explorer.c_norm = c;
                cfg.explorer.k_samples = k;
                cfg.env.quadrant_noise = noise;
                cfg.env.goal_radius = radius;
                cfg.env.max_steps = steps;
                cfg
            },
        )
}

proptest! {
    #[test]
    fn config_round_trips(config in config_strategy()) {
        let text = config.to_toml();
        let parsed = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&parsed, &config);
        prop_assert_eq!(parsed.to_toml(), text);
    }
}
