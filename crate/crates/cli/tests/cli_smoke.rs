//! End-to-end subcommand tests over the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ruptura() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ruptura"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    ruptura()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn write_synth_config(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join("synth.json");
    let config = serde_json::json!({
        "n_regions": 40,
        "n_weeks": 80,
        "noise_sigma": 0.1,
        "ar_coefficient": 0.2,
        "seasonal_amplitude": 0.0,
        "event_week_range": [15, 60],
        "effect_map": {"kind": "linear_in_trend", "delta0": [0.3, 1.5], "delta1": [-0.05, -0.6]},
        "missing_rate": 0.0,
        "seed": seed,
        "event_type": "first_case"
    });
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn generate_data(dir: &Path) {
    write_synth_config(dir, 5);
    let output = run_in(dir, &["synth", "--config", "synth.json", "--out-dir", "data"]);
    assert_success(&output);
}

#[test]
fn synth_writes_all_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    generate_data(dir.path());
    for file in [
        "panel.csv",
        "events.csv",
        "region_meta.csv",
        "embeddings.csv",
        "ground_truth.json",
        "manifest.json",
    ] {
        assert!(dir.path().join("data").join(file).exists(), "{file} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("data/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "synth");
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["inputs"].as_object().unwrap().len() == 1);
}

#[test]
fn full_subcommand_chain_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    generate_data(dir.path());

    let estimate = run_in(
        dir.path(),
        &[
            "estimate",
            "--panel",
            "data/panel.csv",
            "--events",
            "data/events.csv",
            "--event-type",
            "first_case",
            "--out-dir",
            "est",
        ],
    );
    assert_success(&estimate);
    assert!(dir.path().join("est/outcomes.csv").exists());
    assert!(dir.path().join("est/stats.json").exists());
    assert!(dir.path().join("est/manifest.json").exists());

    let features = run_in(
        dir.path(),
        &[
            "features",
            "--panel",
            "data/panel.csv",
            "--events",
            "data/events.csv",
            "--event-type",
            "first_case",
            "--features",
            "P,RC,exog",
            "--embeddings",
            "data/embeddings.csv",
            "--out-dir",
            "feats",
        ],
    );
    assert_success(&features);

    let train = run_in(
        dir.path(),
        &[
            "train",
            "--dataset",
            "feats/dataset.csv",
            "--family",
            "ridge",
            "--seed",
            "42",
            "--out",
            "model.json",
        ],
    );
    assert_success(&train);
    assert!(dir.path().join("model.manifest.json").exists());

    let evaluate = run_in(
        dir.path(),
        &[
            "evaluate",
            "--dataset",
            "feats/dataset.csv",
            "--model",
            "model.json",
            "--baseline",
            "mean",
            "--meta",
            "data/region_meta.csv",
            "--strata",
            "ses",
            "--predictions-out",
            "preds.csv",
            "--out",
            "report.json",
        ],
    );
    assert_success(&evaluate);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["delta0"]["mse"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["vs_baseline"]["baseline"], "mean");
    assert!(report["strata"].is_object());
    assert!(dir.path().join("preds.csv").exists());

    let did = run_in(
        dir.path(),
        &[
            "did",
            "--panel",
            "data/panel.csv",
            "--events",
            "data/events.csv",
            "--meta",
            "data/region_meta.csv",
            "--target",
            "r00007",
            "--event-type",
            "first_case",
            "--k",
            "3",
            "--out",
            "did.json",
        ],
    );
    assert_success(&did);
    let did_result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("did.json")).unwrap())
            .unwrap();
    assert_eq!(did_result["matched_regions"].as_array().unwrap().len(), 3);

    let placebo = run_in(
        dir.path(),
        &[
            "placebo",
            "--panel",
            "data/panel.csv",
            "--episodes",
            "200",
            "--seed",
            "9",
            "--out",
            "placebo.json",
        ],
    );
    assert_success(&placebo);
}

#[test]
fn empty_events_file_gives_empty_outcomes_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    generate_data(dir.path());
    std::fs::write(
        dir.path().join("empty_events.csv"),
        "region_id,event_type,event_week\n",
    )
    .unwrap();
    let output = run_in(
        dir.path(),
        &[
            "estimate",
            "--panel",
            "data/panel.csv",
            "--events",
            "empty_events.csv",
            "--event-type",
            "first_case",
            "--out-dir",
            "est",
        ],
    );
    assert_success(&output);
    let outcomes = std::fs::read_to_string(dir.path().join("est/outcomes.csv")).unwrap();
    assert_eq!(outcomes.lines().count(), 1, "header only");
}

#[test]
fn usage_errors_exit_2_domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    generate_data(dir.path());

    // unknown flag: clap usage error
    let unknown = run_in(dir.path(), &["estimate", "--nope"]);
    assert_eq!(unknown.status.code(), Some(2));

    // invalid hyperparameter, named in the message
    let features = run_in(
        dir.path(),
        &[
            "features",
            "--panel",
            "data/panel.csv",
            "--events",
            "data/events.csv",
            "--event-type",
            "first_case",
            "--features",
            "P,RC",
            "--out-dir",
            "feats",
        ],
    );
    assert_success(&features);
    let bad_alpha = run_in(
        dir.path(),
        &[
            "train",
            "--dataset",
            "feats/dataset.csv",
            "--family",
            "ridge",
            "--alpha",
            "-1",
            "--out",
            "model.json",
        ],
    );
    assert_eq!(bad_alpha.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&bad_alpha.stderr);
    assert!(stderr.contains("alpha"), "stderr: {stderr}");

    // malformed input file: domain error
    std::fs::write(dir.path().join("broken.csv"), "not,a,panel\n1,2,3\n").unwrap();
    let broken = run_in(
        dir.path(),
        &[
            "estimate",
            "--panel",
            "broken.csv",
            "--events",
            "data/events.csv",
            "--event-type",
            "first_case",
            "--out-dir",
            "est2",
        ],
    );
    assert_eq!(broken.status.code(), Some(1));
}

#[test]
fn ingest_applies_transforms_in_order() {
    let dir = tempfile::tempdir().unwrap();
    generate_data(dir.path());
    let output = run_in(
        dir.path(),
        &[
            "ingest",
            "--panel",
            "data/panel.csv",
            "--score-name",
            "score",
            "--min-users",
            "200",
            "--zscore",
            "--out",
            "clean.csv",
        ],
    );
    assert_success(&output);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("clean.manifest.json")).unwrap(),
    )
    .unwrap();
    let log = manifest["config"]["transform_log"].as_array().unwrap();
    assert_eq!(log.len(), 2);
}

#[test]
fn event_dates_convert_with_epoch() {
    let dir = tempfile::tempdir().unwrap();
    generate_data(dir.path());
    // 2019-01-07 is a Monday; 2019-04-29 is 16 weeks later
    std::fs::write(
        dir.path().join("dated_events.csv"),
        "region_id,event_type,event_week\nr00000,first_case,2019-04-29\n",
    )
    .unwrap();
    let output = run_in(
        dir.path(),
        &[
            "estimate",
            "--panel",
            "data/panel.csv",
            "--events",
            "dated_events.csv",
            "--event-type",
            "first_case",
            "--epoch-date",
            "2019-01-07",
            "--out-dir",
            "est_dates",
        ],
    );
    assert_success(&output);
    let outcomes = std::fs::read_to_string(dir.path().join("est_dates/outcomes.csv")).unwrap();
    assert_eq!(outcomes.lines().count(), 2);
}

#[test]
fn bundled_pipeline_config_produces_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/pipeline.json")
        .canonicalize()
        .unwrap();
    let output = run_in(
        dir.path(),
        &[
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            "out",
        ],
    );
    assert_success(&output);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    // the bundled cohort is large enough for a 217/72/72 split
    assert_eq!(report["n_test"].as_i64().unwrap(), 72);
    assert!(report["delta0"]["pearson_r"].as_f64().unwrap() > 0.5);
}

#[test]
fn seed_falls_back_to_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    generate_data(dir.path());
    let run_with_env = |env_seed: Option<&str>| -> serde_json::Value {
        let mut cmd = ruptura();
        cmd.current_dir(dir.path()).args([
            "placebo",
            "--panel",
            "data/panel.csv",
            "--episodes",
            "50",
            "--out",
            "placebo_env.json",
        ]);
        if let Some(seed) = env_seed {
            cmd.env("RUPTURA_SEED", seed);
        } else {
            cmd.env_remove("RUPTURA_SEED");
        }
        let output = cmd.output().unwrap();
        assert_success(&output);
        serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("placebo_env.json")).unwrap(),
        )
        .unwrap()
    };
    let from_env = run_with_env(Some("123"));
    assert_eq!(from_env["seed"], 123);
    let default = run_with_env(None);
    assert_eq!(default["seed"], 42);
}
