//! One-command reproduction: generate or load data, estimate, assemble
//! features, train, and evaluate, leaving every intermediate artifact and a
//! single manifest in the output directory.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use ruptura_core::evaluator::evaluate;
use ruptura_core::features::{dataset_from_panel, write_dataset, FeatureSetSpec};
use ruptura_core::learners::{save_model, train, ModelFamily, ModelSpec};
use ruptura_core::panel::{self, EmbeddingTable, EventTable, Panel};
use ruptura_core::rdd::{batch_estimate, write_outcomes_csv, WindowConfig};
use ruptura_core::synth::{generate, SynthConfig};

use super::{
    dataset_split, ensure_dir, load_events, load_panel, parse_epoch as parse_epoch_flag,
    write_json,
};
use crate::args::PipelineArgs;
use crate::manifest::{manifest_in_dir, RunManifest};
use crate::{resolve_seed, CliError};

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct PipelineInputs {
    pub panel: PathBuf,
    #[serde(default = "default_score_name")]
    pub score_name: String,
    pub events: PathBuf,
    #[serde(default)]
    pub cov_panel: Option<PathBuf>,
    #[serde(default = "default_cov_score_name")]
    pub cov_score_name: String,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub epoch_date: Option<String>,
}

fn default_score_name() -> String {
    "score".to_owned()
}

fn default_cov_score_name() -> String {
    "covariate".to_owned()
}

fn default_features() -> String {
    "P,RC".to_owned()
}

fn default_baseline() -> String {
    "baseline_mean".to_owned()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct SplitConfig {
    #[serde(default = "default_split_seed")]
    pub seed: u64,
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
}

fn default_split_seed() -> u64 {
    7
}

fn default_ratios() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            seed: default_split_seed(),
            ratios: default_ratios(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Either generate a cohort...
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    /// ...or load one from files.
    #[serde(default)]
    pub inputs: Option<PipelineInputs>,
    #[serde(default)]
    pub event_type: Option<String>,
    #[serde(default)]
    pub window: Option<WindowConfig>,
    #[serde(default = "default_features")]
    pub features: String,
    pub model: ModelFamily,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    #[serde(default)]
    pub split: SplitConfig,
}

struct LoadedData {
    panel: Panel,
    events: EventTable,
    cov_panel: Option<Panel>,
    embeddings: Option<EmbeddingTable>,
}

pub fn run(args: PipelineArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::domain(format!("{}: {e}", args.config.display())))?;
    let config: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("pipeline config: {e}")))?;
    let seed = resolve_seed(config.seed);
    let window = config.window.unwrap_or_default();
    window.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let feature_spec =
        FeatureSetSpec::parse(&config.features).map_err(|e| CliError::usage(e.to_string()))?;
    config
        .model
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let baseline_family = ruptura_core::learners::table_defaults(&config.baseline, false)
        .filter(|f| f.name().starts_with("baseline"))
        .ok_or_else(|| {
            CliError::usage(format!(
                "unknown baseline `{}` (expected mean, no_change, or forecast)",
                config.baseline
            ))
        })?;

    ensure_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new(
        "pipeline",
        serde_json::to_value(&config).unwrap_or_default(),
    )
    .with_seed(seed);
    manifest.add_input(&args.config)?;

    // stage 1: data
    let (data, event_type) = match (&config.synth, &config.inputs) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "pipeline config must set `synth` or `inputs`, not both",
            ))
        }
        (None, None) => {
            return Err(CliError::usage(
                "pipeline config needs a `synth` block or an `inputs` block",
            ))
        }
        (Some(synth_config), None) => {
            let generated =
                generate(synth_config).map_err(|e| CliError::usage(e.to_string()))?;
            let files = [
                ("panel.csv", args.out_dir.join("panel.csv")),
                ("events.csv", args.out_dir.join("events.csv")),
                ("region_meta.csv", args.out_dir.join("region_meta.csv")),
                ("embeddings.csv", args.out_dir.join("embeddings.csv")),
                ("ground_truth.json", args.out_dir.join("ground_truth.json")),
            ];
            panel::write_panel(&generated.panel, &files[0].1)
                .map_err(|e| CliError::domain(e.to_string()))?;
            panel::write_events(&generated.events, &files[1].1)
                .map_err(|e| CliError::domain(e.to_string()))?;
            panel::write_region_meta(&generated.meta, &files[2].1)
                .map_err(|e| CliError::domain(e.to_string()))?;
            panel::write_embeddings(&generated.embeddings, &files[3].1)
                .map_err(|e| CliError::domain(e.to_string()))?;
            write_json(&generated.truth, &files[4].1)?;
            for (_, path) in &files {
                manifest.add_output(path);
            }
            let event_type = config
                .event_type
                .clone()
                .unwrap_or_else(|| synth_config.event_type.clone());
            (
                LoadedData {
                    panel: generated.panel,
                    events: generated.events,
                    cov_panel: None,
                    embeddings: Some(generated.embeddings),
                },
                event_type,
            )
        }
        (None, Some(inputs)) => {
            let epoch = parse_epoch_flag(&inputs.epoch_date)?;
            let panel = load_panel(&inputs.panel, &inputs.score_name, epoch)?;
            let events = load_events(&inputs.events, epoch)?;
            let cov_panel = inputs
                .cov_panel
                .as_ref()
                .map(|p| load_panel(p, &inputs.cov_score_name, epoch))
                .transpose()?;
            let embeddings = inputs
                .embeddings
                .as_ref()
                .map(|p| {
                    panel::load_embeddings(p)
                        .map_err(|e| CliError::domain(format!("{}: {e}", p.display())))
                })
                .transpose()?;
            manifest.add_input(&inputs.panel)?;
            manifest.add_input(&inputs.events)?;
            if let Some(p) = &inputs.cov_panel {
                manifest.add_input(p)?;
            }
            if let Some(p) = &inputs.embeddings {
                manifest.add_input(p)?;
            }
            let event_type = config.event_type.clone().ok_or_else(|| {
                CliError::usage("pipeline config with `inputs` must set `event_type`")
            })?;
            (
                LoadedData {
                    panel,
                    events,
                    cov_panel,
                    embeddings,
                },
                event_type,
            )
        }
    };

    // stage 2: discontinuity estimation
    let (outcomes, stats) = batch_estimate(&data.panel, &data.events, &event_type, &window)
        .map_err(|e| CliError::domain(e.to_string()))?;
    let outcomes_path = args.out_dir.join("outcomes.csv");
    let stats_path = args.out_dir.join("stats.json");
    write_outcomes_csv(&outcomes, &outcomes_path).map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&stats, &stats_path)?;
    manifest.add_output(&outcomes_path);
    manifest.add_output(&stats_path);

    // stage 3: features
    let (dataset, skipped) = dataset_from_panel(
        &data.panel,
        &data.events,
        &event_type,
        data.cov_panel.as_ref(),
        data.embeddings.as_ref(),
        feature_spec,
        &window,
    )
    .map_err(|e| CliError::domain(e.to_string()))?;
    let dataset_path = args.out_dir.join("dataset.csv");
    let layout_path = args.out_dir.join("dataset.layout.json");
    let skipped_path = args.out_dir.join("skipped.json");
    write_dataset(&dataset, &dataset_path, &layout_path)
        .map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&skipped, &skipped_path)?;
    manifest.add_output(&dataset_path);
    manifest.add_output(&layout_path);
    manifest.add_output(&skipped_path);

    // stage 4: split + train
    let ratios = ruptura_core::evaluator::SplitRatios {
        train: config.split.ratios[0],
        dev: config.split.ratios[1],
        test: config.split.ratios[2],
    };
    let plan =
        ruptura_core::evaluator::split_by_region(&dataset.region_ids, ratios, config.split.seed)
            .map_err(|e| CliError::domain(e.to_string()))?;
    let train_set = dataset.subset(&plan.train);
    let test_set = dataset_split(&dataset, &plan, "test")?;

    let model_spec = ModelSpec::new(config.model.clone(), seed);
    let model = train(&model_spec, &train_set).map_err(|e| CliError::domain(e.to_string()))?;
    let model_path = args.out_dir.join("model.json");
    save_model(&model, &model_path).map_err(|e| CliError::domain(e.to_string()))?;
    manifest.add_output(&model_path);

    let baseline = train(
        &ModelSpec::new(baseline_family.clone(), seed),
        &train_set,
    )
    .map_err(|e| CliError::domain(e.to_string()))?;

    // stage 5: evaluation
    let report = evaluate(
        &model,
        &test_set,
        Some((baseline_family.name(), &baseline)),
        None,
    )
    .map_err(|e| CliError::domain(e.to_string()))?;
    let report_path = args.out_dir.join("report.json");
    write_json(&report, &report_path)?;
    manifest.add_output(&report_path);

    manifest.write(&manifest_in_dir(&args.out_dir))?;
    Ok(())
}
