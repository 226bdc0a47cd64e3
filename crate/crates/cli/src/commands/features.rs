use ruptura_core::features::{dataset_from_panel, write_dataset, FeatureSetSpec};
use ruptura_core::panel::load_embeddings;

use super::{ensure_dir, load_events, load_panel, parse_epoch, window_config, write_json};
use crate::args::FeaturesArgs;
use crate::manifest::{manifest_in_dir, RunManifest};
use crate::CliError;

pub fn run(args: FeaturesArgs) -> Result<(), CliError> {
    let epoch = parse_epoch(&args.epoch_date)?;
    let config = window_config(&args.window)?;
    let spec = FeatureSetSpec::parse(&args.features).map_err(|e| CliError::usage(e.to_string()))?;
    if spec.use_covariate && args.cov_panel.is_none() {
        return Err(CliError::usage(
            "feature set includes `cov` but --cov-panel is missing",
        ));
    }
    if spec.use_embedding && args.embeddings.is_none() {
        return Err(CliError::usage(
            "feature set includes `exog` but --embeddings is missing",
        ));
    }

    let panel = load_panel(&args.panel, &args.score_name, epoch)?;
    let events = load_events(&args.events, epoch)?;
    let cov_panel = args
        .cov_panel
        .as_ref()
        .map(|p| load_panel(p, &args.cov_score_name, epoch))
        .transpose()?;
    let embeddings = args
        .embeddings
        .as_ref()
        .map(|p| load_embeddings(p).map_err(|e| CliError::domain(format!("{}: {e}", p.display()))))
        .transpose()?;

    let (dataset, skipped) = dataset_from_panel(
        &panel,
        &events,
        &args.event_type,
        cov_panel.as_ref(),
        embeddings.as_ref(),
        spec,
        &config,
    )
    .map_err(|e| CliError::domain(e.to_string()))?;

    ensure_dir(&args.out_dir)?;
    let dataset_path = args.out_dir.join("dataset.csv");
    let layout_path = args.out_dir.join("dataset.layout.json");
    let skipped_path = args.out_dir.join("skipped.json");
    write_dataset(&dataset, &dataset_path, &layout_path)
        .map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&skipped, &skipped_path)?;

    let mut manifest = RunManifest::new(
        "features",
        serde_json::json!({
            "score_name": args.score_name,
            "event_type": args.event_type,
            "features": spec.to_string(),
            "window": config,
            "epoch_date": args.epoch_date,
            "n_rows": dataset.n(),
            "dim": dataset.dim(),
            "n_skipped": skipped.len(),
        }),
    );
    manifest.add_input(&args.panel)?;
    manifest.add_input(&args.events)?;
    if let Some(p) = &args.cov_panel {
        manifest.add_input(p)?;
    }
    if let Some(p) = &args.embeddings {
        manifest.add_input(p)?;
    }
    manifest.add_output(&dataset_path);
    manifest.add_output(&layout_path);
    manifest.add_output(&skipped_path);
    manifest.write(&manifest_in_dir(&args.out_dir))?;
    Ok(())
}
