//! Subcommand implementations.

pub mod did;
pub mod estimate;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod placebo;
pub mod synth;
pub mod train;

use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::args::{SplitArgs, WindowArgs};
use crate::CliError;
use ruptura_core::evaluator::{split_by_region, SplitPlan, SplitRatios};
use ruptura_core::features::Dataset;
use ruptura_core::panel::{self, EventTable, Panel};
use ruptura_core::rdd::WindowConfig;

pub(crate) fn parse_epoch(flag: &Option<String>) -> Result<Option<NaiveDate>, CliError> {
    match flag {
        None => Ok(None),
        Some(s) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Some)
            .map_err(|_| CliError::usage(format!("--epoch-date `{s}` is not YYYY-MM-DD"))),
    }
}

pub(crate) fn window_config(args: &WindowArgs) -> Result<WindowConfig, CliError> {
    WindowConfig::new(args.half_window, args.buffer, args.min_points)
        .map_err(|e| CliError::usage(e.to_string()))
}

pub(crate) fn parse_ratios(spec: &str) -> Result<SplitRatios, CliError> {
    let parts: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--ratios `{spec}` is not three numbers")))?;
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "--ratios needs exactly three values, got {}",
            parts.len()
        )));
    }
    let ratios = SplitRatios {
        train: parts[0],
        dev: parts[1],
        test: parts[2],
    };
    ratios
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(ratios)
}

pub(crate) fn load_panel(
    path: &Path,
    score_name: &str,
    epoch: Option<NaiveDate>,
) -> Result<Panel, CliError> {
    panel::load_panel_with_epoch(path, score_name, epoch)
        .map_err(|e| CliError::domain(format!("{}: {e}", path.display())))
}

pub(crate) fn load_events(path: &Path, epoch: Option<NaiveDate>) -> Result<EventTable, CliError> {
    panel::load_events_with_epoch(path, epoch)
        .map_err(|e| CliError::domain(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::domain(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, json + "\n")
        .map_err(|e| CliError::domain(format!("writing {}: {e}", path.display())))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::domain(format!("creating {}: {e}", dir.display())))
}

/// Layout sidecar convention: `<dataset stem>.layout.json` unless overridden.
pub(crate) fn layout_path_for(
    dataset: &Path,
    explicit: &Option<std::path::PathBuf>,
) -> std::path::PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let stem = dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_owned());
        dataset.with_file_name(format!("{stem}.layout.json"))
    })
}

pub(crate) fn split_plan(dataset: &Dataset, args: &SplitArgs) -> Result<SplitPlan, CliError> {
    let ratios = parse_ratios(&args.ratios)?;
    split_by_region(&dataset.region_ids, ratios, args.split_seed)
        .map_err(|e| CliError::domain(e.to_string()))
}

/// Select the named split subset from a dataset.
pub(crate) fn dataset_split(
    dataset: &Dataset,
    plan: &SplitPlan,
    which: &str,
) -> Result<Dataset, CliError> {
    let subset = match which {
        "train" => dataset.subset(&plan.train),
        "dev" => dataset.subset(&plan.dev),
        "test" => dataset.subset(&plan.test),
        "all" => dataset.clone(),
        other => {
            return Err(CliError::usage(format!(
                "unknown split `{other}` (expected train, dev, test, or all)"
            )))
        }
    };
    if subset.n() == 0 {
        return Err(CliError::domain(format!("split `{which}` is empty")));
    }
    Ok(subset)
}
