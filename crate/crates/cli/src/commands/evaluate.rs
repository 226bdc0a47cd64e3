use ruptura_core::evaluator::{evaluate, write_predictions_csv, StratumKey, StratumSpec};
use ruptura_core::features::read_dataset;
use ruptura_core::learners::{self, load_model, table_defaults, train, ModelSpec};
use ruptura_core::panel::load_region_meta;

use super::{dataset_split, layout_path_for, split_plan, write_json};
use crate::args::EvaluateArgs;
use crate::manifest::{manifest_beside, RunManifest};
use crate::CliError;

fn stratum_spec(args: &EvaluateArgs) -> Result<Option<StratumSpec>, CliError> {
    let Some(key_name) = &args.strata else {
        return Ok(None);
    };
    let key = match key_name.as_str() {
        "ses" => StratumKey::Ses,
        "urbanicity" => StratumKey::Urbanicity,
        other => {
            return Err(CliError::usage(format!(
                "unknown stratum key `{other}` (expected ses or urbanicity)"
            )))
        }
    };
    let thresholds = match &args.strata_thresholds {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?;
            let values: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("strata thresholds: {e}")))?;
            Some(values)
        }
    };
    let spec = StratumSpec {
        key,
        n_bins: args.strata_bins,
        thresholds,
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(Some(spec))
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let layout_path = layout_path_for(&args.dataset, &args.layout);
    let dataset = read_dataset(&args.dataset, &layout_path)
        .map_err(|e| CliError::domain(e.to_string()))?;
    let model = load_model(&args.model).map_err(|e| CliError::domain(e.to_string()))?;

    let plan = split_plan(&dataset, &args.split_args)?;
    let eval_set = dataset_split(&dataset, &plan, &args.split)?;

    // the baseline trains on the train split with the model's own seed
    let baseline = args
        .baseline
        .as_ref()
        .map(|name| -> Result<_, CliError> {
            let family = table_defaults(name, false)
                .filter(|f| f.name().starts_with("baseline"))
                .ok_or_else(|| {
                    CliError::usage(format!(
                        "unknown baseline `{name}` (expected mean, no_change, or forecast)"
                    ))
                })?;
            let train_set = dataset_split(&dataset, &plan, "train")?;
            let trained = train(
                &ModelSpec::new(family, model.spec.seed),
                &train_set,
            )
            .map_err(|e| CliError::domain(e.to_string()))?;
            Ok((name.clone(), trained))
        })
        .transpose()?;

    let strata_spec = stratum_spec(&args)?;
    let metas = match (&strata_spec, &args.meta) {
        (None, _) => None,
        (Some(_), None) => {
            return Err(CliError::usage("--strata requires --meta"));
        }
        (Some(_), Some(path)) => Some(
            load_region_meta(path)
                .map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?,
        ),
    };

    let report = evaluate(
        &model,
        &eval_set,
        baseline.as_ref().map(|(n, m)| (n.as_str(), m)),
        strata_spec.as_ref().zip(metas.as_ref()),
    )
    .map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&report, &args.out)?;

    let mut manifest = RunManifest::new(
        "evaluate",
        serde_json::json!({
            "model": model.spec,
            "split": args.split,
            "split_seed": args.split_args.split_seed,
            "ratios": args.split_args.ratios,
            "baseline": args.baseline,
            "strata": args.strata,
            "strata_bins": args.strata_bins,
            "n_eval": eval_set.n(),
        }),
    );
    manifest.add_input(&args.dataset)?;
    manifest.add_input(&layout_path)?;
    manifest.add_input(&args.model)?;
    if let Some(path) = &args.meta {
        manifest.add_input(path)?;
    }
    manifest.add_output(&args.out);

    if let Some(pred_path) = &args.predictions_out {
        let pred =
            learners::predict(&model, &eval_set).map_err(|e| CliError::domain(e.to_string()))?;
        write_predictions_csv(&eval_set, &pred, pred_path)
            .map_err(|e| CliError::domain(e.to_string()))?;
        manifest.add_output(pred_path);
    }
    manifest.write(&manifest_beside(&args.out))?;
    Ok(())
}
