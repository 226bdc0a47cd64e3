use ruptura_core::features::{read_dataset, FeatureSetSpec};
use ruptura_core::learners::{rich_features, save_model, table_defaults, train, ModelFamily, ModelSpec};

use super::{dataset_split, layout_path_for, split_plan};
use crate::args::TrainArgs;
use crate::manifest::{manifest_beside, RunManifest};
use crate::{resolve_seed, CliError};

/// Resolve the family from the flag set; omitted hyperparameters fall back
/// to the published defaults for the dataset's feature mix.
pub fn resolve_family(args: &TrainArgs, spec: &FeatureSetSpec) -> Result<ModelFamily, CliError> {
    let defaults = table_defaults(&args.family, rich_features(spec))
        .ok_or_else(|| CliError::usage(format!("unknown model family `{}`", args.family)))?;
    let family = match defaults {
        ModelFamily::Ridge { alpha } => ModelFamily::Ridge {
            alpha: args.alpha.unwrap_or(alpha),
        },
        ModelFamily::Knn { k } => ModelFamily::Knn {
            k: args.k.unwrap_or(k),
        },
        ModelFamily::RandomForest {
            n_estimators,
            max_depth,
        } => ModelFamily::RandomForest {
            n_estimators: args.n_estimators.unwrap_or(n_estimators),
            max_depth: args.max_depth.or(max_depth),
        },
        ModelFamily::ExtraTrees {
            n_estimators,
            max_depth,
        } => ModelFamily::ExtraTrees {
            n_estimators: args.n_estimators.unwrap_or(n_estimators),
            max_depth: args.max_depth.or(max_depth),
        },
        ModelFamily::Ffn {
            hidden_layers,
            width,
            epochs,
            learning_rate,
            batch_size,
        } => ModelFamily::Ffn {
            hidden_layers: args.layers.unwrap_or(hidden_layers),
            width: args.width.unwrap_or(width),
            epochs: args.epochs.unwrap_or(epochs),
            learning_rate: args.learning_rate.unwrap_or(learning_rate),
            batch_size: args.batch_size.unwrap_or(batch_size),
        },
        ModelFamily::BaselineForecast { max_ar_order } => ModelFamily::BaselineForecast {
            max_ar_order: args.max_ar_order.unwrap_or(max_ar_order),
        },
        passthrough @ (ModelFamily::BaselineNoChange | ModelFamily::BaselineMean) => passthrough,
    };
    family.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(family)
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let layout_path = layout_path_for(&args.dataset, &args.layout);
    let dataset = read_dataset(&args.dataset, &layout_path)
        .map_err(|e| CliError::domain(e.to_string()))?;
    let family = resolve_family(&args, &dataset.spec)?;
    let seed = resolve_seed(args.seed);
    let spec = ModelSpec::new(family, seed).with_per_target(args.per_target);

    let train_set = if args.split == "all" {
        dataset.clone()
    } else {
        let plan = split_plan(&dataset, &args.split_args)?;
        dataset_split(&dataset, &plan, &args.split)?
    };

    let model = train(&spec, &train_set).map_err(|e| CliError::domain(e.to_string()))?;
    save_model(&model, &args.out).map_err(|e| CliError::domain(e.to_string()))?;

    let mut manifest = RunManifest::new(
        "train",
        serde_json::json!({
            "model": spec,
            "split": args.split,
            "split_seed": args.split_args.split_seed,
            "ratios": args.split_args.ratios,
            "n_train": train_set.n(),
            "dim": train_set.dim(),
            "features": train_set.spec.to_string(),
        }),
    )
    .with_seed(seed);
    manifest.add_input(&args.dataset)?;
    manifest.add_input(&layout_path)?;
    manifest.add_output(&args.out);
    manifest.write(&manifest_beside(&args.out))?;
    Ok(())
}
