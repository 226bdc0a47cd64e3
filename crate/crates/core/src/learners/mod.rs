//! Multi-output regressors predicting the discontinuity pair, plus the three
//! reference baselines.
//!
//! All families train jointly on both targets. Feature columns are
//! standardized with training-split statistics only; the stored column
//! means/stds travel with the model so prediction applies the identical
//! transform. Tree ensembles and the forecasting baseline see raw values
//! where it matters (trees are scale-invariant; the forecaster reads the raw
//! history block).
//!
//! Training rows are sorted by region id up front, which makes bootstrap
//! draws, neighbor tie-breaking, and batch order independent of the caller's
//! row order.

pub mod baselines;
pub mod ffn;
pub mod knn;
pub mod ridge;
pub mod tree;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Dataset, FeatureSetSpec};
use crate::panel::RegionId;

/// Model family plus its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFamily {
    Ridge {
        alpha: f64,
    },
    Knn {
        k: usize,
    },
    RandomForest {
        n_estimators: usize,
        max_depth: Option<usize>,
    },
    ExtraTrees {
        n_estimators: usize,
        max_depth: Option<usize>,
    },
    Ffn {
        hidden_layers: usize,
        width: usize,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
    },
    BaselineNoChange,
    BaselineMean,
    BaselineForecast {
        max_ar_order: usize,
    },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Ridge { .. } => "ridge",
            ModelFamily::Knn { .. } => "knn",
            ModelFamily::RandomForest { .. } => "random_forest",
            ModelFamily::ExtraTrees { .. } => "extra_trees",
            ModelFamily::Ffn { .. } => "ffn",
            ModelFamily::BaselineNoChange => "baseline_no_change",
            ModelFamily::BaselineMean => "baseline_mean",
            ModelFamily::BaselineForecast { .. } => "baseline_forecast",
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |what: &str, detail: String| {
            Err(LearnError::InvalidHyperparameter {
                name: what.to_owned(),
                detail,
            })
        };
        match *self {
            ModelFamily::Ridge { alpha } => {
                if alpha.is_nan() || alpha <= 0.0 {
                    return bad("alpha", format!("must be > 0, got {alpha}"));
                }
            }
            ModelFamily::Knn { k } => {
                if k == 0 {
                    return bad("k", "must be >= 1".into());
                }
            }
            ModelFamily::RandomForest { n_estimators, .. }
            | ModelFamily::ExtraTrees { n_estimators, .. } => {
                if n_estimators == 0 {
                    return bad("n_estimators", "must be >= 1".into());
                }
            }
            ModelFamily::Ffn {
                hidden_layers,
                width,
                epochs,
                learning_rate,
                batch_size,
            } => {
                if hidden_layers == 0 {
                    return bad("hidden_layers", "must be >= 1".into());
                }
                if width == 0 {
                    return bad("width", "must be >= 1".into());
                }
                if epochs == 0 {
                    return bad("epochs", "must be >= 1".into());
                }
                if learning_rate.is_nan() || learning_rate <= 0.0 {
                    return bad("learning_rate", format!("must be > 0, got {learning_rate}"));
                }
                if batch_size == 0 {
                    return bad("batch_size", "must be >= 1".into());
                }
            }
            ModelFamily::BaselineForecast { max_ar_order } => {
                if max_ar_order > 8 {
                    return bad("max_ar_order", "must be <= 8 for short windows".into());
                }
            }
            ModelFamily::BaselineNoChange | ModelFamily::BaselineMean => {}
        }
        Ok(())
    }
}

/// Published default hyperparameters per family. `rich_features` selects the
/// variant used when both the embedding and the covariate stream are in the
/// feature set.
pub fn table_defaults(family_name: &str, rich_features: bool) -> Option<ModelFamily> {
    Some(match family_name {
        "ridge" => ModelFamily::Ridge {
            alpha: if rich_features { 10.0 } else { 1.0 },
        },
        "knn" => ModelFamily::Knn { k: 5 },
        "random_forest" => ModelFamily::RandomForest {
            n_estimators: if rich_features { 1000 } else { 500 },
            max_depth: None,
        },
        "extra_trees" => ModelFamily::ExtraTrees {
            n_estimators: 500,
            max_depth: if rich_features { None } else { Some(10) },
        },
        "ffn" => ModelFamily::Ffn {
            hidden_layers: 2,
            width: 2,
            epochs: 150,
            learning_rate: 0.005,
            batch_size: 64,
        },
        "baseline_no_change" | "no_change" => ModelFamily::BaselineNoChange,
        "baseline_mean" | "mean" => ModelFamily::BaselineMean,
        "baseline_forecast" | "forecast" => ModelFamily::BaselineForecast { max_ar_order: 3 },
        _ => return None,
    })
}

pub fn rich_features(spec: &FeatureSetSpec) -> bool {
    spec.use_embedding && spec.use_covariate
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: ModelFamily,
    pub seed: u64,
    /// Train one copy of the model per target instead of a single joint
    /// model. Column-separable families (ridge, knn, the baselines) predict
    /// identically either way; tree ensembles and the network devote all
    /// capacity to one target when set.
    #[serde(default)]
    pub per_target: bool,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, seed: u64) -> ModelSpec {
        ModelSpec {
            family,
            seed,
            per_target: false,
        }
    }

    pub fn with_per_target(mut self, per_target: bool) -> ModelSpec {
        self.per_target = per_target;
        self
    }
}

/// Family-specific fitted state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ModelState {
    Ridge {
        /// `d x 2` coefficients on standardized features.
        weights: DMatrix<f64>,
        /// Per-target unpenalized intercept.
        intercept: [f64; 2],
    },
    Knn {
        rows: DMatrix<f64>,
        targets: DMatrix<f64>,
        region_ids: Vec<RegionId>,
        k: usize,
    },
    Forest {
        trees: Vec<tree::Tree>,
    },
    Ffn {
        network: ffn::Network,
    },
    Mean {
        means: [f64; 2],
    },
    NoChange,
    Forecast {
        /// (offset, len) of the raw history block and its time offsets.
        block_offset: usize,
        block_len: usize,
        history_offsets: Vec<i64>,
        /// Offsets the forecast line is fit over (the after grid).
        after_offsets: Vec<i64>,
        max_ar_order: usize,
    },
    /// Two independently trained states; predictions take column 0 from the
    /// first and column 1 from the second.
    PerTarget {
        first: Box<ModelState>,
        second: Box<ModelState>,
    },
}

/// A trained model: spec, the layout it was trained against, the training
/// standardization, and fitted state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub layout_fingerprint: u64,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub state: ModelState,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid hyperparameter `{name}`: {detail}")]
    InvalidHyperparameter { name: String, detail: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature layout fingerprint mismatch: model {model:#x}, input {input:#x}")]
    LayoutMismatch { model: u64, input: u64 },
    #[error("ridge system is singular")]
    SingularSystem,
    #[error("forecasting baseline needs the history (P) block in the feature layout")]
    MissingHistoryBlock,
    #[error("ar fit failed: {0}")]
    ArFit(String),
    #[error("model file: {0}")]
    ModelFormat(String),
}

/// Column means and population stds; zero-variance columns get std 1 so they
/// standardize to a constant 0.
fn column_stats(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut stds = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        means.push(mean);
        stds.push(if std > 0.0 { std } else { 1.0 });
    }
    (means, stds)
}

fn standardize(x: &DMatrix<f64>, means: &[f64], stds: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        (x[(i, j)] - means[j]) / stds[j]
    })
}

/// Reorder rows by (region id, original index) so training is invariant to
/// the caller's row order.
fn sorted_view(dataset: &Dataset) -> (DMatrix<f64>, DMatrix<f64>, Vec<RegionId>) {
    let mut order: Vec<usize> = (0..dataset.n()).collect();
    order.sort_by(|&a, &b| {
        dataset.region_ids[a]
            .cmp(&dataset.region_ids[b])
            .then(a.cmp(&b))
    });
    let x = dataset.x.select_rows(order.iter());
    let y = dataset.targets.select_rows(order.iter());
    let ids = order
        .iter()
        .map(|&i| dataset.region_ids[i].clone())
        .collect();
    (x, y, ids)
}

fn fit_family(
    family: &ModelFamily,
    z: &DMatrix<f64>,
    y: &DMatrix<f64>,
    region_ids: &[RegionId],
    layout: &crate::features::FeatureLayout,
    seed: u64,
) -> Result<ModelState, LearnError> {
    let state = match *family {
        ModelFamily::Ridge { alpha } => ridge::fit(z, y, alpha)?,
        ModelFamily::Knn { k } => {
            let k_eff = if k > z.nrows() {
                log::warn!("knn: k={k} exceeds {} training rows; clamping", z.nrows());
                z.nrows()
            } else {
                k
            };
            ModelState::Knn {
                rows: z.clone(),
                targets: y.clone(),
                region_ids: region_ids.to_vec(),
                k: k_eff,
            }
        }
        ModelFamily::RandomForest {
            n_estimators,
            max_depth,
        } => ModelState::Forest {
            trees: tree::fit_forest(
                z,
                y,
                &tree::ForestParams {
                    n_estimators,
                    max_depth,
                    bootstrap: true,
                    random_thresholds: false,
                },
                seed,
            ),
        },
        ModelFamily::ExtraTrees {
            n_estimators,
            max_depth,
        } => ModelState::Forest {
            trees: tree::fit_forest(
                z,
                y,
                &tree::ForestParams {
                    n_estimators,
                    max_depth,
                    bootstrap: false,
                    random_thresholds: true,
                },
                seed,
            ),
        },
        ModelFamily::Ffn {
            hidden_layers,
            width,
            epochs,
            learning_rate,
            batch_size,
        } => ModelState::Ffn {
            network: ffn::train_network(
                z,
                y,
                &ffn::TrainParams {
                    hidden_layers,
                    width,
                    epochs,
                    learning_rate,
                    batch_size,
                },
                seed,
            ),
        },
        ModelFamily::BaselineMean => {
            let n = y.nrows() as f64;
            ModelState::Mean {
                means: [y.column(0).sum() / n, y.column(1).sum() / n],
            }
        }
        ModelFamily::BaselineNoChange => ModelState::NoChange,
        ModelFamily::BaselineForecast { max_ar_order } => {
            let block = layout
                .block("history")
                .ok_or(LearnError::MissingHistoryBlock)?;
            let history_offsets = layout
                .history_offsets()
                .ok_or(LearnError::MissingHistoryBlock)?
                .to_vec();
            let (after_lo, after_hi) = layout.window.after_range();
            ModelState::Forecast {
                block_offset: block.offset,
                block_len: block.len,
                history_offsets,
                after_offsets: (after_lo..=after_hi).collect(),
                max_ar_order,
            }
        }
    };
    Ok(state)
}

/// Fit `spec` on `dataset`.
pub fn train(spec: &ModelSpec, dataset: &Dataset) -> Result<TrainedModel, LearnError> {
    spec.family.validate()?;
    if dataset.n() == 0 || dataset.dim() == 0 {
        return Err(LearnError::EmptyDataset);
    }
    let (x_raw, y, region_ids) = sorted_view(dataset);
    let (means, stds) = column_stats(&x_raw);
    let z = standardize(&x_raw, &means, &stds);

    let state = if spec.per_target {
        // one model per target: the target column is duplicated so shared
        // machinery sees a two-column matrix carrying a single signal
        let mut states = [None, None];
        for (target, slot) in states.iter_mut().enumerate() {
            let duplicated = DMatrix::from_fn(y.nrows(), 2, |i, _| y[(i, target)]);
            *slot = Some(fit_family(
                &spec.family,
                &z,
                &duplicated,
                &region_ids,
                &dataset.layout,
                spec.seed,
            )?);
        }
        let [first, second] = states;
        ModelState::PerTarget {
            first: Box::new(first.expect("fitted")),
            second: Box::new(second.expect("fitted")),
        }
    } else {
        fit_family(&spec.family, &z, &y, &region_ids, &dataset.layout, spec.seed)?
    };

    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        layout_fingerprint: dataset.layout.fingerprint(),
        feature_means: means,
        feature_stds: stds,
        state,
    })
}

/// Predict an `n x 2` target matrix for every row of `dataset`. The dataset
/// layout must match training.
pub fn predict(model: &TrainedModel, dataset: &Dataset) -> Result<DMatrix<f64>, LearnError> {
    let input = dataset.layout.fingerprint();
    if input != model.layout_fingerprint {
        return Err(LearnError::LayoutMismatch {
            model: model.layout_fingerprint,
            input,
        });
    }
    predict_state(&model.state, model, dataset)
}

fn predict_state(
    state: &ModelState,
    model: &TrainedModel,
    dataset: &Dataset,
) -> Result<DMatrix<f64>, LearnError> {
    let predictions = match state {
        ModelState::Ridge { weights, intercept } => {
            let z = standardize(&dataset.x, &model.feature_means, &model.feature_stds);
            let mut out = &z * weights;
            for i in 0..out.nrows() {
                out[(i, 0)] += intercept[0];
                out[(i, 1)] += intercept[1];
            }
            out
        }
        ModelState::Knn {
            rows,
            targets,
            region_ids,
            k,
        } => {
            let z = standardize(&dataset.x, &model.feature_means, &model.feature_stds);
            knn::predict(&z, rows, targets, region_ids, *k)
        }
        ModelState::Forest { trees } => {
            let z = standardize(&dataset.x, &model.feature_means, &model.feature_stds);
            tree::predict_forest(trees, &z)
        }
        ModelState::Ffn { network } => {
            let z = standardize(&dataset.x, &model.feature_means, &model.feature_stds);
            network.predict(&z)
        }
        ModelState::Mean { means } => {
            DMatrix::from_fn(dataset.n(), 2, |_, j| means[j])
        }
        ModelState::NoChange => DMatrix::zeros(dataset.n(), 2),
        ModelState::Forecast {
            block_offset,
            block_len,
            history_offsets,
            after_offsets,
            max_ar_order,
        } => baselines::forecast_predict(
            &dataset.x,
            *block_offset,
            *block_len,
            history_offsets,
            after_offsets,
            *max_ar_order,
        )?,
        ModelState::PerTarget { first, second } => {
            let a = predict_state(first, model, dataset)?;
            let b = predict_state(second, model, dataset)?;
            DMatrix::from_fn(dataset.n(), 2, |i, j| {
                if j == 0 {
                    a[(i, 0)]
                } else {
                    b[(i, 1)]
                }
            })
        }
    };
    Ok(predictions)
}

/// Serialize a trained model to versioned JSON.
pub fn save_model(model: &TrainedModel, path: &std::path::Path) -> Result<(), LearnError> {
    let json = serde_json::to_string_pretty(model)
        .map_err(|e| LearnError::ModelFormat(e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(|e| LearnError::ModelFormat(e.to_string()))
}

pub fn load_model(path: &std::path::Path) -> Result<TrainedModel, LearnError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| LearnError::ModelFormat(e.to_string()))?;
    let model: TrainedModel =
        serde_json::from_str(&text).map_err(|e| LearnError::ModelFormat(e.to_string()))?;
    if model.format_version != MODEL_FORMAT_VERSION {
        return Err(LearnError::ModelFormat(format!(
            "unsupported model format version {}",
            model.format_version
        )));
    }
    Ok(model)
}


#[cfg(test)]
mod tests {
    use super::test_support::dataset_from_parts;
    use super::*;
    use crate::util;
    use rand::Rng;

    fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = util::substream(seed, 0);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let targets = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        dataset_from_parts(x, targets)
    }

    #[test]
    fn spec_validation_names_the_parameter() {
        let family = ModelFamily::Ridge { alpha: -1.0 };
        match family.validate() {
            Err(LearnError::InvalidHyperparameter { name, .. }) => assert_eq!(name, "alpha"),
            other => panic!("expected invalid hyperparameter, got {other:?}"),
        }
        assert!(ModelFamily::Knn { k: 0 }.validate().is_err());
        assert!(ModelFamily::Knn { k: 5 }.validate().is_ok());
    }

    #[test]
    fn predict_rejects_layout_mismatch() {
        let train_data = random_dataset(20, 3, 1);
        let model = train(
            &ModelSpec::new(ModelFamily::Ridge { alpha: 1.0 }, 0),
            &train_data,
        )
        .unwrap();
        let other = random_dataset(5, 4, 2);
        assert!(matches!(
            predict(&model, &other),
            Err(LearnError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn no_change_predicts_zeros() {
        let data = random_dataset(10, 3, 3);
        let model = train(
            &ModelSpec::new(ModelFamily::BaselineNoChange, 0),
            &data,
        )
        .unwrap();
        let pred = predict(&model, &data).unwrap();
        assert!(pred.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_baseline_predicts_training_means() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let targets = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 3.0, 0.0]);
        let data = dataset_from_parts(x, targets);
        let model = train(
            &ModelSpec::new(ModelFamily::BaselineMean, 0),
            &data,
        )
        .unwrap();
        let pred = predict(&model, &data).unwrap();
        for i in 0..2 {
            assert_eq!(pred[(i, 0)], 2.0);
            assert_eq!(pred[(i, 1)], 0.0);
        }
    }

    #[test]
    fn knn_with_k_equal_n_matches_mean_baseline() {
        let data = random_dataset(12, 4, 5);
        let knn = train(
            &ModelSpec::new(ModelFamily::Knn { k: 12 }, 0),
            &data,
        )
        .unwrap();
        let mean = train(
            &ModelSpec::new(ModelFamily::BaselineMean, 0),
            &data,
        )
        .unwrap();
        let a = predict(&knn, &data).unwrap();
        let b = predict(&mean, &data).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_k_clamps_to_train_size() {
        let data = random_dataset(6, 2, 7);
        let model = train(
            &ModelSpec::new(ModelFamily::Knn { k: 100 }, 0),
            &data,
        )
        .unwrap();
        match &model.state {
            ModelState::Knn { k, .. } => assert_eq!(*k, 6),
            other => panic!("unexpected state {other:?}"),
        }
    }

    #[test]
    fn model_json_round_trip() {
        let data = random_dataset(15, 3, 9);
        for family in [
            ModelFamily::Ridge { alpha: 1.0 },
            ModelFamily::Knn { k: 3 },
            ModelFamily::RandomForest {
                n_estimators: 5,
                max_depth: Some(4),
            },
            ModelFamily::Ffn {
                hidden_layers: 1,
                width: 3,
                epochs: 5,
                learning_rate: 0.01,
                batch_size: 8,
            },
            ModelFamily::BaselineMean,
        ] {
            let model = train(&ModelSpec::new(family, 11), &data).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("model.json");
            save_model(&model, &path).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded, model);
            let a = predict(&model, &data).unwrap();
            let b = predict(&loaded, &data).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn training_is_row_order_invariant() {
        let data = random_dataset(30, 5, 13);
        // build a permuted copy
        let perm: Vec<usize> = (0..30).rev().collect();
        let permuted = Dataset {
            x: data.x.select_rows(perm.iter()),
            targets: data.targets.select_rows(perm.iter()),
            region_ids: perm.iter().map(|&i| data.region_ids[i].clone()).collect(),
            layout: data.layout.clone(),
            spec: data.spec,
        };
        for family in [
            ModelFamily::Ridge { alpha: 0.5 },
            ModelFamily::RandomForest {
                n_estimators: 7,
                max_depth: None,
            },
            ModelFamily::ExtraTrees {
                n_estimators: 7,
                max_depth: None,
            },
        ] {
            let spec = ModelSpec::new(family.clone(), 3);
            let a = train(&spec, &data).unwrap();
            let b = train(&spec, &permuted).unwrap();
            let test = random_dataset(10, 5, 99);
            let pa = predict(&a, &test).unwrap();
            let pb = predict(&b, &test).unwrap();
            for (x, y) in pa.iter().zip(pb.iter()) {
                assert!((x - y).abs() < 1e-12, "{} differs", family.name());
            }
        }
    }

    #[test]
    fn per_target_ridge_matches_joint_ridge_exactly() {
        // ridge is column-separable, so the two modes must coincide
        let data = random_dataset(40, 6, 21);
        let joint = train(&ModelSpec::new(ModelFamily::Ridge { alpha: 0.8 }, 5), &data).unwrap();
        let split = train(
            &ModelSpec::new(ModelFamily::Ridge { alpha: 0.8 }, 5).with_per_target(true),
            &data,
        )
        .unwrap();
        let test = random_dataset(12, 6, 22);
        let a = predict(&joint, &test).unwrap();
        let b = predict(&split, &test).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn per_target_forest_round_trips_and_stays_deterministic() {
        let data = random_dataset(30, 4, 23);
        let spec = ModelSpec::new(
            ModelFamily::ExtraTrees {
                n_estimators: 7,
                max_depth: Some(4),
            },
            9,
        )
        .with_per_target(true);
        let a = train(&spec, &data).unwrap();
        let b = train(&spec, &data).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a.state, ModelState::PerTarget { .. }));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&a, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, a);
        let pred = predict(&loaded, &data).unwrap();
        assert!(pred.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn table_defaults_match_published_grid() {
        assert_eq!(
            table_defaults("ridge", false),
            Some(ModelFamily::Ridge { alpha: 1.0 })
        );
        assert_eq!(
            table_defaults("ridge", true),
            Some(ModelFamily::Ridge { alpha: 10.0 })
        );
        assert_eq!(table_defaults("knn", true), Some(ModelFamily::Knn { k: 5 }));
        assert_eq!(
            table_defaults("random_forest", false),
            Some(ModelFamily::RandomForest {
                n_estimators: 500,
                max_depth: None
            })
        );
        assert_eq!(
            table_defaults("extra_trees", false),
            Some(ModelFamily::ExtraTrees {
                n_estimators: 500,
                max_depth: Some(10)
            })
        );
        assert!(table_defaults("xgboost", false).is_none());
    }
}
