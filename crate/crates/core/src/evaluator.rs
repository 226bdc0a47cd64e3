//! Region-level splits, prediction metrics, paired significance tests, and
//! stratified error analysis.
//!
//! Splits are by region, never by episode, so no region leaks across
//! train/dev/test. Significance runs a two-sided paired t-test on per-episode
//! squared errors, which keeps it aligned with the MSE objective. Strata rank
//! regions by a composite socio-economic score (mean of z-scored education
//! and income) or by urbanicity (log population density) and cut them into
//! equal-count bins.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::features::Dataset;
use crate::learners::{self, LearnError, TrainedModel};
use crate::panel::{RegionId, RegionMeta};
use crate::util;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            dev: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), EvalError> {
        let sum = self.train + self.dev + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvalError::Config(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        if self.train < 0.0 || self.dev < 0.0 || self.test < 0.0 {
            return Err(EvalError::Config("split ratios must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Disjoint region sets; together they cover every input region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<RegionId>,
    pub dev: Vec<RegionId>,
    pub test: Vec<RegionId>,
    pub seed: u64,
}

/// Deterministic shuffled partition of the regions by ratio.
pub fn split_by_region(
    region_ids: &[RegionId],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitPlan, EvalError> {
    ratios.validate()?;
    let mut unique: Vec<RegionId> = region_ids.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() < 5 {
        return Err(EvalError::Config(format!(
            "need at least 5 regions to split, got {}",
            unique.len()
        )));
    }

    let mut rng = util::substream(seed, 0);
    // Fisher-Yates
    use rand::Rng;
    for i in (1..unique.len()).rev() {
        let j = rng.random_range(0..=i);
        unique.swap(i, j);
    }

    let n = unique.len();
    let n_train = (ratios.train * n as f64).round() as usize;
    let n_dev = (ratios.dev * n as f64).round() as usize;
    let n_train = n_train.min(n);
    let n_dev = n_dev.min(n - n_train);

    let mut train: Vec<RegionId> = unique[..n_train].to_vec();
    let mut dev: Vec<RegionId> = unique[n_train..n_train + n_dev].to_vec();
    let mut test: Vec<RegionId> = unique[n_train + n_dev..].to_vec();
    train.sort();
    dev.sort();
    test.sort();
    Ok(SplitPlan {
        train,
        dev,
        test,
        seed,
    })
}

/// Per-target prediction quality. `pearson_r` is absent when either side is
/// constant (correlation undefined) or fewer than two rows exist.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub mse: f64,
    pub pearson_r: Option<f64>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 2 {
        return None;
    }
    let ma = util::mean(a);
    let mb = util::mean(b);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Column-wise MSE and Pearson correlation for `(delta0, delta1)`.
pub fn metrics(
    pred: &DMatrix<f64>,
    truth: &DMatrix<f64>,
) -> Result<[TargetMetrics; 2], EvalError> {
    if pred.nrows() != truth.nrows() || pred.ncols() != 2 || truth.ncols() != 2 {
        return Err(EvalError::Shape(format!(
            "predictions {}x{} vs truth {}x{}",
            pred.nrows(),
            pred.ncols(),
            truth.nrows(),
            truth.ncols()
        )));
    }
    if pred.nrows() == 0 {
        return Err(EvalError::Shape("empty prediction matrix".into()));
    }
    let mut out = [TargetMetrics {
        mse: 0.0,
        pearson_r: None,
    }; 2];
    for (target, slot) in out.iter_mut().enumerate() {
        let p: Vec<f64> = pred.column(target).iter().copied().collect();
        let t: Vec<f64> = truth.column(target).iter().copied().collect();
        let mse = p
            .iter()
            .zip(&t)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / p.len() as f64;
        *slot = TargetMetrics {
            mse,
            pearson_r: pearson(&p, &t),
        };
    }
    Ok(out)
}

/// Two-sided paired t-test result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Two-sided paired t-test on `a - b`. Degenerate cases follow fixed
/// conventions: all differences zero gives `(0, 1)`; zero variance with a
/// nonzero mean gives `p = 0`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Shape(format!(
            "paired vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(EvalError::Shape("paired t-test needs n >= 2".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mean = util::mean(&diffs);
    let sd = util::sample_std(&diffs);
    let df = n - 1;
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTest {
                t_statistic: 0.0,
                p_value: 1.0,
                df,
            }
        } else {
            TTest {
                t_statistic: f64::INFINITY.copysign(mean),
                p_value: 0.0,
                df,
            }
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| EvalError::Config(format!("t distribution: {e}")))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(TTest {
        t_statistic: t,
        p_value: p.clamp(0.0, 1.0),
        df,
    })
}

/// Ranking key for stratified analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumKey {
    /// Mean of z-scored education and z-scored income.
    Ses,
    /// Natural log of population density (population / area).
    Urbanicity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumSpec {
    pub key: StratumKey,
    pub n_bins: usize,
    /// Optional explicit ascending cut points overriding equal-count bins.
    pub thresholds: Option<Vec<f64>>,
}

impl StratumSpec {
    pub fn tertiles(key: StratumKey) -> StratumSpec {
        StratumSpec {
            key,
            n_bins: 3,
            thresholds: None,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.n_bins < 2 {
            return Err(EvalError::Config("n_bins must be >= 2".into()));
        }
        if let Some(t) = &self.thresholds {
            if t.len() + 1 != self.n_bins {
                return Err(EvalError::Config(format!(
                    "{} thresholds cannot define {} bins",
                    t.len(),
                    self.n_bins
                )));
            }
            if t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(EvalError::Config("thresholds must be ascending".into()));
            }
        }
        Ok(())
    }
}

fn bin_label(bin: usize, n_bins: usize) -> String {
    if n_bins == 3 {
        ["low", "medium", "high"][bin].to_owned()
    } else {
        format!("bin_{bin}")
    }
}

/// Score regions by the stratum key. SES z-scores are computed over exactly
/// the regions passed in.
fn stratum_scores(
    regions: &[RegionId],
    metas: &BTreeMap<RegionId, RegionMeta>,
    key: StratumKey,
) -> (Vec<(RegionId, f64)>, Vec<RegionId>) {
    let mut missing = Vec::new();
    let mut present: Vec<&RegionMeta> = Vec::new();
    for region in regions {
        match metas.get(region) {
            Some(meta) => present.push(meta),
            None => missing.push(region.clone()),
        }
    }
    let scores = match key {
        StratumKey::Ses => {
            let edu: Vec<f64> = present.iter().map(|m| m.education).collect();
            let inc: Vec<f64> = present.iter().map(|m| m.income).collect();
            let (edu_mean, edu_std) = (util::mean(&edu), util::population_std(&edu).max(1e-12));
            let (inc_mean, inc_std) = (util::mean(&inc), util::population_std(&inc).max(1e-12));
            present
                .iter()
                .map(|m| {
                    let ze = (m.education - edu_mean) / edu_std;
                    let zi = (m.income - inc_mean) / inc_std;
                    (m.region_id.clone(), 0.5 * (ze + zi))
                })
                .collect()
        }
        StratumKey::Urbanicity => present
            .iter()
            .map(|m| {
                (
                    m.region_id.clone(),
                    (m.population / m.area_sq_miles).ln(),
                )
            })
            .collect(),
    };
    (scores, missing)
}

/// Assign each region a bin index. Equal-count cuts over the (score, region)
/// ranking by default; explicit thresholds override.
pub fn stratify_regions(
    regions: &[RegionId],
    metas: &BTreeMap<RegionId, RegionMeta>,
    spec: &StratumSpec,
) -> Result<(BTreeMap<RegionId, usize>, Vec<RegionId>), EvalError> {
    spec.validate()?;
    let (mut scores, missing) = stratum_scores(regions, metas, spec.key);
    for region in &missing {
        log::warn!("stratify: missing metadata for region {region}; excluded");
    }
    if scores.is_empty() {
        return Err(EvalError::Config(
            "no region with metadata to stratify".into(),
        ));
    }
    let mut assignment = BTreeMap::new();
    if let Some(thresholds) = &spec.thresholds {
        for (region, score) in scores {
            let bin = thresholds.iter().take_while(|&&t| score > t).count();
            assignment.insert(region, bin);
        }
    } else {
        scores.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let n = scores.len();
        let base = n / spec.n_bins;
        let extra = n % spec.n_bins;
        let mut start = 0;
        for bin in 0..spec.n_bins {
            let size = base + usize::from(bin < extra);
            for (region, _) in &scores[start..start + size] {
                assignment.insert(region.clone(), bin);
            }
            start += size;
        }
    }
    Ok((assignment, missing))
}

/// Metrics over one stratum of the test regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub n: usize,
    pub delta0: TargetMetrics,
    pub delta1: TargetMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub baseline: String,
    pub delta0: TTest,
    pub delta1: TTest,
}

/// The full evaluation output for one model on one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_test: usize,
    pub delta0: TargetMetrics,
    pub delta1: TargetMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vs_baseline: Option<BaselineComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strata: Option<BTreeMap<String, StratumReport>>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

fn squared_errors(pred: &DMatrix<f64>, truth: &DMatrix<f64>, target: usize) -> Vec<f64> {
    (0..pred.nrows())
        .map(|i| {
            let e = pred[(i, target)] - truth[(i, target)];
            e * e
        })
        .collect()
}

/// Evaluate a trained model on `test`, optionally against a baseline
/// (paired t-test on per-episode squared errors) and optionally per stratum.
pub fn evaluate(
    model: &TrainedModel,
    test: &Dataset,
    baseline: Option<(&str, &TrainedModel)>,
    strata: Option<(&StratumSpec, &BTreeMap<RegionId, RegionMeta>)>,
) -> Result<EvalReport, EvalError> {
    let pred = learners::predict(model, test)?;
    let overall = metrics(&pred, &test.targets)?;

    let vs_baseline = match baseline {
        None => None,
        Some((name, baseline_model)) => {
            let baseline_pred = learners::predict(baseline_model, test)?;
            let t0 = paired_ttest(
                &squared_errors(&pred, &test.targets, 0),
                &squared_errors(&baseline_pred, &test.targets, 0),
            )?;
            let t1 = paired_ttest(
                &squared_errors(&pred, &test.targets, 1),
                &squared_errors(&baseline_pred, &test.targets, 1),
            )?;
            Some(BaselineComparison {
                baseline: name.to_owned(),
                delta0: t0,
                delta1: t1,
            })
        }
    };

    let strata_reports = match strata {
        None => None,
        Some((spec, metas)) => {
            let (assignment, _missing) = stratify_regions(&test.region_ids, metas, spec)?;
            let mut reports = BTreeMap::new();
            for bin in 0..spec.n_bins {
                let rows: Vec<usize> = test
                    .region_ids
                    .iter()
                    .enumerate()
                    .filter(|(_, id)| assignment.get(id) == Some(&bin))
                    .map(|(i, _)| i)
                    .collect();
                if rows.is_empty() {
                    continue;
                }
                let sub_pred = pred.select_rows(rows.iter());
                let sub_truth = test.targets.select_rows(rows.iter());
                let m = metrics(&sub_pred, &sub_truth)?;
                reports.insert(
                    bin_label(bin, spec.n_bins),
                    StratumReport {
                        n: rows.len(),
                        delta0: m[0],
                        delta1: m[1],
                    },
                );
            }
            Some(reports)
        }
    };

    Ok(EvalReport {
        n_test: test.n(),
        delta0: overall[0],
        delta1: overall[1],
        vs_baseline,
        strata: strata_reports,
    })
}

/// Per-episode predictions CSV
/// (`region_id,delta0_true,delta1_true,delta0_pred,delta1_pred`).
pub fn write_predictions_csv(
    test: &Dataset,
    pred: &DMatrix<f64>,
    path: &std::path::Path,
) -> Result<(), EvalError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| EvalError::Config(format!("predictions csv: {e}")))?;
    writer
        .write_record([
            "region_id",
            "delta0_true",
            "delta1_true",
            "delta0_pred",
            "delta1_pred",
        ])
        .map_err(|e| EvalError::Config(format!("predictions csv: {e}")))?;
    for (i, region) in test.region_ids.iter().enumerate() {
        writer
            .write_record([
                region.as_str(),
                &test.targets[(i, 0)].to_string(),
                &test.targets[(i, 1)].to_string(),
                &pred[(i, 0)].to_string(),
                &pred[(i, 1)].to_string(),
            ])
            .map_err(|e| EvalError::Config(format!("predictions csv: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| EvalError::Config(format!("predictions csv: {e}")))?;
    Ok(())
}
