//! Difference-in-differences with nearest-neighbor region matching.
//!
//! Candidate control regions are embedded as 9-length match vectors:
//! three principal components of the standardized sociodemographics, the
//! standardized latitude/longitude, a binary adjacency flag relative to the
//! target, and the candidate's pre-event outcome mean triplicated. Controls
//! are the k candidates nearest (Euclidean) to the target's reference
//! vector; the reference sets the adjacency slot to 1 since the ideal
//! control is a neighbor.
//!
//! The estimate follows the textbook two-by-two:
//! `counterfactual = target_pre + (mean(control_post) - mean(control_pre))`,
//! `did = target_post - counterfactual`, with pre/post means taken over the
//! same buffered windows the discontinuity estimator uses.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::{EventTable, Panel, RegionId, RegionMeta};
use crate::rdd::WindowConfig;
use crate::util;

pub const MATCH_VECTOR_LEN: usize = 9;
const PCA_COMPONENTS: usize = 3;

/// Principal components of standardized columns, eigenvalue-descending, with
/// the largest-magnitude loading of each component made positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaState {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// `d x k`, one column per component.
    pub components: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl PcaState {
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.means[j]) / self.stds[j])
            .collect();
        (0..self.components.ncols())
            .map(|k| {
                z.iter()
                    .enumerate()
                    .map(|(j, v)| v * self.components[(j, k)])
                    .sum()
            })
            .collect()
    }
}

/// Fit PCA on an `n x d` matrix; returns the state and the projected rows.
pub fn fit_pca(
    data: &DMatrix<f64>,
    n_components: usize,
) -> Result<(PcaState, DMatrix<f64>), DidError> {
    let (n, d) = data.shape();
    if n <= n_components {
        return Err(DidError::Pca(format!(
            "need more than {n_components} rows, got {n}"
        )));
    }
    if d < n_components {
        return Err(DidError::Pca(format!(
            "need at least {n_components} columns, got {d}"
        )));
    }

    let mut means = Vec::with_capacity(d);
    let mut stds = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = data.column(j).iter().copied().collect();
        means.push(util::mean(&col));
        let std = util::population_std(&col);
        stds.push(if std > 0.0 { std } else { 1.0 });
    }
    let z = DMatrix::from_fn(n, d, |i, j| (data[(i, j)] - means[j]) / stds[j]);
    let covariance = z.transpose() * &z / (n as f64 - 1.0);
    let eigen = SymmetricEigen::new(covariance);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let tolerance = eigen.eigenvalues[order[0]].abs().max(1.0) * 1e-10;
    let rank = order
        .iter()
        .take_while(|&&j| eigen.eigenvalues[j] > tolerance)
        .count();
    if rank < n_components {
        return Err(DidError::Pca(format!(
            "rank {rank} is below the requested {n_components} components"
        )));
    }

    let mut components = DMatrix::zeros(d, n_components);
    let mut eigenvalues = Vec::with_capacity(n_components);
    for (k, &j) in order.iter().take(n_components).enumerate() {
        let mut column: Vec<f64> = eigen.eigenvectors.column(j).iter().copied().collect();
        // sign convention: the largest-magnitude loading is positive
        let lead = column
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if column[lead] < 0.0 {
            for v in &mut column {
                *v = -*v;
            }
        }
        for (row, v) in column.iter().enumerate() {
            components[(row, k)] = *v;
        }
        eigenvalues.push(eigen.eigenvalues[j]);
    }

    let state = PcaState {
        means,
        stds,
        components,
        eigenvalues,
    };
    let projected = DMatrix::from_fn(n, n_components, |i, k| {
        let row: Vec<f64> = data.row(i).iter().copied().collect();
        state.project(&row)[k]
    });
    Ok((state, projected))
}

/// Cohort-level state needed to build match vectors: the sociodemographic
/// PCA plus geo standardization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchContext {
    pub pca: PcaState,
    pub lat_mean: f64,
    pub lat_std: f64,
    pub lon_mean: f64,
    pub lon_std: f64,
}

pub fn fit_match_context(
    metas: &BTreeMap<RegionId, RegionMeta>,
) -> Result<MatchContext, DidError> {
    if metas.is_empty() {
        return Err(DidError::Pca("no region metadata".into()));
    }
    let d = metas
        .values()
        .next()
        .map(|m| m.sociodemographics.len())
        .unwrap_or(0);
    if metas.values().any(|m| m.sociodemographics.len() != d) {
        return Err(DidError::Pca(
            "inconsistent sociodemographic dimensions".into(),
        ));
    }
    let rows: Vec<&RegionMeta> = metas.values().collect();
    let data = DMatrix::from_fn(rows.len(), d, |i, j| rows[i].sociodemographics[j]);
    let (pca, _) = fit_pca(&data, PCA_COMPONENTS)?;

    let lats: Vec<f64> = rows.iter().map(|m| m.latitude).collect();
    let lons: Vec<f64> = rows.iter().map(|m| m.longitude).collect();
    Ok(MatchContext {
        pca,
        lat_mean: util::mean(&lats),
        lat_std: util::population_std(&lats).max(1e-12),
        lon_mean: util::mean(&lons),
        lon_std: util::population_std(&lons).max(1e-12),
    })
}

/// 9-length candidate representation relative to one target region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchVector {
    pub region_id: RegionId,
    pub values: [f64; MATCH_VECTOR_LEN],
}

impl MatchVector {
    pub fn adjacency(&self) -> f64 {
        self.values[5]
    }
}

fn assemble_vector(
    region_id: &RegionId,
    meta: &RegionMeta,
    context: &MatchContext,
    adjacency: f64,
    pre_outcome: f64,
) -> Result<MatchVector, DidError> {
    if !pre_outcome.is_finite() {
        return Err(DidError::InvalidMeta(format!(
            "non-finite pre-event outcome for {region_id}"
        )));
    }
    let pcs = context.pca.project(&meta.sociodemographics);
    let values = [
        pcs[0],
        pcs[1],
        pcs[2],
        (meta.latitude - context.lat_mean) / context.lat_std,
        (meta.longitude - context.lon_mean) / context.lon_std,
        adjacency,
        pre_outcome,
        pre_outcome,
        pre_outcome,
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DidError::InvalidMeta(format!(
            "non-finite match vector entry for {region_id}"
        )));
    }
    Ok(MatchVector {
        region_id: region_id.clone(),
        values,
    })
}

/// Candidate vector relative to `target`. `pre_outcome` is the candidate's
/// mean outcome over the target's before window.
pub fn build_match_vector(
    candidate: &RegionMeta,
    target: &RegionMeta,
    context: &MatchContext,
    pre_outcome: f64,
) -> Result<MatchVector, DidError> {
    if candidate.region_id == target.region_id {
        return Err(DidError::SelfMatch(candidate.region_id.clone()));
    }
    let adjacency = if target.adjacent_regions.contains(&candidate.region_id) {
        1.0
    } else {
        0.0
    };
    assemble_vector(&candidate.region_id, candidate, context, adjacency, pre_outcome)
}

/// The target's own reference vector. The adjacency slot is 1: the ideal
/// control is a neighbor.
pub fn reference_vector(
    target: &RegionMeta,
    context: &MatchContext,
    own_pre_outcome: f64,
) -> Result<MatchVector, DidError> {
    assemble_vector(&target.region_id, target, context, 1.0, own_pre_outcome)
}

/// The `k` candidates nearest to `reference`; ties break toward the lower
/// region id.
pub fn match_controls(
    reference: &MatchVector,
    candidates: &[MatchVector],
    k: usize,
) -> Result<Vec<RegionId>, DidError> {
    if k == 0 {
        return Err(DidError::InvalidK);
    }
    if candidates.len() < k {
        return Err(DidError::NotEnoughCandidates {
            needed: k,
            found: candidates.len(),
        });
    }
    let mut scored: Vec<(f64, &RegionId)> = candidates
        .iter()
        .map(|c| {
            let dist2: f64 = c
                .values
                .iter()
                .zip(&reference.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (dist2, &c.region_id)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    Ok(scored.into_iter().take(k).map(|(_, id)| id.clone()).collect())
}

/// One difference-in-differences estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiDResult {
    pub target_region: RegionId,
    pub matched_regions: Vec<RegionId>,
    pub counterfactual: f64,
    pub observed: f64,
    pub did: f64,
}

/// Plug pre/post means into the two-by-two:
/// `counterfactual = target_pre + (mean(control_post) - mean(control_pre))`.
pub fn did_estimate(
    target_region: &RegionId,
    target_pre: f64,
    target_post: f64,
    matched_regions: &[RegionId],
    control_pre: &[f64],
    control_post: &[f64],
) -> Result<DiDResult, DidError> {
    if matched_regions.is_empty() || control_pre.is_empty() || control_post.is_empty() {
        return Err(DidError::EmptyControls);
    }
    if control_pre.len() != control_post.len() || control_pre.len() != matched_regions.len() {
        return Err(DidError::InvalidMeta(
            "control pre/post lengths disagree".into(),
        ));
    }
    let counterfactual = target_pre + (util::mean(control_post) - util::mean(control_pre));
    Ok(DiDResult {
        target_region: target_region.clone(),
        matched_regions: matched_regions.to_vec(),
        counterfactual,
        observed: target_post,
        did: target_post - counterfactual,
    })
}

#[derive(Debug, Error)]
pub enum DidError {
    #[error("pca: {0}")]
    Pca(String),
    #[error("region {0} cannot be matched with itself")]
    SelfMatch(RegionId),
    #[error("k must be >= 1")]
    InvalidK,
    #[error("not enough eligible control candidates: needed {needed}, found {found}")]
    NotEnoughCandidates { needed: usize, found: usize },
    #[error("matched control set is empty")]
    EmptyControls,
    #[error("invalid metadata: {0}")]
    InvalidMeta(String),
    #[error("region `{0}` not found")]
    UnknownRegion(RegionId),
    #[error("no `{event_type}` event recorded for region {region}")]
    MissingEvent { region: RegionId, event_type: String },
    #[error("region {region}: only {found} observations in the {period} period, need {required}")]
    InsufficientPeriodData {
        region: RegionId,
        period: String,
        found: usize,
        required: usize,
    },
}

/// Mean score over an inclusive week range; `None` when too few points.
fn window_mean(
    panel: &Panel,
    region: &RegionId,
    lo: i64,
    hi: i64,
    min_points: usize,
) -> Option<(f64, usize)> {
    let obs = panel.region(region)?;
    let values: Vec<f64> = obs
        .iter()
        .filter(|o| o.week >= lo && o.week <= hi)
        .map(|o| o.score)
        .collect();
    (values.len() >= min_points).then(|| (util::mean(&values), values.len()))
}

/// Full matching + estimation pipeline for one target region. Candidates
/// must have metadata, enough observed data in both periods, and no event of
/// the same type inside the target's window.
pub fn did_pipeline(
    panel: &Panel,
    events: &EventTable,
    metas: &BTreeMap<RegionId, RegionMeta>,
    target: &RegionId,
    event_type: &str,
    k: usize,
    config: &WindowConfig,
) -> Result<DiDResult, DidError> {
    config
        .validate()
        .map_err(|e| DidError::InvalidMeta(e.to_string()))?;
    let target_meta = metas
        .get(target)
        .ok_or_else(|| DidError::UnknownRegion(target.clone()))?;
    let event_week = events
        .event_week(target, event_type)
        .ok_or_else(|| DidError::MissingEvent {
            region: target.clone(),
            event_type: event_type.to_owned(),
        })?;

    let (before_lo, before_hi) = config.before_range();
    let (after_lo, after_hi) = config.after_range();
    let pre_range = (event_week + before_lo, event_week + before_hi);
    let post_range = (event_week + after_lo, event_week + after_hi);
    let min_points = config.min_points_per_segment;

    let require = |region: &RegionId, range: (i64, i64), period: &str| {
        window_mean(panel, region, range.0, range.1, min_points).ok_or_else(|| {
            let found = panel
                .region(region)
                .map(|obs| {
                    obs.iter()
                        .filter(|o| o.week >= range.0 && o.week <= range.1)
                        .count()
                })
                .unwrap_or(0);
            DidError::InsufficientPeriodData {
                region: region.clone(),
                period: period.to_owned(),
                found,
                required: min_points,
            }
        })
    };
    let (target_pre, _) = require(target, pre_range, "pre")?;
    let (target_post, _) = require(target, post_range, "post")?;

    let context = fit_match_context(metas)?;
    let window_lo = event_week - config.half_width as i64;
    let window_hi = event_week + config.half_width as i64;

    let mut candidates = Vec::new();
    let mut candidate_means: BTreeMap<RegionId, (f64, f64)> = BTreeMap::new();
    for (region_id, meta) in metas {
        if region_id == target {
            continue;
        }
        // controls must be untreated inside the target's window
        if let Some(week) = events.event_week(region_id, event_type) {
            if week >= window_lo && week <= window_hi {
                continue;
            }
        }
        let Some((pre, _)) = window_mean(panel, region_id, pre_range.0, pre_range.1, min_points)
        else {
            continue;
        };
        let Some((post, _)) =
            window_mean(panel, region_id, post_range.0, post_range.1, min_points)
        else {
            continue;
        };
        candidates.push(build_match_vector(meta, target_meta, &context, pre)?);
        candidate_means.insert(region_id.clone(), (pre, post));
    }

    let reference = reference_vector(target_meta, &context, target_pre)?;
    let matched = match_controls(&reference, &candidates, k)?;
    let control_pre: Vec<f64> = matched.iter().map(|r| candidate_means[r].0).collect();
    let control_post: Vec<f64> = matched.iter().map(|r| candidate_means[r].1).collect();
    did_estimate(
        target,
        target_pre,
        target_post,
        &matched,
        &control_pre,
        &control_post,
    )
}
