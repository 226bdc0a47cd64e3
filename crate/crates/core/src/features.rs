//! Predictor assembly from pre-event data only.
//!
//! A feature vector concatenates, in fixed order, whichever blocks the spec
//! enables:
//!
//! - history (`P`): the raw before-segment scores, in offset order;
//! - trend coefficients (`RC`): the before-fit `(beta0, beta1)` pair;
//! - covariate (`cov`): the same two blocks from a second running series;
//! - embedding (`exog`): the region's static exogenous vector.
//!
//! History blocks demand a gap-free before segment. Imputing missing weeks
//! from the fitted line would leak the fit back into the raw history, so
//! incomplete episodes are skipped instead.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::{EmbeddingTable, PanelError, RegionId};
use crate::rdd::{DiscontinuityOutcome, EpisodeWindow, SkippedRegion, WindowConfig};

/// Which feature blocks to assemble. Parsed from the CLI grammar
/// `P,RC,cov,exog`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub use_history: bool,
    pub use_coeffs: bool,
    pub use_covariate: bool,
    pub use_embedding: bool,
}

impl FeatureSetSpec {
    pub fn parse(spec: &str) -> Result<FeatureSetSpec, FeatureError> {
        let mut out = FeatureSetSpec {
            use_history: false,
            use_coeffs: false,
            use_covariate: false,
            use_embedding: false,
        };
        for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match token {
                "P" => out.use_history = true,
                "RC" => out.use_coeffs = true,
                "cov" => out.use_covariate = true,
                "exog" => out.use_embedding = true,
                other => {
                    return Err(FeatureError::InvalidSpec(format!(
                        "unknown feature token `{other}` (expected P, RC, cov, exog)"
                    )))
                }
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if !(self.use_history || self.use_coeffs || self.use_covariate || self.use_embedding) {
            return Err(FeatureError::InvalidSpec(
                "at least one feature block must be enabled".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for FeatureSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut tokens = Vec::new();
        if self.use_history {
            tokens.push("P");
        }
        if self.use_coeffs {
            tokens.push("RC");
        }
        if self.use_covariate {
            tokens.push("cov");
        }
        if self.use_embedding {
            tokens.push("exog");
        }
        f.write_str(&tokens.join(","))
    }
}

/// One contiguous block inside a feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    History { offsets: Vec<i64> },
    TrendCoeffs,
    CovHistory { offsets: Vec<i64> },
    CovTrendCoeffs,
    Embedding { dim: usize },
}

impl BlockKind {
    pub fn name(&self) -> &'static str {
        match self {
            BlockKind::History { .. } => "history",
            BlockKind::TrendCoeffs => "coeffs",
            BlockKind::CovHistory { .. } => "cov_history",
            BlockKind::CovTrendCoeffs => "cov_coeffs",
            BlockKind::Embedding { .. } => "embedding",
        }
    }

    fn len(&self) -> usize {
        match self {
            BlockKind::History { offsets } | BlockKind::CovHistory { offsets } => offsets.len(),
            BlockKind::TrendCoeffs | BlockKind::CovTrendCoeffs => 2,
            BlockKind::Embedding { dim } => *dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub offset: usize,
    pub len: usize,
}

/// The block layout shared by every vector in a dataset, plus the window
/// geometry the features were computed under (the forecasting baseline needs
/// it to rebuild the after grid).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub blocks: Vec<Block>,
    pub dim: usize,
    pub window: WindowConfig,
}

impl FeatureLayout {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.kind.name() == name)
    }

    pub fn history_offsets(&self) -> Option<&[i64]> {
        self.blocks.iter().find_map(|b| match &b.kind {
            BlockKind::History { offsets } => Some(offsets.as_slice()),
            _ => None,
        })
    }

    /// FNV-1a over a canonical encoding; stable across processes.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&(self.dim as u64).to_le_bytes());
        eat(&(self.window.half_width as u64).to_le_bytes());
        eat(&(self.window.buffer as u64).to_le_bytes());
        for block in &self.blocks {
            eat(block.kind.name().as_bytes());
            eat(&(block.offset as u64).to_le_bytes());
            eat(&(block.len as u64).to_le_bytes());
            if let BlockKind::History { offsets } | BlockKind::CovHistory { offsets } = &block.kind
            {
                for &o in offsets {
                    eat(&o.to_le_bytes());
                }
            }
        }
        hash
    }
}

/// One assembled predictor vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub region_id: RegionId,
    pub x: Vec<f64>,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    /// Read back one block by name.
    pub fn block_values(&self, name: &str) -> Option<&[f64]> {
        let block = self.layout.block(name)?;
        Some(&self.x[block.offset..block.offset + block.len])
    }
}

/// Episode rows, targets, and the shared layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    /// `n x 2`, columns `(delta0, delta1)`.
    pub targets: DMatrix<f64>,
    pub region_ids: Vec<RegionId>,
    pub layout: FeatureLayout,
    pub spec: FeatureSetSpec,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Rows whose region id is in `keep`, preserving row order.
    pub fn subset(&self, keep: &[RegionId]) -> Dataset {
        let keep: std::collections::BTreeSet<&RegionId> = keep.iter().collect();
        let rows: Vec<usize> = self
            .region_ids
            .iter()
            .enumerate()
            .filter(|(_, id)| keep.contains(id))
            .map(|(i, _)| i)
            .collect();
        Dataset {
            x: self.x.select_rows(rows.iter()),
            targets: self.targets.select_rows(rows.iter()),
            region_ids: rows.iter().map(|&i| self.region_ids[i].clone()).collect(),
            layout: self.layout.clone(),
            spec: self.spec,
        }
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature spec: {0}")]
    InvalidSpec(String),
    #[error("region {0}: before segment has gaps; history features need every offset")]
    IncompleteHistory(RegionId),
    #[error("region {0}: embedding missing")]
    MissingEmbedding(RegionId),
    #[error("region {0}: covariate episode missing")]
    MissingCovariate(RegionId),
    #[error("region {0}: non-finite feature or target value")]
    NonFinite(RegionId),
    #[error("no episode passed the availability checks")]
    EmptyDataset,
    #[error("window config: {0}")]
    Window(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("dataset csv: {0}")]
    DatasetFormat(String),
}

fn expected_before_offsets(config: &WindowConfig) -> Vec<i64> {
    let (lo, hi) = config.before_range();
    (lo..=hi).collect()
}

/// Pull the history values off a window, requiring a gap-free grid.
fn history_values(window: &EpisodeWindow, expected: &[i64]) -> Result<Vec<f64>, FeatureError> {
    if window.before.len() != expected.len()
        || window
            .before
            .iter()
            .zip(expected)
            .any(|(&(t, _), &e)| t != e)
    {
        return Err(FeatureError::IncompleteHistory(window.region_id.clone()));
    }
    Ok(window.before.iter().map(|&(_, y)| y).collect())
}

/// Assemble one episode's feature vector.
pub fn build_features(
    outcome: &DiscontinuityOutcome,
    window: &EpisodeWindow,
    cov_outcome: Option<&DiscontinuityOutcome>,
    cov_window: Option<&EpisodeWindow>,
    embedding: Option<&[f64]>,
    spec: FeatureSetSpec,
    config: &WindowConfig,
) -> Result<FeatureVector, FeatureError> {
    spec.validate()?;
    config
        .validate()
        .map_err(|e| FeatureError::Window(e.to_string()))?;
    let expected = expected_before_offsets(config);
    let mut x = Vec::new();
    let mut blocks = Vec::new();
    let mut push = |kind: BlockKind, values: Vec<f64>, x: &mut Vec<f64>| {
        debug_assert_eq!(kind.len(), values.len());
        blocks.push(Block {
            len: values.len(),
            offset: x.len(),
            kind,
        });
        x.extend(values);
    };

    if spec.use_history {
        let values = history_values(window, &expected)?;
        push(
            BlockKind::History {
                offsets: expected.clone(),
            },
            values,
            &mut x,
        );
    }
    if spec.use_coeffs {
        push(
            BlockKind::TrendCoeffs,
            vec![outcome.before_fit.beta0, outcome.before_fit.beta1],
            &mut x,
        );
    }
    if spec.use_covariate {
        let cov_window =
            cov_window.ok_or_else(|| FeatureError::MissingCovariate(window.region_id.clone()))?;
        let cov_outcome =
            cov_outcome.ok_or_else(|| FeatureError::MissingCovariate(window.region_id.clone()))?;
        let values = history_values(cov_window, &expected)?;
        push(
            BlockKind::CovHistory {
                offsets: expected.clone(),
            },
            values,
            &mut x,
        );
        push(
            BlockKind::CovTrendCoeffs,
            vec![cov_outcome.before_fit.beta0, cov_outcome.before_fit.beta1],
            &mut x,
        );
    }
    if spec.use_embedding {
        let embedding =
            embedding.ok_or_else(|| FeatureError::MissingEmbedding(window.region_id.clone()))?;
        push(
            BlockKind::Embedding {
                dim: embedding.len(),
            },
            embedding.to_vec(),
            &mut x,
        );
    }

    if x.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite(window.region_id.clone()));
    }
    let layout = FeatureLayout {
        dim: x.len(),
        blocks,
        window: *config,
    };
    Ok(FeatureVector {
        region_id: window.region_id.clone(),
        x,
        layout,
    })
}

/// Build a dataset from aligned episodes. Episodes are matched by region id;
/// any episode failing an availability check is skipped with a reason. Rows
/// come out sorted by region id regardless of input order.
pub fn assemble_dataset(
    outcomes: &[DiscontinuityOutcome],
    windows: &[EpisodeWindow],
    cov_outcomes: Option<&[DiscontinuityOutcome]>,
    cov_windows: Option<&[EpisodeWindow]>,
    embeddings: Option<&EmbeddingTable>,
    spec: FeatureSetSpec,
    config: &WindowConfig,
) -> Result<(Dataset, Vec<SkippedRegion>), FeatureError> {
    spec.validate()?;
    let windows_by_region: BTreeMap<&RegionId, &EpisodeWindow> =
        windows.iter().map(|w| (&w.region_id, w)).collect();
    let cov_outcomes_by_region: BTreeMap<&RegionId, &DiscontinuityOutcome> = cov_outcomes
        .unwrap_or(&[])
        .iter()
        .map(|o| (&o.region_id, o))
        .collect();
    let cov_windows_by_region: BTreeMap<&RegionId, &EpisodeWindow> = cov_windows
        .unwrap_or(&[])
        .iter()
        .map(|w| (&w.region_id, w))
        .collect();

    let by_region: BTreeMap<&RegionId, &DiscontinuityOutcome> =
        outcomes.iter().map(|o| (&o.region_id, o)).collect();

    let mut rows: Vec<FeatureVector> = Vec::new();
    let mut targets: Vec<[f64; 2]> = Vec::new();
    let mut skipped = Vec::new();
    for (region_id, outcome) in by_region {
        let skip = |reason: String, skipped: &mut Vec<SkippedRegion>| {
            skipped.push(SkippedRegion {
                region_id: region_id.clone(),
                reason,
            });
        };
        let Some(window) = windows_by_region.get(region_id) else {
            skip("window missing for outcome".into(), &mut skipped);
            continue;
        };
        if !(outcome.delta0.is_finite() && outcome.delta1.is_finite()) {
            skip("non-finite target".into(), &mut skipped);
            continue;
        }
        let built = build_features(
            outcome,
            window,
            cov_outcomes_by_region.get(region_id).copied(),
            cov_windows_by_region.get(region_id).copied(),
            embeddings.and_then(|e| e.get(region_id)),
            spec,
            config,
        );
        match built {
            Ok(vector) => {
                rows.push(vector);
                targets.push([outcome.delta0, outcome.delta1]);
            }
            Err(e) => skip(e.to_string(), &mut skipped),
        }
    }

    if rows.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let layout = rows[0].layout.clone();
    for row in &rows {
        if row.layout != layout {
            return Err(FeatureError::DatasetFormat(format!(
                "inconsistent layout for region {}",
                row.region_id
            )));
        }
    }

    let n = rows.len();
    let d = layout.dim;
    let x = DMatrix::from_fn(n, d, |i, j| rows[i].x[j]);
    let t = DMatrix::from_fn(n, 2, |i, j| targets[i][j]);
    Ok((
        Dataset {
            x,
            targets: t,
            region_ids: rows.into_iter().map(|r| r.region_id).collect(),
            layout,
            spec,
        },
        skipped,
    ))
}

/// Estimate outcomes over `panel`, re-extract the matching windows, and
/// assemble the dataset in one step. The optional covariate panel runs
/// through the same estimator at the same event weeks.
pub fn dataset_from_panel(
    panel: &crate::panel::Panel,
    events: &crate::panel::EventTable,
    event_type: &str,
    cov_panel: Option<&crate::panel::Panel>,
    embeddings: Option<&EmbeddingTable>,
    spec: FeatureSetSpec,
    config: &WindowConfig,
) -> Result<(Dataset, Vec<SkippedRegion>), FeatureError> {
    let windows_for = |p: &crate::panel::Panel,
                       outcomes: &[DiscontinuityOutcome]|
     -> Vec<EpisodeWindow> {
        outcomes
            .iter()
            .filter_map(|o| {
                let week = events.event_week(&o.region_id, event_type)?;
                crate::rdd::extract_window(p, &o.region_id, week, config).ok()
            })
            .collect()
    };

    let (outcomes, stats) = crate::rdd::batch_estimate(panel, events, event_type, config)
        .map_err(|e| FeatureError::Window(e.to_string()))?;
    let windows = windows_for(panel, &outcomes);

    let (cov_outcomes, cov_windows) = match cov_panel {
        None => (None, None),
        Some(cov) => {
            let (cov_outcomes, _) = crate::rdd::batch_estimate(cov, events, event_type, config)
                .map_err(|e| FeatureError::Window(e.to_string()))?;
            let cov_windows = windows_for(cov, &cov_outcomes);
            (Some(cov_outcomes), Some(cov_windows))
        }
    };

    let (dataset, mut skipped) = assemble_dataset(
        &outcomes,
        &windows,
        cov_outcomes.as_deref(),
        cov_windows.as_deref(),
        embeddings,
        spec,
        config,
    )?;
    skipped.extend(stats.skipped);
    skipped.sort_by(|a, b| a.region_id.cmp(&b.region_id));
    Ok((dataset, skipped))
}

/// Write `dataset.csv` (`region_id,delta0,delta1,f_0..`) plus a JSON layout
/// sidecar next to it.
pub fn write_dataset(
    dataset: &Dataset,
    csv_path: &Path,
    layout_path: &Path,
) -> Result<(), FeatureError> {
    let mut writer = csv::Writer::from_path(csv_path).map_err(PanelError::from)?;
    let mut header = vec![
        "region_id".to_owned(),
        "delta0".to_owned(),
        "delta1".to_owned(),
    ];
    header.extend((0..dataset.dim()).map(|i| format!("f_{i}")));
    writer.write_record(&header).map_err(PanelError::from)?;
    for (i, region) in dataset.region_ids.iter().enumerate() {
        let mut row = vec![
            region.as_str().to_owned(),
            dataset.targets[(i, 0)].to_string(),
            dataset.targets[(i, 1)].to_string(),
        ];
        row.extend((0..dataset.dim()).map(|j| dataset.x[(i, j)].to_string()));
        writer.write_record(&row).map_err(PanelError::from)?;
    }
    writer.flush().map_err(PanelError::from)?;

    let sidecar = serde_json::json!({
        "spec": dataset.spec,
        "layout": dataset.layout,
    });
    std::fs::write(
        layout_path,
        serde_json::to_string_pretty(&sidecar).expect("layout serializes") + "\n",
    )
    .map_err(PanelError::from)?;
    Ok(())
}

pub fn read_dataset(csv_path: &Path, layout_path: &Path) -> Result<Dataset, FeatureError> {
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(layout_path).map_err(PanelError::from)?)
            .map_err(|e| FeatureError::DatasetFormat(format!("layout sidecar: {e}")))?;
    let spec: FeatureSetSpec = serde_json::from_value(sidecar["spec"].clone())
        .map_err(|e| FeatureError::DatasetFormat(format!("layout sidecar spec: {e}")))?;
    let layout: FeatureLayout = serde_json::from_value(sidecar["layout"].clone())
        .map_err(|e| FeatureError::DatasetFormat(format!("layout sidecar layout: {e}")))?;

    let mut reader = csv::Reader::from_path(csv_path).map_err(PanelError::from)?;
    let mut region_ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets: Vec<[f64; 2]> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(PanelError::from)?;
        if record.len() != layout.dim + 3 {
            return Err(FeatureError::DatasetFormat(format!(
                "expected {} columns, found {}",
                layout.dim + 3,
                record.len()
            )));
        }
        region_ids.push(RegionId::from(record.get(0).unwrap_or_default()));
        let parse = |s: &str| -> Result<f64, FeatureError> {
            s.parse()
                .map_err(|_| FeatureError::DatasetFormat(format!("non-numeric value `{s}`")))
        };
        targets.push([
            parse(record.get(1).unwrap_or_default())?,
            parse(record.get(2).unwrap_or_default())?,
        ]);
        let mut row = Vec::with_capacity(layout.dim);
        for j in 0..layout.dim {
            row.push(parse(record.get(j + 3).unwrap_or_default())?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let n = rows.len();
    Ok(Dataset {
        x: DMatrix::from_fn(n, layout.dim, |i, j| rows[i][j]),
        targets: DMatrix::from_fn(n, 2, |i, j| targets[i][j]),
        region_ids,
        layout,
        spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdd::{batch_estimate, extract_window};
    use crate::synth::{self, EffectMap, SynthConfig};

    fn cohort(
        n: usize,
        seed: u64,
    ) -> (
        synth::SynthData,
        Vec<DiscontinuityOutcome>,
        Vec<EpisodeWindow>,
        WindowConfig,
    ) {
        let mut config = SynthConfig::quiet(n, 60, seed);
        config.effect_map = EffectMap::Constant {
            delta0: 0.8,
            delta1: -0.2,
        };
        let data = synth::generate(&config).unwrap();
        let wc = WindowConfig::default();
        let (outcomes, _) = batch_estimate(&data.panel, &data.events, "event", &wc).unwrap();
        let windows: Vec<EpisodeWindow> = outcomes
            .iter()
            .map(|o| {
                let week = data.events.event_week(&o.region_id, "event").unwrap();
                extract_window(&data.panel, &o.region_id, week, &wc).unwrap()
            })
            .collect();
        (data, outcomes, windows, wc)
    }

    fn spec(tokens: &str) -> FeatureSetSpec {
        FeatureSetSpec::parse(tokens).unwrap()
    }

    #[test]
    fn table_dimension_grid() {
        // (tokens, expected dim) with T=9, b=1, d_e=1024, cov block = 11
        let cases = [
            ("RC", 2),
            ("P", 9),
            ("P,RC", 11),
            ("exog", 1024),
            ("exog,RC", 1026),
            ("exog,P", 1033),
            ("exog,P,RC", 1035),
            ("cov,exog,P,RC", 1046),
        ];
        let (_data, outcomes, windows, wc) = cohort(4, 5);
        let embedding: Vec<f64> = (0..1024).map(|i| i as f64 * 0.001).collect();
        for (tokens, expected) in cases {
            let s = spec(tokens);
            let v = build_features(
                &outcomes[0],
                &windows[0],
                Some(&outcomes[0]),
                Some(&windows[0]),
                Some(&embedding),
                s,
                &wc,
            )
            .unwrap();
            assert_eq!(v.x.len(), expected, "{tokens}");
            assert_eq!(v.layout.dim, expected);
        }
    }

    #[test]
    fn block_readback_is_exact() {
        let (data, outcomes, windows, wc) = cohort(3, 7);
        let emb = data.embeddings.get(&outcomes[0].region_id).unwrap();
        let v = build_features(
            &outcomes[0],
            &windows[0],
            Some(&outcomes[1]),
            Some(&windows[0]),
            Some(emb),
            spec("P,RC,cov,exog"),
            &wc,
        )
        .unwrap();
        let history: Vec<f64> = windows[0].before.iter().map(|&(_, y)| y).collect();
        assert_eq!(v.block_values("history").unwrap(), history.as_slice());
        assert_eq!(
            v.block_values("coeffs").unwrap(),
            [outcomes[0].before_fit.beta0, outcomes[0].before_fit.beta1]
        );
        assert_eq!(v.block_values("cov_history").unwrap(), history.as_slice());
        assert_eq!(
            v.block_values("cov_coeffs").unwrap(),
            [outcomes[1].before_fit.beta0, outcomes[1].before_fit.beta1]
        );
        assert_eq!(v.block_values("embedding").unwrap(), emb);
        // blocks tile the vector
        let total: usize = v.layout.blocks.iter().map(|b| b.len).sum();
        assert_eq!(total, v.x.len());
    }

    #[test]
    fn missing_embedding_and_covariate_error() {
        let (_, outcomes, windows, wc) = cohort(2, 9);
        assert!(matches!(
            build_features(&outcomes[0], &windows[0], None, None, None, spec("exog"), &wc),
            Err(FeatureError::MissingEmbedding(_))
        ));
        assert!(matches!(
            build_features(&outcomes[0], &windows[0], None, None, None, spec("cov"), &wc),
            Err(FeatureError::MissingCovariate(_))
        ));
    }

    #[test]
    fn incomplete_history_is_rejected() {
        let (_, outcomes, mut windows, wc) = cohort(2, 13);
        windows[0].before.remove(3);
        assert!(matches!(
            build_features(&outcomes[0], &windows[0], None, None, None, spec("P"), &wc),
            Err(FeatureError::IncompleteHistory(_))
        ));
        // RC-only still works: the fit exists even with gaps
        assert!(
            build_features(&outcomes[0], &windows[0], None, None, None, spec("RC"), &wc).is_ok()
        );
    }

    #[test]
    fn assemble_skips_with_reasons_and_sorts() {
        let (data, outcomes, windows, wc) = cohort(5, 17);
        // remove one region's embedding
        let mut embeddings = data.embeddings.clone();
        let dropped = outcomes[2].region_id.clone();
        embeddings.vectors.remove(&dropped);

        let (dataset, skipped) = assemble_dataset(
            &outcomes,
            &windows,
            None,
            None,
            Some(&embeddings),
            spec("P,exog"),
            &wc,
        )
        .unwrap();
        assert_eq!(dataset.n(), 4);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].region_id, dropped);
        let mut sorted = dataset.region_ids.clone();
        sorted.sort();
        assert_eq!(sorted, dataset.region_ids);
    }

    #[test]
    fn assembly_is_order_independent() {
        let (_, outcomes, windows, wc) = cohort(6, 19);
        let (forward, _) =
            assemble_dataset(&outcomes, &windows, None, None, None, spec("P,RC"), &wc).unwrap();
        let mut reversed_outcomes = outcomes.clone();
        reversed_outcomes.reverse();
        let mut reversed_windows = windows.clone();
        reversed_windows.reverse();
        let (backward, _) = assemble_dataset(
            &reversed_outcomes,
            &reversed_windows,
            None,
            None,
            None,
            spec("P,RC"),
            &wc,
        )
        .unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn empty_assembly_errors() {
        let (_, outcomes, windows, wc) = cohort(2, 23);
        let empty = EmbeddingTable {
            dim: 4,
            vectors: BTreeMap::new(),
        };
        assert!(matches!(
            assemble_dataset(&outcomes, &windows, None, None, Some(&empty), spec("exog"), &wc),
            Err(FeatureError::EmptyDataset)
        ));
    }

    #[test]
    fn zero_effect_targets_are_zero() {
        let config = SynthConfig::quiet(5, 60, 29);
        let data = synth::generate(&config).unwrap();
        let wc = WindowConfig::default();
        let (outcomes, _) = batch_estimate(&data.panel, &data.events, "event", &wc).unwrap();
        let windows: Vec<EpisodeWindow> = outcomes
            .iter()
            .map(|o| {
                let week = data.events.event_week(&o.region_id, "event").unwrap();
                extract_window(&data.panel, &o.region_id, week, &wc).unwrap()
            })
            .collect();
        let (dataset, _) =
            assemble_dataset(&outcomes, &windows, None, None, None, spec("P"), &wc).unwrap();
        assert!(dataset.targets.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn dataset_round_trips_through_csv() {
        let (_, outcomes, windows, wc) = cohort(4, 31);
        let (dataset, _) =
            assemble_dataset(&outcomes, &windows, None, None, None, spec("P,RC"), &wc).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("ds.csv");
        let layout_path = dir.path().join("ds.layout.json");
        write_dataset(&dataset, &csv_path, &layout_path).unwrap();
        let loaded = read_dataset(&csv_path, &layout_path).unwrap();
        assert_eq!(loaded.region_ids, dataset.region_ids);
        assert_eq!(loaded.layout, dataset.layout);
        assert_eq!(loaded.x, dataset.x);
        assert_eq!(loaded.targets, dataset.targets);
    }

    #[test]
    fn subset_keeps_layout_and_rows() {
        let (_, outcomes, windows, wc) = cohort(5, 37);
        let (dataset, _) =
            assemble_dataset(&outcomes, &windows, None, None, None, spec("RC"), &wc).unwrap();
        let keep = vec![dataset.region_ids[1].clone(), dataset.region_ids[3].clone()];
        let sub = dataset.subset(&keep);
        assert_eq!(sub.n(), 2);
        assert_eq!(sub.region_ids, keep);
        assert_eq!(sub.layout, dataset.layout);
        assert_eq!(sub.x.row(0), dataset.x.row(1));
    }

    #[test]
    fn fingerprint_distinguishes_layouts() {
        let (_, outcomes, windows, wc) = cohort(2, 41);
        let a = build_features(&outcomes[0], &windows[0], None, None, None, spec("P"), &wc)
            .unwrap()
            .layout;
        let b = build_features(&outcomes[0], &windows[0], None, None, None, spec("P,RC"), &wc)
            .unwrap()
            .layout;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }

    #[test]
    fn spec_parsing_and_display() {
        assert!(FeatureSetSpec::parse("").is_err());
        assert!(FeatureSetSpec::parse("P,huh").is_err());
        let s = spec("exog, P , RC");
        assert_eq!(s.to_string(), "P,RC,exog");
    }
}
