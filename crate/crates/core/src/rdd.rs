//! Buffered event windows, before/after line fits, and discontinuity outcomes.
//!
//! For an event at week `e`, the window covers offsets `-T..=T` around `e`.
//! A buffer of `b` weeks around the event is excluded from both fitting
//! segments to absorb anticipation and news-diffusion effects: with `b >= 1`
//! the before segment uses offsets `[-T, -b]` and the after segment `[b, T]`.
//! With `b = 0` the event week itself counts as "after" (`[-T, -1]` /
//! `[0, T]`).
//!
//! Each segment gets an ordinary least-squares line with the intercept
//! parameterized at offset 0, so the discontinuity is simply the intercept
//! gap at the event and the slope change is the slope gap:
//! `delta0 = beta0_after - beta0_before`, `delta1 = beta1_after - beta1_before`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::panel::{EventTable, Panel, PanelError, RegionId};
use crate::util;

/// Window geometry: half-width `T`, event buffer `b`, and the minimum number
/// of observed points a segment needs before it is fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub half_width: usize,
    pub buffer: usize,
    pub min_points_per_segment: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            half_width: 9,
            buffer: 1,
            min_points_per_segment: 3,
        }
    }
}

impl WindowConfig {
    pub fn new(
        half_width: usize,
        buffer: usize,
        min_points_per_segment: usize,
    ) -> Result<Self, RddError> {
        let config = WindowConfig {
            half_width,
            buffer,
            min_points_per_segment,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), RddError> {
        if self.half_width <= self.buffer {
            return Err(RddError::InvalidConfig(format!(
                "half_width ({}) must exceed buffer ({})",
                self.half_width, self.buffer
            )));
        }
        if self.min_points_per_segment < 2 {
            return Err(RddError::InvalidConfig(format!(
                "min_points_per_segment must be >= 2, got {}",
                self.min_points_per_segment
            )));
        }
        Ok(())
    }

    /// Inclusive offset range of the before segment.
    pub fn before_range(&self) -> (i64, i64) {
        let t = self.half_width as i64;
        let b = self.buffer as i64;
        (-t, -b.max(1))
    }

    /// Inclusive offset range of the after segment. The event week belongs to
    /// the after segment when the buffer is zero.
    pub fn after_range(&self) -> (i64, i64) {
        let t = self.half_width as i64;
        let b = self.buffer as i64;
        if self.buffer == 0 {
            (0, t)
        } else {
            (b, t)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    Before,
    After,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Before => write!(f, "before"),
            Segment::After => write!(f, "after"),
        }
    }
}

/// The observed points of one region-event window, split into buffered
/// segments. Offsets are relative to the event week. The raw observations at
/// offsets 0 and 1 are carried separately since the buffer usually excludes
/// them from the segments.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeWindow {
    pub region_id: RegionId,
    pub event_week: i64,
    pub before: Vec<(i64, f64)>,
    pub after: Vec<(i64, f64)>,
    pub y_at_event: Option<f64>,
    pub y_after_event: Option<f64>,
}

/// Least-squares line over one segment, intercept extrapolated to offset 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub beta0: f64,
    pub beta1: f64,
    pub n: usize,
}

impl LineFit {
    pub fn value_at(&self, t: f64) -> f64 {
        self.beta0 + self.beta1 * t
    }
}

/// Fitted before/after segments and their parameter gaps for one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityOutcome {
    pub region_id: RegionId,
    pub event_type: String,
    pub before_fit: LineFit,
    pub after_fit: LineFit,
    pub delta0: f64,
    pub delta1: f64,
    pub y_at_event: Option<f64>,
    pub y_after_event: Option<f64>,
}

#[derive(Debug, Error)]
pub enum RddError {
    #[error("region `{0}` not found in panel")]
    UnknownRegion(RegionId),
    #[error("insufficient data in {segment} segment: {found} points, need {required}")]
    InsufficientData {
        segment: Segment,
        found: usize,
        required: usize,
    },
    #[error("degenerate segment: need at least 2 points with distinct offsets")]
    DegenerateFit,
    #[error("invalid window config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

impl RddError {
    fn segment(segment: Segment, found: usize, required: usize) -> Self {
        RddError::InsufficientData {
            segment,
            found,
            required,
        }
    }
}

/// Collect the buffered window around `event_week` for one region.
pub fn extract_window(
    panel: &Panel,
    region_id: &RegionId,
    event_week: i64,
    config: &WindowConfig,
) -> Result<EpisodeWindow, RddError> {
    config.validate()?;
    let obs = panel
        .region(region_id)
        .ok_or_else(|| RddError::UnknownRegion(region_id.clone()))?;

    let (before_lo, before_hi) = config.before_range();
    let (after_lo, after_hi) = config.after_range();
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut y_at_event = None;
    let mut y_after_event = None;

    for o in obs {
        let offset = o.week - event_week;
        if offset == 0 {
            y_at_event = Some(o.score);
        } else if offset == 1 {
            y_after_event = Some(o.score);
        }
        if (before_lo..=before_hi).contains(&offset) {
            before.push((offset, o.score));
        } else if (after_lo..=after_hi).contains(&offset) {
            after.push((offset, o.score));
        }
    }

    let required = config.min_points_per_segment;
    if before.len() < required {
        return Err(RddError::segment(Segment::Before, before.len(), required));
    }
    if after.len() < required {
        return Err(RddError::segment(Segment::After, after.len(), required));
    }

    Ok(EpisodeWindow {
        region_id: region_id.clone(),
        event_week,
        before,
        after,
        y_at_event,
        y_after_event,
    })
}

/// Ordinary least squares through `(t, y)` points:
/// `beta1 = sum((t - tbar)(y - ybar)) / sum((t - tbar)^2)`,
/// `beta0 = ybar - beta1 * tbar`.
pub fn fit_segment(points: &[(f64, f64)]) -> Result<LineFit, RddError> {
    if points.len() < 2 {
        return Err(RddError::DegenerateFit);
    }
    let n = points.len() as f64;
    let t_bar = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_bar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let s_tt: f64 = points.iter().map(|p| (p.0 - t_bar) * (p.0 - t_bar)).sum();
    if s_tt == 0.0 {
        return Err(RddError::DegenerateFit);
    }
    let s_ty: f64 = points
        .iter()
        .map(|p| (p.0 - t_bar) * (p.1 - y_bar))
        .sum();
    let beta1 = s_ty / s_tt;
    Ok(LineFit {
        beta0: y_bar - beta1 * t_bar,
        beta1,
        n: points.len(),
    })
}

fn fit_offsets(points: &[(i64, f64)]) -> Result<LineFit, RddError> {
    let as_f64: Vec<(f64, f64)> = points.iter().map(|&(t, y)| (t as f64, y)).collect();
    fit_segment(&as_f64)
}

/// Fit both segments and difference their parameters.
pub fn estimate_discontinuity(
    window: &EpisodeWindow,
    event_type: &str,
) -> Result<DiscontinuityOutcome, RddError> {
    let before_fit = fit_offsets(&window.before)?;
    let after_fit = fit_offsets(&window.after)?;
    Ok(DiscontinuityOutcome {
        region_id: window.region_id.clone(),
        event_type: event_type.to_owned(),
        before_fit,
        after_fit,
        delta0: after_fit.beta0 - before_fit.beta0,
        delta1: after_fit.beta1 - before_fit.beta1,
        y_at_event: window.y_at_event,
        y_after_event: window.y_after_event,
    })
}

/// Mean / std / median of one outcome column. `std` is the population
/// standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Option<SummaryStats> {
        if values.is_empty() {
            return None;
        }
        Some(SummaryStats {
            n: values.len(),
            mean: util::mean(values),
            std: util::population_std(values),
            median: util::median(values),
        })
    }
}

/// A region that produced no outcome, and why.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedRegion {
    pub region_id: RegionId,
    pub reason: String,
}

/// Cohort descriptive statistics over a batch of outcomes: the discontinuity
/// pair, the raw scores at offsets 0 and 1 where observed, and the before-fit
/// parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub n_outcomes: usize,
    pub delta0: Option<SummaryStats>,
    pub delta1: Option<SummaryStats>,
    pub y_at_event: Option<SummaryStats>,
    pub y_after_event: Option<SummaryStats>,
    pub beta0_before: Option<SummaryStats>,
    pub beta1_before: Option<SummaryStats>,
    pub skipped: Vec<SkippedRegion>,
}

impl CohortStats {
    pub fn from_outcomes(
        outcomes: &[DiscontinuityOutcome],
        skipped: Vec<SkippedRegion>,
    ) -> CohortStats {
        let collect = |f: &dyn Fn(&DiscontinuityOutcome) -> Option<f64>| -> Vec<f64> {
            outcomes.iter().filter_map(f).collect()
        };
        CohortStats {
            n_outcomes: outcomes.len(),
            delta0: SummaryStats::from_values(&collect(&|o| Some(o.delta0))),
            delta1: SummaryStats::from_values(&collect(&|o| Some(o.delta1))),
            y_at_event: SummaryStats::from_values(&collect(&|o| o.y_at_event)),
            y_after_event: SummaryStats::from_values(&collect(&|o| o.y_after_event)),
            beta0_before: SummaryStats::from_values(&collect(&|o| Some(o.before_fit.beta0))),
            beta1_before: SummaryStats::from_values(&collect(&|o| Some(o.before_fit.beta1))),
            skipped,
        }
    }
}

/// Estimate every region that has a matching event. Regions that cannot be
/// estimated are skipped with a reason, never fatal. Output is ordered by
/// region id regardless of thread count.
pub fn batch_estimate(
    panel: &Panel,
    events: &EventTable,
    event_type: &str,
    config: &WindowConfig,
) -> Result<(Vec<DiscontinuityOutcome>, CohortStats), RddError> {
    config.validate()?;
    let targets = events.regions_with(event_type);
    let results = exec::map_items(&targets, |(region_id, event_week)| {
        extract_window(panel, region_id, *event_week, config)
            .and_then(|w| estimate_discontinuity(&w, event_type))
            .map_err(|e| SkippedRegion {
                region_id: region_id.clone(),
                reason: e.to_string(),
            })
    });

    let mut outcomes = Vec::new();
    let mut skipped = Vec::new();
    for result in results {
        match result {
            Ok(outcome) => outcomes.push(outcome),
            Err(skip) => skipped.push(skip),
        }
    }
    let stats = CohortStats::from_outcomes(&outcomes, skipped);
    Ok((outcomes, stats))
}

/// Re-run `batch_estimate` across several buffer widths, e.g. `[0, 1, 2]`.
pub fn buffer_ablation(
    panel: &Panel,
    events: &EventTable,
    event_type: &str,
    base: &WindowConfig,
    buffers: &[usize],
) -> Result<BTreeMap<usize, (Vec<DiscontinuityOutcome>, CohortStats)>, RddError> {
    let mut results = BTreeMap::new();
    for &buffer in buffers {
        let config = WindowConfig::new(base.half_width, buffer, base.min_points_per_segment)?;
        results.insert(buffer, batch_estimate(panel, events, event_type, &config)?);
    }
    Ok(results)
}

/// Write the outcomes CSV:
/// `region_id,event_type,delta0,delta1,beta0_before,beta1_before,beta0_after,beta1_after,n_before,n_after`.
pub fn write_outcomes_csv(
    outcomes: &[DiscontinuityOutcome],
    path: &Path,
) -> Result<(), PanelError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "region_id",
        "event_type",
        "delta0",
        "delta1",
        "beta0_before",
        "beta1_before",
        "beta0_after",
        "beta1_after",
        "n_before",
        "n_after",
    ])?;
    for o in outcomes {
        writer.write_record([
            o.region_id.as_str(),
            &o.event_type,
            &o.delta0.to_string(),
            &o.delta1.to_string(),
            &o.before_fit.beta0.to_string(),
            &o.before_fit.beta1.to_string(),
            &o.after_fit.beta0.to_string(),
            &o.after_fit.beta1.to_string(),
            &o.before_fit.n.to_string(),
            &o.after_fit.n.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
