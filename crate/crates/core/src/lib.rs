//! Longitudinal regression discontinuity (LRDD) estimation and discontinuity
//! forecasting on region-week panel time series.
//!
//! The crate is organized around a small pipeline:
//!
//! 1. [`panel`] loads and transforms region-week score panels, event tables,
//!    region metadata, and exogenous embedding tables.
//! 2. [`rdd`] extracts buffered event windows, fits before/after line segments,
//!    and computes discontinuity outcomes (level shift and slope change).
//! 3. [`placebo`] validates the estimator against randomized control events.
//! 4. [`features`] assembles predictor vectors from pre-event data only.
//! 5. [`learners`] trains multi-output regressors and baselines that predict
//!    the discontinuity pair from those features.
//! 6. [`evaluator`] splits by region, scores predictions, and runs paired
//!    significance tests and stratified error analyses.
//! 7. [`did`] is an alternative difference-in-differences estimator built on
//!    nearest-neighbor region matching.
//! 8. [`synth`] generates panels with planted ground truth, used as the
//!    verification oracle for everything above.
//!
//! With the `parallel` feature (default) the batch loops fan out over rayon;
//! without it they run sequentially. Results are identical either way: every
//! random draw is keyed by item index, never by scheduling order.

pub mod did;
pub mod evaluator;
pub mod exec;
pub mod features;
pub mod learners;
pub mod panel;
pub mod placebo;
pub mod rdd;
pub mod synth;
pub(crate) mod util;

pub use panel::{EmbeddingTable, EventTable, Panel, RegionId, RegionMeta};
pub use rdd::{DiscontinuityOutcome, EpisodeWindow, LineFit, WindowConfig};
