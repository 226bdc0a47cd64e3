//! Randomized control events: the estimator validity check.
//!
//! Assigning event weeks uniformly at random where no event happened should
//! produce near-zero mean discontinuities; a systematic offset would mean the
//! window estimator manufactures effects on its own. Episodes draw regions
//! with replacement, so a small cohort can still supply thousands of control
//! episodes.
//!
//! Every random draw comes from a substream keyed by the episode attempt
//! index, so a run is reproducible for a given seed under any thread count.
//!
//! Note for users: randomized weeks are not kept away from any real event
//! weeks the panel may contain. On data with a genuine effect, run the
//! placebo on a pre-event slice or expect the summary to absorb some of it.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::panel::{Panel, RegionId};
use crate::rdd::{self, SkippedRegion, WindowConfig};
use crate::util;

/// Summary over all estimated placebo episodes. `std_*` are population
/// standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceboSummary {
    pub n_episodes: usize,
    pub mean_delta0: f64,
    pub std_delta0: f64,
    pub mean_delta1: f64,
    pub std_delta1: f64,
    pub seed: u64,
}

/// One randomized control event. Unlike an event table, the same region may
/// appear many times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceboEvent {
    pub region_id: RegionId,
    pub event_week: i64,
}

#[derive(Debug, Error)]
pub enum PlaceboError {
    #[error("n_per_region must be >= 1")]
    InvalidCount,
    #[error("n_total_episodes must be >= 1")]
    InvalidTotal,
    #[error("no region has a span wide enough for a full window")]
    NoEligibleRegions,
    #[error("no placebo episode could be estimated")]
    NoEpisodes,
    #[error(transparent)]
    Rdd(#[from] rdd::RddError),
}

/// Weeks for which the full `-T..T` window lies inside the region's observed
/// span.
fn eligible_range(observations: &[crate::panel::Observation], half_width: i64) -> Option<(i64, i64)> {
    let first = observations.first()?.week;
    let last = observations.last()?.week;
    let lo = first + half_width;
    let hi = last - half_width;
    (lo <= hi).then_some((lo, hi))
}

/// Regions with a wide-enough span, paired with their eligible week range.
type EligibleRegions = Vec<(RegionId, (i64, i64))>;

fn eligible_regions(panel: &Panel, config: &WindowConfig) -> (EligibleRegions, Vec<SkippedRegion>) {
    let half_width = config.half_width as i64;
    let mut eligible = Vec::new();
    let mut skipped = Vec::new();
    for (region_id, obs) in &panel.regions {
        match eligible_range(obs, half_width) {
            Some(range) => eligible.push((region_id.clone(), range)),
            None => skipped.push(SkippedRegion {
                region_id: region_id.clone(),
                reason: "observed span narrower than one full window".into(),
            }),
        }
    }
    (eligible, skipped)
}

/// Draw `n_per_region` uniform event weeks for every region whose span can
/// hold a full window. Ineligible regions are reported, not fatal.
pub fn randomize_events(
    panel: &Panel,
    n_per_region: usize,
    config: &WindowConfig,
    seed: u64,
) -> Result<(Vec<PlaceboEvent>, Vec<SkippedRegion>), PlaceboError> {
    if n_per_region == 0 {
        return Err(PlaceboError::InvalidCount);
    }
    config.validate()?;
    let (eligible, skipped) = eligible_regions(panel, config);
    let mut events = Vec::with_capacity(eligible.len() * n_per_region);
    for (index, (region_id, (lo, hi))) in eligible.iter().enumerate() {
        let mut rng = util::substream(seed, index as u64);
        for _ in 0..n_per_region {
            events.push(PlaceboEvent {
                region_id: region_id.clone(),
                event_week: rng.random_range(*lo..=*hi),
            });
        }
    }
    Ok((events, skipped))
}

/// Run randomized control episodes until `n_total_episodes` estimates are
/// collected (regions drawn with replacement), then summarize the deltas.
pub fn placebo_run(
    panel: &Panel,
    n_total_episodes: usize,
    config: &WindowConfig,
    seed: u64,
) -> Result<PlaceboSummary, PlaceboError> {
    if n_total_episodes == 0 {
        return Err(PlaceboError::InvalidTotal);
    }
    config.validate()?;
    let (eligible, _) = eligible_regions(panel, config);
    if eligible.is_empty() {
        return Err(PlaceboError::NoEligibleRegions);
    }

    // Attempt indices key the RNG streams. Some attempts fail on missing
    // weeks, so draw in waves until enough succeed; the cap bounds panels
    // where nearly everything is unestimable.
    let max_attempts = n_total_episodes.saturating_mul(20);
    let mut deltas: Vec<(f64, f64)> = Vec::with_capacity(n_total_episodes);
    let mut next_attempt = 0usize;
    while deltas.len() < n_total_episodes && next_attempt < max_attempts {
        let missing = n_total_episodes - deltas.len();
        let wave = (missing + missing / 8 + 4).min(max_attempts - next_attempt);
        let attempts: Vec<usize> = (next_attempt..next_attempt + wave).collect();
        next_attempt += wave;

        let results = exec::map_items(&attempts, |&attempt| {
            let mut rng = util::substream(seed, attempt as u64);
            let (region_id, (lo, hi)) = &eligible[rng.random_range(0..eligible.len())];
            let event_week = rng.random_range(*lo..=*hi);
            rdd::extract_window(panel, region_id, event_week, config)
                .and_then(|w| rdd::estimate_discontinuity(&w, "placebo"))
                .ok()
                .map(|o| (o.delta0, o.delta1))
        });
        for pair in results.into_iter().flatten() {
            if deltas.len() < n_total_episodes {
                deltas.push(pair);
            }
        }
    }

    if deltas.is_empty() {
        return Err(PlaceboError::NoEpisodes);
    }
    let d0: Vec<f64> = deltas.iter().map(|d| d.0).collect();
    let d1: Vec<f64> = deltas.iter().map(|d| d.1).collect();
    Ok(PlaceboSummary {
        n_episodes: deltas.len(),
        mean_delta0: util::mean(&d0),
        std_delta0: util::population_std(&d0),
        mean_delta1: util::mean(&d1),
        std_delta1: util::population_std(&d1),
        seed,
    })
}
