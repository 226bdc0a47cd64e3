//! Synthetic panels with planted ground truth.
//!
//! Each region's series is a linear pre-event trend plus a planted
//! discontinuity that switches on at the event week:
//!
//! ```text
//! y_t = beta0* + beta1* * (t - e) + [t >= e] * (delta0* + delta1* * (t - e))
//!       + seasonal + AR(1) noise
//! ```
//!
//! With zero noise and no missingness the window estimator recovers the
//! planted `(delta0*, delta1*)` exactly, which makes generated cohorts the
//! independent oracle for the estimator, the placebo harness, and the
//! learners. Effects can be constant, linear in region metadata, linear in
//! the region embedding, or linear in the planted trend parameters.
//!
//! Generation is deterministic: each region draws from its own RNG substream
//! keyed by region index, so output is identical under any thread count.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::panel::{EmbeddingTable, EventTable, Observation, Panel, RegionId, RegionMeta};
use crate::util;

/// How planted effects vary across regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectMap {
    /// No effect anywhere; placebo-style panels.
    Zero,
    /// The same (delta0, delta1) for every region.
    Constant { delta0: f64, delta1: f64 },
    /// Effects are inner products of weight vectors with the region's
    /// sociodemographic vector.
    LinearInMeta {
        delta0_weights: Vec<f64>,
        delta1_weights: Vec<f64>,
    },
    /// Effects are inner products of weight vectors with the region's
    /// exogenous embedding.
    LinearInEmbedding {
        delta0_weights: Vec<f64>,
        delta1_weights: Vec<f64>,
    },
    /// Effects are linear in the planted pre-event trend `(beta0*, beta1*)`:
    /// `delta = w.0 * beta0* + w.1 * beta1*`. This ties effects to what the
    /// history features can see.
    LinearInTrend { delta0: (f64, f64), delta1: (f64, f64) },
}

fn default_event_type() -> String {
    "event".to_owned()
}

fn default_score_name() -> String {
    "score".to_owned()
}

fn default_sociodem_dim() -> usize {
    6
}

fn default_embedding_dim() -> usize {
    16
}

fn default_margin() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_regions: usize,
    pub n_weeks: usize,
    pub noise_sigma: f64,
    pub ar_coefficient: f64,
    pub seasonal_amplitude: f64,
    /// Inclusive range event weeks are drawn from.
    pub event_week_range: (i64, i64),
    pub effect_map: EffectMap,
    pub missing_rate: f64,
    pub seed: u64,
    /// Weeks that must remain observable on each side of any event
    /// (window half-width plus one at the defaults).
    #[serde(default = "default_margin")]
    pub margin: usize,
    #[serde(default = "default_event_type")]
    pub event_type: String,
    #[serde(default = "default_score_name")]
    pub score_name: String,
    #[serde(default = "default_sociodem_dim")]
    pub sociodem_dim: usize,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
}

impl SynthConfig {
    /// A zero-effect white-noise-free template; tests override what they need.
    pub fn quiet(n_regions: usize, n_weeks: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n_regions,
            n_weeks,
            noise_sigma: 0.0,
            ar_coefficient: 0.0,
            seasonal_amplitude: 0.0,
            event_week_range: (default_margin() as i64, (n_weeks - 1 - default_margin()) as i64),
            effect_map: EffectMap::Zero,
            missing_rate: 0.0,
            seed,
            margin: default_margin(),
            event_type: default_event_type(),
            score_name: default_score_name(),
            sociodem_dim: default_sociodem_dim(),
            embedding_dim: default_embedding_dim(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_regions == 0 {
            return Err(SynthError::InvalidConfig("n_regions must be >= 1".into()));
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return Err(SynthError::InvalidConfig("noise_sigma must be >= 0".into()));
        }
        if !(self.ar_coefficient > -1.0 && self.ar_coefficient < 1.0) {
            return Err(SynthError::InvalidConfig(
                "ar_coefficient must lie in (-1, 1)".into(),
            ));
        }
        if self.seasonal_amplitude.is_nan() || self.seasonal_amplitude < 0.0 {
            return Err(SynthError::InvalidConfig(
                "seasonal_amplitude must be >= 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(SynthError::InvalidConfig(
                "missing_rate must lie in [0, 1)".into(),
            ));
        }
        let (lo, hi) = self.event_week_range;
        let margin = self.margin as i64;
        if lo > hi {
            return Err(SynthError::InvalidConfig(
                "event_week_range start exceeds end".into(),
            ));
        }
        if lo < margin || hi + margin > self.n_weeks as i64 - 1 {
            return Err(SynthError::InvalidConfig(format!(
                "event_week_range ({lo}, {hi}) must leave {margin} weeks on each side of [0, {})",
                self.n_weeks - 1
            )));
        }
        match &self.effect_map {
            EffectMap::LinearInMeta {
                delta0_weights,
                delta1_weights,
            } if delta0_weights.len() != self.sociodem_dim
                || delta1_weights.len() != self.sociodem_dim =>
            {
                Err(SynthError::InvalidConfig(format!(
                    "meta effect weights must have length {}",
                    self.sociodem_dim
                )))
            }
            EffectMap::LinearInEmbedding {
                delta0_weights,
                delta1_weights,
            } if delta0_weights.len() != self.embedding_dim
                || delta1_weights.len() != self.embedding_dim =>
            {
                Err(SynthError::InvalidConfig(format!(
                    "embedding effect weights must have length {}",
                    self.embedding_dim
                )))
            }
            _ => Ok(()),
        }
    }
}

/// The generating parameters for one region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    pub delta0: f64,
    pub delta1: f64,
    pub beta0: f64,
    pub beta1: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub regions: BTreeMap<RegionId, PlantedEffect>,
}

/// Everything one generated cohort consists of.
#[derive(Clone, Debug)]
pub struct SynthData {
    pub panel: Panel,
    pub events: EventTable,
    pub meta: BTreeMap<RegionId, RegionMeta>,
    pub embeddings: EmbeddingTable,
    pub truth: GroundTruth,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct RegionDraw {
    region_id: RegionId,
    observations: Vec<Observation>,
    event_week: i64,
    meta: RegionMeta,
    embedding: Vec<f64>,
    effect: PlantedEffect,
}

fn generate_region(config: &SynthConfig, index: usize) -> RegionDraw {
    let mut rng = util::substream(config.seed, index as u64);
    let region_id = RegionId(format!("r{index:05}"));

    let beta0 = rng.random_range(-1.0..1.0);
    let beta1 = rng.random_range(-0.5..0.5);
    let event_week = rng.random_range(config.event_week_range.0..=config.event_week_range.1);

    let meta = RegionMeta {
        region_id: region_id.clone(),
        education: rng.random_range(8.0..18.0),
        income: rng.random_range(30_000.0..90_000.0),
        population: rng.random_range(10_000.0..1_000_000.0),
        area_sq_miles: rng.random_range(50.0..2_000.0),
        latitude: rng.random_range(25.0..49.0),
        longitude: rng.random_range(-124.0..-67.0),
        adjacent_regions: std::collections::BTreeSet::new(),
        sociodemographics: (0..config.sociodem_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect(),
    };
    let embedding: Vec<f64> = (0..config.embedding_dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();

    let (delta0, delta1) = match &config.effect_map {
        EffectMap::Zero => (0.0, 0.0),
        EffectMap::Constant { delta0, delta1 } => (*delta0, *delta1),
        EffectMap::LinearInMeta {
            delta0_weights,
            delta1_weights,
        } => (
            dot(delta0_weights, &meta.sociodemographics),
            dot(delta1_weights, &meta.sociodemographics),
        ),
        EffectMap::LinearInEmbedding {
            delta0_weights,
            delta1_weights,
        } => (dot(delta0_weights, &embedding), dot(delta1_weights, &embedding)),
        EffectMap::LinearInTrend { delta0, delta1 } => (
            delta0.0 * beta0 + delta0.1 * beta1,
            delta1.0 * beta0 + delta1.1 * beta1,
        ),
    };

    let phi = config.ar_coefficient;
    let sigma = config.noise_sigma;
    // stationary AR(1) start so early weeks have the same noise scale
    let stationary = sigma / (1.0 - phi * phi).sqrt();
    let z0: f64 = StandardNormal.sample(&mut rng);
    let mut noise = stationary * z0;

    let mut observations = Vec::with_capacity(config.n_weeks);
    for week in 0..config.n_weeks as i64 {
        if week > 0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise = phi * noise + sigma * z;
        }
        let offset = (week - event_week) as f64;
        let mut score = beta0 + beta1 * offset;
        if week >= event_week {
            score += delta0 + delta1 * offset;
        }
        score += config.seasonal_amplitude
            * (2.0 * std::f64::consts::PI * week as f64 / 52.0).sin();
        score += noise;

        let keep = rng.random::<f64>() >= config.missing_rate;
        let n_users = rng.random_range(200..=1000);
        if keep {
            observations.push(Observation {
                week,
                score,
                n_users,
            });
        }
    }

    RegionDraw {
        region_id,
        observations,
        event_week,
        meta,
        embedding,
        effect: PlantedEffect {
            delta0,
            delta1,
            beta0,
            beta1,
        },
    }
}

/// Generate a full cohort per the config: panel, events, metadata,
/// embeddings, and planted ground truth.
pub fn generate(config: &SynthConfig) -> Result<SynthData, SynthError> {
    config.validate()?;
    let draws = exec::map_range(config.n_regions, |i| generate_region(config, i));

    let mut panel = Panel::new(config.score_name.clone());
    let mut events = EventTable::new();
    let mut meta = BTreeMap::new();
    let mut embeddings = BTreeMap::new();
    let mut truth = GroundTruth::default();

    let ids: Vec<RegionId> = draws.iter().map(|d| d.region_id.clone()).collect();
    for (i, draw) in draws.into_iter().enumerate() {
        let mut region_meta = draw.meta;
        // chain adjacency: each region borders its index neighbors
        if i > 0 {
            region_meta.adjacent_regions.insert(ids[i - 1].clone());
        }
        if i + 1 < ids.len() {
            region_meta.adjacent_regions.insert(ids[i + 1].clone());
        }
        panel
            .regions
            .insert(draw.region_id.clone(), draw.observations);
        events
            .insert(draw.region_id.clone(), config.event_type.clone(), draw.event_week)
            .expect("region ids are unique");
        meta.insert(draw.region_id.clone(), region_meta);
        embeddings.insert(draw.region_id.clone(), draw.embedding);
        truth.regions.insert(draw.region_id, draw.effect);
    }

    Ok(SynthData {
        panel,
        events,
        meta,
        embeddings: EmbeddingTable {
            dim: config.embedding_dim,
            vectors: embeddings,
        },
        truth,
    })
}
