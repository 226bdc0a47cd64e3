//! Region-week panels and the tables that ride along with them.
//!
//! A [`Panel`] holds one score series per region: ordered `(week, score,
//! n_users)` observations with gaps allowed. Events, region metadata, and
//! exogenous embeddings load from sibling CSV files. Transforms
//! (reliability filtering, per-region z-scoring, lag differencing) consume
//! and return panels, recording themselves in the panel's transform log.
//!
//! CSV formats:
//! - panel:      `region_id,week_index,score,n_users`
//! - events:     `region_id,event_type,event_week`
//! - meta:       `region_id,education,income,population,area_sq_miles,latitude,longitude,adjacent,sociodem_0..`
//! - embeddings: `region_id,e_0..e_{d-1}`
//!
//! Week indices are opaque integers. When the producer has ISO dates instead,
//! [`week_index_for_date`] maps a date to "weeks since the Monday of the epoch
//! week" and the loaders accept dates when given an epoch.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque region identifier (e.g. a 5-digit FIPS code).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub String);

impl RegionId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RegionId {
    fn from(s: &str) -> Self {
        RegionId(s.to_owned())
    }
}

impl From<String> for RegionId {
    fn from(s: String) -> Self {
        RegionId(s)
    }
}

/// One region-week measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub week: i64,
    pub score: f64,
    pub n_users: u64,
}

/// A transform applied to a panel, recorded in application order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    FilterReliability { min_users: u64 },
    ZscorePerRegion,
    Difference { lag: u32 },
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::FilterReliability { min_users } => {
                write!(f, "filter_reliability(min_users={min_users})")
            }
            Transform::ZscorePerRegion => write!(f, "zscore_per_region"),
            Transform::Difference { lag } => write!(f, "difference(lag={lag})"),
        }
    }
}

/// Region-week score panel: the running variable, one series per region.
///
/// Invariants: week indices strictly increase within a region, all scores are
/// finite, and `transform_log` records each applied transform exactly once.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub regions: BTreeMap<RegionId, Vec<Observation>>,
    pub score_name: String,
    pub transform_log: Vec<Transform>,
}

impl Panel {
    pub fn new(score_name: impl Into<String>) -> Self {
        Panel {
            regions: BTreeMap::new(),
            score_name: score_name.into(),
            transform_log: Vec::new(),
        }
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_observations(&self) -> usize {
        self.regions.values().map(Vec::len).sum()
    }

    pub fn region(&self, id: &RegionId) -> Option<&[Observation]> {
        self.regions.get(id).map(Vec::as_slice)
    }

    pub fn region_ids(&self) -> impl Iterator<Item = &RegionId> {
        self.regions.keys()
    }

    /// Drop observations with fewer than `min_users` users; regions left
    /// empty are removed entirely.
    pub fn filter_reliability(mut self, min_users: u64) -> Panel {
        self.regions = self
            .regions
            .into_iter()
            .filter_map(|(id, obs)| {
                let kept: Vec<Observation> =
                    obs.into_iter().filter(|o| o.n_users >= min_users).collect();
                (!kept.is_empty()).then_some((id, kept))
            })
            .collect();
        self.transform_log
            .push(Transform::FilterReliability { min_users });
        self
    }

    /// Standardize each region's scores to mean 0, population std 1.
    ///
    /// Regions with fewer than two observations or zero score variance carry
    /// no usable signal and are dropped with a warning.
    pub fn zscore_per_region(mut self) -> Panel {
        self.regions = self
            .regions
            .into_iter()
            .filter_map(|(id, mut obs)| {
                let scores: Vec<f64> = obs.iter().map(|o| o.score).collect();
                let std = crate::util::population_std(&scores);
                if obs.len() < 2 || std == 0.0 {
                    log::warn!(
                        "zscore_per_region: dropping region {id} ({} obs, zero variance or too few points)",
                        obs.len()
                    );
                    return None;
                }
                let mean = crate::util::mean(&scores);
                for o in &mut obs {
                    o.score = (o.score - mean) / std;
                }
                Some((id, obs))
            })
            .collect();
        self.transform_log.push(Transform::ZscorePerRegion);
        self
    }

    /// Replace each score with its difference from the observation `lag`
    /// weeks earlier. Observations without a lag partner are dropped, as are
    /// regions left empty.
    pub fn difference(mut self, lag: u32) -> Result<Panel, PanelError> {
        if lag == 0 {
            return Err(PanelError::InvalidTransform(
                "difference lag must be >= 1".into(),
            ));
        }
        self.regions = self
            .regions
            .into_iter()
            .filter_map(|(id, obs)| {
                let by_week: BTreeMap<i64, f64> =
                    obs.iter().map(|o| (o.week, o.score)).collect();
                let diffed: Vec<Observation> = obs
                    .into_iter()
                    .filter_map(|o| {
                        by_week.get(&(o.week - i64::from(lag))).map(|prev| Observation {
                            week: o.week,
                            score: o.score - prev,
                            n_users: o.n_users,
                        })
                    })
                    .collect();
                (!diffed.is_empty()).then_some((id, diffed))
            })
            .collect();
        self.transform_log.push(Transform::Difference { lag });
        Ok(self)
    }
}

/// Event weeks keyed by (region, event type); at most one week per key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventTable {
    pub entries: BTreeMap<(RegionId, String), i64>,
}

impl EventTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        region: RegionId,
        event_type: impl Into<String>,
        week: i64,
    ) -> Result<(), PanelError> {
        let key = (region, event_type.into());
        if self.entries.contains_key(&key) {
            return Err(PanelError::Validation(format!(
                "duplicate event for region {} type {}",
                key.0, key.1
            )));
        }
        self.entries.insert(key, week);
        Ok(())
    }

    pub fn event_week(&self, region: &RegionId, event_type: &str) -> Option<i64> {
        self.entries
            .get(&(region.clone(), event_type.to_owned()))
            .copied()
    }

    /// Region/week pairs for one event type, in region order.
    pub fn regions_with(&self, event_type: &str) -> Vec<(RegionId, i64)> {
        self.entries
            .iter()
            .filter(|((_, t), _)| t == event_type)
            .map(|((r, _), w)| (r.clone(), *w))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Static per-region descriptors used for matching and stratification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMeta {
    pub region_id: RegionId,
    pub education: f64,
    pub income: f64,
    pub population: f64,
    pub area_sq_miles: f64,
    pub latitude: f64,
    pub longitude: f64,
    pub adjacent_regions: BTreeSet<RegionId>,
    pub sociodemographics: Vec<f64>,
}

impl RegionMeta {
    fn validate(&self, line: u64) -> Result<(), PanelError> {
        if self.population.is_nan() || self.population <= 0.0 {
            return Err(PanelError::Parse {
                line,
                message: format!("population must be > 0, got {}", self.population),
            });
        }
        if self.area_sq_miles.is_nan() || self.area_sq_miles <= 0.0 {
            return Err(PanelError::Parse {
                line,
                message: format!("area_sq_miles must be > 0, got {}", self.area_sq_miles),
            });
        }
        if self.adjacent_regions.contains(&self.region_id) {
            return Err(PanelError::Parse {
                line,
                message: format!("region {} lists itself as adjacent", self.region_id),
            });
        }
        let fields = [
            self.education,
            self.income,
            self.latitude,
            self.longitude,
        ];
        if fields.iter().any(|v| !v.is_finite())
            || self.sociodemographics.iter().any(|v| !v.is_finite())
        {
            return Err(PanelError::Parse {
                line,
                message: "non-finite metadata value".into(),
            });
        }
        Ok(())
    }
}

/// Fixed-dimension exogenous vectors, one per region.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub vectors: BTreeMap<RegionId, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn get(&self, region: &RegionId) -> Option<&[f64]> {
        self.vectors.get(region).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        line: u64,
    },
    #[error("{0}")]
    Validation(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
}

/// Week index of `date` relative to the Monday of the epoch's week.
pub fn week_index_for_date(date: NaiveDate, epoch: NaiveDate) -> i64 {
    let monday = epoch
        - chrono::Duration::days(i64::from(epoch.weekday().num_days_from_monday()));
    (date - monday).num_days().div_euclid(7)
}

fn parse_week(field: &str, epoch: Option<NaiveDate>, line: u64) -> Result<i64, PanelError> {
    if let Ok(w) = field.parse::<i64>() {
        return Ok(w);
    }
    if let Some(epoch) = epoch {
        if let Ok(date) = NaiveDate::parse_from_str(field, "%Y-%m-%d") {
            return Ok(week_index_for_date(date, epoch));
        }
    }
    Err(PanelError::Parse {
        line,
        message: format!("cannot parse week `{field}` (integer or ISO date with --epoch-date)"),
    })
}

fn parse_f64(field: &str, line: u64, column: &str) -> Result<f64, PanelError> {
    let v: f64 = field.parse().map_err(|_| PanelError::Parse {
        line,
        message: format!("non-numeric {column} `{field}`"),
    })?;
    if !v.is_finite() {
        return Err(PanelError::Parse {
            line,
            message: format!("non-finite {column} `{field}`"),
        });
    }
    Ok(v)
}

struct Header {
    index: BTreeMap<String, usize>,
}

impl Header {
    fn read(reader: &mut csv::Reader<std::fs::File>) -> Result<Self, PanelError> {
        let headers = reader.headers()?.clone();
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, name)| (name.trim().to_owned(), i))
            .collect();
        Ok(Header { index })
    }

    fn col(&self, name: &str) -> Result<usize, PanelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| PanelError::MissingColumn(name.to_owned()))
    }

    /// Indices of `prefix_0..prefix_{k-1}`, in order, erroring on gaps.
    fn series(&self, prefix: &str) -> Result<Vec<usize>, PanelError> {
        let count = self
            .index
            .keys()
            .filter(|k| k.starts_with(prefix))
            .count();
        (0..count)
            .map(|i| self.col(&format!("{prefix}{i}")))
            .collect()
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn field(
    record: &csv::StringRecord,
    idx: usize,
    line: u64,
) -> Result<&str, PanelError> {
    record.get(idx).map(str::trim).ok_or(PanelError::Parse {
        line,
        message: format!("missing field {idx}"),
    })
}

pub fn load_panel(path: &Path, score_name: &str) -> Result<Panel, PanelError> {
    load_panel_with_epoch(path, score_name, None)
}

/// Load a panel CSV. With `epoch`, `week_index` values may be ISO dates.
pub fn load_panel_with_epoch(
    path: &Path,
    score_name: &str,
    epoch: Option<NaiveDate>,
) -> Result<Panel, PanelError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = Header::read(&mut reader)?;
    let (c_region, c_week, c_score, c_users) = (
        header.col("region_id")?,
        header.col("week_index")?,
        header.col("score")?,
        header.col("n_users")?,
    );

    let mut regions: BTreeMap<RegionId, BTreeMap<i64, Observation>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let region = RegionId::from(field(&record, c_region, line)?);
        if region.as_str().is_empty() {
            return Err(PanelError::Parse {
                line,
                message: "empty region_id".into(),
            });
        }
        let week = parse_week(field(&record, c_week, line)?, epoch, line)?;
        let score = parse_f64(field(&record, c_score, line)?, line, "score")?;
        let n_users: u64 = field(&record, c_users, line)?.parse().map_err(|_| {
            PanelError::Parse {
                line,
                message: format!("non-integer n_users `{}`", record.get(c_users).unwrap_or("")),
            }
        })?;
        let series = regions.entry(region.clone()).or_default();
        if series
            .insert(week, Observation { week, score, n_users })
            .is_some()
        {
            return Err(PanelError::Parse {
                line,
                message: format!("duplicate observation for region {region} week {week}"),
            });
        }
    }

    Ok(Panel {
        regions: regions
            .into_iter()
            .map(|(id, by_week)| (id, by_week.into_values().collect()))
            .collect(),
        score_name: score_name.to_owned(),
        transform_log: Vec::new(),
    })
}

pub fn load_events(path: &Path) -> Result<EventTable, PanelError> {
    load_events_with_epoch(path, None)
}

pub fn load_events_with_epoch(
    path: &Path,
    epoch: Option<NaiveDate>,
) -> Result<EventTable, PanelError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = Header::read(&mut reader)?;
    let (c_region, c_type, c_week) = (
        header.col("region_id")?,
        header.col("event_type")?,
        header.col("event_week")?,
    );
    let mut table = EventTable::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let region = RegionId::from(field(&record, c_region, line)?);
        let event_type = field(&record, c_type, line)?.to_owned();
        let week = parse_week(field(&record, c_week, line)?, epoch, line)?;
        table.insert(region, event_type, week).map_err(|_| {
            PanelError::Parse {
                line,
                message: "duplicate (region_id, event_type) entry".into(),
            }
        })?;
    }
    Ok(table)
}

pub fn load_region_meta(path: &Path) -> Result<BTreeMap<RegionId, RegionMeta>, PanelError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = Header::read(&mut reader)?;
    let cols = [
        header.col("region_id")?,
        header.col("education")?,
        header.col("income")?,
        header.col("population")?,
        header.col("area_sq_miles")?,
        header.col("latitude")?,
        header.col("longitude")?,
        header.col("adjacent")?,
    ];
    let sociodem_cols = header.series("sociodem_")?;

    let mut metas = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let region_id = RegionId::from(field(&record, cols[0], line)?);
        let adjacent = field(&record, cols[7], line)?
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| RegionId::from(s.trim()))
            .collect();
        let mut sociodemographics = Vec::with_capacity(sociodem_cols.len());
        for &c in &sociodem_cols {
            sociodemographics.push(parse_f64(field(&record, c, line)?, line, "sociodem")?);
        }
        let meta = RegionMeta {
            region_id: region_id.clone(),
            education: parse_f64(field(&record, cols[1], line)?, line, "education")?,
            income: parse_f64(field(&record, cols[2], line)?, line, "income")?,
            population: parse_f64(field(&record, cols[3], line)?, line, "population")?,
            area_sq_miles: parse_f64(field(&record, cols[4], line)?, line, "area_sq_miles")?,
            latitude: parse_f64(field(&record, cols[5], line)?, line, "latitude")?,
            longitude: parse_f64(field(&record, cols[6], line)?, line, "longitude")?,
            adjacent_regions: adjacent,
            sociodemographics,
        };
        meta.validate(line)?;
        if metas.insert(region_id.clone(), meta).is_some() {
            return Err(PanelError::Parse {
                line,
                message: format!("duplicate meta row for region {region_id}"),
            });
        }
    }
    Ok(metas)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, PanelError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = Header::read(&mut reader)?;
    let c_region = header.col("region_id")?;
    let dims = header.series("e_")?;
    if dims.is_empty() {
        return Err(PanelError::MissingColumn("e_0".into()));
    }

    let mut vectors = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let region = RegionId::from(field(&record, c_region, line)?);
        let found = record.len().saturating_sub(1);
        if found != dims.len() {
            return Err(PanelError::DimensionMismatch {
                expected: dims.len(),
                found,
                line,
            });
        }
        let mut v = Vec::with_capacity(dims.len());
        for &c in &dims {
            v.push(parse_f64(field(&record, c, line)?, line, "embedding entry")?);
        }
        vectors.insert(region, v);
    }
    Ok(EmbeddingTable {
        dim: dims.len(),
        vectors,
    })
}

pub fn write_panel(panel: &Panel, path: &Path) -> Result<(), PanelError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["region_id", "week_index", "score", "n_users"])?;
    for (region, obs) in &panel.regions {
        for o in obs {
            writer.write_record([
                region.as_str(),
                &o.week.to_string(),
                &o.score.to_string(),
                &o.n_users.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_events(events: &EventTable, path: &Path) -> Result<(), PanelError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["region_id", "event_type", "event_week"])?;
    for ((region, event_type), week) in &events.entries {
        writer.write_record([region.as_str(), event_type, &week.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_region_meta(
    metas: &BTreeMap<RegionId, RegionMeta>,
    path: &Path,
) -> Result<(), PanelError> {
    let mut writer = csv::Writer::from_path(path)?;
    let d_s = metas
        .values()
        .next()
        .map_or(0, |m| m.sociodemographics.len());
    let mut header = vec![
        "region_id".to_owned(),
        "education".to_owned(),
        "income".to_owned(),
        "population".to_owned(),
        "area_sq_miles".to_owned(),
        "latitude".to_owned(),
        "longitude".to_owned(),
        "adjacent".to_owned(),
    ];
    header.extend((0..d_s).map(|i| format!("sociodem_{i}")));
    writer.write_record(&header)?;
    for meta in metas.values() {
        let adjacent = meta
            .adjacent_regions
            .iter()
            .map(RegionId::as_str)
            .collect::<Vec<_>>()
            .join(";");
        let mut row = vec![
            meta.region_id.as_str().to_owned(),
            meta.education.to_string(),
            meta.income.to_string(),
            meta.population.to_string(),
            meta.area_sq_miles.to_string(),
            meta.latitude.to_string(),
            meta.longitude.to_string(),
            adjacent,
        ];
        row.extend(meta.sociodemographics.iter().map(f64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_embeddings(table: &EmbeddingTable, path: &Path) -> Result<(), PanelError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["region_id".to_owned()];
    header.extend((0..table.dim).map(|i| format!("e_{i}")));
    writer.write_record(&header)?;
    for (region, v) in &table.vectors {
        let mut row = vec![region.as_str().to_owned()];
        row.extend(v.iter().map(f64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
