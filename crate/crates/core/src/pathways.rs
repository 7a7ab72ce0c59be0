//! Individual journeys through hate communities: per-individual joining
//! timelines, journey-length histograms, and the banned/active mix.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::ingest::JoinEvent;
use crate::{Timestamp, SECONDS_PER_DAY};

pub const DEFAULT_HORIZON_DAYS: i64 = 180;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathwayError {
    #[error("join references unknown community `{0}`")]
    UnknownCommunity(String),
    #[error("individual {individual} joins `{community}` more than once")]
    DuplicateJoin { individual: u64, community: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BanStatus {
    Banned,
    Active,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JourneyStep {
    pub community: String,
    pub t: Timestamp,
    pub status: BanStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Journey {
    pub individual: u64,
    /// Sorted by time; simultaneous joins are ordered by community id.
    pub joins: Vec<JourneyStep>,
}

impl Journey {
    pub fn len(&self) -> usize {
        self.joins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joins.is_empty()
    }

    /// Joins made strictly less than `horizon` seconds after the first one.
    pub fn joins_within(&self, horizon: i64) -> usize {
        match self.joins.first() {
            Some(first) => self.joins.iter().take_while(|s| s.t - first.t < horizon).count(),
            None => 0,
        }
    }
}

/// Groups the join log by individual. `banned` maps every known community
/// id to its end-of-study ban flag. Output is sorted by individual and does
/// not depend on the order of `joins`.
pub fn build_journeys(joins: &[JoinEvent], banned: &HashMap<String, bool>) -> Result<Vec<Journey>, PathwayError> {
    let mut by_individual: BTreeMap<u64, Vec<&JoinEvent>> = BTreeMap::new();
    for j in joins {
        by_individual.entry(j.individual).or_default().push(j);
    }
    by_individual
        .into_iter()
        .map(|(individual, mut js)| {
            js.sort_by(|a, b| (a.t, &a.community).cmp(&(b.t, &b.community)));
            let mut seen = HashSet::new();
            let steps = js
                .into_iter()
                .map(|j| {
                    let &is_banned = banned
                        .get(&j.community)
                        .ok_or_else(|| PathwayError::UnknownCommunity(j.community.clone()))?;
                    if !seen.insert(j.community.as_str()) {
                        return Err(PathwayError::DuplicateJoin {
                            individual,
                            community: j.community.clone(),
                        });
                    }
                    Ok(JourneyStep {
                        community: j.community.clone(),
                        t: j.t,
                        status: if is_banned { BanStatus::Banned } else { BanStatus::Active },
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Journey {
                individual,
                joins: steps,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramBin {
    /// Inclusive journey-length bounds.
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JourneyHistogram {
    pub horizon: i64,
    pub bins: Vec<HistogramBin>,
    pub individuals: usize,
    pub min_length: usize,
    pub max_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinScheme {
    /// 1, 2, 3-4, 5-8, 9-16, ... up to the longest journey.
    Log2,
    /// Inclusive lower bounds, strictly increasing, starting at 1. The last
    /// bin is open-ended up to the longest journey.
    Edges(Vec<usize>),
}

fn bin_bounds(scheme: &BinScheme, max_len: usize) -> Vec<(usize, usize)> {
    let max_len = max_len.max(1);
    match scheme {
        BinScheme::Log2 => {
            let mut out = vec![(1, 1)];
            let mut hi = 1;
            while hi < max_len {
                out.push((hi + 1, hi * 2));
                hi *= 2;
            }
            out
        }
        BinScheme::Edges(lows) => lows
            .iter()
            .enumerate()
            .map(|(i, &lo)| {
                let hi = lows.get(i + 1).map(|&n| n - 1).unwrap_or(max_len.max(lo));
                (lo, hi)
            })
            .collect(),
    }
}

/// Histogram of per-individual join counts within `horizon` seconds of
/// each individual's first join.
pub fn journey_histogram(journeys: &[Journey], horizon: i64, scheme: &BinScheme) -> JourneyHistogram {
    let lengths: Vec<usize> = journeys
        .iter()
        .map(|j| j.joins_within(horizon))
        .filter(|&n| n > 0)
        .collect();
    let max_length = lengths.iter().copied().max().unwrap_or(0);
    let min_length = lengths.iter().copied().min().unwrap_or(0);
    let mut bins: Vec<HistogramBin> = bin_bounds(scheme, max_length)
        .into_iter()
        .map(|(lo, hi)| HistogramBin { lo, hi, count: 0 })
        .collect();
    for &n in &lengths {
        let i = bins.partition_point(|b| b.lo <= n).saturating_sub(1);
        bins[i].count += 1;
    }
    JourneyHistogram {
        horizon,
        bins,
        individuals: lengths.len(),
        min_length,
        max_length,
    }
}

pub fn default_horizon() -> i64 {
    DEFAULT_HORIZON_DAYS * SECONDS_PER_DAY
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolenceMix {
    pub n_banned: usize,
    pub n_active: usize,
    pub fraction_banned: f64,
}

pub fn violence_mix(j: &Journey) -> ViolenceMix {
    let n_banned = j.joins.iter().filter(|s| s.status == BanStatus::Banned).count();
    let n_active = j.joins.len() - n_banned;
    ViolenceMix {
        n_banned,
        n_active,
        fraction_banned: if j.joins.is_empty() { 0.0 } else { n_banned as f64 / j.joins.len() as f64 },
    }
}
