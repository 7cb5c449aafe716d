//! Rank-based evaluation: R@K, median and mean rank of the first relevant
//! item, mean inverted rank, and mean average precision.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::item_key;
use crate::retrieval::Ranking;

/// Relevant item ids per query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    relevance: HashMap<String, HashSet<String>>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, item_id: impl Into<String>) -> Result<()> {
        let (q, i) = (query_id.into(), item_id.into());
        if q.is_empty() || i.is_empty() {
            return Err(Error::Config("ground-truth ids must be non-empty".into()));
        }
        self.relevance.entry(q).or_default().insert(i);
        Ok(())
    }

    pub fn from_pairs<I, Q, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Q, T)>,
        Q: Into<String>,
        T: Into<String>,
    {
        let mut gt = GroundTruth::new();
        for (q, i) in pairs {
            gt.insert(q, i)?;
        }
        Ok(gt)
    }

    /// Derives relevance from the id convention: a query and an item are
    /// relevant when their prefixes before the last `#` agree (an id without
    /// `#` is its own prefix). Queries with no relevant item are left out.
    pub fn from_prefix_rule(rankings: &[Ranking]) -> Self {
        let mut gt = GroundTruth::new();
        for r in rankings {
            let key = item_key(&r.query_id);
            for id in r.item_ids() {
                if item_key(id) == key {
                    gt.relevance
                        .entry(r.query_id.clone())
                        .or_default()
                        .insert(id.to_string());
                }
            }
        }
        gt
    }

    pub fn relevant(&self, query_id: &str) -> Option<&HashSet<String>> {
        self.relevance.get(query_id)
    }

    pub fn num_queries(&self) -> usize {
        self.relevance.len()
    }
}

fn relevant_for<'a>(r: &Ranking, g: &'a GroundTruth) -> Result<&'a HashSet<String>> {
    g.relevant(&r.query_id)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Missing(format!("query {:?} has no ground truth", r.query_id)))
}

/// 1-based position of the highest-ranked relevant item.
pub fn first_relevant_rank(r: &Ranking, g: &GroundTruth) -> Result<usize> {
    let relevant = relevant_for(r, g)?;
    r.item_ids()
        .position(|id| relevant.contains(id))
        .map(|p| p + 1)
        .ok_or_else(|| Error::Missing(format!("no relevant item in the ranking of {:?}", r.query_id)))
}

fn non_empty(ranks: &[usize]) -> Result<()> {
    if ranks.is_empty() {
        return Err(Error::Empty("no ranks to aggregate".into()));
    }
    if ranks.contains(&0) {
        return Err(Error::Config("ranks are 1-based".into()));
    }
    Ok(())
}

/// Percentage of queries whose first relevant item is within the top `k`.
pub fn recall_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    non_empty(ranks)?;
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let hits = ranks.iter().filter(|&&r| r <= k).count();
    Ok(100.0 * hits as f64 / ranks.len() as f64)
}

/// Median rank; the mean of the two middle values for an even count.
pub fn median_rank(ranks: &[usize]) -> Result<f64> {
    non_empty(ranks)?;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    })
}

pub fn mean_rank(ranks: &[usize]) -> Result<f64> {
    non_empty(ranks)?;
    Ok(ranks.iter().map(|&r| r as f64).sum::<f64>() / ranks.len() as f64)
}

pub fn mean_inverted_rank(ranks: &[usize]) -> Result<f64> {
    non_empty(ranks)?;
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Precision at each relevant item's rank, averaged over all relevant items
/// of the query (relevant items missing from the ranking contribute zero).
pub fn average_precision(r: &Ranking, g: &GroundTruth) -> Result<f64> {
    let relevant = relevant_for(r, g)?;
    let mut found = 0usize;
    let mut sum = 0.0;
    for (pos, id) in r.item_ids().enumerate() {
        if relevant.contains(id) {
            found += 1;
            sum += found as f64 / (pos + 1) as f64;
        }
    }
    if found == 0 {
        return Err(Error::Missing(format!(
            "no relevant item in the ranking of {:?}",
            r.query_id
        )));
    }
    Ok(sum / relevant.len() as f64)
}

pub fn mean_average_precision(rankings: &[Ranking], g: &GroundTruth) -> Result<f64> {
    if rankings.is_empty() {
        return Err(Error::Empty("no rankings".into()));
    }
    let mut total = 0.0;
    for r in rankings {
        total += average_precision(r, g)?;
    }
    Ok(total / rankings.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    RecallAt(usize),
    MedianRank,
    MeanRank,
    MeanInvertedRank,
    MeanAveragePrecision,
}

impl Metric {
    pub const DEFAULTS: [Metric; 7] = [
        Metric::RecallAt(1),
        Metric::RecallAt(5),
        Metric::RecallAt(10),
        Metric::MedianRank,
        Metric::MeanRank,
        Metric::MeanInvertedRank,
        Metric::MeanAveragePrecision,
    ];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::RecallAt(k) => write!(f, "r@{k}"),
            Metric::MedianRank => f.write_str("medr"),
            Metric::MeanRank => f.write_str("meanr"),
            Metric::MeanInvertedRank => f.write_str("mir"),
            Metric::MeanAveragePrecision => f.write_str("map"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "medr" => Ok(Metric::MedianRank),
            "meanr" => Ok(Metric::MeanRank),
            "mir" => Ok(Metric::MeanInvertedRank),
            "map" => Ok(Metric::MeanAveragePrecision),
            other => other
                .strip_prefix("r@")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .map(Metric::RecallAt)
                .ok_or_else(|| Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// K → percentage.
    pub r_at: BTreeMap<usize, f64>,
    pub median_rank: f64,
    pub mean_rank: f64,
    pub mean_inverted_rank: f64,
    pub map_score: f64,
    pub num_queries: usize,
}

impl MetricReport {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::RecallAt(k) => self.r_at.get(&k).copied(),
            Metric::MedianRank => Some(self.median_rank),
            Metric::MeanRank => Some(self.mean_rank),
            Metric::MeanInvertedRank => Some(self.mean_inverted_rank),
            Metric::MeanAveragePrecision => Some(self.map_score),
        }
    }
}

/// Computes every metric, with R@K for each K in `ks`.
pub fn evaluate(rankings: &[Ranking], g: &GroundTruth, ks: &[usize]) -> Result<MetricReport> {
    let ranks = rankings
        .iter()
        .map(|r| first_relevant_rank(r, g))
        .collect::<Result<Vec<_>>>()?;
    let mut r_at = BTreeMap::new();
    for &k in ks {
        r_at.insert(k, recall_at_k(&ranks, k)?);
    }
    Ok(MetricReport {
        r_at,
        median_rank: median_rank(&ranks)?,
        mean_rank: mean_rank(&ranks)?,
        mean_inverted_rank: mean_inverted_rank(&ranks)?,
        map_score: mean_average_precision(rankings, g)?,
        num_queries: ranks.len(),
    })
}
