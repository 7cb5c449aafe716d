//! Cosine-similarity ranking in the visual feature space.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A vector in the visual space keyed by item id: an image, a video, or an
/// encoded sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualFeature {
    pub id: String,
    pub values: Vec<f64>,
}

impl VisualFeature {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        VisualFeature { id: id.into(), values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Similarity {
    #[default]
    Cosine,
    /// Unnormalized inner product, for ablations.
    Dot,
}

/// Candidates for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a·b / (‖a‖‖b‖)`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims("cosine operands", a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 {
        return Err(Error::ZeroVector("left operand".into()));
    }
    if nb == 0.0 {
        return Err(Error::ZeroVector("right operand".into()));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Descending by score, ties by ascending id bytes.
fn order_entries(entries: &mut [(String, f64)]) {
    entries.sort_by(|(ia, sa), (ib, sb)| {
        sb.partial_cmp(sa)
            .unwrap_or(Ordering::Equal)
            .then_with(|| ia.as_bytes().cmp(ib.as_bytes()))
    });
}

pub fn rank_items(query: &VisualFeature, candidates: &[VisualFeature]) -> Result<Ranking> {
    rank_items_with(query, candidates, Similarity::Cosine)
}

pub fn rank_items_with(query: &VisualFeature, candidates: &[VisualFeature], similarity: Similarity) -> Result<Ranking> {
    let norms = candidate_norms(candidates, similarity)?;
    rank_with_norms(query, candidates, &norms, similarity)
}

/// Candidate norms for cosine scoring, empty for dot products.
fn candidate_norms(candidates: &[VisualFeature], similarity: Similarity) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::Empty("no candidates to rank".into()));
    }
    match similarity {
        Similarity::Cosine => candidates
            .iter()
            .map(|c| match norm(&c.values) {
                0.0 => Err(Error::ZeroVector(c.id.clone())),
                n => Ok(n),
            })
            .collect(),
        Similarity::Dot => Ok(Vec::new()),
    }
}

fn rank_with_norms(
    query: &VisualFeature,
    candidates: &[VisualFeature],
    norms: &[f64],
    similarity: Similarity,
) -> Result<Ranking> {
    let qn = norm(&query.values);
    if qn == 0.0 {
        return Err(Error::ZeroVector(query.id.clone()));
    }
    let mut entries = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        if c.dim() != query.dim() {
            return Err(Error::dims(format!("candidate {:?}", c.id), query.dim(), c.dim()));
        }
        let d = dot(&query.values, &c.values);
        let score = match similarity {
            Similarity::Cosine => (d / (qn * norms[i])).clamp(-1.0, 1.0),
            Similarity::Dot => d,
        };
        entries.push((c.id.clone(), score));
    }
    order_entries(&mut entries);
    Ok(Ranking {
        query_id: query.id.clone(),
        entries,
    })
}

/// One ranking per query, computed in parallel, query order preserved.
pub fn rank_all(queries: &[VisualFeature], candidates: &[VisualFeature]) -> Result<Vec<Ranking>> {
    rank_all_with(queries, candidates, Similarity::Cosine)
}

pub fn rank_all_with(
    queries: &[VisualFeature],
    candidates: &[VisualFeature],
    similarity: Similarity,
) -> Result<Vec<Ranking>> {
    let norms = candidate_norms(candidates, similarity)?;
    queries
        .par_iter()
        .map(|q| rank_with_norms(q, candidates, &norms, similarity))
        .collect()
}
