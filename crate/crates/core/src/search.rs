//! Brute-force search and the two-phase token search.

use alloc::vec::Vec;

use crate::config::{FilterConfig, Page, SearchParams};
use crate::encoder::{EncodedDocument, FeatureToken};
use crate::error::{Error, Result};
use crate::index::{top_hits, InvertedIndex, SearchHit};
use crate::vector::{cosine, DenseVector, DocId};

/// Monotonic time source in seconds.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances; timings come out as zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Outcome of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResults {
    pub query_id: DocId,
    /// At most `k` hits scored by cosine similarity, best first.
    pub hits: Vec<SearchHit>,
    /// Size of the phase-1 candidate set (`|E|`); the whole collection for
    /// brute-force search.
    pub candidates: usize,
    /// Query features that survived filtering.
    pub query_features: usize,
    pub query_tokens: usize,
    /// Filtering removed every query feature.
    pub empty_query: bool,
    /// Phase-1 time in seconds.
    pub engine_secs: f64,
    /// End-to-end time in seconds.
    pub total_secs: f64,
}

impl RankedResults {
    pub fn doc_ids(&self) -> Vec<DocId> {
        self.hits.iter().map(|h| h.doc_id).collect()
    }

    pub fn similarities(&self) -> Vec<f64> {
        self.hits.iter().map(|h| h.score).collect()
    }
}

/// Exact top `k` of `candidates` by cosine similarity to `q`.
pub fn rank_by_cosine<'a>(
    q: &DenseVector,
    candidates: impl IntoIterator<Item = &'a DenseVector>,
    k: usize,
    exclude_self: bool,
) -> Result<Vec<SearchHit>> {
    let mut scored = Vec::new();
    for d in candidates {
        if exclude_self && d.id() == q.id() {
            continue;
        }
        scored.push(SearchHit::new(d.id(), cosine(q.values(), d.values())?));
    }
    Ok(top_hits(scored, Some(k)))
}

/// Linear scan over every stored vector. This is the gold standard the
/// two-phase search is measured against.
pub fn naive_search(
    index: &InvertedIndex,
    q: &DenseVector,
    k: usize,
    exclude_self: bool,
) -> Result<RankedResults> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be >= 1".into()));
    }
    if q.dim() != index.dim() {
        return Err(Error::DimensionMismatch { expected: index.dim(), found: q.dim() });
    }
    let hits = rank_by_cosine(q, index.vectors(), k, exclude_self)?;
    Ok(RankedResults {
        query_id: q.id(),
        hits,
        candidates: index.len(),
        query_features: q.dim(),
        query_tokens: 0,
        empty_query: false,
        engine_secs: 0.0,
        total_secs: 0.0,
    })
}

pub fn two_phase_search(
    index: &InvertedIndex,
    q: &DenseVector,
    params: &SearchParams,
    filter: &FilterConfig,
) -> Result<RankedResults> {
    two_phase_search_timed(index, q, params, filter, &NoClock)
}

pub fn two_phase_search_timed(
    index: &InvertedIndex,
    q: &DenseVector,
    params: &SearchParams,
    filter: &FilterConfig,
    clock: &impl Clock,
) -> Result<RankedResults> {
    two_phase_search_with(index, q, params, filter, clock, |tokens, page| {
        index.phase1_query(tokens, page)
    })
}

/// Two-phase search with a caller-supplied phase 1, e.g. a parallel shard
/// fan-out. `phase1` must behave like [`InvertedIndex::phase1_query`].
///
/// 1. encode the filtered query,
/// 2. fetch the candidate page,
/// 3. re-rank it by cosine against the *unfiltered* query,
/// 4. keep the top `k`.
pub fn two_phase_search_with(
    index: &InvertedIndex,
    q: &DenseVector,
    params: &SearchParams,
    filter: &FilterConfig,
    clock: &impl Clock,
    phase1: impl FnOnce(&[FeatureToken], Page) -> Vec<SearchHit>,
) -> Result<RankedResults> {
    params.validate()?;
    filter.validate_for(index.dim())?;
    if q.dim() != index.dim() {
        return Err(Error::DimensionMismatch { expected: index.dim(), found: q.dim() });
    }
    let start = clock.now();
    let encoded = EncodedDocument::new(q, filter, index.encoding());
    let mut results = RankedResults {
        query_id: q.id(),
        hits: Vec::new(),
        candidates: 0,
        query_features: encoded.features,
        query_tokens: encoded.len(),
        empty_query: encoded.is_empty(),
        engine_secs: 0.0,
        total_secs: 0.0,
    };
    if encoded.is_empty() {
        results.total_secs = clock.now() - start;
        return Ok(results);
    }

    let engine_start = clock.now();
    let candidates = phase1(&encoded.tokens, params.page);
    results.engine_secs = clock.now() - engine_start;
    results.candidates = candidates.len();

    let vectors = candidates.iter().filter_map(|hit| index.vector(hit.doc_id));
    results.hits = rank_by_cosine(q, vectors, params.k, params.exclude_self)?;
    results.total_secs = clock.now() - start;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Best, EncodingConfig};
    use crate::index::IndexConfig;
    use alloc::vec;

    fn orthogonal() -> InvertedIndex {
        let mut index =
            InvertedIndex::new(IndexConfig::new(3, EncodingConfig::default())).unwrap();
        for (id, row) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
            index.add_document(DenseVector::new(id as DocId, row.to_vec()).unwrap()).unwrap();
        }
        index
    }

    #[test]
    fn naive_orthogonal_fixture() {
        let index = orthogonal();
        let q = index.vector(1).unwrap().clone();
        let res = naive_search(&index, &q, 3, false).unwrap();
        assert_eq!(res.hits, [SearchHit::new(1, 1.0), SearchHit::new(0, 0.0), SearchHit::new(2, 0.0)]);
        let res = naive_search(&index, &q, 3, true).unwrap();
        assert_eq!(res.doc_ids(), [0, 2]);
        let short = DenseVector::new(9, vec![1.0, 0.0]).unwrap();
        assert!(naive_search(&index, &short, 3, false).is_err());
    }

    #[test]
    fn unfiltered_two_phase_matches_naive() {
        let index = orthogonal();
        let q = DenseVector::new(7, vec![0.05, 0.99, 0.05]).unwrap();
        let params = SearchParams::new(3, Page::All).unwrap();
        let two = two_phase_search(&index, &q, &params, &FilterConfig::NONE).unwrap();
        let naive = naive_search(&index, &q, 3, false).unwrap();
        assert_eq!(two.hits, naive.hits);
        assert_eq!(two.candidates, 3);
        assert_eq!(two.query_features, 3);
        assert_eq!(two.query_tokens, 6);
    }

    #[test]
    fn filtering_everything_flags_an_empty_query() {
        let index = orthogonal();
        let q = DenseVector::new(7, vec![0.5, 0.5, 0.5]).unwrap();
        let params = SearchParams::default();
        let res = two_phase_search(&index, &q, &params, &FilterConfig::trim(1.0).unwrap()).unwrap();
        assert!(res.empty_query);
        assert!(res.hits.is_empty());
        assert_eq!(res.candidates, 0);
        let bad = FilterConfig { trim: 0.0, best: Best::Top(4) };
        assert!(two_phase_search(&index, &q, &params, &bad).is_err());
    }
}
