//! Retrieval quality against a brute-force gold standard.
//!
//! All functions take hit lists whose scores are cosine similarities to the
//! query, as produced by both search paths.

use alloc::vec::Vec;

use crate::index::SearchHit;

/// Fraction of the gold ids found among the first `k` results. Missing
/// result slots count as misses.
pub fn precision_at_k(result: &[SearchHit], gold: &[SearchHit], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let gold_ids: Vec<_> = gold.iter().take(k).map(|h| h.doc_id).collect();
    let found = result.iter().take(k).filter(|h| gold_ids.contains(&h.doc_id)).count();
    found as f64 / k as f64
}

/// `sum(rel_i / log2(i + 1))` over the first `k` ranks, `i` from 1.
pub fn dcg(relevances: impl IntoIterator<Item = f64>, k: usize) -> f64 {
    relevances
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, rel)| rel / libm::log2(i as f64 + 2.0))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ndcg {
    /// In `[0, 1]`.
    pub value: f64,
    /// The gold ranking has zero DCG; `value` is 1 by convention.
    pub vacuous: bool,
}

/// nDCG with each hit's cosine similarity as its relevance.
pub fn ndcg_at_k(result: &[SearchHit], gold: &[SearchHit], k: usize) -> Ndcg {
    let ideal = dcg(gold.iter().map(|h| h.score), k);
    if ideal <= 0.0 {
        return Ndcg { value: 1.0, vacuous: true };
    }
    let actual = dcg(result.iter().map(|h| h.score), k);
    Ndcg { value: (actual / ideal).clamp(0.0, 1.0), vacuous: false }
}

/// Mean per-rank gap between gold and returned similarities over the first
/// `k` ranks. Missing result slots have similarity 0.
pub fn avg_diff_at_k(result: &[SearchHit], gold: &[SearchHit], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let total: f64 = (0..k)
        .map(|i| {
            let g = gold.get(i).map_or(0.0, |h| h.score);
            let r = result.get(i).map_or(0.0, |h| h.score);
            g - r
        })
        .sum();
    total / k as f64
}
