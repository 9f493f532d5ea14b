//! Sharded inverted index over feature tokens.
//!
//! Every document lives in shard `doc_id % S`. Postings lists hold sorted
//! document ids; since a document carries at most one token per
//! (feature, scheme) pair, term frequency is always one and BM25 reduces to
//! `length_norm(doc) * sum(idf(t))` over the shared tokens.
//!
//! Collection statistics (live document count, document frequency, average
//! length) are global, so the number of shards never changes a score.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;

use crate::config::{EncodingConfig, FilterConfig, Page, Scorer};
use crate::encoder::{self, FeatureToken, ParsedToken};
use crate::error::{Error, Result};
use crate::vector::{DenseVector, DocId};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

/// A scored document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub doc_id: DocId,
    pub score: f64,
}

impl SearchHit {
    pub fn new(doc_id: DocId, score: f64) -> Self {
        Self { doc_id, score }
    }

    /// Result order: score descending, then doc id ascending.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other.score.total_cmp(&self.score).then(self.doc_id.cmp(&other.doc_id))
    }
}

/// Sorts `hits` into result order and keeps the first `limit`.
pub fn top_hits(mut hits: Vec<SearchHit>, limit: Option<usize>) -> Vec<SearchHit> {
    if let Some(limit) = limit {
        if limit == 0 {
            return Vec::new();
        }
        if limit < hits.len() {
            hits.select_nth_unstable_by(limit - 1, SearchHit::rank_cmp);
            hits.truncate(limit);
        }
    }
    hits.sort_unstable_by(SearchHit::rank_cmp);
    hits
}

/// Merges per-shard result lists into one ranking.
pub fn merge_hits(parts: impl IntoIterator<Item = Vec<SearchHit>>, page: Page) -> Vec<SearchHit> {
    top_hits(parts.into_iter().flatten().collect(), page.limit())
}

/// Sorted, duplicate-free document ids holding one token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostingsList {
    doc_ids: Vec<DocId>,
}

impl PostingsList {
    /// Fails unless `doc_ids` is strictly ascending.
    pub fn from_sorted(doc_ids: Vec<DocId>) -> Result<Self> {
        if doc_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InconsistentIndex("postings list is not strictly ascending".into()));
        }
        Ok(Self { doc_ids })
    }

    pub fn doc_ids(&self) -> &[DocId] {
        &self.doc_ids
    }

    /// Document frequency.
    pub fn df(&self) -> usize {
        self.doc_ids.len()
    }

    fn insert(&mut self, id: DocId) {
        match self.doc_ids.last() {
            Some(&last) if last >= id => {
                if let Err(pos) = self.doc_ids.binary_search(&id) {
                    self.doc_ids.insert(pos, id);
                }
            }
            _ => self.doc_ids.push(id),
        }
    }

    fn remove(&mut self, id: DocId) -> bool {
        match self.doc_ids.binary_search(&id) {
            Ok(pos) => {
                self.doc_ids.remove(pos);
                true
            }
            Err(_) => false,
        }
    }
}

/// One horizontal partition of the index.
#[derive(Debug, Clone, Default)]
pub struct IndexShard {
    id: usize,
    postings: HashMap<String, PostingsList>,
    doc_lengths: HashMap<DocId, u32>,
}

impl IndexShard {
    fn new(id: usize) -> Self {
        Self { id, ..Self::default() }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn postings(&self, token: &str) -> Option<&PostingsList> {
        self.postings.get(token)
    }

    /// All postings, sorted by token.
    pub fn sorted_postings(&self) -> Vec<(&str, &PostingsList)> {
        let mut all: Vec<_> = self.postings.iter().map(|(t, p)| (t.as_str(), p)).collect();
        all.sort_unstable_by(|a, b| a.0.cmp(b.0));
        all
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn doc_length(&self, id: DocId) -> Option<u32> {
        self.doc_lengths.get(&id).copied()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    fn insert(&mut self, id: DocId, tokens: Vec<FeatureToken>) {
        self.doc_lengths.insert(id, tokens.len() as u32);
        for token in tokens {
            self.postings.entry(token.into_string()).or_default().insert(id);
        }
    }

    fn remove(&mut self, id: DocId, tokens: &[FeatureToken]) {
        self.doc_lengths.remove(&id);
        for token in tokens {
            let emptied = match self.postings.get_mut(token.as_str()) {
                Some(list) => list.remove(id) && list.df() == 0,
                None => false,
            };
            if emptied {
                self.postings.remove(token.as_str());
            }
        }
    }

    /// Scores every document of this shard that shares a token with `query`
    /// and returns the best `page` of them in result order.
    pub fn query(&self, query: &PreparedQuery, page: Page) -> Vec<SearchHit> {
        let mut acc: HashMap<DocId, f64> = HashMap::new();
        for (token, weight) in &query.terms {
            if let Some(list) = self.postings.get(token.as_str()) {
                for &id in list.doc_ids() {
                    *acc.entry(id).or_insert(0.0) += weight;
                }
            }
        }
        let hits = acc
            .into_iter()
            .map(|(id, sum)| {
                let len = self.doc_lengths.get(&id).copied().unwrap_or(0);
                SearchHit::new(id, sum * query.length_norm(len))
            })
            .collect();
        top_hits(hits, page.limit())
    }
}

/// Query tokens with their global weights, ready to be scored against any
/// shard.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    /// Token and its weight (idf for BM25, 1 for match counting), sorted by
    /// token.
    terms: Vec<(String, f64)>,
    scorer: Scorer,
    avg_len: f64,
}

impl PreparedQuery {
    pub fn terms(&self) -> &[(String, f64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn length_norm(&self, len: u32) -> f64 {
        match self.scorer {
            Scorer::MatchCount => 1.0,
            Scorer::Bm25 => {
                let rel = if self.avg_len > 0.0 { len as f64 / self.avg_len } else { 0.0 };
                (BM25_K1 + 1.0) / (1.0 + BM25_K1 * (1.0 - BM25_B + BM25_B * rel))
            }
        }
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`.
pub fn bm25_idf(doc_count: usize, df: usize) -> f64 {
    let (n, df) = (doc_count as f64, df as f64);
    libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
}

/// Static configuration of an index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub dim: usize,
    pub shards: usize,
    pub encoding: EncodingConfig,
    /// Filter applied to documents before indexing; off by default.
    pub index_filter: FilterConfig,
    pub scorer: Scorer,
}

impl IndexConfig {
    pub fn new(dim: usize, encoding: EncodingConfig) -> Self {
        Self { dim, shards: 1, encoding, index_filter: FilterConfig::NONE, scorer: Scorer::Bm25 }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    pub fn with_scorer(mut self, scorer: Scorer) -> Self {
        self.scorer = scorer;
        self
    }

    pub fn with_index_filter(mut self, filter: FilterConfig) -> Self {
        self.index_filter = filter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParams("dimension must be >= 1".into()));
        }
        if self.shards == 0 {
            return Err(Error::InvalidParams("shard count must be >= 1".into()));
        }
        self.index_filter.validate_for(self.dim)
    }
}

/// Token postings for phase 1 plus the dense vectors needed by phase 2.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    config: IndexConfig,
    shards: Vec<IndexShard>,
    vectors: BTreeMap<DocId, DenseVector>,
    total_tokens: u64,
}

impl InvertedIndex {
    pub fn new(config: IndexConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            shards: (0..config.shards).map(IndexShard::new).collect(),
            vectors: BTreeMap::new(),
            total_tokens: 0,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn encoding(&self) -> &EncodingConfig {
        &self.config.encoding
    }

    pub fn scorer(&self) -> Scorer {
        self.config.scorer
    }

    /// Live document count `N`.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Sum of all live documents' token counts (= sum of all df).
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn avg_doc_len(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.len() as f64
        }
    }

    /// Distinct tokens across all shards.
    pub fn vocabulary_size(&self) -> usize {
        match self.shards.as_slice() {
            [only] => only.vocabulary_size(),
            shards => {
                let mut seen = hashbrown::HashSet::new();
                for shard in shards {
                    seen.extend(shard.postings.keys().map(String::as_str));
                }
                seen.len()
            }
        }
    }

    pub fn shards(&self) -> &[IndexShard] {
        &self.shards
    }

    pub fn shard_of(&self, id: DocId) -> usize {
        (id % self.shards.len() as u64) as usize
    }

    pub fn contains(&self, id: DocId) -> bool {
        self.vectors.contains_key(&id)
    }

    pub fn vector(&self, id: DocId) -> Option<&DenseVector> {
        self.vectors.get(&id)
    }

    /// Stored vectors in doc id order.
    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &DenseVector> + '_ {
        self.vectors.values()
    }

    /// Tokens a document was indexed under.
    pub fn doc_tokens(&self, id: DocId) -> Option<Vec<FeatureToken>> {
        let v = self.vectors.get(&id)?;
        Some(encoder::filter_encode(v.values(), &self.config.index_filter, &self.config.encoding))
    }

    /// Indexes `v` and returns how many tokens it produced.
    pub fn add_document(&mut self, v: DenseVector) -> Result<usize> {
        if v.dim() != self.config.dim {
            return Err(Error::DimensionMismatch { expected: self.config.dim, found: v.dim() });
        }
        if self.vectors.contains_key(&v.id()) {
            return Err(Error::DuplicateDocument(v.id()));
        }
        let tokens =
            encoder::filter_encode(v.values(), &self.config.index_filter, &self.config.encoding);
        let count = tokens.len();
        let shard = self.shard_of(v.id());
        self.shards[shard].insert(v.id(), tokens);
        self.total_tokens += count as u64;
        self.vectors.insert(v.id(), v);
        Ok(count)
    }

    /// Removes a live document. Returns `false` for unknown ids.
    pub fn delete_document(&mut self, id: DocId) -> bool {
        let Some(tokens) = self.doc_tokens(id) else {
            return false;
        };
        let shard = self.shard_of(id);
        self.shards[shard].remove(id, &tokens);
        self.total_tokens -= tokens.len() as u64;
        self.vectors.remove(&id);
        true
    }

    /// Global document frequency of `token`.
    pub fn df(&self, token: &str) -> usize {
        self.shards.iter().filter_map(|s| s.postings(token)).map(PostingsList::df).sum()
    }

    /// Deduplicates `tokens` and attaches the configured scorer's weights.
    pub fn prepare_query(&self, tokens: &[FeatureToken]) -> PreparedQuery {
        let mut names: Vec<&str> = tokens.iter().map(FeatureToken::as_str).collect();
        names.sort_unstable();
        names.dedup();
        let n = self.len();
        let terms = names
            .into_iter()
            .filter_map(|t| {
                let df = self.df(t);
                if df == 0 {
                    return None;
                }
                let weight = match self.config.scorer {
                    Scorer::Bm25 => bm25_idf(n, df),
                    Scorer::MatchCount => 1.0,
                };
                Some((String::from(t), weight))
            })
            .collect();
        PreparedQuery { terms, scorer: self.config.scorer, avg_len: self.avg_doc_len() }
    }

    /// Phase 1: the top `page` live documents sharing at least one token
    /// with the query, by the configured scorer.
    pub fn phase1_query(&self, tokens: &[FeatureToken], page: Page) -> Vec<SearchHit> {
        let query = self.prepare_query(tokens);
        if query.is_empty() {
            return Vec::new();
        }
        if let [only] = self.shards.as_slice() {
            return only.query(&query, page);
        }
        merge_hits(self.shards.iter().map(|s| s.query(&query, page)), page)
    }

    /// Scores one document directly from its token set, without postings.
    pub fn score_document(&self, tokens: &[FeatureToken], id: DocId) -> Option<f64> {
        let doc_tokens = self.doc_tokens(id)?;
        Some(match self.config.scorer {
            Scorer::MatchCount => score_matchcount(tokens, &doc_tokens) as f64,
            Scorer::Bm25 => score_bm25(tokens, &doc_tokens, |t| self.df(t), self.len(), self.avg_doc_len()),
        })
    }

    /// Rebuilds an index from persisted parts, checking that postings and
    /// vectors agree.
    pub fn from_parts(
        config: IndexConfig,
        vectors: Vec<DenseVector>,
        shard_postings: Vec<Vec<(String, Vec<DocId>)>>,
    ) -> Result<Self> {
        let mut index = Self::new(config)?;
        if shard_postings.len() != config.shards {
            return Err(Error::InconsistentIndex(format!(
                "expected {} shards, found {}",
                config.shards,
                shard_postings.len()
            )));
        }
        for v in vectors {
            if v.dim() != config.dim {
                return Err(Error::DimensionMismatch { expected: config.dim, found: v.dim() });
            }
            if index.vectors.insert(v.id(), v).is_some() {
                return Err(Error::InconsistentIndex("duplicate stored vector".into()));
            }
        }
        for (shard_id, postings) in shard_postings.into_iter().enumerate() {
            let shard = &mut index.shards[shard_id];
            for (token, ids) in postings {
                ParsedToken::parse(&token)?;
                let list = PostingsList::from_sorted(ids)?;
                for &id in list.doc_ids() {
                    if !index.vectors.contains_key(&id) {
                        return Err(Error::InconsistentIndex(format!(
                            "token {token} lists unknown document {id}"
                        )));
                    }
                    if (id % config.shards as u64) as usize != shard_id {
                        return Err(Error::InconsistentIndex(format!(
                            "document {id} stored in shard {shard_id}"
                        )));
                    }
                    *shard.doc_lengths.entry(id).or_insert(0) += 1;
                }
                if list.df() == 0 || shard.postings.insert(token, list).is_some() {
                    return Err(Error::InconsistentIndex("empty or repeated postings list".into()));
                }
            }
        }
        let per_feature = config.encoding.tokens_per_feature();
        for v in index.vectors.values() {
            let expected = if config.index_filter.is_noop() {
                v.dim()
            } else {
                encoder::surviving_features(v.values(), &config.index_filter).len()
            } * per_feature;
            let shard = &mut index.shards[(v.id() % config.shards as u64) as usize];
            let found = *shard.doc_lengths.entry(v.id()).or_insert(0) as usize;
            if found != expected {
                return Err(Error::InconsistentIndex(format!(
                    "document {} has {found} postings, expected {expected}",
                    v.id()
                )));
            }
            index.total_tokens += found as u64;
        }
        Ok(index)
    }
}

/// `|query ∩ doc|` over token sets.
pub fn score_matchcount(query: &[FeatureToken], doc: &[FeatureToken]) -> usize {
    let mut q: Vec<&str> = query.iter().map(FeatureToken::as_str).collect();
    q.sort_unstable();
    q.dedup();
    let mut d: Vec<&str> = doc.iter().map(FeatureToken::as_str).collect();
    d.sort_unstable();
    d.dedup();
    q.iter().filter(|t| d.binary_search(t).is_ok()).count()
}

/// BM25 of one document with `tf = 1` for every shared token.
pub fn score_bm25(
    query: &[FeatureToken],
    doc: &[FeatureToken],
    df: impl Fn(&str) -> usize,
    doc_count: usize,
    avg_len: f64,
) -> f64 {
    let mut q: Vec<&str> = query.iter().map(FeatureToken::as_str).collect();
    q.sort_unstable();
    q.dedup();
    let d: hashbrown::HashSet<&str> = doc.iter().map(FeatureToken::as_str).collect();
    let len = d.len() as f64;
    let rel = if avg_len > 0.0 { len / avg_len } else { 0.0 };
    let tf = 1.0;
    q.into_iter()
        .filter(|t| d.contains(t))
        .map(|t| {
            let idf = bm25_idf(doc_count, df(t));
            idf * (tf * (BM25_K1 + 1.0)) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * rel))
        })
        .sum()
}
