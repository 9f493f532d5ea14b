//! Concurrent query execution.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock, RwLockReadGuard};
use std::thread;
use std::time::Instant;

use tokvec_core::index::merge_hits;
use tokvec_core::search::two_phase_search_with;
use tokvec_core::{
    Clock, DenseVector, DocId, FeatureToken, FilterConfig, InvertedIndex, Page, RankedResults,
    SearchHit, SearchParams,
};

use crate::error::Result;

/// Seconds since construction, from the monotonic clock.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Runs `f` over `items` on `parallelism` worker threads. Output order
/// matches input order.
pub fn run_parallel<T: Sync, R: Send>(
    items: &[T],
    parallelism: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let workers = parallelism.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().unwrap() = Some(f(item));
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("every slot is filled")).collect()
}

/// Phase 1 with one thread per shard; merges exactly like the sequential
/// path.
pub fn parallel_phase1(index: &InvertedIndex, tokens: &[FeatureToken], page: Page) -> Vec<SearchHit> {
    let query = index.prepare_query(tokens);
    if query.is_empty() {
        return Vec::new();
    }
    let parts = run_parallel(index.shards(), index.shards().len(), |shard| shard.query(&query, page));
    merge_hits(parts, page)
}

/// Two-phase search per query on a pool of `parallelism` workers. Each slot
/// holds that query's result or error; timings come from the monotonic
/// clock.
pub fn batch_search(
    index: &InvertedIndex,
    queries: &[DenseVector],
    params: &SearchParams,
    filter: &FilterConfig,
    parallelism: usize,
) -> Vec<Result<RankedResults>> {
    let clock = MonotonicClock::new();
    run_parallel(queries, parallelism, |q| {
        tokvec_core::two_phase_search_timed(index, q, params, filter, &clock).map_err(Into::into)
    })
}

/// Single-writer, multi-reader wrapper around an index.
///
/// Adds and deletes take the write lock, so a query never sees a document
/// half inserted.
#[derive(Debug)]
pub struct SharedIndex {
    inner: RwLock<InvertedIndex>,
}

impl SharedIndex {
    pub fn new(index: InvertedIndex) -> Self {
        Self { inner: RwLock::new(index) }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, InvertedIndex> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn add_document(&self, v: DenseVector) -> Result<usize> {
        let mut index = self.inner.write().unwrap_or_else(|e| e.into_inner());
        Ok(index.add_document(v)?)
    }

    pub fn delete_document(&self, id: DocId) -> bool {
        self.inner.write().unwrap_or_else(|e| e.into_inner()).delete_document(id)
    }

    /// Two-phase search with shards scored in parallel.
    pub fn search(
        &self,
        q: &DenseVector,
        params: &SearchParams,
        filter: &FilterConfig,
    ) -> Result<RankedResults> {
        let index = self.read();
        let clock = MonotonicClock::new();
        Ok(two_phase_search_with(&index, q, params, filter, &clock, |tokens, page| {
            parallel_phase1(&index, tokens, page)
        })?)
    }

    pub fn into_inner(self) -> InvertedIndex {
        self.inner.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}
