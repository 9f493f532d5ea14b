//! Quality and speed sweeps over parameter grids.
//!
//! Quality: a fixed, seeded sample of stored documents serves as queries; the
//! brute-force top `k` of each is the gold standard, and every grid cell is
//! scored by Precision@k (min/avg/max over queries), mean nDCG@k and mean
//! avg. diff.
//!
//! Speed: each cell draws a fresh batch of queries and times it through
//! [`batch_search`]. "Engine" time covers phase 1 only, "request" time the
//! whole two-phase call, and total time is the wall clock for the batch.

use std::time::Instant;

use serde::Serialize;
use tokvec_core::metrics::{avg_diff_at_k, ndcg_at_k, precision_at_k};
use tokvec_core::{
    naive_search, two_phase_search, Best, DenseVector, FilterConfig, InvertedIndex, Page,
    RankedResults, SearchParams,
};

use crate::batch::{batch_search, run_parallel};
use crate::error::{Error, Result};
use crate::synth::sample_positions;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityCell {
    pub trim: f64,
    pub best: Best,
    pub page: Page,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedCell {
    pub parallelism: usize,
    pub trim: f64,
    pub page: Page,
}

pub fn quality_grid(trims: &[f64], bests: &[Best], pages: &[Page]) -> Vec<QualityCell> {
    let mut cells = Vec::new();
    for &trim in trims {
        for &best in bests {
            for &page in pages {
                cells.push(QualityCell { trim, best, page });
            }
        }
    }
    cells
}

pub fn speed_grid(parallelism: &[usize], trims: &[f64], pages: &[Page]) -> Vec<SpeedCell> {
    let mut cells = Vec::new();
    for &p in parallelism {
        for &trim in trims {
            for &page in pages {
                cells.push(SpeedCell { parallelism: p, trim, page });
            }
        }
    }
    cells
}

pub const QUALITY_PRESETS: &[&str] = &["paper-quality"];
pub const SPEED_PRESETS: &[&str] = &["paper-speed"];

/// Trim {0, 0.05, 0.10} x best {17, 40, 90, all} x page {20 .. 640}.
pub fn quality_preset(name: &str) -> Option<Vec<QualityCell>> {
    match name {
        "paper-quality" => Some(quality_grid(
            &[0.0, 0.05, 0.10],
            &[Best::Top(17), Best::Top(40), Best::Top(90), Best::All],
            &[20, 40, 80, 160, 320, 640].map(Page::Size),
        )),
        _ => None,
    }
}

/// Parallel queues {1, 4, 16} x trim {0, 0.05, 0.10} x page {20, 80, 320}.
pub fn speed_preset(name: &str) -> Option<Vec<SpeedCell>> {
    match name {
        "paper-speed" => Some(speed_grid(&[1, 4, 16], &[0.0, 0.05, 0.10], &[20, 80, 320].map(Page::Size))),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QualityOptions {
    pub queries: usize,
    pub k: usize,
    pub seed: u64,
    pub exclude_self: bool,
    /// Worker threads; affects wall time only.
    pub parallelism: usize,
}

impl Default for QualityOptions {
    fn default() -> Self {
        Self { queries: 1000, k: 10, seed: 0, exclude_self: false, parallelism: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityRow {
    pub trim: f64,
    #[serde(serialize_with = "as_text")]
    pub best: Best,
    #[serde(serialize_with = "as_text")]
    pub page: Page,
    pub min_precision: f64,
    pub avg_precision: f64,
    pub max_precision: f64,
    pub ndcg: f64,
    pub avg_diff: f64,
    pub queries: usize,
    pub empty_queries: usize,
    /// Every query of the cell was filtered down to nothing.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub k: usize,
    pub seed: u64,
    pub rows: Vec<QualityRow>,
}

fn as_text<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Stored vectors at the sampled positions (positions index the id-ordered
/// store).
pub fn sample_queries(index: &InvertedIndex, count: usize, seed: u64, stream: u64) -> Result<Vec<DenseVector>> {
    let positions = sample_positions(index.len(), count, seed, stream)?;
    let stored: Vec<&DenseVector> = index.vectors().collect();
    Ok(positions.into_iter().map(|p| stored[p].clone()).collect())
}

/// Scores one result list against its gold standard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryQuality {
    pub precision: f64,
    pub ndcg: f64,
    pub avg_diff: f64,
}

pub fn query_quality(result: &RankedResults, gold: &RankedResults, k: usize) -> QueryQuality {
    QueryQuality {
        precision: precision_at_k(&result.hits, &gold.hits, k),
        ndcg: ndcg_at_k(&result.hits, &gold.hits, k).value,
        avg_diff: avg_diff_at_k(&result.hits, &gold.hits, k),
    }
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// Population standard deviation.
fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn run_quality_grid(index: &InvertedIndex, opts: &QualityOptions, grid: &[QualityCell]) -> Result<QualityReport> {
    if grid.is_empty() {
        return Err(Error::Usage("empty grid".into()));
    }
    if opts.queries == 0 {
        return Err(Error::Usage("query count must be >= 1".into()));
    }
    let queries = sample_queries(index, opts.queries, opts.seed, 0)?;
    let gold = run_parallel(&queries, opts.parallelism, |q| naive_search(index, q, opts.k, opts.exclude_self))
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(grid.len());
    for cell in grid {
        let filter = FilterConfig::new(cell.trim, cell.best)?;
        let params = SearchParams::new(opts.k, cell.page)?.excluding_self(opts.exclude_self);
        let pairs: Vec<(&DenseVector, &RankedResults)> = queries.iter().zip(&gold).collect();
        let scored = run_parallel(&pairs, opts.parallelism, |(q, g)| {
            two_phase_search(index, q, &params, &filter).map(|r| (r.empty_query, query_quality(&r, g, opts.k)))
        })
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;

        let precisions: Vec<f64> = scored.iter().map(|(_, s)| s.precision).collect();
        let empty_queries = scored.iter().filter(|(empty, _)| *empty).count();
        rows.push(QualityRow {
            trim: cell.trim,
            best: cell.best,
            page: cell.page,
            min_precision: precisions.iter().copied().fold(f64::INFINITY, f64::min),
            avg_precision: mean(precisions.iter().copied()),
            max_precision: precisions.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ndcg: mean(scored.iter().map(|(_, s)| s.ndcg)),
            avg_diff: mean(scored.iter().map(|(_, s)| s.avg_diff)),
            queries: scored.len(),
            empty_queries,
            degenerate: empty_queries == scored.len(),
        });
    }
    Ok(QualityReport { k: opts.k, seed: opts.seed, rows })
}

#[derive(Debug, Clone, Copy)]
pub struct SpeedOptions {
    pub batch: usize,
    pub k: usize,
    pub best: Best,
    pub seed: u64,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        Self { batch: 128, k: 10, best: Best::All, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedRow {
    pub parallelism: usize,
    pub trim: f64,
    #[serde(serialize_with = "as_text")]
    pub page: Page,
    pub engine_avg_s: f64,
    pub engine_std_s: f64,
    pub request_avg_s: f64,
    pub request_std_s: f64,
    pub total_s: f64,
    pub vec_size_avg: f64,
    pub vec_size_std: f64,
    /// Sum of per-query request times, for comparing with `total_s`.
    #[serde(skip)]
    pub request_sum_s: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub batch: usize,
    pub seed: u64,
    pub rows: Vec<SpeedRow>,
}

fn micros(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Cells run one after another; each cell draws a fresh batch.
pub fn run_speed_grid(index: &InvertedIndex, opts: &SpeedOptions, grid: &[SpeedCell]) -> Result<SpeedReport> {
    if grid.is_empty() {
        return Err(Error::Usage("empty grid".into()));
    }
    if opts.batch == 0 {
        return Err(Error::Usage("batch size must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (i, cell) in grid.iter().enumerate() {
        if cell.parallelism == 0 {
            return Err(Error::Usage("parallelism must be >= 1".into()));
        }
        let filter = FilterConfig::new(cell.trim, opts.best)?;
        let params = SearchParams::new(opts.k, cell.page)?;
        let queries = sample_queries(index, opts.batch, opts.seed, i as u64 + 1)?;

        let start = Instant::now();
        let results = batch_search(index, &queries, &params, &filter, cell.parallelism);
        let total = start.elapsed().as_secs_f64();

        let ok: Vec<&RankedResults> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
        let engine: Vec<f64> = ok.iter().map(|r| r.engine_secs).collect();
        let request: Vec<f64> = ok.iter().map(|r| r.total_secs).collect();
        let sizes: Vec<f64> = ok.iter().map(|r| r.query_features as f64).collect();
        rows.push(SpeedRow {
            parallelism: cell.parallelism,
            trim: cell.trim,
            page: cell.page,
            engine_avg_s: micros(mean(engine.iter().copied())),
            engine_std_s: micros(std_dev(&engine)),
            request_avg_s: micros(mean(request.iter().copied())),
            request_std_s: micros(std_dev(&request)),
            total_s: micros(total),
            vec_size_avg: mean(sizes.iter().copied()),
            vec_size_std: std_dev(&sizes),
            request_sum_s: request.iter().sum(),
            failed: results.len() - ok.len(),
        });
    }
    Ok(SpeedReport { batch: opts.batch, seed: opts.seed, rows })
}
