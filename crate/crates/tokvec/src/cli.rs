//! `tokvec` command-line interface.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tokvec_core::{
    Best, EncodingConfig, FilterConfig, IndexConfig, InvertedIndex, Page, Scorer, SearchParams,
};

use crate::batch::SharedIndex;
use crate::error::{Error, Result};
use crate::eval::{self, QualityOptions, SpeedOptions};
use crate::report::{self, ResultRecord};
use crate::snapshot::{load_snapshot, save_snapshot};
use crate::synth::{self, ClusterSpec};
use crate::vectors::{self, parse_vector_literal};

#[derive(Debug, Parser)]
#[command(name = "tokvec", version, about = "Dense-vector search through a feature-token inverted index")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a clustered synthetic dataset (TVEC binary).
    Gen(GenArgs),
    /// Build an index from a vector file and save a snapshot.
    Index(IndexArgs),
    /// Run one two-phase query against a snapshot.
    Search(SearchArgs),
    /// Quality sweep against the brute-force gold standard.
    Eval(EvalArgs),
    /// Speed sweep over batches of queries.
    Bench(BenchArgs),
    /// Print snapshot metadata.
    SnapshotInfo(InfoArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 400)]
    pub dims: usize,
    #[arg(long, default_value_t = 10_000)]
    pub docs: usize,
    #[arg(long, default_value_t = 100)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the text format instead of TVEC.
    #[arg(long)]
    pub text: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// TVEC or text vector file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "P2+I10")]
    pub encoding: String,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    #[arg(long, default_value = "bm25")]
    pub scorer: String,
    /// Index-side trim (off by default).
    #[arg(long, default_value_t = 0.0)]
    pub trim: f64,
    /// Index-side best-m filter.
    #[arg(long, default_value = "all")]
    pub best: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("query").required(true).args(["doc", "vector"])))]
pub struct SearchArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Query with a stored document.
    #[arg(long)]
    pub doc: Option<u64>,
    /// Query with a literal vector, e.g. "0.1 -0.2 0.3".
    #[arg(long, allow_hyphen_values = true)]
    pub vector: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "all")]
    pub page: String,
    #[arg(long, default_value_t = 0.0)]
    pub trim: f64,
    #[arg(long, default_value = "all")]
    pub best: String,
    #[arg(long)]
    pub exclude_self: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    /// Named grid: paper-quality.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub trim: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub best: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub page: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub exclude_self: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON lines instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    /// Named grid: paper-speed.
    #[arg(long)]
    pub preset: Option<String>,
    /// Parallel query queues.
    #[arg(long, value_delimiter = ',')]
    pub parallel: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub trim: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub page: Vec<String>,
    #[arg(long, default_value = "all")]
    pub best: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub json: bool,
}

/// Collects every configuration problem so they are reported together.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn check<T>(&mut self, r: std::result::Result<T, tokvec_core::Error>) -> Option<T> {
        r.map_err(|e| self.0.push(e.to_string())).ok()
    }

    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(self.0.join("; ")))
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Index(a) => cmd_index(&a, out),
        Command::Search(a) => cmd_search(&a, out),
        Command::Eval(a) => cmd_eval(&a, out, err),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::SnapshotInfo(a) => cmd_snapshot_info(&a, out),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let spec = ClusterSpec { dims: a.dims, docs: a.docs, clusters: a.clusters, sigma: a.sigma, seed: a.seed };
    let rows = synth::clustered(&spec)?;
    if a.text {
        let file = File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
        let mut w = BufWriter::new(file);
        vectors::write_text_to(&mut w, &rows)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&a.out, e))?;
    } else {
        vectors::write_tvec(&a.out, &rows)?;
    }
    writeln!(
        out,
        "wrote {} vectors of dimension {} to {} (generator {}, seed {})",
        rows.len(),
        a.dims,
        a.out.display(),
        synth::GENERATOR,
        a.seed
    )
    .map_err(io_err)
}

#[derive(Serialize)]
struct IndexSummary {
    docs: usize,
    dim: usize,
    tokens: u64,
    vocabulary: usize,
    shards: usize,
    encoding: String,
    scorer: String,
    index_filter: String,
}

fn summary(index: &InvertedIndex) -> IndexSummary {
    let cfg = index.config();
    IndexSummary {
        docs: index.len(),
        dim: cfg.dim,
        tokens: index.total_tokens(),
        vocabulary: index.vocabulary_size(),
        shards: cfg.shards,
        encoding: cfg.encoding.to_string(),
        scorer: cfg.scorer.to_string(),
        index_filter: cfg.index_filter.to_string(),
    }
}

fn print_summary(index: &InvertedIndex, json: bool, out: &mut dyn Write) -> Result<()> {
    let s = summary(index);
    if json {
        serde_json::to_writer(&mut *out, &s)?;
        writeln!(out).map_err(io_err)
    } else {
        writeln!(
            out,
            "docs {}  dim {}  tokens {}  vocabulary {}  shards {}  encoding {}  scorer {}  index filter {}",
            s.docs, s.dim, s.tokens, s.vocabulary, s.shards, s.encoding, s.scorer, s.index_filter
        )
        .map_err(io_err)
    }
}

pub fn cmd_index(a: &IndexArgs, out: &mut dyn Write) -> Result<()> {
    let mut problems = Problems::default();
    let encoding = problems.check(a.encoding.parse::<EncodingConfig>());
    let scorer = problems.check(a.scorer.parse::<Scorer>());
    let best = problems.check(a.best.parse::<Best>());
    if a.shards == 0 {
        problems.push("shards must be >= 1");
    }
    let filter = best.and_then(|best| problems.check(FilterConfig::new(a.trim, best)));
    problems.finish()?;
    let (encoding, scorer, filter) = (encoding.unwrap(), scorer.unwrap(), filter.unwrap());

    let docs = vectors::read_vectors(&a.input)?;
    let dim = docs[0].dim();
    let config = IndexConfig::new(dim, encoding)
        .with_shards(a.shards)
        .with_scorer(scorer)
        .with_index_filter(filter);
    let mut index = InvertedIndex::new(config)?;
    for v in docs {
        index.add_document(v)?;
    }
    save_snapshot(&index, &a.out)?;
    print_summary(&index, a.json, out)
}

pub fn cmd_search(a: &SearchArgs, out: &mut dyn Write) -> Result<()> {
    let mut problems = Problems::default();
    let page = problems.check(a.page.parse::<Page>());
    let best = problems.check(a.best.parse::<Best>());
    let params = page.and_then(|page| problems.check(SearchParams::new(a.k, page)));
    let filter = best.and_then(|best| problems.check(FilterConfig::new(a.trim, best)));
    problems.finish()?;
    let params = params.unwrap().excluding_self(a.exclude_self);
    let filter = filter.unwrap();

    let index = SharedIndex::new(load_snapshot(&a.snapshot)?);
    let query = {
        let guard = index.read();
        match (&a.vector, a.doc) {
            (Some(text), _) => {
                // Literal queries get an id no stored document can have.
                let q = parse_vector_literal(text, u64::MAX)?;
                if q.dim() != guard.dim() {
                    return Err(tokvec_core::Error::DimensionMismatch { expected: guard.dim(), found: q.dim() }.into());
                }
                q
            }
            (None, Some(id)) => guard
                .vector(id)
                .cloned()
                .ok_or_else(|| Error::Input(format!("document {id} is not in the index")))?,
            (None, None) => unreachable!("clap requires --doc or --vector"),
        }
    };
    let results = index.search(&query, &params, &filter)?;

    if a.json {
        serde_json::to_writer(&mut *out, &ResultRecord::from(&results))?;
        return writeln!(out).map_err(io_err);
    }
    if results.empty_query {
        return writeln!(out, "0 results (empty query after filtering)").map_err(io_err);
    }
    writeln!(
        out,
        "{} results  candidates {}  query features {}  engine {:.3} ms  total {:.3} ms",
        results.hits.len(),
        results.candidates,
        results.query_features,
        results.engine_secs * 1e3,
        results.total_secs * 1e3
    )
    .map_err(io_err)?;
    for (rank, hit) in results.hits.iter().enumerate() {
        writeln!(out, "{:>4}  doc {:>8}  sim {:.6}", rank + 1, hit.doc_id, hit.score).map_err(io_err)?;
    }
    Ok(())
}

fn parse_all<T: std::str::FromStr<Err = tokvec_core::Error>>(items: &[String], problems: &mut Problems) -> Vec<T> {
    items.iter().filter_map(|s| problems.check(s.parse())).collect()
}

/// Machine-readable report to `--out` (or stdout); the text table goes to
/// stdout when a file is written and to stderr otherwise.
fn emit<R: Serialize>(
    rows: &[R],
    table: String,
    json: bool,
    path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            if json {
                report::write_json_lines(&mut w, rows)?;
            } else {
                report::write_csv(&mut w, rows)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
            out.write_all(table.as_bytes()).map_err(io_err)
        }
        None => {
            err.write_all(table.as_bytes()).map_err(io_err)?;
            if json {
                report::write_json_lines(out, rows)
            } else {
                report::write_csv(out, rows)
            }
        }
    }
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut problems = Problems::default();
    let bests: Vec<Best> = parse_all(&a.best, &mut problems);
    let pages: Vec<Page> = parse_all(&a.page, &mut problems);
    let grid = match &a.preset {
        Some(name) => eval::quality_preset(name).unwrap_or_else(|| {
            problems.push(format!("unknown preset {name:?} (expected {})", eval::QUALITY_PRESETS.join(", ")));
            Vec::new()
        }),
        None if a.trim.is_empty() && a.best.is_empty() && a.page.is_empty() => Vec::new(),
        None => eval::quality_grid(
            if a.trim.is_empty() { &[0.0] } else { &a.trim },
            if bests.is_empty() { &[Best::All] } else { &bests },
            if pages.is_empty() { &[Page::All] } else { &pages },
        ),
    };
    if grid.is_empty() && problems.0.is_empty() {
        problems.push("empty grid");
    }
    for cell in &grid {
        problems.check(FilterConfig::new(cell.trim, cell.best));
        problems.check(SearchParams::new(a.k, cell.page));
    }
    if a.queries == 0 {
        problems.push("queries must be >= 1");
    }
    if a.parallel == 0 {
        problems.push("parallel must be >= 1");
    }
    problems.finish()?;

    let index = load_snapshot(&a.snapshot)?;
    let opts = QualityOptions {
        queries: a.queries,
        k: a.k,
        seed: a.seed,
        exclude_self: a.exclude_self,
        parallelism: a.parallel,
    };
    let report = eval::run_quality_grid(&index, &opts, &grid)?;
    emit(&report.rows, report::quality_table(&report), a.json, a.out.as_deref(), out, err)
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut problems = Problems::default();
    let pages: Vec<Page> = parse_all(&a.page, &mut problems);
    let best = problems.check(a.best.parse::<Best>());
    let grid = match &a.preset {
        Some(name) => eval::speed_preset(name).unwrap_or_else(|| {
            problems.push(format!("unknown preset {name:?} (expected {})", eval::SPEED_PRESETS.join(", ")));
            Vec::new()
        }),
        None if a.parallel.is_empty() && a.trim.is_empty() && a.page.is_empty() => Vec::new(),
        None => eval::speed_grid(
            if a.parallel.is_empty() { &[1] } else { &a.parallel },
            if a.trim.is_empty() { &[0.0] } else { &a.trim },
            if pages.is_empty() { &[Page::All] } else { &pages },
        ),
    };
    if grid.is_empty() && problems.0.is_empty() {
        problems.push("empty grid");
    }
    if let Some(best) = best {
        for cell in &grid {
            problems.check(FilterConfig::new(cell.trim, best));
            problems.check(SearchParams::new(a.k, cell.page));
            if cell.parallelism == 0 {
                problems.push("parallel must be >= 1");
            }
        }
    }
    if a.batch == 0 {
        problems.push("batch must be >= 1");
    }
    problems.finish()?;

    let index = load_snapshot(&a.snapshot)?;
    let opts = SpeedOptions { batch: a.batch, k: a.k, best: best.unwrap(), seed: a.seed };
    let report = eval::run_speed_grid(&index, &opts, &grid)?;
    emit(&report.rows, report::speed_table(&report), a.json, a.out.as_deref(), out, err)
}

pub fn cmd_snapshot_info(a: &InfoArgs, out: &mut dyn Write) -> Result<()> {
    let index = load_snapshot(&a.snapshot)?;
    print_summary(&index, a.json, out)
}
