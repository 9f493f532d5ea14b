//! Output formats: per-query JSON records, CSV and JSON-lines reports, and
//! aligned text tables.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use tokvec_core::{DocId, RankedResults};

use crate::error::Result;
use crate::eval::{QualityReport, SpeedReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub doc: DocId,
    pub sim: f64,
}

/// One query's outcome as a JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub query_id: DocId,
    pub hits: Vec<HitRecord>,
    pub candidates: usize,
    pub engine_ms: f64,
    pub total_ms: f64,
}

impl From<&RankedResults> for ResultRecord {
    fn from(r: &RankedResults) -> Self {
        Self {
            query_id: r.query_id,
            hits: r.hits.iter().map(|h| HitRecord { doc: h.doc_id, sim: h.score }).collect(),
            candidates: r.candidates,
            engine_ms: r.engine_secs * 1e3,
            total_ms: r.total_secs * 1e3,
        }
    }
}

pub fn write_csv<R: Serialize>(w: impl Write, rows: &[R]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_json_lines<R: Serialize>(mut w: impl Write, rows: &[R]) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(serde_json::Error::io)?;
    }
    Ok(())
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  "));
    };
    line(&mut out, &mut header.iter().copied());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in rows {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}

pub fn quality_table(report: &QualityReport) -> String {
    let k = report.k;
    let header = [
        "trim".to_string(),
        "best".into(),
        "page".into(),
        format!("min P@{k}"),
        format!("avg P@{k}"),
        format!("max P@{k}"),
        format!("nDCG@{k}"),
        "avg diff".into(),
        "empty".into(),
    ];
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut page = r.page.to_string();
            if r.degenerate {
                page.push_str(" !");
            }
            vec![
                format!("{:.2}", r.trim),
                r.best.to_string(),
                page,
                format!("{:.1}", r.min_precision),
                format!("{:.4}", r.avg_precision),
                format!("{:.1}", r.max_precision),
                format!("{:.4}", r.ndcg),
                format!("{:.4}", r.avg_diff),
                r.empty_queries.to_string(),
            ]
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    table(&header, &rows)
}

pub fn speed_table(report: &SpeedReport) -> String {
    let header = [
        "parallel", "trim", "page", "engine avg", "engine std", "request avg", "request std", "total",
        "vec avg", "vec std",
    ];
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.parallelism.to_string(),
                format!("{:.2}", r.trim),
                r.page.to_string(),
                format!("{:.6}", r.engine_avg_s),
                format!("{:.6}", r.engine_std_s),
                format!("{:.6}", r.request_avg_s),
                format!("{:.6}", r.request_std_s),
                format!("{:.6}", r.total_s),
                format!("{:.4}", r.vec_size_avg),
                format!("{:.4}", r.vec_size_std),
            ]
        })
        .collect();
    table(&header, &rows)
}
