//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::Rng;
use rand_distr::StandardNormal;
use tokvec::eval::{self, QualityOptions, QualityReport, QualityRow, SpeedOptions};
use tokvec::snapshot::{from_bytes, to_bytes};
use tokvec::synth::{self, ClusterSpec};
use tokvec_core::encoder::{
    apply_best, apply_trim, encode, encode_interval, encode_rounding, filter_encode, ParsedToken, TokenScheme,
};
use tokvec_core::metrics::{avg_diff_at_k, ndcg_at_k, precision_at_k};
use tokvec_core::{
    naive_search, two_phase_search, Best, DenseVector, EncodingConfig, FeatureToken, FilterConfig, IndexConfig,
    Interval, InvertedIndex, Page, Precision, SearchHit, SearchParams,
};

const W: [f64; 3] = [0.12, -0.13, 0.065];

/// Clustered desk-scale dataset shared by criteria 3 to 5.
const CLUSTERED: ClusterSpec = ClusterSpec { dims: 400, docs: 10_000, clusters: 100, sigma: 0.3, seed: 2024 };
const QUALITY_QUERIES: usize = 100;
const QUALITY_SEED: u64 = 7;
const PAGES: [usize; 4] = [20, 80, 320, 640];

/// Regression values from the first baseline run of criterion 4: avg
/// Precision@10 and avg diff at trim 0, keyed by (best, page).
const FROZEN: [(Best, usize, f64, f64); 5] = [
    (Best::All, 640, 1.0, 0.0),
    (Best::Top(320), 640, 1.0, 0.0),
    (Best::Top(6), 640, 1.0, 0.0),
    (Best::All, 80, P80_ALL, D80_ALL),
    (Best::Top(6), 80, P80_BEST6, D80_BEST6),
];
const P80_ALL: f64 = 0.940;
const D80_ALL: f64 = 0.000084;
const P80_BEST6: f64 = 0.822;
const D80_BEST6: f64 = 0.000418;
const FROZEN_TOLERANCE: f64 = 0.02;
const FROZEN_DIFF_TOLERANCE: f64 = 2e-5;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn set(tokens: &[FeatureToken]) -> BTreeSet<String> {
    tokens.iter().map(|t| t.as_str().to_string()).collect()
}

fn strs(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn golden_tokens() -> Check {
    let cases = [
        (EncodingConfig::rounding(2).unwrap(), strs(&["0P2i0d12", "1P2ineg0d13", "2P2i0d07"])),
        (EncodingConfig::interval(10).unwrap(), strs(&["0I10i0d1", "1I10ineg0d2", "2I10i0d0"])),
        (
            EncodingConfig::combined(3, 5).unwrap(),
            strs(&["0P3i0d120", "1P3ineg0d130", "2P3i0d065", "0I5i0d0", "1I5ineg0d2", "2I5i0d0"]),
        ),
    ];
    for (cfg, expected) in &cases {
        let got = set(&encode(&W, cfg));
        ensure(&got == expected, || format!("{cfg}: got {got:?}"))?;
    }
    ensure(apply_trim(&W, 0.1) == [0, 1], || "trim=0.1 must drop only feature 2".into())?;
    ensure(apply_best(&W, 1) == [1], || "best=1 must keep only feature 1".into())?;
    Ok("P2, I10, P3+I5, trim=0.1, best=1".into())
}

fn random_unit(rng: &mut impl Rng, id: u64, dims: usize) -> DenseVector {
    loop {
        let v: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(d) = DenseVector::new(id, v) {
            return d;
        }
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = synth::rng(31);
    let mut index = InvertedIndex::new(IndexConfig::new(50, EncodingConfig::default())).unwrap();
    for id in 0..1000 {
        index.add_document(random_unit(&mut rng, id, 50)).unwrap();
    }
    let params = SearchParams::new(10, Page::All).unwrap();
    let start = Instant::now();
    for qi in 0..100 {
        let q = random_unit(&mut rng, 1_000_000 + qi, 50);
        let two = two_phase_search(&index, &q, &params, &FilterConfig::NONE).map_err(|e| e.to_string())?;
        let naive = naive_search(&index, &q, 10, false).map_err(|e| e.to_string())?;
        ensure(two.doc_ids() == naive.doc_ids(), || {
            format!("query {qi}: {:?} vs {:?}", two.doc_ids(), naive.doc_ids())
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("100/100 queries identical, {secs:.2} s"))
}

fn clustered_index() -> InvertedIndex {
    let rows = synth::clustered(&CLUSTERED).unwrap();
    let cfg = IndexConfig::new(CLUSTERED.dims, EncodingConfig::default());
    let mut index = InvertedIndex::new(cfg).unwrap();
    for (i, r) in rows.into_iter().enumerate() {
        index.add_document(DenseVector::new(i as u64, r.into_iter().map(f64::from).collect()).unwrap()).unwrap();
    }
    index
}

fn quality(index: &InvertedIndex, trims: &[f64], bests: &[Best], pages: &[usize]) -> QualityReport {
    let opts = QualityOptions {
        queries: QUALITY_QUERIES,
        k: 10,
        seed: QUALITY_SEED,
        exclude_self: false,
        parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pages: Vec<Page> = pages.iter().map(|&p| Page::Size(p)).collect();
    let grid = eval::quality_grid(trims, bests, &pages);
    eval::run_quality_grid(index, &opts, &grid).unwrap()
}

fn monotonicity(index: &InvertedIndex) -> Check {
    let trims = [0.0, 0.05, 0.10];
    let bests = [Best::All, Best::Top(90)];
    let report = quality(index, &trims, &bests, &PAGES);
    let mut violations = Vec::new();
    for &trim in &trims {
        for &best in &bests {
            let rows: Vec<&QualityRow> = report.rows.iter().filter(|r| r.trim == trim && r.best == best).collect();
            for pair in rows.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if b.avg_precision < a.avg_precision {
                    violations.push(format!("trim={trim} best={best}: P@10 {} -> {}", a.avg_precision, b.avg_precision));
                }
                if b.avg_diff > a.avg_diff {
                    violations.push(format!("trim={trim} best={best}: avg diff {} -> {}", a.avg_diff, b.avg_diff));
                }
            }
        }
    }
    ensure(violations.is_empty(), || violations.join("; "))?;
    let curve: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.trim == 0.0 && r.best == Best::All)
        .map(|r| format!("{:.3}/{:.4}", r.avg_precision, r.avg_diff))
        .collect();
    Ok(format!("{} filters x pages {PAGES:?}, 0 violations; trim=0 P@10/diff {}", trims.len() * bests.len(), curve.join(" ")))
}

fn filter_robustness(index: &InvertedIndex) -> Check {
    let report = quality(index, &[0.0], &[Best::All, Best::Top(320), Best::Top(6)], &[80, 640]);
    let row = |b: Best, p: usize| report.rows.iter().find(|r| r.best == b && r.page == Page::Size(p)).unwrap();
    let (all, b320, b6) = (row(Best::All, 640), row(Best::Top(320), 640), row(Best::Top(6), 640));
    let (all80, b6_80) = (row(Best::All, 80), row(Best::Top(6), 80));
    let summary = format!(
        "page 640: P@10 all={:.4} best320={:.4}, avg diff all={:.6} best6={:.6}; page 80: avg diff all={:.6} best6={:.6}",
        all.avg_precision, b320.avg_precision, all.avg_diff, b6.avg_diff, all80.avg_diff, b6_80.avg_diff
    );
    ensure((all.avg_precision - b320.avg_precision).abs() <= 0.05, || summary.clone())?;
    ensure(b6.avg_diff >= 2.0 * all.avg_diff, || summary.clone())?;
    // Page 640 covers a whole cluster on this dataset, so both diffs there
    // are zero; page 80 is where the best=6 degradation is observable.
    ensure(b6_80.avg_diff > 0.0 && b6_80.avg_diff >= 2.0 * all80.avg_diff, || summary.clone())?;
    for (best, page, p, d) in FROZEN {
        let r = row(best, page);
        ensure(
            (r.avg_precision - p).abs() <= FROZEN_TOLERANCE && (r.avg_diff - d).abs() <= FROZEN_DIFF_TOLERANCE,
            || format!("best={best} page={page} drifted from frozen P@10 {p}, avg diff {d}: {summary}"),
        )?;
    }
    Ok(summary)
}

fn speed_direction(index: &InvertedIndex) -> Check {
    let opts = SpeedOptions { batch: 128, k: 10, best: Best::All, seed: 3 };
    let grid = eval::speed_grid(&[1], &[0.0, 0.05, 0.10], &[Page::Size(80)]);
    let start = Instant::now();
    // Warm caches once so the first measured cell is not penalized.
    eval::run_speed_grid(index, &opts, &grid[..1]).map_err(|e| e.to_string())?;
    let report = eval::run_speed_grid(index, &opts, &grid).map_err(|e| e.to_string())?;
    let totals: Vec<f64> = report.rows.iter().map(|r| r.total_s).collect();
    let sizes: Vec<f64> = report.rows.iter().map(|r| r.vec_size_avg).collect();
    let summary = format!("total s {totals:?}, vec size {sizes:?}");
    ensure(totals.windows(2).all(|w| w[1] < w[0]), || summary.clone())?;
    ensure(sizes[0] == 400.0 && sizes.windows(2).all(|w| w[1] < w[0]), || summary.clone())?;
    ensure(report.rows.iter().all(|r| r.failed == 0), || summary.clone())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(summary)
}

fn hits(items: &[(u64, f64)]) -> Vec<SearchHit> {
    items.iter().map(|&(id, s)| SearchHit::new(id, s)).collect()
}

/// Hand-computed metric fixtures standing in for the full-scale tables.
fn metric_fixtures(prior: &[bool]) -> Check {
    let gold = hits(&[(1, 0.9), (2, 0.8), (3, 0.7)]);
    let result = hits(&[(2, 0.8), (9, 0.75), (1, 0.9)]);
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    ensure(close(precision_at_k(&result, &gold, 3), 2.0 / 3.0), || "precision fixture".into())?;
    let l3 = 3f64.log2();
    let dcg_r = 0.8 + 0.75 / l3 + 0.9 / 2.0;
    let dcg_g = 0.9 + 0.8 / l3 + 0.7 / 2.0;
    ensure(close(ndcg_at_k(&result, &gold, 3).value, dcg_r / dcg_g), || "nDCG fixture".into())?;
    ensure(close(avg_diff_at_k(&result, &gold, 3), (0.1 + 0.05 - 0.2) / 3.0), || "avg diff fixture".into())?;
    ensure(close(ndcg_at_k(&hits(&[(2, 0.5), (1, 1.0)]), &hits(&[(1, 1.0), (2, 0.5)]), 2).value, 0.859_718_699_852_197_2), || {
        "swap fixture".into()
    })?;
    ensure(prior.iter().all(|&p| p), || "a replacement criterion (2 to 5) failed".into())?;
    Ok("full-scale tables replaced by criteria 2-5 and metric fixtures (1e-9)".into())
}

fn runner(seed: u8) -> TestRunner {
    let config = Config { cases: 1000, failure_persistence: None, rng_algorithm: RngAlgorithm::ChaCha, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn grid_rows(dims: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec((-10i32..=10).prop_map(|x| f64::from(x) * 0.1), dims)
            .prop_filter("non-zero", |r| r.iter().any(|&x| x != 0.0)),
        1..16,
    )
}

fn build(rows: &[Vec<f64>], shards: usize) -> InvertedIndex {
    let mut index =
        InvertedIndex::new(IndexConfig::new(rows[0].len(), EncodingConfig::combined(1, 5).unwrap()).with_shards(shards))
            .unwrap();
    for (i, r) in rows.iter().enumerate() {
        index.add_document(DenseVector::new(i as u64 * 5 + 2, r.clone()).unwrap()).unwrap();
    }
    index
}

fn property_suites() -> Check {
    let mut passed = Vec::new();
    let mut run = |name: &str, result: std::result::Result<(), String>| {
        result.map(|()| passed.push(name.to_string())).map_err(|e| format!("{name}: {e}"))
    };

    run(
        "grammar round trip",
        runner(1)
            .run(&(prop::collection::vec(-1.0f64..=1.0, 1..12), 1u32..=4, prop::sample::select(vec![1u32, 2, 4, 5, 10, 20, 25, 100])), |(v, p, w)| {
                for (i, t) in encode_rounding(&v, Precision::new(p).unwrap()).iter().enumerate() {
                    let parsed = ParsedToken::parse(t.as_str()).unwrap();
                    prop_assert_eq!((parsed.feature, parsed.scheme), (i, TokenScheme::Rounding(p)));
                    let scale = 10f64.powi(p as i32);
                    prop_assert!((parsed.value.to_f64() - v[i]).abs() <= 0.5 / scale + 1e-12);
                    prop_assert_eq!(parsed.value.to_string().len(), t.as_str().len() - t.as_str().find('i').unwrap() - 1);
                }
                for (i, t) in encode_interval(&v, Interval::new(w).unwrap()).iter().enumerate() {
                    let parsed = ParsedToken::parse(t.as_str()).unwrap();
                    prop_assert_eq!((parsed.feature, parsed.scheme), (i, TokenScheme::Interval(w)));
                    let start = parsed.value.to_f64();
                    prop_assert!(start <= v[i] + 1e-9 && v[i] < start + 1.0 / f64::from(w) + 1e-9);
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "quantization coarsening",
        runner(2)
            .run(&(prop::collection::vec((-40i32..40, 0.0f64..0.999, 0.0f64..0.999), 1..12), prop::sample::select(vec![2u32, 4, 5, 10, 20])), |(cells, w)| {
                let wf = f64::from(w);
                let u: Vec<f64> = cells.iter().map(|&(b, f, _)| (f64::from(b % w as i32) + f) / wf).collect();
                let v: Vec<f64> = cells.iter().map(|&(b, _, g)| (f64::from(b % w as i32) + g) / wf).collect();
                prop_assume!(u.iter().zip(&v).all(|(a, b)| (a * wf).floor() == (b * wf).floor()));
                let interval = Interval::new(w).unwrap();
                prop_assert_eq!(encode_interval(&u, interval), encode_interval(&v, interval));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "shard transparency",
        runner(3)
            .run(&(grid_rows(4), 2usize..6, 1usize..20, 0usize..16, 0.0f64..0.5), |(rows, shards, page, qi, trim)| {
                let (one, many) = (build(&rows, 1), build(&rows, shards));
                let tokens = filter_encode(&rows[qi % rows.len()], &FilterConfig::trim(trim).unwrap(), one.encoding());
                let (a, b) = (one.phase1_query(&tokens, Page::Size(page)), many.phase1_query(&tokens, Page::Size(page)));
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!(x.doc_id == y.doc_id && (x.score - y.score).abs() < 1e-9);
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "postings consistency",
        runner(4)
            .run(&(grid_rows(4), 1usize..5, prop::collection::vec(0usize..16, 0..6)), |(rows, shards, dels)| {
                let mut index = build(&rows, shards);
                for d in dels {
                    index.delete_document(d as u64 * 5 + 2);
                }
                let df_sum: usize = index.shards().iter().flat_map(|s| s.sorted_postings()).map(|(_, p)| p.df()).sum();
                let tokens: usize = index.vectors().map(|v| encode(v.values(), index.encoding()).len()).sum();
                prop_assert_eq!(df_sum, tokens);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "page prefix",
        runner(5)
            .run(&(grid_rows(4), 1usize..12, 1usize..12, 0usize..16), |(rows, p, extra, qi)| {
                let index = build(&rows, 2);
                let tokens = encode(&rows[qi % rows.len()], index.encoding());
                let small = index.phase1_query(&tokens, Page::Size(p));
                let large = index.phase1_query(&tokens, Page::Size(p + extra));
                prop_assert_eq!(&large[..small.len()], &small[..]);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "deletion invisibility",
        runner(6)
            .run(&(grid_rows(4), prop::collection::vec(0usize..16, 1..6)), |(rows, victims)| {
                let mut index = build(&rows, 3);
                let victims: Vec<u64> = victims.into_iter().map(|v| (v % rows.len()) as u64 * 5 + 2).collect();
                for &v in &victims {
                    index.delete_document(v);
                }
                let params = SearchParams::new(1, Page::All).unwrap();
                for r in &rows {
                    prop_assert!(index.phase1_query(&encode(r, index.encoding()), Page::All).iter().all(|h| !victims.contains(&h.doc_id)));
                    let q = DenseVector::new(u64::MAX, r.clone()).unwrap();
                    let two = two_phase_search(&index, &q, &params, &FilterConfig::NONE).unwrap();
                    prop_assert!(two.hits.iter().all(|h| !victims.contains(&h.doc_id)));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    run(
        "snapshot round trip",
        runner(7)
            .run(&(grid_rows(4), 1usize..4, prop::collection::vec(0usize..16, 0..4)), |(rows, shards, dels)| {
                let mut index = build(&rows, shards);
                for d in dels {
                    index.delete_document(d as u64 * 5 + 2);
                }
                let bytes = to_bytes(&index);
                let loaded = from_bytes(&bytes).unwrap();
                prop_assert_eq!(to_bytes(&loaded), bytes);
                for r in &rows {
                    let tokens = encode(r, index.encoding());
                    prop_assert_eq!(index.phase1_query(&tokens, Page::All), loaded.phase1_query(&tokens, Page::All));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    )?;

    Ok(format!("{} suites x 1000 cases: {}", passed.len(), passed.join(", ")))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    })
}

fn report(n: usize, name: &str, outcome: &Check) -> bool {
    match outcome {
        Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
        Err(why) => println!("criterion {n} {name}: FAIL ({why})"),
    }
    outcome.is_ok()
}

fn main() {
    // Let the libtest-style filter arguments pass through harmlessly.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut ok = Vec::new();
    ok.push(report(1, "golden tokens", &guarded(golden_tokens)));
    ok.push(report(2, "oracle equivalence", &guarded(oracle_equivalence)));

    let start = Instant::now();
    let index = clustered_index();
    println!(
        "clustered dataset: {} docs x {} dims, {} tokens, built in {:.1} s",
        index.len(),
        index.dim(),
        index.total_tokens(),
        start.elapsed().as_secs_f64()
    );
    ok.push(report(3, "page-size monotonicity", &guarded(|| monotonicity(&index))));
    ok.push(report(4, "filter robustness", &guarded(|| filter_robustness(&index))));
    ok.push(report(5, "speed direction", &guarded(|| speed_direction(&index))));
    let prior = ok[1..5].to_vec();
    ok.push(report(6, "full-scale replacement", &guarded(|| metric_fixtures(&prior))));
    ok.push(report(7, "property suites", &guarded(property_suites)));

    let passed = ok.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
