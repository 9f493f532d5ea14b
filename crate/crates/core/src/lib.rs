//! Dense-vector search through a feature-token inverted index.
//!
//! Every vector feature is quantized and rendered as a short alphanumeric
//! token (`2P2i0d07`, `1I10ineg0d2`, ...). Documents are indexed by those
//! tokens, a query's tokens retrieve a candidate page through BM25-style
//! postings scoring, and the page is re-ranked by exact cosine similarity.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, snapshots,
//! parallel batch execution and the benchmark harness live in the `tokvec`
//! companion crate.
//!
//! ```
//! use tokvec_core::{encoder, EncodingConfig};
//!
//! let w = [0.12, -0.13, 0.065];
//! let cfg: EncodingConfig = "P2".parse().unwrap();
//! let tokens = encoder::encode(&w, &cfg);
//! let text: Vec<&str> = tokens.iter().map(|t| t.as_str()).collect();
//! assert_eq!(text, ["0P2i0d12", "1P2ineg0d13", "2P2i0d07"]);
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod config;
pub mod encoder;
mod error;
pub mod index;
pub mod metrics;
pub mod search;
pub mod vector;

pub use config::{Best, EncodingConfig, FilterConfig, Interval, Page, Precision, Scorer, SearchParams};
pub use encoder::{EncodedDocument, FeatureToken};
pub use error::{Error, Result};
pub use index::{IndexConfig, IndexShard, InvertedIndex, PostingsList, SearchHit};
pub use search::{naive_search, two_phase_search, two_phase_search_timed, Clock, NoClock, RankedResults};
pub use vector::{cosine, normalize, DenseVector, DocId};
