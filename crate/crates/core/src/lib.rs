//! Consensus selection over sampled LLM responses.
//!
//! Everything here is pure computation over in-memory values: embedding
//! pooling, cosine similarity, the exponentially-weighted and dynamic
//! top-K selectors, the exact-match and unigram-overlap baselines, the
//! supervised contrastive objective for summary-token training, dataset
//! curation, calibration metrics and a synthetic cluster benchmark.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the HTTP judge client live in the `consensus-select` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod answer;
pub mod bench;
pub mod curation;
mod error;
pub mod geometry;
pub mod metrics;
pub mod scl;
pub mod selection;
pub mod text;
pub mod usc;
pub mod vote;
pub mod wucs;

pub use answer::{extract_answer, ExtractedAnswer};
pub use error::{Error, Result};
pub use geometry::{cosine_similarity_matrix, mean_pool_normalize, Embedding, SimilarityMatrix, TokenStates};
pub use selection::{Method, SelectionConfig, SelectionResult, TieBreak};
