//! Utterance segmentation and target-based speech act classification for
//! political campaign text.
//!
//! The crate covers the full pipeline: corpus handling, feature
//! extraction, a small reverse-mode autodiff core with GRU layers,
//! supervised and cross-view semi-supervised classifiers, a linear-chain
//! CRF segmenter, evaluation and agreement statistics, and the
//! multi-run experiment protocol.

pub mod classify;
pub mod corpus;
pub mod cvt;
pub mod embeddings;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod segment;
pub mod synthetic;
pub mod tensor;
pub mod textfeat;

pub use error::{Error, Result};
