//! Distant-supervision dataset builder for targeted sentiment classification.

pub mod annotator;
pub mod dedup;
pub mod entities;
pub mod error;
pub mod ingest;
pub mod label;
pub mod lexicon;
pub mod matching;
pub mod pipeline;
pub mod metrics;
pub mod sampler;
pub mod synth;

pub use error::{Error, Result};
pub use label::Label;
