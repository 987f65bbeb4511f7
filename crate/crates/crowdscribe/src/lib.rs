//! Tools for working with crowdsourced transcriptions: canonical text
//! normalization, sequence metrics (edit distance, WER, GLEU), aggregation
//! of noisy responses (random, oracle, word-transition-network voting, and
//! reliability-weighted embedding selection), Krippendorff's alpha with a
//! sampling estimator, a deterministic quality-controlled annotation-
//! pipeline simulator, and TSV dataset I/O.
//!
//! The companion `crowdscribe` binary exposes all of it as reproducible,
//! seeded commands.

#![forbid(unsafe_code)]

pub mod aggregate;
pub mod agreement;
pub mod dataio;
pub mod error;
pub mod kvfile;
pub mod metrics;
pub mod qcsim;
pub mod textnorm;

pub use error::{Error, Result};
