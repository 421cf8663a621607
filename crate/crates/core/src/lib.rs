//! Semantic difference detection from norms of mean word vectors.
//!
//! Words whose contextualized vectors spread over many meanings have short
//! mean vectors; words used in one fixed sense have mean vectors close to
//! unit length. Comparing mean norms of the same word type in two corpora
//! under a von Mises–Fisher model ranks the types whose usage differs, and
//! scoring individual instances against both means pulls out the contexts
//! responsible.
//!
//! The pipeline:
//!
//! 1. [`embstore`] reads embedding streams produced by any embedder.
//! 2. [`aggregate`] computes per-type counts, mean vectors and mean norms.
//! 3. [`detect`] ranks shared word types by coverage.
//! 4. [`instances`] ranks one word's instances by representativeness.
//! 5. [`stability`] shows how mean norms settle with frequency.
//!
//! [`simulate`] produces vMF-sampled corpus pairs with known ground truth.

pub mod aggregate;
pub mod detect;
pub mod embstore;
pub mod error;
pub mod instances;
pub mod report;
pub mod simulate;
pub mod stability;
pub mod vmf;

pub use aggregate::{accumulate, CorpusStats, TypeStats};
pub use detect::{detect, DetectOptions, ScoredType};
pub use embstore::{Format, InstanceRecord, StreamHeader, StreamReader};
pub use error::{Error, Result};
pub use instances::{typical_instances, Direction, InstanceQuery, ScoredInstance, WordInstances};
pub use stability::{stability_curve, StabilityCurve};
pub use vmf::{coverage, CoveragePair, LogBase, VmfParams};
