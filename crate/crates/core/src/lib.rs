//! Content-based image retrieval: feature extraction, similarity metrics,
//! a normalized feature index, precision/recall evaluation and relevance
//! feedback.

pub mod color;
pub mod error;
pub mod eval;
pub mod feedback;
pub mod image;
pub mod index;
pub mod io;
pub mod metrics;
pub mod shape;
pub mod signature;
pub mod synth;
pub mod texture;

pub use crate::error::{Error, Result};
pub use crate::image::{Channels, Histogram, Image};
pub use crate::index::{
    build_index, load_index, save_index, FeatureQuery, Hit, IndexEntry, IndexStore, Normalization,
    QueryOptions, RankedResults,
};
pub use crate::io::load_image;
pub use crate::metrics::{BlockLayout, Direction, Metric};
pub use crate::signature::{extract_signature, ExtractionConfig, Signature, SignatureFlag};
pub use crate::eval::{evaluate_corpus, EvalCounts, EvalReport, GroundTruth, PrPoint};
pub use crate::feedback::{FeedbackSession, Label, RocchioParams};
