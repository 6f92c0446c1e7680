//! Sample prioritization for model-repair datasets.
//!
//! Given per-sample embeddings (and optionally per-sample difficulty scores),
//! the selection strategies pick a fraction `alpha` of the data to repair
//! with. The boundary-aware strategy reduces embeddings with PCA, clusters
//! them with k-means, and keeps the members farthest from each centroid.
//! The [`metrics`] module scores the resulting repairs from externally
//! measured toxicity and perplexity.

pub mod cluster;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod select;

pub use error::{Error, Result};
