//! Graded lexical semantic change scores from contextual usage embeddings.
//!
//! A word's usages in two time periods are two sets of vectors. This crate
//! compares them with average pairwise distance (APD), prototype distance
//! (PRT), average minimum distance (AMD, directional and symmetric) and
//! matched minimum distance over one-to-one pairings (SAMD), in the original
//! space or in reduced spaces (definition distances, per-word PCA, random
//! coordinates). Scores are evaluated against gold rankings with Spearman
//! correlation; hubness and asymmetry reports help interpret them.

pub mod assignment;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod hubness;
pub mod interpret;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod spaces;
pub mod synth;

pub use corpus::{
    ChangeScoreTable, DefinitionSet, EmbeddingStore, GoldScores, Period, StoreManifest,
    UsageEmbeddingSet,
};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::Metric;
pub use spaces::{SpaceConfig, SpaceKind};
