//! DataTailor: coreset selection for multimodal instruction data.
//!
//! Each sample carries a token-level feature matrix. Samples are scored by
//! the entropy of that matrix's singular values, by their distance to
//! neighbours in a Ward cluster, and by how well their cluster aligns with the
//! rest of the task. The three scores are blended by conversation round count
//! and every task receives a budget proportional to its difficulty.

pub mod clustering;
pub mod container;
pub mod dataset;
pub mod error;
pub mod selection;
pub mod spectral;
pub mod synth;
pub mod valuation;

pub use clustering::{ClusterSet, Dendrogram, Merge, WardVariant};
pub use container::{load_container, write_container};
pub use dataset::{validate, Dataset, FeatureMatrix, Sample, ValidationReport};
pub use error::{Error, Result};
pub use selection::{
    evaluate_subset, score, select, PrincipleMetrics, ScoredSample, Scores, SelectionConfig, SelectionResult,
    TaskClusters, TaskPlan, Threads,
};
pub use spectral::SingularSpectrum;
pub use valuation::UniquenessAggregation;
