//! Learning on Random Hierarchy Model data without iterative training: the
//! closed-form one-step representation, k-means, and the layerwise
//! clustering solver.

pub mod kmeans;
pub mod layerwise;
pub mod onestep;
pub mod recovery;

pub use kmeans::{kmeans, ClusterAssignment, KMeansConfig};
pub use layerwise::{layerwise_solve, LayerwiseConfig, LayerwiseModel, LayerwiseOutcome, LevelReport};
pub use onestep::{g_vectors, onestep_sensitivity, onestep_update, tuple_distances, GTable, HiddenUpdate};
pub use recovery::{synonym_recovery_score, true_clusters};
