//! Random Hierarchy Model: synthetic hierarchical classification tasks built
//! from random context-free composition rules, with exact data statistics and
//! a model-agnostic synonym-sensitivity estimator.

pub mod count;
pub mod dataset;
pub mod encode;
pub mod error;
pub mod hfm;
pub mod instance;
pub mod io;
pub mod params;
pub mod rng;
pub mod rule;
pub mod sensitivity;
pub mod stats;
pub mod theory;
pub mod tuple;

pub use count::Count;
pub use dataset::{ChoicePath, Dataset, Datum};
pub use error::{Result, RhmError};
pub use hfm::build_hfm_instance;
pub use instance::RhmInstance;
pub use params::ModelParams;
pub use rule::CompositionRule;
pub use theory::{theory_quantities, TheoryReport};
pub use sensitivity::{
    sensitivity_matrix, synonymic_sensitivity, Sensitivity, SensitivityConfig, SensitivityReport,
};
