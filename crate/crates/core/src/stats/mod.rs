//! Occurrence statistics of instances: exact and empirical counts,
//! conditional class frequencies, closed-form moments over the random rules
//! and their Monte Carlo counterparts.

pub mod counts;
pub mod moments;
pub mod monte_carlo;
pub mod noise;

pub use counts::{
    conditional_frequencies, empirical_counts, empirical_feature_counts, exact_feature_counts,
    exact_tuple_counts, CountKind, FrequencyTable, OccurrenceTable, Resolution,
};
pub use moments::{level_moments, rule_moments, LevelMoments, RuleMoments};
pub use monte_carlo::{monte_carlo_moments, Ensemble, MonteCarloMoments};
pub use noise::{noise_scaling_probe, NoisePoint, NoiseProbe, SamplingScheme};
