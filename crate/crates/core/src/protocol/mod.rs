//! Simulated local randomized-measurement experiment.
//!
//! Each setting draws Haar-random `U_A`, `U_B`, samples computational-basis
//! outcomes from `p(i, j | U) = ⟨ij| U† ρ U |ij⟩` and scores every unordered
//! triple of shots by its equality-pattern class.

mod classes;
mod estimator;
mod haar;
mod twirl;

pub use classes::{classify_pair_patterns, classify_triple, LocalPattern, OutcomeTriple, PatternClass, NUM_CLASSES};
pub use estimator::{
    binomial3, derive_setting_seed, estimate_setting, run_protocol, run_protocol_summary, setting_rng,
    CorrelatorAccumulator, CorrelatorVector, ProtocolConfig, ProtocolRun, ProtocolSummary, SettingRecord,
};
pub use haar::{outcome_distribution, sample_haar_unitary, sample_setting, UnitarySetting};
pub use twirl::{expected_correlators, TWIRL_MAX_DIM};
