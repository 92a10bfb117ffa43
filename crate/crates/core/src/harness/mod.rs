//! Experiment configuration, Monte Carlo drivers, theory bounds and CSV output.

pub mod config;
pub mod experiments;
pub mod pipeline;
pub mod table;
pub mod theory;

pub use config::{DensitySpec, ExperimentConfig, ExperimentKind, ForwardModel, SparsitySpec};
pub use experiments::{mc_coherence, mc_dt, mc_recovery, mc_stability, reciprocity, resonance, run};
pub use table::Table;
pub use theory::{theory_bounds, TheoryReport};
