//! Closed-loop palpation experiments: probe, register, fit, choose, repeat.

mod config;
mod metrics;
mod output;
mod runner;

pub use config::{ExperimentConfig, RegistrationSeeds, Strategy};
pub use metrics::{map_rmse, pearson_correlation, top_decile_mask, top_decile_rmse};
pub use output::{write_ground_truth, write_outputs, write_pgm};
pub use runner::{
    compare_strategies, ground_truth_map, run_experiment, uniform_lattice, Comparison,
    ComparisonSummary, CycleRecord, ExperimentOutcome, ExperimentReport, GroundTruthMap,
    ProbeRecord,
};
