//! Threshold estimation, named property checks and the experiment runner
//! behind the command-line tool.

mod checks;
mod config;
mod crossing;
mod output;
mod threshold;

pub use checks::{
    cluster_constant, event_stability, lemma_check, overlap_scaling, EventStability, LemmaReport,
    OverlapScaling, CHECK_IDS,
};
pub use config::{BranchingSection, ExperimentConfig, RenormSection, RunMode};
pub use crossing::{crossing_probability, crossing_trials, CrossingEstimate, TrialRow};
pub use output::{lattice_field, run_experiment, RunOutcome};
pub use threshold::{
    estimate_nc, half_crossing, isotonic, monotonicity_defect, NcRequest, Probe, ThresholdEstimate,
};
