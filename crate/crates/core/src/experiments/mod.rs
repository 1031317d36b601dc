//! The three experiments and replicate aggregation.

pub mod aggregate;
pub mod detect;
pub mod empathy;
pub mod foster;

pub use aggregate::{aggregate_replicates, Summary};
pub use detect::{
    run_detection_experiment, DetectConfig, DetectReplicate, DetectResult, TableCounting,
};
pub use empathy::{
    run_empathy_experiment, Arm, ArmOutcome, ArmSummary, EmpathyConfig, EmpathyResult,
};
pub use foster::{
    run_foster_experiment, FosterConfig, FosterMetrics, FosterReplicate, FosterResult, ModeSummary,
};
