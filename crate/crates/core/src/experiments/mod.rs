//! Configuration, Monte-Carlo orchestration and CSV output of sweeps.

pub mod config;
pub mod runner;

pub use config::{parse_scheme_list, ExperimentConfig, Scheme, SweepAxis, SweepSpec};
pub use runner::{
    run_scheme, run_sweep, run_trial, trial_seed, write_summary_csv, write_summary_file, write_trace_csv, write_traces,
    SchemeResult, SummaryRow, SweepOutput, TrialMetrics, TrialOutcome, TrialRecord, CSV_HEADER,
};
