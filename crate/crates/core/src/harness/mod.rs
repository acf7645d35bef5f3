//! Config loading, experiment runs and report files.

pub mod config;
pub mod report;
pub mod run;

pub use config::{
    BoundOverrides, DeviceSpec, EnsembleSpec, Experiment, ExperimentConfig, GateSpec, TargetSpec, VarianceMode,
};
pub use report::{
    write_batches_csv, write_plan_outputs, write_run_outputs, EstimatorRecord, OracleReport, RunReport,
    ShotCounters, Timing, WitnessEstimate,
};
pub use run::{
    run, run_benchmark_amplifier, run_benchmark_cubic, run_benchmark_gaussian, run_certify_state, run_oracle,
    run_plan, Command,
};
