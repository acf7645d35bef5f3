//! Run reports and the files written for them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, VarianceMode};
use crate::estimators::{lower_median, MomResult};
use crate::planner::ComplexityBudget;
use crate::witnesses::Scenario;
use crate::{Error, Result};

/// `Ŵ = offset + Σ coefficient[name] · estimate[name]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessEstimate {
    pub value: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub offset: f64,
    pub coefficients: BTreeMap<String, f64>,
    pub components: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRecord {
    pub estimator: String,
    pub variance_mode: VarianceMode,
    /// `σ²` fed to the batch-size rule.
    pub variance_proxy: f64,
    /// Exact kernel mean when the device is simulable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_mean: Option<f64>,
    pub result: MomResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub method: String,
    pub witness: f64,
    pub fidelity: f64,
    /// `F − W`; nonnegative for a sound witness.
    pub gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
    pub components: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotCounters {
    /// Shots that entered the median-of-means estimates.
    pub estimation: usize,
    pub pilot: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_budget: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub estimators: Vec<EstimatorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<ComplexityBudget>,
    pub shots: ShotCounters,
}

impl RunReport {
    /// Rebuilds `Ŵ` from the stored batch means alone.
    pub fn recompute_witness(&self) -> Option<f64> {
        let w = self.witness.as_ref()?;
        let mut v = w.offset;
        for (name, c) in &w.coefficients {
            let rec = self.estimators.iter().find(|r| &r.estimator == name)?;
            v += c * lower_median(&rec.result.batch_means);
        }
        Some(v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Wall-clock data kept out of the report so reports stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub command: String,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub shots: usize,
}

pub const REPORT_FILE: &str = "report.json";
pub const BATCHES_FILE: &str = "batches.csv";
pub const PLAN_FILE: &str = "plan.json";
pub const TIMING_FILE: &str = "timing.json";

/// RFC-4180 dump with columns `estimator,batch_index,mean,size`.
pub fn write_batches_csv<W: std::io::Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "batch_index", "mean", "size"])?;
    for rec in &report.estimators {
        for (i, m) in rec.result.batch_means.iter().enumerate() {
            w.write_record([
                rec.estimator.clone(),
                i.to_string(),
                format!("{m:?}"),
                rec.result.per_batch_size.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `report.json`, `batches.csv` and `timing.json`; returns their paths.
pub fn write_run_outputs(dir: &Path, report: &RunReport, timing: &Timing) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let report_path = dir.join(REPORT_FILE);
    write_json(&report_path, report)?;
    let csv_path = dir.join(BATCHES_FILE);
    write_batches_csv(report, fs::File::create(&csv_path)?)?;
    let timing_path = dir.join(TIMING_FILE);
    write_json(&timing_path, timing)?;
    Ok(vec![report_path, csv_path, timing_path])
}

pub fn write_plan_outputs(dir: &Path, budget: &ComplexityBudget, timing: &Timing) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let plan_path = dir.join(PLAN_FILE);
    write_json(&plan_path, budget)?;
    let timing_path = dir.join(TIMING_FILE);
    write_json(&timing_path, timing)?;
    Ok(vec![plan_path, timing_path])
}
