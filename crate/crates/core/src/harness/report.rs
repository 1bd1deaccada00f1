use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::{ExperimentConfig, OutputPaths};
use crate::data::DataError;
use crate::estimators::{IterationRecord, StopReason};

/// Method-specific diagnostics of one repetition.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodDetail {
    None,
    Prime {
        stop_reason: StopReason,
        iterations: Vec<IterationRecord>,
    },
    Impute {
        iterations: usize,
        converged: bool,
        /// Chosen `λ` for the oracle-tuned soft threshold.
        #[serde(skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
}

/// One method on one repetition. A failed run has `loss = NaN` and an error
/// message.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepRecord {
    pub method: String,
    pub rep: usize,
    pub seed: u64,
    pub loss: f64,
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub detail: MethodDetail,
}

impl RepRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Mean and standard error over the successful repetitions of one method.
/// `se` is the sample standard deviation over `√completed`, and NaN when
/// fewer than two repetitions succeeded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean: f64,
    pub se: f64,
    pub completed: usize,
    pub failed: usize,
    pub mean_runtime_s: f64,
}

impl MethodSummary {
    pub(crate) fn from_records<'a>(method: &str, records: impl Iterator<Item = &'a RepRecord>) -> Self {
        let mut losses = Vec::new();
        let mut runtime = 0.0;
        let mut failed = 0;
        for r in records {
            runtime += r.runtime_s;
            if r.failed() {
                failed += 1;
            } else {
                losses.push(r.loss);
            }
        }
        let (mean, se) = mean_and_se(&losses);
        let total = losses.len() + failed;
        Self {
            method: method.to_string(),
            mean,
            se,
            completed: losses.len(),
            failed,
            mean_runtime_s: if total == 0 { f64::NAN } else { runtime / total as f64 },
        }
    }
}

/// `(mean, sd / √m)` with the `m − 1` sample standard deviation.
pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Ordered by method (config order), then repetition.
    pub records: Vec<RepRecord>,
    pub summaries: Vec<MethodSummary>,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn records_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a RepRecord> + 'a {
        self.records.iter().filter(move |r| r.method == method)
    }

    /// Successful per-repetition losses of `method`, in repetition order.
    pub fn losses(&self, method: &str) -> Vec<f64> {
        self.records_for(method)
            .filter(|r| !r.failed())
            .map(|r| r.loss)
            .collect()
    }

    /// `method,rep,loss,runtime_s`; failed runs have `loss = NaN`.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("method,rep,loss,runtime_s\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", r.method, r.rep, r.loss, r.runtime_s);
        }
        out
    }

    /// `method,rep,iter,step_change,loss_vs_truth,screened_rows`, one line per
    /// refinement iteration of every successful iterative run.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("method,rep,iter,step_change,loss_vs_truth,screened_rows\n");
        for r in &self.records {
            if let MethodDetail::Prime { iterations, .. } = &r.detail {
                for it in iterations {
                    let loss = it.loss_vs_truth.unwrap_or(f64::NAN);
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.method, r.rep, it.iter, it.step_change, loss, it.screened_rows
                    );
                }
            }
        }
        out
    }

    /// Config echo, seeds, per-method summaries, failures and wall times.
    /// Non-finite numbers become `null`.
    pub fn metadata_json(&self) -> serde_json::Value {
        let runs: Vec<_> = self
            .records
            .iter()
            .map(|r| {
                let mut v = serde_json::to_value(r).expect("records serialize");
                let extra = match &r.detail {
                    MethodDetail::None => json!({}),
                    MethodDetail::Prime {
                        stop_reason,
                        iterations,
                    } => json!({"stop_reason": stop_reason, "iterations": iterations.len()}),
                    MethodDetail::Impute {
                        iterations,
                        converged,
                        lambda,
                    } => json!({"iterations": iterations, "converged": converged, "lambda": lambda}),
                };
                if let (Some(obj), Some(extra)) = (v.as_object_mut(), extra.as_object()) {
                    obj.extend(extra.clone());
                }
                v
            })
            .collect();
        json!({
            "config": self.config,
            "base_seed": self.config.base_seed,
            "reps": self.config.reps,
            "target_rank": self.config.rank(),
            "wall_time_s": self.wall_time_s,
            "summaries": self.summaries,
            "runs": runs,
        })
    }

    /// Writes whichever of report, trace and metadata files `paths` names.
    pub fn write_outputs(&self, paths: &OutputPaths) -> Result<(), DataError> {
        let write = |path: &Path, text: String| {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|source| DataError::Io {
                    path: parent.display().to_string(),
                    source,
                })?;
            }
            fs::write(path, text).map_err(|source| DataError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        if let Some(p) = &paths.report {
            write(p, self.report_csv())?;
        }
        if let Some(p) = &paths.trace {
            write(p, self.trace_csv())?;
        }
        if let Some(p) = &paths.metadata {
            let text = serde_json::to_string_pretty(&self.metadata_json()).expect("json serializes");
            write(p, text + "\n")?;
        }
        Ok(())
    }
}
