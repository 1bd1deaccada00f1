//! Configuration-driven Monte Carlo experiments.
//!
//! An [`ExperimentConfig`] names a data model, a missingness mechanism and a
//! list of methods. [`run_experiment`] draws one data set and one mask per
//! repetition, runs every method on it and records the sin Θ loss against the
//! true frame. Repetitions run in parallel on the ambient rayon pool; results
//! are keyed by repetition index, so the thread count never changes the
//! numbers.
//!
//! A minimal config:
//!
//! ```json
//! {
//!   "data": {"n": 2000, "d": 500, "k": 2, "score_variances": [400, 400],
//!            "noise": true, "frame": {"type": "block_sign"}},
//!   "missingness": {"type": "homogeneous", "p": 0.05},
//!   "methods": [{"method": "init_only"}, {"method": "primepca", "kappa_star": 1e-6}],
//!   "reps": 20,
//!   "base_seed": 1
//! }
//! ```

mod report;
mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::ImputeConfig;
use crate::data::DataError;
use crate::estimators::{PrimeConfig, DEFAULT_N_ITER, DEFAULT_SIGMA_STAR};
use crate::sim::{DataModelSpec, MissingnessSpec, SimError};

pub use report::{ExperimentReport, MethodDetail, MethodSummary, RepRecord};
pub use run::{rep_seed, run_experiment};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("malformed experiment config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn default_reps() -> usize {
    20
}

fn default_n_iter() -> usize {
    DEFAULT_N_ITER
}

fn default_sigma_star() -> f64 {
    DEFAULT_SIGMA_STAR
}

fn default_grid_points() -> usize {
    20
}

/// One estimator to run in every repetition. `label` names the method in
/// reports and defaults to the method tag; it must be unique within a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    /// The initialiser followed by the iterative refinement.
    Primepca {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default = "default_n_iter")]
        n_iter: usize,
        #[serde(default = "default_sigma_star")]
        sigma_star: f64,
        #[serde(default)]
        kappa_star: f64,
    },
    /// The initialiser alone.
    InitOnly {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// Rank-`K` hard-thresholded imputation.
    HardImpute {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_iter: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        thresh: Option<f64>,
    },
    /// Soft-thresholded imputation at the grid value of `λ` closest to the
    /// truth. Without explicit `lambdas` the grid has `grid_points` values
    /// log-spaced below the top singular value of the observed data.
    SoftImputeOracle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default = "default_grid_points")]
        grid_points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambdas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank_max: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_iter: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        thresh: Option<f64>,
    },
}

impl MethodSpec {
    pub fn primepca(n_iter: usize, sigma_star: f64, kappa_star: f64) -> Self {
        Self::Primepca {
            label: None,
            n_iter,
            sigma_star,
            kappa_star,
        }
    }

    pub fn init_only() -> Self {
        Self::InitOnly { label: None }
    }

    pub fn hard_impute() -> Self {
        Self::HardImpute {
            label: None,
            max_iter: None,
            thresh: None,
        }
    }

    pub fn soft_impute_oracle(grid_points: usize) -> Self {
        Self::SoftImputeOracle {
            label: None,
            grid_points,
            lambdas: None,
            rank_max: None,
            max_iter: None,
            thresh: None,
        }
    }

    /// Replaces the report label.
    pub fn labelled(mut self, name: impl Into<String>) -> Self {
        let name = Some(name.into());
        match &mut self {
            Self::Primepca { label, .. }
            | Self::InitOnly { label }
            | Self::HardImpute { label, .. }
            | Self::SoftImputeOracle { label, .. } => *label = name,
        }
        self
    }

    pub fn label(&self) -> &str {
        let (label, tag) = match self {
            Self::Primepca { label, .. } => (label, "primepca"),
            Self::InitOnly { label } => (label, "init_only"),
            Self::HardImpute { label, .. } => (label, "hard_impute"),
            Self::SoftImputeOracle { label, .. } => (label, "soft_impute_oracle"),
        };
        label.as_deref().unwrap_or(tag)
    }

    pub(crate) fn prime_config(&self, k: usize) -> Option<PrimeConfig> {
        match *self {
            Self::Primepca {
                n_iter,
                sigma_star,
                kappa_star,
                ..
            } => Some(PrimeConfig {
                k,
                n_iter,
                sigma_star,
                kappa_star,
                center: false,
            }),
            _ => None,
        }
    }

    pub(crate) fn impute_config(&self) -> ImputeConfig {
        let base = ImputeConfig::default();
        match *self {
            Self::HardImpute { max_iter, thresh, .. } => ImputeConfig {
                max_iter: max_iter.unwrap_or(base.max_iter),
                thresh: thresh.unwrap_or(base.thresh),
                ..base
            },
            Self::SoftImputeOracle {
                rank_max,
                max_iter,
                thresh,
                ..
            } => ImputeConfig {
                rank_max: rank_max.unwrap_or(base.rank_max),
                max_iter: max_iter.unwrap_or(base.max_iter),
                thresh: thresh.unwrap_or(base.thresh),
                ..base
            },
            _ => base,
        }
    }

    fn validate(&self, k: usize) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        let label = self.label();
        if label.is_empty()
            || !label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            return bad(format!(
                "method label `{label}` must be nonempty ASCII letters, digits, `_`, `-` or `.`"
            ));
        }
        if let Some(cfg) = self.prime_config(k) {
            cfg.validate()
                .map_err(|e| HarnessError::InvalidConfig(format!("{label}: {e}")))?;
        }
        self.impute_config()
            .validate()
            .map_err(|e| HarnessError::InvalidConfig(format!("{label}: {e}")))?;
        if let Self::SoftImputeOracle {
            grid_points,
            lambdas,
            ..
        } = self
        {
            match lambdas {
                Some(l) if l.is_empty() => return bad(format!("{label}: lambdas is empty")),
                Some(l) if l.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => {
                    return bad(format!("{label}: lambdas must be finite and >= 0"))
                }
                None if *grid_points == 0 => {
                    return bad(format!("{label}: grid_points must be at least 1"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Where [`ExperimentReport::write_outputs`] puts its files. Missing entries
/// are skipped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// `method,rep,loss,runtime_s`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// `method,rep,iter,step_change,loss_vs_truth,screened_rows`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    /// JSON sidecar with the config echo, seeds, summaries and wall times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<PathBuf>,
}

impl OutputPaths {
    /// `report.csv`, `trace.csv` and `report.json` inside `dir`.
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        Self {
            report: Some(dir.join("report.csv")),
            trace: Some(dir.join("trace.csv")),
            metadata: Some(dir.join("report.json")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataModelSpec,
    pub missingness: MissingnessSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Rank `K̂` handed to every method; defaults to the model rank. Losses
    /// are measured against the leading `K̂` columns of the model frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rank: Option<usize>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl ExperimentConfig {
    pub fn new(data: DataModelSpec, missingness: MissingnessSpec, methods: Vec<MethodSpec>) -> Self {
        Self {
            data,
            missingness,
            methods,
            reps: default_reps(),
            base_seed: 0,
            target_rank: None,
            outputs: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn rank(&self) -> usize {
        self.target_rank.unwrap_or(self.data.k)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty".into());
        }
        self.data.validate()?;
        self.missingness.validate(self.data.n, self.data.d)?;
        let k = self.rank();
        if k == 0 || k > self.data.k {
            return bad(format!("target_rank {k} must lie in 1..={}", self.data.k));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.methods {
            m.validate(k)?;
            if !seen.insert(m.label()) {
                return bad(format!(
                    "method label `{}` appears twice; set `label` to tell them apart",
                    m.label()
                ));
            }
        }
        Ok(())
    }
}
