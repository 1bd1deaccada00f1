//! Spectral estimators of the leading eigenspace from partially observed data.
//!
//! * [`ipw_covariance`]: inverse-probability weighted covariance under
//!   homogeneous missingness with plug-in observation rate;
//! * [`init_covariance`] / [`init_estimator`]: the co-observation weighted
//!   initialiser used under heterogeneous missingness;
//! * [`refine`], [`screen_rows`] and [`prime_pca`]: iterative refinement by
//!   per-row regression, imputation and re-extraction of the singular space;
//! * [`estimate_scores`] and [`reconstruct_covariance`]: principal scores and
//!   the implied covariance spectrum for a fitted frame.

mod init;
mod ipw;
mod prime;
mod refine;
mod scores;

use thiserror::Error;

use crate::data::DataError;
use crate::linalg::{DenseMatrix, LinalgError};

pub use init::{init_covariance, init_estimator, init_weights};
pub use ipw::{homogeneous_weights, ipw_covariance, masked_gram};
pub use prime::{
    prime_pca, IterationRecord, PrimeConfig, StopReason, TrajectoryReport, DEFAULT_NOISY_KAPPA_STAR,
    DEFAULT_N_ITER, DEFAULT_SIGMA_STAR,
};
pub use refine::{impute, refine, screen_rows};
pub use scores::{estimate_scores, incoherence, reconstruct_covariance, CovarianceReconstruction};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("no entries are observed")]
    NoObservations,
    #[error("row {row} has no observed entries")]
    EmptyRow { row: usize },
    #[error("rank {k} exceeds the admissible limit {limit}")]
    RankTooLarge { k: usize, limit: usize },
    #[error("screening retained no rows at iteration {iteration}")]
    EmptyScreening { iteration: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("frame is {frame_dim}x{frame_rank} but the data has {data_dim} columns and rank {k} was requested")]
    FrameMismatch {
        frame_dim: usize,
        frame_rank: usize,
        data_dim: usize,
        k: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Symmetric `d × d` weights applied entrywise to a sample second-moment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix(DenseMatrix);

impl WeightMatrix {
    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }
}

fn check_frame(
    k: usize,
    v: &crate::linalg::Frame,
    d: usize,
) -> Result<(), EstimatorError> {
    if v.rank() != k || v.dim() != d {
        return Err(EstimatorError::FrameMismatch {
            frame_dim: v.dim(),
            frame_rank: v.rank(),
            data_dim: d,
            k,
        });
    }
    Ok(())
}
