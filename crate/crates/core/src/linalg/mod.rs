//! Dense linear algebra and subspace metrics.

mod decomp;
mod dense;
mod frame;
mod metrics;

use thiserror::Error;

pub use decomp::{
    pseudoinverse, psd_top_k_eigenvectors, thin_svd, top_k_eigenvectors, SvdFactors,
    DEFAULT_PINV_TOL,
};
pub(crate) use decomp::jacobi_svd;
pub use dense::DenseMatrix;
pub use frame::{orthonormality_defect, Frame, ORTHONORMAL_TOL};
pub use metrics::{
    hadamard, hadamard_inverse, operator_norms, principal_angles, procrustes_align,
    sin_theta_loss, two_to_inf_distance, two_to_inf_norm, OperatorNorms,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("rank {rank} is not in 1..={dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("columns are not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },
    #[error("column {column} is numerically dependent on the previous ones")]
    RankDeficient { column: usize },
    #[error("zero entry at ({row}, {col}) has no Hadamard inverse")]
    ZeroEntry { row: usize, col: usize },
    #[error("{routine} did not converge{}", iterations.map(|n| format!(" after {n} iterations")).unwrap_or_default())]
    NoConvergence {
        routine: &'static str,
        iterations: Option<usize>,
    },
}
