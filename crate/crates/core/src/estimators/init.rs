use super::ipw::masked_gram;
use super::{EstimatorError, WeightMatrix};
use crate::data::PartialMatrix;
use crate::linalg::{top_k_eigenvectors, DenseMatrix, Frame};

/// `W̃_jk = n / N_jk` where columns `j` and `k` are co-observed, else 0.
pub fn init_weights(pm: &PartialMatrix) -> WeightMatrix {
    let counts = pm.coobservation_counts();
    let n = pm.n() as f64;
    let d = pm.d();
    WeightMatrix(DenseMatrix::from_fn(d, d, |j, k| match counts.get(j, k) {
        0 => 0.0,
        c => n / c as f64,
    }))
}

/// `G̃ = (n⁻¹ Σᵢ ỹᵢỹᵢᵀ) ∘ W̃`: each entry is the average of `y_ij y_ik` over
/// the rows observing both coordinates (0 if there are none).
pub fn init_covariance(pm: &PartialMatrix) -> DenseMatrix {
    let counts = pm.coobservation_counts();
    let mut g = masked_gram(pm);
    let d = pm.d();
    for j in 0..d {
        for k in 0..d {
            let c = counts.get(j, k);
            g[(j, k)] = if c == 0 { 0.0 } else { g[(j, k)] / c as f64 };
        }
    }
    g
}

/// Top-`k` eigenvectors (algebraically largest eigenvalues) of `G̃`. `G̃`
/// may be indefinite.
pub fn init_estimator(pm: &PartialMatrix, k: usize) -> Result<(Frame, Vec<f64>), EstimatorError> {
    if k == 0 || k > pm.d() {
        return Err(EstimatorError::RankTooLarge { k, limit: pm.d() });
    }
    Ok(top_k_eigenvectors(&init_covariance(pm), k)?)
}
