use super::refine::{fit_rows, row_data};
use super::{check_frame, EstimatorError};
use crate::data::{PartialMatrix, ScoreMatrix};
use crate::linalg::{top_k_eigenvectors, DenseMatrix, Frame};

/// Principal scores `ûᵢ = (V_{𝒥ᵢ})† y_{i,𝒥ᵢ}` for every row observing more
/// than `K` entries.
pub fn estimate_scores(
    v: &Frame,
    pm: &PartialMatrix,
    k: usize,
) -> Result<ScoreMatrix, EstimatorError> {
    check_frame(k, v, pm.d())?;
    let rows: Vec<usize> = (0..pm.n())
        .filter(|&i| pm.mask().row_count(i) > k)
        .collect();
    let data = row_data(pm, &rows);
    let fits = fit_rows(v.as_matrix(), &data);
    let mut scores = DenseMatrix::zeros(rows.len(), k);
    for (r, fit) in fits.iter().enumerate() {
        scores.row_mut(r).copy_from_slice(&fit.scores);
    }
    Ok(ScoreMatrix::new(rows, scores)?)
}

#[derive(Clone, Debug)]
pub struct CovarianceReconstruction {
    /// `Σ̂_y = n⁻¹ Σ_{i∈ℐ} ŷᵢŷᵢᵀ` with `ŷᵢ = V ûᵢ`.
    pub covariance: DenseMatrix,
    /// The `K` leading eigenvalues of `Σ̂_y`, nonincreasing.
    pub eigenvalues: Vec<f64>,
}

/// `Σ̂_y = n⁻¹ Σᵢ (V ûᵢ)(V ûᵢ)ᵀ = V (n⁻¹ ÛᵀÛ) Vᵀ`; its nonzero spectrum is
/// that of the `K × K` matrix `n⁻¹ ÛᵀÛ`.
pub fn reconstruct_covariance(
    v: &Frame,
    scores: &ScoreMatrix,
    n: usize,
) -> Result<CovarianceReconstruction, EstimatorError> {
    if scores.rank() != v.rank() {
        return Err(EstimatorError::FrameMismatch {
            frame_dim: v.dim(),
            frame_rank: v.rank(),
            data_dim: v.dim(),
            k: scores.rank(),
        });
    }
    if n == 0 {
        return Err(EstimatorError::InvalidConfig("n must be positive".into()));
    }
    let u = scores.scores();
    let small = u.t_matmul(u).scaled(1.0 / n as f64);
    let vm = v.as_matrix();
    let covariance = vm.matmul(&small).matmul(&vm.transpose()).symmetrized();
    let (_, eigenvalues) = top_k_eigenvectors(&small, v.rank())?;
    Ok(CovarianceReconstruction {
        covariance,
        eigenvalues,
    })
}

/// `μ̂ = √d · max_{j,k} |V_jk|`.
pub fn incoherence(v: &Frame) -> f64 {
    (v.dim() as f64).sqrt() * v.as_matrix().max_abs()
}
