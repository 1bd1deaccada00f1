use super::{EstimatorError, WeightMatrix};
use crate::data::PartialMatrix;
use crate::linalg::{hadamard, DenseMatrix};

/// `Y_Ωᵀ Y_Ω`, accumulated over observed pairs only.
pub fn masked_gram(pm: &PartialMatrix) -> DenseMatrix {
    let d = pm.d();
    let mut g = DenseMatrix::zeros(d, d);
    for i in 0..pm.n() {
        let (cols, vals) = pm.observed_row(i);
        for (a, &j) in cols.iter().enumerate() {
            let row = g.row_mut(j);
            let yj = vals[a];
            for (&k, &yk) in cols.iter().zip(&vals) {
                row[k] += yj * yk;
            }
        }
    }
    g
}

/// `Ŵ = p⁻² {11ᵀ − (1 − p) I}`, the Hadamard inverse of `E ωωᵀ` under
/// homogeneous observation probability `p`.
pub fn homogeneous_weights(p: f64, d: usize) -> Result<WeightMatrix, EstimatorError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(EstimatorError::InvalidConfig(format!(
            "observation probability {p} is not in (0, 1]"
        )));
    }
    let off = 1.0 / (p * p);
    let mut w = DenseMatrix::filled(d, d, off);
    for j in 0..d {
        w[(j, j)] = 1.0 / p;
    }
    Ok(WeightMatrix(w))
}

/// `Ĝ = (n⁻¹ Y_Ωᵀ Y_Ω) ∘ Ŵ` with `Ŵ` built from the observed fraction `p̂`.
pub fn ipw_covariance(pm: &PartialMatrix) -> Result<DenseMatrix, EstimatorError> {
    let p_hat = pm.observed_fraction();
    if p_hat == 0.0 {
        return Err(EstimatorError::NoObservations);
    }
    let w = homogeneous_weights(p_hat, pm.d())?;
    let s = masked_gram(pm).scaled(1.0 / pm.n() as f64);
    Ok(hadamard(&s, w.as_matrix())?)
}
