//! One refinement step: regress each row's observed entries on the current
//! frame, impute the unobserved entries from the fitted scores, and take the
//! top right singular vectors of the completed matrix.
//!
//! The completed matrix is never formed. Writing `Û` for the fitted scores
//! and `R` for the residuals on observed entries (`R_ij = y_ij − (V ûᵢ)_j`),
//! it equals `Û Vᵀ + R`, so its Gram matrix is
//! `V (ÛᵀÛ) Vᵀ + V (ÛᵀR) + (RᵀÛ) Vᵀ + RᵀR`, which costs
//! `O(nnz·K + Σᵢ|𝒥ᵢ|² + d²K)` to assemble.

use rayon::prelude::*;

use super::{check_frame, EstimatorError};
use crate::data::PartialMatrix;
use crate::linalg::{jacobi_svd, psd_top_k_eigenvectors, DenseMatrix, Frame, DEFAULT_PINV_TOL};

/// Observed entries of one row, gathered once per run.
pub(crate) struct RowData {
    pub row: usize,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

pub(crate) fn row_data(pm: &PartialMatrix, rows: &[usize]) -> Vec<RowData> {
    rows.iter()
        .map(|&row| {
            let (cols, vals) = pm.observed_row(row);
            RowData { row, cols, vals }
        })
        .collect()
}

/// Solution of the per-row regression `(V)_{𝒥ᵢ} u ≈ y_{i,𝒥ᵢ}`.
pub(crate) struct RowFit<'a> {
    pub data: &'a RowData,
    /// `σ_K((V)_{𝒥ᵢ})`; zero when fewer than `K` entries are observed.
    pub sigma_min: f64,
    pub scores: Vec<f64>,
}

pub(crate) fn fit_row<'a>(v: &DenseMatrix, data: &'a RowData) -> RowFit<'a> {
    let k = v.cols();
    let sub: Vec<Vec<f64>> = (0..k)
        .map(|a| data.cols.iter().map(|&j| v[(j, a)]).collect())
        .collect();
    let svd = jacobi_svd(sub);
    let sigma_min = if data.cols.len() >= k {
        svd.s.last().copied().unwrap_or(0.0)
    } else {
        0.0
    };
    RowFit {
        data,
        sigma_min,
        scores: svd.solve_pinv(&data.vals, DEFAULT_PINV_TOL),
    }
}

pub(crate) fn fit_rows<'a>(v: &DenseMatrix, rows: &'a [RowData]) -> Vec<RowFit<'a>> {
    rows.par_iter()
        .with_min_len(64)
        .map(|data| fit_row(v, data))
        .collect()
}

/// Screening threshold `√|𝒥ᵢ| / (√d σ*)` for a row with `observed` entries.
pub(crate) fn screening_threshold(observed: usize, d: usize, sigma_star: f64) -> f64 {
    (observed as f64).sqrt() / ((d as f64).sqrt() * sigma_star)
}

pub(crate) fn passes_screen(fit: &RowFit, k: usize, d: usize, sigma_star: f64) -> bool {
    let observed = fit.data.cols.len();
    observed > k && fit.sigma_min >= screening_threshold(observed, d, sigma_star)
}

/// Gram matrix `ŶᵀŶ` of the imputed matrix built from the given row fits.
pub(crate) fn imputed_gram(v: &DenseMatrix, fits: &[RowFit]) -> DenseMatrix {
    let (d, k) = v.shape();
    let mut m = vec![0.0; k * k];
    let mut b = DenseMatrix::zeros(k, d);
    let mut g = DenseMatrix::zeros(d, d);
    let mut resid = Vec::new();
    for fit in fits {
        let u = &fit.scores;
        let RowData { cols, vals, .. } = fit.data;
        resid.clear();
        resid.extend(cols.iter().zip(vals).map(|(&j, &y)| {
            let vj = v.row(j);
            y - (0..k).map(|a| vj[a] * u[a]).sum::<f64>()
        }));
        for a in 0..k {
            for c in 0..k {
                m[a * k + c] += u[a] * u[c];
            }
        }
        for (&j, &r) in cols.iter().zip(&resid) {
            for a in 0..k {
                b[(a, j)] += u[a] * r;
            }
            let row = g.row_mut(j);
            for (&l, &s) in cols.iter().zip(&resid) {
                row[l] += r * s;
            }
        }
    }
    // G += C Vᵀ + V B with C = V M + Bᵀ, as one product [C V] [Vᵀ; B].
    let left = DenseMatrix::from_fn(d, 2 * k, |j, a| {
        if a < k {
            (0..k).map(|e| v[(j, e)] * m[e * k + a]).sum::<f64>() + b[(a, j)]
        } else {
            v[(j, a - k)]
        }
    });
    let right = DenseMatrix::from_fn(2 * k, d, |a, l| if a < k { v[(l, a)] } else { b[(a - k, l)] });
    g.add_product(&left, &right);
    g.symmetrize();
    g
}

fn validate(k: usize, v: &Frame, pm: &PartialMatrix) -> Result<(), EstimatorError> {
    check_frame(k, v, pm.d())?;
    let limit = pm.n().min(pm.d());
    if k > limit {
        return Err(EstimatorError::RankTooLarge { k, limit });
    }
    Ok(())
}

pub(crate) fn refine_with_fits(
    k: usize,
    v_in: &Frame,
    fits: &[RowFit],
) -> Result<Frame, EstimatorError> {
    let g = imputed_gram(v_in.as_matrix(), fits);
    let (frame, _) = psd_top_k_eigenvectors(&g, k, Some(v_in.as_matrix()))?;
    Ok(frame)
}

/// A single refinement step. Every row must have at least one observed entry.
pub fn refine(k: usize, v_in: &Frame, pm: &PartialMatrix) -> Result<Frame, EstimatorError> {
    validate(k, v_in, pm)?;
    if let Some(row) = (0..pm.n()).find(|&i| pm.mask().row_count(i) == 0) {
        return Err(EstimatorError::EmptyRow { row });
    }
    let rows: Vec<usize> = (0..pm.n()).collect();
    let data = row_data(pm, &rows);
    let fits = fit_rows(v_in.as_matrix(), &data);
    refine_with_fits(k, v_in, &fits)
}

/// The completed matrix `Ŷ`: observed entries kept, unobserved entries
/// replaced by `(V ûᵢ)_j` with `ûᵢ = (V_{𝒥ᵢ})† y_{i,𝒥ᵢ}`.
pub fn impute(v: &Frame, pm: &PartialMatrix) -> Result<DenseMatrix, EstimatorError> {
    validate(v.rank(), v, pm)?;
    let vm = v.as_matrix();
    let k = v.rank();
    let mut out = DenseMatrix::zeros(pm.n(), pm.d());
    for data in row_data(pm, &(0..pm.n()).collect::<Vec<_>>()) {
        let i = data.row;
        let u = fit_row(vm, &data).scores;
        let row = out.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            *x = if pm.is_observed(i, j) {
                pm.values()[(i, j)]
            } else {
                (0..k).map(|a| vm[(j, a)] * u[a]).sum()
            };
        }
    }
    Ok(out)
}

/// Rows with more than `K` observed entries whose observed sub-frame has
/// `σ_K(V_{𝒥ᵢ}) ≥ √|𝒥ᵢ| / (√d σ*)`. Ties at the threshold are retained.
pub fn screen_rows(
    k: usize,
    v: &Frame,
    pm: &PartialMatrix,
    sigma_star: f64,
) -> Result<Vec<usize>, EstimatorError> {
    check_frame(k, v, pm.d())?;
    if !(sigma_star > 0.0) {
        return Err(EstimatorError::InvalidConfig(format!(
            "sigma_star must be positive, got {sigma_star}"
        )));
    }
    let candidates: Vec<usize> = (0..pm.n())
        .filter(|&i| pm.mask().row_count(i) > k)
        .collect();
    let data = row_data(pm, &candidates);
    Ok(fit_rows(v.as_matrix(), &data)
        .into_iter()
        .filter(|fit| passes_screen(fit, k, pm.d(), sigma_star))
        .map(|fit| fit.data.row)
        .collect())
}
