//! SVD, symmetric eigendecomposition and the Moore–Penrose pseudoinverse.
//!
//! Dense factorizations delegate to `faer` (Householder bidiagonalization and
//! tridiagonalization followed by implicit QR, sequential, so results do not
//! depend on thread scheduling). Two in-house routines sit beside them:
//! a one-sided Jacobi SVD for the tall, skinny per-row systems of the
//! refinement step, and a warm-started subspace iteration for the leading
//! eigenspace of positive semidefinite Gram matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{dot, norm2};
use super::frame::Frame;
use super::{DenseMatrix, LinalgError};

/// Default relative singular-value cutoff of [`pseudoinverse`].
pub const DEFAULT_PINV_TOL: f64 = 1e-12;

/// Truncated singular value decomposition `A ≈ L · diag(σ) · Rᵀ`.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub left: Frame,
    pub singular_values: Vec<f64>,
    pub right: Frame,
}

impl SvdFactors {
    /// `L · diag(σ) · Rᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let l = self.left.as_matrix();
        let r = self.right.as_matrix();
        let mut scaled = l.clone();
        for i in 0..scaled.rows() {
            for (j, s) in self.singular_values.iter().enumerate() {
                scaled[(i, j)] *= s;
            }
        }
        scaled.matmul(&r.transpose())
    }
}

/// Top-`r` singular triplets of `a`, singular values in nonincreasing order.
pub fn thin_svd(a: &DenseMatrix, r: usize) -> Result<SvdFactors, LinalgError> {
    let (m, n) = a.shape();
    if r == 0 || r > m.min(n) {
        return Err(LinalgError::InvalidRank {
            rank: r,
            dim: m.min(n),
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { row: 0, col: 0 });
    }
    let svd = a
        .to_faer()
        .thin_svd()
        .map_err(|_| LinalgError::NoConvergence {
            routine: "thin_svd",
            iterations: None,
        })?;
    let s = svd.S().column_vector();
    let singular_values: Vec<f64> = (0..r).map(|j| s[j].max(0.0)).collect();
    let left = DenseMatrix::from_fn(m, r, |i, j| svd.U()[(i, j)]);
    let right = DenseMatrix::from_fn(n, r, |i, j| svd.V()[(i, j)]);
    Ok(SvdFactors {
        left: Frame::from_matrix_unchecked(left),
        singular_values,
        right: Frame::from_matrix_unchecked(right),
    })
}

/// Moore–Penrose pseudoinverse, discarding singular values at or below
/// `tol · σ₁`.
pub fn pseudoinverse(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix, LinalgError> {
    let (m, n) = a.shape();
    let r = m.min(n);
    if r == 0 {
        return Ok(DenseMatrix::zeros(n, m));
    }
    let svd = thin_svd(a, r)?;
    let cutoff = tol * svd.singular_values[0];
    let mut out = DenseMatrix::zeros(n, m);
    let u = svd.left.as_matrix();
    let v = svd.right.as_matrix();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..n {
            let vi = v[(i, k)] * inv;
            if vi == 0.0 {
                continue;
            }
            let row = out.row_mut(i);
            for (j, o) in row.iter_mut().enumerate() {
                *o += vi * u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Eigenvectors of the `k` algebraically largest eigenvalues of a symmetric
/// matrix, eigenvalues returned in nonincreasing order. The input is
/// symmetrised by averaging first; it need not be positive semidefinite.
pub fn top_k_eigenvectors(g: &DenseMatrix, k: usize) -> Result<(Frame, Vec<f64>), LinalgError> {
    let d = g.rows();
    if g.cols() != d {
        return Err(LinalgError::DimensionMismatch {
            op: "top_k_eigenvectors",
            left: g.shape(),
            right: (d, d),
        });
    }
    if k == 0 || k > d {
        return Err(LinalgError::InvalidRank { rank: k, dim: d });
    }
    if !g.is_finite() {
        return Err(LinalgError::NonFinite { row: 0, col: 0 });
    }
    let sym = g.symmetrized().to_faer();
    let evd = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| LinalgError::NoConvergence {
            routine: "self_adjoint_eigen",
            iterations: None,
        })?;
    // faer sorts eigenvalues in nondecreasing order.
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..k).map(|j| s[d - 1 - j]).collect();
    let vectors = DenseMatrix::from_fn(d, k, |i, j| u[(i, d - 1 - j)]);
    Ok((Frame::from_matrix_unchecked(vectors), values))
}

/// Relative residual target for [`psd_top_k_eigenvectors`].
const SUBSPACE_TOL: f64 = 1e-12;
const SUBSPACE_MAX_ITER: usize = 60;

/// Leading `k`-dimensional eigenspace of a symmetric positive semidefinite
/// matrix by block subspace iteration with Rayleigh–Ritz extraction,
/// optionally warm-started from the columns of `warm`.
///
/// Stops once every one of the `k` Ritz residuals `‖G q − θ q‖` is below
/// `1e-12 · θ₁`; otherwise falls back to the dense eigensolver. The start
/// block is a deterministic function of `warm`, so results are reproducible.
pub fn psd_top_k_eigenvectors(
    g: &DenseMatrix,
    k: usize,
    warm: Option<&DenseMatrix>,
) -> Result<(Frame, Vec<f64>), LinalgError> {
    let d = g.rows();
    if g.cols() != d {
        return Err(LinalgError::DimensionMismatch {
            op: "psd_top_k_eigenvectors",
            left: g.shape(),
            right: (d, d),
        });
    }
    if k == 0 || k > d {
        return Err(LinalgError::InvalidRank { rank: k, dim: d });
    }
    let block = (k + k.max(6)).min(d);
    // Small problems: the dense solver is cheaper than iterating.
    if block * 3 >= d {
        return top_k_eigenvectors(g, k);
    }
    if let Some(w) = warm {
        if w.rows() != d {
            return Err(LinalgError::DimensionMismatch {
                op: "psd_top_k_eigenvectors",
                left: g.shape(),
                right: w.shape(),
            });
        }
    }
    let mut filler = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
    let mut q = DenseMatrix::zeros(d, block);
    let warm_cols = warm.map_or(0, |w| w.cols().min(block));
    for j in 0..block {
        for i in 0..d {
            q[(i, j)] = if j < warm_cols {
                warm.unwrap()[(i, j)]
            } else {
                filler.random_range(-1.0..1.0)
            };
        }
    }
    orthonormalize_in_place(&mut q, &mut filler);

    for _ in 0..SUBSPACE_MAX_ITER {
        let z = g.matmul(&q);
        let h = q.t_matmul(&z).symmetrized();
        let evd = h
            .to_faer()
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| LinalgError::NoConvergence {
                routine: "rayleigh_ritz",
                iterations: None,
            })?;
        let s = evd.S().column_vector();
        let theta: Vec<f64> = (0..block).map(|j| s[block - 1 - j]).collect();
        let rot = DenseMatrix::from_fn(block, block, |i, j| evd.U()[(i, block - 1 - j)]);
        let q_ritz = q.matmul(&rot);
        let z_ritz = z.matmul(&rot);
        let scale = theta[0].abs();
        if scale <= f64::MIN_POSITIVE {
            return Ok((
                Frame::from_matrix_unchecked(q_ritz.leading_cols(k)),
                vec![0.0; k],
            ));
        }
        let converged = (0..k).all(|j| {
            let r: f64 = (0..d)
                .map(|i| {
                    let e = z_ritz[(i, j)] - theta[j] * q_ritz[(i, j)];
                    e * e
                })
                .sum::<f64>()
                .sqrt();
            r <= SUBSPACE_TOL * scale
        });
        if converged {
            return Ok((
                Frame::from_matrix_unchecked(q_ritz.leading_cols(k)),
                theta[..k].to_vec(),
            ));
        }
        q = z_ritz;
        orthonormalize_in_place(&mut q, &mut filler);
    }
    top_k_eigenvectors(g, k)
}

/// Gram–Schmidt (twice) on the columns of `q`; columns that collapse are
/// replaced by fresh deterministic directions.
fn orthonormalize_in_place(q: &mut DenseMatrix, filler: &mut ChaCha8Rng) {
    let (d, b) = q.shape();
    let mut cols: Vec<Vec<f64>> = (0..b).map(|j| q.column(j)).collect();
    let scale = cols.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    for j in 0..b {
        let mut attempts = 0;
        loop {
            let (done, rest) = cols.split_at_mut(j);
            let c = &mut rest[0];
            let before = norm2(c);
            for _ in 0..2 {
                for prev in done.iter() {
                    let p = dot(prev, c);
                    for (x, y) in c.iter_mut().zip(prev) {
                        *x -= p * y;
                    }
                }
            }
            let nrm = norm2(c);
            if nrm > 1e-10 * before && nrm > 1e-14 * scale && nrm > 0.0 {
                c.iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            attempts += 1;
            assert!(attempts < 16, "unable to complete an orthonormal block");
            c.iter_mut()
                .for_each(|x| *x = filler.random_range(-1.0..1.0));
        }
    }
    for (j, c) in cols.iter().enumerate() {
        for i in 0..d {
            q[(i, j)] = c[i];
        }
    }
}

/// Result of [`jacobi_svd`]: `A = U · diag(s) · Vᵀ` with `s` nonincreasing.
#[derive(Clone, Debug)]
pub(crate) struct SmallSvd {
    /// Left singular vectors stored column by column (`n` columns of length `m`).
    pub u: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    /// Right singular vectors, `n × n`.
    pub v: DenseMatrix,
}

impl SmallSvd {
    /// `A† b` with singular values at or below `tol · s₁` discarded.
    pub fn solve_pinv(&self, b: &[f64], tol: f64) -> Vec<f64> {
        let n = self.s.len();
        let cutoff = tol * self.s.first().copied().unwrap_or(0.0);
        let mut x = vec![0.0; n];
        for (k, &s) in self.s.iter().enumerate() {
            if s <= cutoff || s == 0.0 {
                continue;
            }
            let coef = dot(&self.u[k], b) / s;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += self.v[(i, k)] * coef;
            }
        }
        x
    }
}

/// One-sided (Hestenes) Jacobi SVD of an `m × n` matrix given by its
/// columns. Intended for small `n`; accurate to high relative precision.
pub(crate) fn jacobi_svd(mut cols: Vec<Vec<f64>>) -> SmallSvd {
    let n = cols.len();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| {
            let nrm = norms[j];
            if nrm > 0.0 {
                cols[j].iter().map(|x| x / nrm).collect()
            } else {
                vec![0.0; cols[j].len()]
            }
        })
        .collect();
    let v_sorted = DenseMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    SmallSvd { u, s, v: v_sorted }
}
