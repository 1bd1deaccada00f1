//! Subspace distances, matrix norms and entrywise products.

use super::decomp::{jacobi_svd, thin_svd};
use super::dense::norm2;
use super::frame::Frame;
use super::{DenseMatrix, LinalgError};

fn check_pair(op: &'static str, u: &Frame, v: &Frame) -> Result<(), LinalgError> {
    if u.dim() != v.dim() || u.rank() != v.rank() {
        return Err(LinalgError::DimensionMismatch {
            op,
            left: u.as_matrix().shape(),
            right: v.as_matrix().shape(),
        });
    }
    Ok(())
}

/// Cosines of the principal angles between `col(u)` and `col(v)`: the
/// singular values of `uᵀv`, nonincreasing and clamped to `[0, 1]`.
pub fn principal_angles(u: &Frame, v: &Frame) -> Result<Vec<f64>, LinalgError> {
    check_pair("principal_angles", u, v)?;
    let m = u.as_matrix().t_matmul(v.as_matrix());
    let cols = (0..m.cols()).map(|j| m.column(j)).collect();
    Ok(jacobi_svd(cols)
        .s
        .into_iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect())
}

/// `L(U, V) = ‖sin Θ(U, V)‖_F`, in `[0, √K]`.
///
/// Evaluated as `‖V − U(UᵀV)‖_F`, which equals `sqrt(Σ (1 − cos²θ_j))` but
/// keeps full relative accuracy when the subspaces nearly coincide.
pub fn sin_theta_loss(u: &Frame, v: &Frame) -> Result<f64, LinalgError> {
    check_pair("sin_theta_loss", u, v)?;
    let um = u.as_matrix();
    let vm = v.as_matrix();
    let proj = um.matmul(&um.t_matmul(vm));
    let residual = vm.sub(&proj).frobenius_norm();
    Ok(residual.min((u.rank() as f64).sqrt()))
}

/// The orthogonal `K × K` matrix `W = W₁W₂ᵀ` built from an SVD
/// `W₁ D W₂ᵀ` of `(V⁽²⁾)ᵀV⁽¹⁾`; it minimises `‖V⁽¹⁾ − V⁽²⁾W‖_F`.
///
/// When `(V⁽²⁾)ᵀV⁽¹⁾` is singular the minimiser is not unique; the factor
/// columns paired with zero singular values are kept exactly as the SVD
/// returns them.
pub fn procrustes_align(v1: &Frame, v2: &Frame) -> Result<DenseMatrix, LinalgError> {
    check_pair("procrustes_align", v1, v2)?;
    let m = v2.as_matrix().t_matmul(v1.as_matrix());
    let k = m.rows();
    let svd = m
        .to_faer()
        .svd()
        .map_err(|_| LinalgError::NoConvergence {
            routine: "procrustes_align",
            iterations: None,
        })?;
    let w1 = DenseMatrix::from_faer(svd.U());
    let w2 = DenseMatrix::from_faer(svd.V());
    debug_assert_eq!(w1.shape(), (k, k));
    Ok(w1.matmul(&w2.transpose()))
}

/// `𝒯(V⁽¹⁾, V⁽²⁾) = ‖V⁽¹⁾ − V⁽²⁾W‖_{2→∞}` with `W` from [`procrustes_align`].
pub fn two_to_inf_distance(v1: &Frame, v2: &Frame) -> Result<f64, LinalgError> {
    let w = procrustes_align(v1, v2)?;
    let diff = v1.as_matrix().sub(&v2.as_matrix().matmul(&w));
    Ok(two_to_inf_norm(&diff))
}

/// Maximum Euclidean row norm.
pub fn two_to_inf_norm(a: &DenseMatrix) -> f64 {
    (0..a.rows()).map(|i| norm2(a.row(i))).fold(0.0, f64::max)
}

/// The matrix norms used throughout the estimators' analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorNorms {
    /// Maximum absolute column sum.
    pub one_to_one: f64,
    /// Maximum Euclidean row norm.
    pub two_to_inf: f64,
    /// Maximum absolute row sum.
    pub inf_to_inf: f64,
    pub frobenius: f64,
    pub entrywise_l1: f64,
    pub entrywise_linf: f64,
    /// Largest singular value.
    pub op: f64,
}

pub fn operator_norms(a: &DenseMatrix) -> Result<OperatorNorms, LinalgError> {
    let (m, n) = a.shape();
    let mut col_sums = vec![0.0; n];
    let mut inf_to_inf = 0.0f64;
    for i in 0..m {
        let row = a.row(i);
        inf_to_inf = inf_to_inf.max(row.iter().map(|v| v.abs()).sum());
        for (c, v) in col_sums.iter_mut().zip(row) {
            *c += v.abs();
        }
    }
    let op = if m.min(n) == 0 {
        0.0
    } else {
        thin_svd(a, 1)?.singular_values[0]
    };
    Ok(OperatorNorms {
        one_to_one: col_sums.iter().copied().fold(0.0, f64::max),
        two_to_inf: two_to_inf_norm(a),
        inf_to_inf,
        frobenius: a.frobenius_norm(),
        entrywise_l1: a.as_slice().iter().map(|v| v.abs()).sum(),
        entrywise_linf: a.max_abs(),
        op,
    })
}

/// Entrywise product `A ∘ B`.
pub fn hadamard(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.shape() != b.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "hadamard",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .collect();
    DenseMatrix::from_row_major(a.rows(), a.cols(), data)
}

/// Entrywise reciprocal; fails on the first zero entry.
pub fn hadamard_inverse(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let cols = a.cols();
    if let Some(pos) = a.as_slice().iter().position(|&v| v == 0.0) {
        return Err(LinalgError::ZeroEntry {
            row: pos / cols,
            col: pos % cols,
        });
    }
    let data = a.as_slice().iter().map(|v| 1.0 / v).collect();
    DenseMatrix::from_row_major(a.rows(), cols, data)
}
