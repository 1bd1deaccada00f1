use super::dense::{dot, norm2};
use super::{DenseMatrix, LinalgError};

/// Orthonormality tolerance for `Frame` construction: `‖VᵀV − I‖_max`.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// A `d × K` matrix with orthonormal columns, representing a `K`-dimensional
/// subspace of `ℝ^d` together with a particular basis of it.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    mat: DenseMatrix,
}

impl Frame {
    /// Wraps `mat` after checking `1 ≤ K ≤ d` and orthonormality.
    pub fn new(mat: DenseMatrix) -> Result<Self, LinalgError> {
        let (d, k) = mat.shape();
        if k == 0 || k > d {
            return Err(LinalgError::InvalidRank { rank: k, dim: d });
        }
        if !mat.is_finite() {
            return Err(LinalgError::NonFinite { row: 0, col: 0 });
        }
        let dev = orthonormality_defect(&mat);
        if dev > ORTHONORMAL_TOL {
            return Err(LinalgError::NotOrthonormal { deviation: dev });
        }
        Ok(Self { mat })
    }

    /// Orthonormalises the columns of `mat` (Gram–Schmidt with one round of
    /// re-orthogonalisation). Fails if the columns are numerically dependent.
    pub fn orthonormalize(mat: &DenseMatrix) -> Result<Self, LinalgError> {
        let (d, k) = mat.shape();
        if k == 0 || k > d {
            return Err(LinalgError::InvalidRank { rank: k, dim: d });
        }
        let mut cols: Vec<Vec<f64>> = (0..k).map(|j| mat.column(j)).collect();
        let scale = cols.iter().map(|c| norm2(c)).fold(0.0, f64::max);
        for j in 0..k {
            let (done, rest) = cols.split_at_mut(j);
            let c = &mut rest[0];
            let before = norm2(c);
            for _ in 0..2 {
                for q in done.iter() {
                    let proj = dot(q, c);
                    for (x, y) in c.iter_mut().zip(q) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm2(c);
            if !(nrm > 1e-12 * scale.max(f64::MIN_POSITIVE)) || nrm < 1e-12 * before {
                return Err(LinalgError::RankDeficient { column: j });
            }
            c.iter_mut().for_each(|x| *x /= nrm);
        }
        let out = DenseMatrix::from_fn(d, k, |i, j| cols[j][i]);
        Ok(Self { mat: out })
    }

    /// Columns `e_{j}` for `j` in `indices`.
    pub fn standard_basis(dim: usize, indices: &[usize]) -> Result<Self, LinalgError> {
        let mut m = DenseMatrix::zeros(dim, indices.len());
        for (c, &j) in indices.iter().enumerate() {
            if j >= dim {
                return Err(LinalgError::InvalidRank { rank: j + 1, dim });
            }
            m[(j, c)] = 1.0;
        }
        Self::new(m)
    }

    pub(crate) fn from_matrix_unchecked(mat: DenseMatrix) -> Self {
        debug_assert!(orthonormality_defect(&mat) < 1e-8);
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn rank(&self) -> usize {
        self.mat.cols()
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.mat
    }

    /// The first `k` columns.
    pub fn leading(&self, k: usize) -> Result<Frame, LinalgError> {
        if k == 0 || k > self.rank() {
            return Err(LinalgError::InvalidRank {
                rank: k,
                dim: self.rank(),
            });
        }
        Ok(Frame {
            mat: self.mat.leading_cols(k),
        })
    }

    /// `V · O` for a `K × K` matrix `O`; the result is re-validated.
    pub fn rotated(&self, o: &DenseMatrix) -> Result<Frame, LinalgError> {
        if o.rows() != self.rank() || o.cols() != self.rank() {
            return Err(LinalgError::DimensionMismatch {
                op: "rotated",
                left: self.mat.shape(),
                right: o.shape(),
            });
        }
        Frame::new(self.mat.matmul(o))
    }

    /// Rows of the frame restricted to `rows`, as a plain matrix.
    pub fn restrict_rows(&self, rows: &[usize]) -> DenseMatrix {
        self.mat.select_rows(rows)
    }
}

/// `max |(VᵀV − I)_{ij}|`.
pub fn orthonormality_defect(mat: &DenseMatrix) -> f64 {
    let gram = mat.t_matmul(mat);
    let mut worst = 0.0f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}
