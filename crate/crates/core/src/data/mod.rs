//! Partially observed matrices and their observation masks.

mod io;

use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError};

pub use io::{
    format_dense_csv, format_dense_matrix, format_triplets, load_frame, load_matrix,
    load_partial, parse_dense_csv, parse_dense_matrix, parse_partial, parse_triplets,
    save_matrix, save_partial, PartialFormat,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate coordinate ({row}, {col})")]
    Duplicate { line: usize, row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Boolean revelation matrix `Ω`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    n: usize,
    d: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(n: usize, d: usize, bits: Vec<bool>) -> Result<Self, DataError> {
        if bits.len() != n * d {
            return Err(DataError::Shape(format!(
                "mask of {} entries for a {n}x{d} matrix",
                bits.len()
            )));
        }
        Ok(Self { n, d, bits })
    }

    pub fn full(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            bits: vec![true; n * d],
        }
    }

    pub fn empty(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            bits: vec![false; n * d],
        }
    }

    pub fn from_fn(n: usize, d: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(n * d);
        for i in 0..n {
            for j in 0..d {
                bits.push(f(i, j));
            }
        }
        Self { n, d, bits }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.bits[i * self.d + j] = value;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.d..(i + 1) * self.d]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&b| b).count()
    }

    /// Sorted observed column indices of row `i`.
    pub fn observed_in_row(&self, i: usize) -> Vec<usize> {
        self.row(i)
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }

    /// The mask as a 0/1 real matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.d, |i, j| if self.get(i, j) { 1.0 } else { 0.0 })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Mask {
        let mut bits = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            bits.extend_from_slice(self.row(i));
        }
        Mask {
            n: idx.len(),
            d: self.d,
            bits,
        }
    }
}

/// Per-row observed index sets `𝒥ᵢ` and their complements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowIndexSets {
    pub observed: Vec<Vec<usize>>,
    pub missing: Vec<Vec<usize>>,
}

impl RowIndexSets {
    pub fn from_mask(mask: &Mask) -> Self {
        let mut observed = Vec::with_capacity(mask.rows());
        let mut missing = Vec::with_capacity(mask.rows());
        for i in 0..mask.rows() {
            let (obs, mis): (Vec<usize>, Vec<usize>) =
                (0..mask.cols()).partition(|&j| mask.get(i, j));
            observed.push(obs);
            missing.push(mis);
        }
        Self { observed, missing }
    }
}

/// Co-observation counts `N = ΩᵀΩ`, `N_jk = #{i : ω_ij = ω_ik = 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoobservationCounts {
    d: usize,
    counts: Vec<u64>,
}

impl CoobservationCounts {
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> u64 {
        self.counts[j * self.d + k]
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.d, self.d, |j, k| self.get(j, k) as f64)
    }
}

/// Observed values `Y_Ω = Y ∘ Ω` with the mask `Ω`. Unobserved positions of
/// `values` are exactly zero; missingness must always be read from the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialMatrix {
    values: DenseMatrix,
    mask: Mask,
}

impl PartialMatrix {
    /// Masks `y` by `mask`, zeroing unobserved entries.
    pub fn new(y: &DenseMatrix, mask: Mask) -> Result<Self, DataError> {
        if y.shape() != (mask.rows(), mask.cols()) {
            return Err(DataError::Shape(format!(
                "values {:?} vs mask {}x{}",
                y.shape(),
                mask.rows(),
                mask.cols()
            )));
        }
        let values = DenseMatrix::from_fn(y.rows(), y.cols(), |i, j| {
            if mask.get(i, j) {
                y[(i, j)]
            } else {
                0.0
            }
        });
        if !values.is_finite() {
            return Err(LinalgError::NonFinite { row: 0, col: 0 }.into());
        }
        Ok(Self { values, mask })
    }

    /// A fully observed matrix.
    pub fn fully_observed(y: &DenseMatrix) -> Self {
        Self {
            values: y.clone(),
            mask: Mask::full(y.rows(), y.cols()),
        }
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask.get(i, j)
    }

    /// `p̂ = ‖Ω‖₁ / (nd)`.
    pub fn observed_fraction(&self) -> f64 {
        let total = self.n() * self.d();
        if total == 0 {
            return 0.0;
        }
        self.mask.count() as f64 / total as f64
    }

    pub fn row_index_sets(&self) -> RowIndexSets {
        RowIndexSets::from_mask(&self.mask)
    }

    pub fn coobservation_counts(&self) -> CoobservationCounts {
        let d = self.d();
        let mut counts = vec![0u64; d * d];
        for i in 0..self.n() {
            let obs = self.mask.observed_in_row(i);
            for &j in &obs {
                let row = &mut counts[j * d..(j + 1) * d];
                for &k in &obs {
                    row[k] += 1;
                }
            }
        }
        CoobservationCounts { d, counts }
    }

    /// The sub-matrix made of rows `idx` (in that order).
    pub fn select_rows(&self, idx: &[usize]) -> PartialMatrix {
        PartialMatrix {
            values: self.values.select_rows(idx),
            mask: self.mask.select_rows(idx),
        }
    }

    /// `c · Y_Ω`.
    pub fn scaled(&self, c: f64) -> PartialMatrix {
        PartialMatrix {
            values: self.values.scaled(c),
            mask: self.mask.clone(),
        }
    }

    /// Subtracts from each column the mean of its observed entries. Columns
    /// with no observations are left untouched (mean reported as 0).
    pub fn centered(&self) -> (PartialMatrix, Vec<f64>) {
        let (n, d) = (self.n(), self.d());
        let mut sums = vec![0.0; d];
        let mut counts = vec![0usize; d];
        for i in 0..n {
            for j in 0..d {
                if self.mask.get(i, j) {
                    sums[j] += self.values[(i, j)];
                    counts[j] += 1;
                }
            }
        }
        let means: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        let values = DenseMatrix::from_fn(n, d, |i, j| {
            if self.mask.get(i, j) {
                self.values[(i, j)] - means[j]
            } else {
                0.0
            }
        });
        (
            PartialMatrix {
                values,
                mask: self.mask.clone(),
            },
            means,
        )
    }

    /// Observed `(column, value)` pairs of row `i`.
    pub fn observed_row(&self, i: usize) -> (Vec<usize>, Vec<f64>) {
        let cols = self.mask.observed_in_row(i);
        let vals = cols.iter().map(|&j| self.values[(i, j)]).collect();
        (cols, vals)
    }
}

/// Estimated principal scores `ûᵢ` for a subset of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    rows: Vec<usize>,
    scores: DenseMatrix,
}

impl ScoreMatrix {
    pub fn new(rows: Vec<usize>, scores: DenseMatrix) -> Result<Self, DataError> {
        if rows.len() != scores.rows() {
            return Err(DataError::Shape(format!(
                "{} row indices for {} score rows",
                rows.len(),
                scores.rows()
            )));
        }
        Ok(Self { rows, scores })
    }

    /// Row indices (into the originating matrix) of each score row.
    pub fn row_indices(&self) -> &[usize] {
        &self.rows
    }

    pub fn scores(&self) -> &DenseMatrix {
        &self.scores
    }

    pub fn rank(&self) -> usize {
        self.scores.cols()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
