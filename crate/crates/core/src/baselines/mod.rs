//! Matrix-completion baselines: soft-thresholded and hard-truncated iterative
//! SVD imputation, plus oracle selection of the soft-threshold level.
//!
//! Every iterate is a low-rank matrix `Z = A diag(s) Bᵀ`. The completed matrix
//! `P_Ω(Y) + P_Ωᶜ(Z)` equals `Z + R` with `R` supported on observed entries,
//! so its leading singular triplets are found from the `d × d` Gram matrix
//! without ever factorising an `n × d` dense matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::PartialMatrix;
use crate::linalg::{
    jacobi_svd, psd_top_k_eigenvectors, sin_theta_loss, DenseMatrix, Frame, LinalgError,
};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("rank {k} exceeds min(n, d) = {limit}")]
    RankTooLarge { k: usize, limit: usize },
    #[error("the lambda grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn default_rank_max() -> usize {
    20
}

fn default_thresh() -> f64 {
    1e-5
}

fn default_max_iter() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImputeConfig {
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_rank_max")]
    pub rank_max: usize,
    /// Stop once `‖Ŷ⁽ᵗ⁾ − Ŷ⁽ᵗ⁻¹⁾‖_F / ‖Ŷ⁽ᵗ⁻¹⁾‖_F < thresh`.
    #[serde(default = "default_thresh")]
    pub thresh: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            rank_max: default_rank_max(),
            thresh: default_thresh(),
            max_iter: default_max_iter(),
        }
    }
}

impl ImputeConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: String| Err(BaselineError::InvalidConfig(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.rank_max == 0 {
            return bad("rank_max must be at least 1".into());
        }
        if !(self.thresh > 0.0) {
            return bad(format!("thresh must be positive, got {}", self.thresh));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        Ok(())
    }
}

/// Output of [`soft_impute`] and [`hard_impute`].
#[derive(Clone, Debug)]
pub struct ImputeResult {
    /// `P_Ω(Y) + P_Ωᶜ(Z)` for the final low-rank iterate `Z`.
    pub completed: DenseMatrix,
    /// Nonzero singular values of `Z`, nonincreasing.
    pub singular_values: Vec<f64>,
    /// Top-`K` right singular vectors of the completed matrix that produced `Z`.
    pub frame: Frame,
    pub iterations: usize,
    pub converged: bool,
    /// `½‖P_Ω(Y − Z)‖_F² + λ‖Z‖_*` after each iteration.
    pub objective: Vec<f64>,
}

impl ImputeResult {
    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }
}

/// Observed entries laid out by row.
struct Observed {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Observed {
    fn new(pm: &PartialMatrix) -> Self {
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..pm.n() {
            let (c, v) = pm.observed_row(i);
            cols.extend(c);
            vals.extend(v);
            row_start.push(cols.len());
        }
        Self {
            row_start,
            cols,
            vals,
        }
    }

    fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_start[i]..self.row_start[i + 1]
    }
}

/// A rank-`r` SVD `A diag(s) Bᵀ`, `A` being `n × r` and `B` being `d × r`.
struct LowRank {
    a: DenseMatrix,
    s: Vec<f64>,
    b: DenseMatrix,
}

impl LowRank {
    fn zero(n: usize, d: usize) -> Self {
        Self {
            a: DenseMatrix::zeros(n, 0),
            s: Vec::new(),
            b: DenseMatrix::zeros(d, 0),
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let (ai, bj) = (self.a.row(i), self.b.row(j));
        self.s
            .iter()
            .enumerate()
            .map(|(c, s)| ai[c] * s * bj[c])
            .sum()
    }

    fn dense(&self) -> DenseMatrix {
        let scaled = DenseMatrix::from_fn(self.a.rows(), self.s.len(), |i, c| {
            self.a[(i, c)] * self.s[c]
        });
        scaled.matmul(&self.b.transpose())
    }
}

/// Residuals `y_ij − Z_ij` on observed entries, in [`Observed`] order.
fn residuals(obs: &Observed, z: &LowRank, n: usize) -> Vec<f64> {
    let mut r = vec![0.0; obs.vals.len()];
    for i in 0..n {
        for p in obs.row(i) {
            r[p] = obs.vals[p] - z.entry(i, obs.cols[p]);
        }
    }
    r
}

/// Top-`r` singular triplets of `Z + R`.
fn completed_svd(
    obs: &Observed,
    z: &LowRank,
    resid: &[f64],
    r: usize,
) -> Result<LowRank, BaselineError> {
    let (n, d) = (z.a.rows(), z.b.rows());
    let q = z.s.len();
    // G = B S² Bᵀ + B C + Cᵀ Bᵀ + RᵀR with C = S Aᵀ R.
    let mut g = DenseMatrix::zeros(d, d);
    let mut c = DenseMatrix::zeros(q, d);
    for i in 0..n {
        let range = obs.row(i);
        let (cols, res) = (&obs.cols[range.clone()], &resid[range]);
        let ai = z.a.row(i);
        for (&j, &rij) in cols.iter().zip(res) {
            for e in 0..q {
                c[(e, j)] += z.s[e] * ai[e] * rij;
            }
            let row = g.row_mut(j);
            for (&l, &ril) in cols.iter().zip(res) {
                row[l] += rij * ril;
            }
        }
    }
    if q > 0 {
        // [BS B] [(BS)ᵀ; 2C] = B S² Bᵀ + 2 B C; symmetrising splits 2 B C
        // into B C + Cᵀ Bᵀ.
        let bs = DenseMatrix::from_fn(d, q, |j, e| z.b[(j, e)] * z.s[e]);
        let left = DenseMatrix::from_fn(d, 2 * q, |j, e| {
            if e < q {
                bs[(j, e)]
            } else {
                z.b[(j, e - q)]
            }
        });
        let right = DenseMatrix::from_fn(2 * q, d, |e, l| {
            if e < q {
                bs[(l, e)]
            } else {
                2.0 * c[(e - q, l)]
            }
        });
        g.add_product(&left, &right);
    }
    g.symmetrize();
    let warm = (q > 0).then_some(&z.b);
    let (basis, _) = psd_top_k_eigenvectors(&g, r, warm)?;
    let basis = basis.into_matrix();

    // M = Ŷ B' = A S (Bᵀ B') + R B'; its SVD gives the triplets of Ŷ.
    let mut m = if q > 0 {
        let proj = z.b.t_matmul(&basis);
        let scaled = DenseMatrix::from_fn(n, q, |i, e| z.a[(i, e)] * z.s[e]);
        scaled.matmul(&proj)
    } else {
        DenseMatrix::zeros(n, r)
    };
    for i in 0..n {
        let range = obs.row(i);
        let out = m.row_mut(i);
        for (&j, &rij) in obs.cols[range.clone()].iter().zip(&resid[range]) {
            let bj = basis.row(j);
            for (o, b) in out.iter_mut().zip(bj) {
                *o += rij * b;
            }
        }
    }
    let svd = jacobi_svd((0..r).map(|e| m.column(e)).collect());
    let a = DenseMatrix::from_fn(n, r, |i, e| svd.u[e][i]);
    let b = basis.matmul(&svd.v);
    Ok(LowRank { a, s: svd.s, b })
}

fn objective(resid: &[f64], z: &LowRank, lambda: f64) -> f64 {
    0.5 * resid.iter().map(|r| r * r).sum::<f64>() + lambda * z.s.iter().sum::<f64>()
}

fn iterate(
    pm: &PartialMatrix,
    k: usize,
    rank: usize,
    lambda: f64,
    thresh: f64,
    max_iter: usize,
) -> Result<ImputeResult, BaselineError> {
    let (n, d) = (pm.n(), pm.d());
    let limit = n.min(d);
    if k == 0 || k > limit {
        return Err(BaselineError::RankTooLarge { k, limit });
    }
    let r = rank.max(k).min(limit);
    let obs = Observed::new(pm);
    let observed_norm2: f64 = obs.vals.iter().map(|v| v * v).sum();

    let mut z = LowRank::zero(n, d);
    let mut z_dense = DenseMatrix::zeros(n, d);
    let mut resid = obs.vals.clone();
    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_right = None;
    for _ in 0..max_iter {
        iterations += 1;
        let full = completed_svd(&obs, &z, &resid, r)?;
        last_right = Some(full.b.leading_cols(k));
        let keep = full
            .s
            .iter()
            .take(rank)
            .take_while(|&&s| s - lambda > 0.0)
            .count();
        let next = LowRank {
            a: full.a.leading_cols(keep),
            s: full.s[..keep].iter().map(|s| s - lambda).collect(),
            b: full.b.leading_cols(keep),
        };
        let next_dense = next.dense();
        let mut change = 0.0;
        let mut previous = observed_norm2;
        for i in 0..n {
            let mask = pm.mask().row(i);
            let (zn, zo) = (next_dense.row(i), z_dense.row(i));
            for j in 0..d {
                if !mask[j] {
                    change += (zn[j] - zo[j]).powi(2);
                    previous += zo[j] * zo[j];
                }
            }
        }
        z = next;
        z_dense = next_dense;
        resid = residuals(&obs, &z, n);
        objective_trace.push(objective(&resid, &z, lambda));
        let rel = if previous > 0.0 {
            (change / previous).sqrt()
        } else if change == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if rel < thresh {
            converged = true;
            break;
        }
    }
    let mut completed = z_dense;
    for i in 0..n {
        for p in obs.row(i) {
            completed[(i, obs.cols[p])] = obs.vals[p];
        }
    }
    let right = last_right.expect("at least one iteration runs");
    Ok(ImputeResult {
        completed,
        singular_values: z.s,
        frame: Frame::orthonormalize(&right)?,
        iterations,
        converged,
        objective: objective_trace,
    })
}

/// Iterative soft-thresholded SVD imputation starting from `Y_Ω` (zeros at
/// unobserved entries), keeping at most `rank_max` singular values.
pub fn soft_impute(
    pm: &PartialMatrix,
    cfg: &ImputeConfig,
    k: usize,
) -> Result<ImputeResult, BaselineError> {
    cfg.validate()?;
    iterate(pm, k, cfg.rank_max, cfg.lambda, cfg.thresh, cfg.max_iter)
}

/// Iterative rank-`K` truncated SVD imputation (no shrinkage). `cfg.lambda`
/// and `cfg.rank_max` are ignored.
pub fn hard_impute(
    pm: &PartialMatrix,
    k: usize,
    cfg: &ImputeConfig,
) -> Result<ImputeResult, BaselineError> {
    cfg.validate()?;
    iterate(pm, k, k, 0.0, cfg.thresh, cfg.max_iter)
}

/// `points` log-spaced values from `1e-3 σ₁(Y_Ω)` to `σ₁(Y_Ω)`.
pub fn default_lambda_grid(pm: &PartialMatrix, points: usize) -> Result<Vec<f64>, BaselineError> {
    if points == 0 {
        return Err(BaselineError::EmptyGrid);
    }
    let obs = Observed::new(pm);
    let z = LowRank::zero(pm.n(), pm.d());
    let top = completed_svd(&obs, &z, &obs.vals, 1)?.s[0];
    if points == 1 {
        return Ok(vec![top]);
    }
    let (lo, hi) = ((top * 1e-3).ln(), top.ln());
    Ok((0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Outcome of [`oracle_lambda`].
#[derive(Clone, Debug)]
pub struct OracleChoice {
    pub lambda: f64,
    pub loss: f64,
    pub result: ImputeResult,
    /// `(λ, loss)` for every grid point, in grid order.
    pub path: Vec<(f64, f64)>,
}

/// Runs [`soft_impute`] at every grid point and keeps the `λ` whose frame is
/// closest to `truth`; ties go to the smaller `λ`.
pub fn oracle_lambda(
    pm: &PartialMatrix,
    truth: &Frame,
    k: usize,
    grid: &[f64],
    base: &ImputeConfig,
) -> Result<OracleChoice, BaselineError> {
    if grid.is_empty() {
        return Err(BaselineError::EmptyGrid);
    }
    let runs: Vec<(f64, ImputeResult, f64)> = grid
        .par_iter()
        .map(|&lambda| {
            let cfg = ImputeConfig {
                lambda,
                ..base.clone()
            };
            let res = soft_impute(pm, &cfg, k)?;
            let loss = sin_theta_loss(&res.frame, truth)?;
            Ok((lambda, res, loss))
        })
        .collect::<Result<_, BaselineError>>()?;
    let path = runs.iter().map(|(l, _, loss)| (*l, *loss)).collect();
    let best = runs
        .into_iter()
        .reduce(|best, cand| {
            let better = cand.2 < best.2 || (cand.2 == best.2 && cand.0 < best.0);
            if better {
                cand
            } else {
                best
            }
        })
        .expect("grid is nonempty");
    Ok(OracleChoice {
        lambda: best.0,
        loss: best.2,
        result: best.1,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Mask;
    use crate::linalg::thin_svd;

    fn low_rank(n: usize, d: usize, k: usize) -> DenseMatrix {
        let u = DenseMatrix::from_fn(n, k, |i, a| (((i + 1) * (a + 3)) % 7) as f64 - 3.0);
        let v = DenseMatrix::from_fn(d, k, |j, a| (((j + 2) * (a + 1)) % 5) as f64 - 2.0 + a as f64);
        u.matmul(&v.transpose())
    }

    #[test]
    fn completed_svd_matches_dense() {
        let y = low_rank(9, 7, 2).add(&DenseMatrix::from_fn(9, 7, |i, j| 0.1 * ((i * j) % 3) as f64));
        let mask = Mask::from_fn(9, 7, |i, j| (i + j) % 3 != 0);
        let pm = PartialMatrix::new(&y, mask).unwrap();
        let obs = Observed::new(&pm);
        let z = LowRank {
            a: Frame::orthonormalize(&DenseMatrix::from_fn(9, 2, |i, a| (i * (a + 2) % 5) as f64 + a as f64))
                .unwrap()
                .into_matrix(),
            s: vec![3.0, 1.5],
            b: Frame::orthonormalize(&DenseMatrix::from_fn(7, 2, |j, a| ((j + a) % 4) as f64 - a as f64))
                .unwrap()
                .into_matrix(),
        };
        let resid = residuals(&obs, &z, 9);
        let mut dense = z.dense();
        for i in 0..9 {
            for j in 0..7 {
                if pm.is_observed(i, j) {
                    dense[(i, j)] = y[(i, j)];
                }
            }
        }
        let got = completed_svd(&obs, &z, &resid, 3).unwrap();
        let want = thin_svd(&dense, 3).unwrap();
        for (a, b) in got.s.iter().zip(&want.singular_values) {
            assert!((a - b).abs() < 1e-9 * want.singular_values[0]);
        }
        let recon = DenseMatrix::from_fn(9, 7, |i, j| {
            (0..3).map(|e| got.a[(i, e)] * got.s[e] * got.b[(j, e)]).sum()
        });
        assert!(recon.sub(&want.reconstruct()).max_abs() < 1e-9 * want.singular_values[0]);
    }

    #[test]
    fn fully_observed_lambda_zero_is_fixed_point() {
        let y = low_rank(8, 6, 2);
        let pm = PartialMatrix::fully_observed(&y);
        let res = soft_impute(&pm, &ImputeConfig::default(), 2).unwrap();
        assert!(res.completed.sub(&y).max_abs() < 1e-12);
        let s = &res.singular_values;
        assert!(s[2..].iter().all(|&x| x < 1e-10 * s[0]));
    }

    #[test]
    fn large_lambda_shrinks_to_zero() {
        let y = low_rank(8, 6, 2);
        let mask = Mask::from_fn(8, 6, |i, j| (i * 3 + j) % 4 != 0);
        let pm = PartialMatrix::new(&y, mask).unwrap();
        let top = default_lambda_grid(&pm, 1).unwrap()[0];
        let res = soft_impute(&pm, &ImputeConfig::with_lambda(top * 1.0001), 1).unwrap();
        assert!(res.singular_values.is_empty());
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        for i in 0..8 {
            for j in 0..6 {
                let want = if pm.is_observed(i, j) { y[(i, j)] } else { 0.0 };
                assert_eq!(res.completed[(i, j)], want);
            }
        }
    }

    #[test]
    fn single_step_soft_threshold_on_rank_one() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 4.0];
        let y = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        let pm = PartialMatrix::fully_observed(&y);
        let cfg = ImputeConfig {
            lambda: 1.0,
            max_iter: 1,
            ..ImputeConfig::default()
        };
        let res = soft_impute(&pm, &cfg, 1).unwrap();
        // σ₁ = ‖u‖‖v‖ = 3 · 5.
        assert_eq!(res.singular_values.len(), 1);
        assert!((res.singular_values[0] - 14.0).abs() < 1e-12);
    }

    #[test]
    fn hard_impute_fully_observed_one_iteration() {
        let y = low_rank(10, 6, 2);
        let pm = PartialMatrix::fully_observed(&y);
        let res = hard_impute(&pm, 2, &ImputeConfig::default()).unwrap();
        assert!(res.completed.sub(&y).max_abs() < 1e-10);
        let truth = thin_svd(&y, 2).unwrap().right;
        assert!(sin_theta_loss(&res.frame, &truth).unwrap() < 1e-10);
    }

    #[test]
    fn hard_impute_keeps_observed_entries() {
        let y = low_rank(12, 8, 2);
        let mask = Mask::from_fn(12, 8, |i, j| (i + 2 * j) % 5 != 0);
        let pm = PartialMatrix::new(&y, mask).unwrap();
        for iters in [1, 3, 10] {
            let cfg = ImputeConfig {
                max_iter: iters,
                ..ImputeConfig::default()
            };
            let res = hard_impute(&pm, 2, &cfg).unwrap();
            for i in 0..12 {
                for j in 0..8 {
                    if pm.is_observed(i, j) {
                        assert_eq!(res.completed[(i, j)], y[(i, j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(ImputeConfig::with_lambda(-1.0).validate().is_err());
        assert!(ImputeConfig { rank_max: 0, ..ImputeConfig::default() }.validate().is_err());
        assert!(ImputeConfig { thresh: 0.0, ..ImputeConfig::default() }.validate().is_err());
        let pm = PartialMatrix::fully_observed(&low_rank(4, 3, 1));
        assert!(matches!(
            hard_impute(&pm, 4, &ImputeConfig::default()),
            Err(BaselineError::RankTooLarge { k: 4, limit: 3 })
        ));
    }

    #[test]
    fn grid_endpoints() {
        let pm = PartialMatrix::fully_observed(&low_rank(8, 6, 2));
        let grid = default_lambda_grid(&pm, 20).unwrap();
        let top = thin_svd(pm.values(), 1).unwrap().singular_values[0];
        assert_eq!(grid.len(), 20);
        assert!((grid[19] - top).abs() < 1e-9 * top);
        assert!((grid[0] - 1e-3 * top).abs() < 1e-9 * top);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn oracle_single_point_and_zero() {
        let y = low_rank(10, 6, 2);
        let pm = PartialMatrix::fully_observed(&y);
        let truth = thin_svd(&y, 2).unwrap().right;
        let pick = oracle_lambda(&pm, &truth, 2, &[0.0], &ImputeConfig::default()).unwrap();
        assert_eq!(pick.lambda, 0.0);
        assert!(pick.loss <= 1e-8);
        let pick = oracle_lambda(&pm, &truth, 2, &[0.7], &ImputeConfig::default()).unwrap();
        assert_eq!(pick.lambda, 0.7);
        assert!(oracle_lambda(&pm, &truth, 2, &[], &ImputeConfig::default()).is_err());
    }
}
