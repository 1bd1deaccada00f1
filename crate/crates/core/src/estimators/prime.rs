use serde::{Deserialize, Serialize};

use super::refine::{fit_rows, passes_screen, refine_with_fits, row_data};
use super::{check_frame, EstimatorError};
use crate::data::PartialMatrix;
use crate::linalg::{sin_theta_loss, Frame};

/// Screening threshold used throughout the simulation studies.
pub const DEFAULT_SIGMA_STAR: f64 = 3.0;
/// Stopping threshold for noisy data; noiseless runs use 0.
pub const DEFAULT_NOISY_KAPPA_STAR: f64 = 1e-6;
pub const DEFAULT_N_ITER: usize = 2000;

fn default_n_iter() -> usize {
    DEFAULT_N_ITER
}

fn default_sigma_star() -> f64 {
    DEFAULT_SIGMA_STAR
}

/// Inputs of the iterative estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimeConfig {
    pub k: usize,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    #[serde(default = "default_sigma_star")]
    pub sigma_star: f64,
    #[serde(default)]
    pub kappa_star: f64,
    /// De-mean columns over their observed entries before estimation.
    #[serde(default)]
    pub center: bool,
}

impl PrimeConfig {
    /// `σ* = 3`, `κ* = 0`, 2000 iterations.
    pub fn noiseless(k: usize) -> Self {
        Self {
            k,
            n_iter: default_n_iter(),
            sigma_star: DEFAULT_SIGMA_STAR,
            kappa_star: 0.0,
            center: false,
        }
    }

    /// As [`PrimeConfig::noiseless`] but stopping once successive iterates
    /// differ by less than `1e-6` in sin Θ loss.
    pub fn noisy(k: usize) -> Self {
        Self {
            kappa_star: DEFAULT_NOISY_KAPPA_STAR,
            ..Self::noiseless(k)
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: String| Err(EstimatorError::InvalidConfig(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.n_iter == 0 {
            return bad("n_iter must be at least 1".into());
        }
        if !(self.sigma_star > 0.0) {
            return bad(format!("sigma_star must be positive, got {}", self.sigma_star));
        }
        if !(self.kappa_star >= 0.0) {
            return bad(format!("kappa_star must be nonnegative, got {}", self.kappa_star));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration index `t`.
    pub iter: usize,
    /// `L(V̂⁽ᵗ⁾, V̂⁽ᵗ⁻¹⁾)`.
    pub step_change: f64,
    /// `|ℐ⁽ᵗ⁻¹⁾|`.
    pub screened_rows: usize,
    pub loss_vs_truth: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryReport {
    pub iterations: Vec<IterationRecord>,
    pub frame: Frame,
    pub stop_reason: StopReason,
}

impl TrajectoryReport {
    pub fn iterations_used(&self) -> usize {
        self.iterations.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.iterations.last().and_then(|r| r.loss_vs_truth)
    }
}

/// Iterates screening and refinement from `v0` until the step change falls
/// below `κ*` or `n_iter` iterations have run. Rows are re-screened against
/// the current iterate at every iteration.
pub fn prime_pca(
    cfg: &PrimeConfig,
    v0: &Frame,
    pm: &PartialMatrix,
    truth: Option<&Frame>,
) -> Result<TrajectoryReport, EstimatorError> {
    cfg.validate()?;
    let k = cfg.k;
    check_frame(k, v0, pm.d())?;
    if let Some(t) = truth {
        check_frame(k, t, pm.d())?;
    }
    let centered;
    let pm = if cfg.center {
        centered = pm.centered().0;
        &centered
    } else {
        pm
    };
    let d = pm.d();
    let candidates: Vec<usize> = (0..pm.n())
        .filter(|&i| pm.mask().row_count(i) > k)
        .collect();
    let candidates = row_data(pm, &candidates);

    let mut current = v0.clone();
    let mut records = Vec::new();
    let mut stop_reason = StopReason::MaxIter;
    for t in 1..=cfg.n_iter {
        let fits: Vec<_> = fit_rows(current.as_matrix(), &candidates)
            .into_iter()
            .filter(|fit| passes_screen(fit, k, d, cfg.sigma_star))
            .collect();
        if fits.is_empty() {
            return Err(EstimatorError::EmptyScreening { iteration: t });
        }
        if k > fits.len() {
            return Err(EstimatorError::RankTooLarge {
                k,
                limit: fits.len(),
            });
        }
        let next = refine_with_fits(k, &current, &fits)?;
        let step_change = sin_theta_loss(&next, &current)?;
        let loss_vs_truth = truth.map(|t| sin_theta_loss(&next, t)).transpose()?;
        records.push(IterationRecord {
            iter: t,
            step_change,
            screened_rows: fits.len(),
            loss_vs_truth,
        });
        current = next;
        if step_change < cfg.kappa_star {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok(TrajectoryReport {
        iterations: records,
        frame: current,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{thin_svd, DenseMatrix};

    fn data() -> DenseMatrix {
        DenseMatrix::from_fn(30, 8, |i, j| {
            let a = ((i * 7 + 3) % 13) as f64 - 6.0;
            let b = ((i * 5 + 1) % 9) as f64 - 4.0;
            a * ((j % 3) as f64 + 1.0) + b * (j as f64 - 3.5) + 0.01 * ((i * j) % 7) as f64
        })
    }

    #[test]
    fn config_validation() {
        assert!(PrimeConfig::noisy(2).validate().is_ok());
        for bad in [
            PrimeConfig { k: 0, ..PrimeConfig::noisy(2) },
            PrimeConfig { n_iter: 0, ..PrimeConfig::noisy(2) },
            PrimeConfig { sigma_star: 0.0, ..PrimeConfig::noisy(2) },
            PrimeConfig { kappa_star: -1.0, ..PrimeConfig::noisy(2) },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn huge_kappa_stops_after_one_iteration() {
        let pm = PartialMatrix::fully_observed(&data());
        let cfg = PrimeConfig {
            kappa_star: 1e300,
            ..PrimeConfig::noiseless(2)
        };
        let v0 = Frame::standard_basis(8, &[0, 1]).unwrap();
        let report = prime_pca(&cfg, &v0, &pm, None).unwrap();
        assert_eq!(report.iterations_used(), 1);
        assert_eq!(report.stop_reason, StopReason::Converged);
    }

    #[test]
    fn fully_observed_run_hits_exact_svd_at_first_iteration() {
        let y = data();
        let truth = thin_svd(&y, 2).unwrap().right;
        let pm = PartialMatrix::fully_observed(&y);
        let cfg = PrimeConfig {
            n_iter: 3,
            ..PrimeConfig::noiseless(2)
        };
        let v0 = Frame::standard_basis(8, &[0, 1]).unwrap();
        let report = prime_pca(&cfg, &v0, &pm, Some(&truth)).unwrap();
        assert_eq!(report.stop_reason, StopReason::MaxIter);
        assert_eq!(report.iterations_used(), 3);
        assert!(report.iterations[0].loss_vs_truth.unwrap() <= 1e-8);
        for r in &report.iterations[1..] {
            assert!(r.step_change < 1e-10);
        }
    }
}
