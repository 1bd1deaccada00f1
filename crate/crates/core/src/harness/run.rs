use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::report::{ExperimentReport, MethodDetail, MethodSummary, RepRecord};
use super::{ExperimentConfig, HarnessError, MethodSpec};
use crate::baselines::{default_lambda_grid, hard_impute, oracle_lambda};
use crate::data::PartialMatrix;
use crate::estimators::{init_estimator, prime_pca};
use crate::linalg::{sin_theta_loss, Frame};
use crate::sim::{generate_data, generate_mask, rng_split};

/// Seed of repetition `rep`: the first draw of stream `rep` of `base_seed`.
pub fn rep_seed(base_seed: u64, rep: usize) -> u64 {
    rng_split(base_seed, rep as u64).random()
}

struct Outcome {
    loss: f64,
    detail: MethodDetail,
}

type MethodResult = Result<Outcome, String>;

fn loss(frame: &Frame, truth: &Frame) -> Result<f64, String> {
    sin_theta_loss(frame, truth).map_err(|e| e.to_string())
}

fn run_method(
    method: &MethodSpec,
    k: usize,
    pm: &PartialMatrix,
    truth: &Frame,
    init: &mut Option<(Result<Frame, String>, f64)>,
) -> (MethodResult, f64) {
    // The refinement is charged for the initialiser it starts from, even when
    // an earlier method in this repetition already computed it.
    let reused = match (method, init.as_ref()) {
        (MethodSpec::Primepca { .. }, Some((_, secs))) => *secs,
        _ => 0.0,
    };
    let start = Instant::now();
    let initialised = |init: &mut Option<(Result<Frame, String>, f64)>| {
        let (frame, _) = init.get_or_insert_with(|| {
            let t = Instant::now();
            let frame = init_estimator(pm, k).map(|(v, _)| v).map_err(|e| e.to_string());
            (frame, t.elapsed().as_secs_f64())
        });
        frame.clone()
    };
    let result = match method {
        MethodSpec::InitOnly { .. } => initialised(init).and_then(|v| {
            Ok(Outcome {
                loss: loss(&v, truth)?,
                detail: MethodDetail::None,
            })
        }),
        MethodSpec::Primepca { .. } => {
            let cfg = method.prime_config(k).expect("primepca method");
            initialised(init).and_then(|v0| {
                let run = prime_pca(&cfg, &v0, pm, Some(truth)).map_err(|e| e.to_string())?;
                Ok(Outcome {
                    loss: loss(&run.frame, truth)?,
                    detail: MethodDetail::Prime {
                        stop_reason: run.stop_reason,
                        iterations: run.iterations,
                    },
                })
            })
        }
        MethodSpec::HardImpute { .. } => hard_impute(pm, k, &method.impute_config())
            .map_err(|e| e.to_string())
            .and_then(|r| {
                Ok(Outcome {
                    loss: loss(&r.frame, truth)?,
                    detail: MethodDetail::Impute {
                        iterations: r.iterations,
                        converged: r.converged,
                        lambda: None,
                    },
                })
            }),
        MethodSpec::SoftImputeOracle {
            grid_points,
            lambdas,
            ..
        } => {
            let grid = match lambdas {
                Some(l) => Ok(l.clone()),
                None => default_lambda_grid(pm, *grid_points),
            };
            grid.and_then(|g| oracle_lambda(pm, truth, k, &g, &method.impute_config()))
                .map_err(|e| e.to_string())
                .map(|c| Outcome {
                    loss: c.loss,
                    detail: MethodDetail::Impute {
                        iterations: c.result.iterations,
                        converged: c.result.converged,
                        lambda: Some(c.lambda),
                    },
                })
        }
    };
    (result, start.elapsed().as_secs_f64() + reused)
}

fn run_rep(cfg: &ExperimentConfig, rep: usize) -> Vec<RepRecord> {
    let seed = rep_seed(cfg.base_seed, rep);
    let k = cfg.rank();
    let record = |method: &MethodSpec, result: MethodResult, runtime_s: f64| {
        let (loss, detail, error) = match result {
            Ok(o) => (o.loss, o.detail, None),
            Err(e) => (f64::NAN, MethodDetail::None, Some(e)),
        };
        RepRecord {
            method: method.label().to_string(),
            rep,
            seed,
            loss,
            runtime_s,
            error,
            detail,
        }
    };
    let inputs = generate_data(&cfg.data, seed).and_then(|data| {
        let mask = generate_mask(&cfg.missingness, cfg.data.n, cfg.data.d, seed)?;
        let pm = PartialMatrix::new(&data.y, mask)
            .map_err(|e| crate::sim::SimError::InvalidSpec(e.to_string()))?;
        Ok((pm, data.frame.leading(k)?))
    });
    let (pm, truth) = match inputs {
        Ok(x) => x,
        Err(e) => {
            let msg = format!("data generation failed: {e}");
            return cfg
                .methods
                .iter()
                .map(|m| record(m, Err(msg.clone()), 0.0))
                .collect();
        }
    };
    let mut init = None;
    cfg.methods
        .iter()
        .map(|m| {
            let (result, secs) = run_method(m, k, &pm, &truth, &mut init);
            record(m, result, secs)
        })
        .collect()
}

/// Runs every method on `cfg.reps` independent data sets.
///
/// Repetition `r` draws its data and mask from [`rep_seed`]`(base_seed, r)`.
/// A method that fails on a repetition is recorded with its error and
/// excluded from the mean; the remaining work continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let per_rep: Vec<Vec<RepRecord>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_rep(cfg, rep))
        .collect();
    let mut records = Vec::with_capacity(cfg.reps * cfg.methods.len());
    for m in 0..cfg.methods.len() {
        records.extend(per_rep.iter().map(|recs| recs[m].clone()));
    }
    let summaries = cfg
        .methods
        .iter()
        .map(|m| {
            let label = m.label();
            MethodSummary::from_records(label, records.iter().filter(|r| r.method == label))
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        records,
        summaries,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
