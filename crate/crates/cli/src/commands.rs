use std::fs;
use std::path::{Path, PathBuf};

use primepca::baselines::{hard_impute, soft_impute, ImputeConfig};
use primepca::data::{
    format_dense_matrix, load_frame, load_partial, save_partial, PartialMatrix, ScoreMatrix,
};
use primepca::estimators::{
    estimate_scores, init_estimator, prime_pca, reconstruct_covariance, PrimeConfig,
};
use primepca::harness::{run_experiment, ExperimentConfig, HarnessError, OutputPaths};
use primepca::linalg::{sin_theta_loss, two_to_inf_distance, Frame};
use primepca::sim::{generate_data, generate_mask};

use crate::{presets, BenchArgs, CliError, EvalArgs, FitArgs, Format, Globals, Method, ScoresArgs, SimulateArgs};

fn out_dir(g: &Globals) -> Result<PathBuf, CliError> {
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn load(path: &Path, format: Format, center: bool) -> Result<PartialMatrix, CliError> {
    let pm = load_partial(path, format.into()).map_err(CliError::runtime)?;
    Ok(if center { pm.centered().0 } else { pm })
}

/// One line per data row; rows without a score (too few observed entries)
/// are `NA`, matching the missing-value convention of the input CSV.
fn format_scores(scores: &ScoreMatrix, n: usize) -> String {
    let mut lines = vec![vec!["NA".to_string(); scores.rank()].join(","); n];
    for (r, &i) in scores.row_indices().iter().enumerate() {
        lines[i] = scores
            .scores()
            .row(r)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
    }
    lines.join("\n") + "\n"
}

pub fn simulate(g: &Globals, a: SimulateArgs) -> Result<(), CliError> {
    let data_spec = presets::data_model(&a.data)?;
    let miss = presets::missingness(&a.missingness)?;
    miss.validate(data_spec.n, data_spec.d).map_err(CliError::usage)?;
    let seed = g.seed.unwrap_or(0);
    let data = generate_data(&data_spec, seed).map_err(CliError::runtime)?;
    let mask = generate_mask(&miss, data_spec.n, data_spec.d, seed).map_err(CliError::runtime)?;
    let pm = PartialMatrix::new(&data.y, mask).map_err(CliError::runtime)?;
    let dir = out_dir(g)?;
    let observed = match a.format {
        Format::DenseCsv => dir.join("observed.csv"),
        Format::CoordinateTriplet => dir.join("observed.txt"),
    };
    save_partial(&pm, &observed, a.format.into()).map_err(CliError::runtime)?;
    write(&dir.join("complete.csv"), &format_dense_matrix(&data.y))?;
    write(&dir.join("mask.csv"), &format_dense_matrix(&pm.mask().to_dense()))?;
    write(&dir.join("frame.csv"), &format_dense_matrix(data.frame.as_matrix()))?;
    println!(
        "wrote {}x{} matrix ({} observed, seed {seed}) to {}",
        pm.n(),
        pm.d(),
        pm.mask().count(),
        dir.display()
    );
    Ok(())
}

pub fn fit(g: &Globals, a: FitArgs) -> Result<(), CliError> {
    let pm = load(&a.input, a.format, a.center)?;
    let k = a.rank;
    if k == 0 || k > pm.d() {
        return Err(CliError::usage(format!("--rank must lie in 1..={}", pm.d())));
    }
    let dir = out_dir(g)?;
    let frame = match a.method {
        Method::Init => init_estimator(&pm, k).map_err(CliError::runtime)?.0,
        Method::Primepca => {
            let cfg = PrimeConfig {
                k,
                n_iter: a.n_iter,
                sigma_star: a.sigma_star,
                kappa_star: a.kappa_star,
                center: false,
            };
            cfg.validate().map_err(CliError::usage)?;
            let (v0, _) = init_estimator(&pm, k).map_err(CliError::runtime)?;
            let run = prime_pca(&cfg, &v0, &pm, None).map_err(CliError::runtime)?;
            let mut trace = String::from("iter,step_change,screened_rows\n");
            for r in &run.iterations {
                trace += &format!("{},{},{}\n", r.iter, r.step_change, r.screened_rows);
            }
            write(&dir.join("trace.csv"), &trace)?;
            eprintln!("{} iterations ({:?})", run.iterations_used(), run.stop_reason);
            run.frame
        }
        Method::HardImpute => hard_impute(&pm, k, &ImputeConfig::default())
            .map_err(CliError::runtime)?
            .frame,
        Method::SoftImpute => {
            let cfg = ImputeConfig::with_lambda(a.lambda);
            cfg.validate().map_err(CliError::usage)?;
            soft_impute(&pm, &cfg, k).map_err(CliError::runtime)?.frame
        }
    };
    let scores = estimate_scores(&frame, &pm, k).map_err(CliError::runtime)?;
    write(&dir.join("frame.csv"), &format_dense_matrix(frame.as_matrix()))?;
    write(&dir.join("scores.csv"), &format_scores(&scores, pm.n()))?;
    println!("wrote frame.csv and scores.csv to {}", dir.display());
    Ok(())
}

pub fn bench(g: &Globals, a: BenchArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| CliError::usage(format!("{}: {e}", a.config.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", a.config.display())))?;
    if let Some(seed) = g.seed {
        cfg.base_seed = seed;
    }
    if let Some(reps) = a.reps {
        cfg.reps = reps;
    }
    if let Some(dir) = &g.out {
        cfg.outputs = OutputPaths::in_dir(dir);
    } else if cfg.outputs == OutputPaths::default() {
        cfg.outputs = OutputPaths::in_dir(".");
    }
    let report = run_experiment(&cfg).map_err(|e| match e {
        HarnessError::InvalidConfig(_) | HarnessError::Json(_) | HarnessError::Sim(_) => {
            CliError::usage(e)
        }
        HarnessError::Data(_) => CliError::runtime(e),
    })?;
    report.write_outputs(&cfg.outputs).map_err(CliError::runtime)?;
    println!("{:<24} {:>10} {:>10} {:>6} {:>6}", "method", "mean", "se", "ok", "failed");
    for s in &report.summaries {
        println!(
            "{:<24} {:>10.4} {:>10.4} {:>6} {:>6}",
            s.method, s.mean, s.se, s.completed, s.failed
        );
    }
    println!("{} reps in {:.1} s", cfg.reps, report.wall_time_s);
    Ok(())
}

pub fn scores(g: &Globals, a: ScoresArgs) -> Result<(), CliError> {
    let pm = load(&a.input, a.format, a.center)?;
    let frame = load_frame(&a.frame).map_err(CliError::runtime)?;
    if frame.dim() != pm.d() {
        return Err(CliError::runtime(format!(
            "frame has {} rows but the data has {} columns",
            frame.dim(),
            pm.d()
        )));
    }
    let k = frame.rank();
    let scores = estimate_scores(&frame, &pm, k).map_err(CliError::runtime)?;
    let cov = reconstruct_covariance(&frame, &scores, pm.n()).map_err(CliError::runtime)?;
    let dir = out_dir(g)?;
    write(&dir.join("scores.csv"), &format_scores(&scores, pm.n()))?;
    let spectrum: String = cov.eigenvalues.iter().map(|v| format!("{v}\n")).collect();
    write(&dir.join("spectrum.csv"), &spectrum)?;
    println!("{} of {} rows scored", scores.len(), pm.n());
    for (i, v) in cov.eigenvalues.iter().enumerate() {
        println!("eigenvalue {} {v}", i + 1);
    }
    Ok(())
}

pub fn eval(g: &Globals, a: EvalArgs) -> Result<(), CliError> {
    let read = |p: &Path| -> Result<Frame, CliError> { load_frame(p).map_err(CliError::runtime) };
    let (v1, v2) = (read(&a.first)?, read(&a.second)?);
    let loss = sin_theta_loss(&v1, &v2).map_err(CliError::runtime)?;
    let tti = two_to_inf_distance(&v1, &v2).map_err(CliError::runtime)?;
    let text = format!("loss {loss}\ntwo_to_inf {tti}\n");
    print!("{text}");
    if let Some(path) = &g.out {
        write(path, &text)?;
    }
    Ok(())
}
