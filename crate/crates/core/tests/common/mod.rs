//! Checks shared by the property tests and the acceptance runner. Each
//! returns `Ok(detail)` when the property holds and `Err(detail)` otherwise.

#![allow(dead_code)]

use primepca::baselines::{hard_impute, soft_impute, ImputeConfig};
use primepca::data::{Mask, PartialMatrix};
use primepca::estimators::{init_weights, refine};
use primepca::linalg::{
    pseudoinverse, sin_theta_loss, two_to_inf_distance, DenseMatrix, Frame, DEFAULT_PINV_TOL,
};
use primepca::sim::{generate_mask, rng_split, sample_mask, MissingnessSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Check = Result<String, String>;

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthonormal `d × k` frame.
pub fn random_frame(rng: &mut impl Rng, d: usize, k: usize) -> Frame {
    Frame::orthonormalize(&gaussian(rng, d, k)).expect("gaussian columns are independent")
}

pub fn random_orthogonal(rng: &mut impl Rng, k: usize) -> DenseMatrix {
    random_frame(rng, k, k).into_matrix()
}

/// Noiseless rank-`k` data `U Vᵀ` with standard Gaussian scores.
pub fn low_rank(rng: &mut impl Rng, n: usize, v: &Frame, scale: f64) -> DenseMatrix {
    gaussian(rng, n, v.rank())
        .scaled(scale)
        .matmul(&v.as_matrix().transpose())
}

pub fn homogeneous(rng: &mut ChaCha8Rng, n: usize, d: usize, p: f64) -> Mask {
    sample_mask(&MissingnessSpec::Homogeneous { p }, n, d, rng).expect("valid p")
}

/// `|L(V₁O₁, V₂O₂) − L(V₁, V₂)|` and the same for `𝒯`, maximised over
/// `cases` random frames and rotations.
pub fn rotation_invariance(cases: usize, seed: u64) -> Check {
    let mut rng = rng_split(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let d = rng.random_range(2..=12);
        let k = rng.random_range(1..=d.min(4));
        let v1 = random_frame(&mut rng, d, k);
        // Half the cases compare nearby frames so both metrics are exercised
        // away from their maxima.
        let v2 = if rng.random::<bool>() {
            random_frame(&mut rng, d, k)
        } else {
            let noise = gaussian(&mut rng, d, k).scaled(0.05);
            Frame::orthonormalize(&v1.as_matrix().add(&noise)).unwrap()
        };
        let o1 = random_orthogonal(&mut rng, k);
        let o2 = random_orthogonal(&mut rng, k);
        let (r1, r2) = (v1.rotated(&o1).unwrap(), v2.rotated(&o2).unwrap());
        let dl = (sin_theta_loss(&r1, &r2).unwrap() - sin_theta_loss(&v1, &v2).unwrap()).abs();
        let dt = (two_to_inf_distance(&r1, &r2).unwrap() - two_to_inf_distance(&v1, &v2).unwrap())
            .abs();
        worst = worst.max(dl).max(dt);
    }
    let detail = format!("{cases} cases, max deviation {worst:.2e}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The four Penrose identities for `A⁺` on random full-rank and
/// rank-deficient matrices, relative to `‖A‖_F` and `‖A⁺‖_F`.
pub fn penrose_identities(cases: usize, seed: u64) -> Check {
    let mut rng = rng_split(seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let m = rng.random_range(1..=9);
        let n = rng.random_range(1..=9);
        let a = if rng.random_range(0..3) == 0 && m.min(n) > 1 {
            let r = rng.random_range(1..m.min(n));
            gaussian(&mut rng, m, r).matmul(&gaussian(&mut rng, r, n))
        } else {
            gaussian(&mut rng, m, n)
        };
        let p = pseudoinverse(&a, DEFAULT_PINV_TOL).map_err(|e| e.to_string())?;
        let (na, np) = (a.frobenius_norm(), p.frobenius_norm().max(1e-300));
        let ap = a.matmul(&p);
        let pa = p.matmul(&a);
        let errs = [
            ap.matmul(&a).sub(&a).frobenius_norm() / na,
            pa.matmul(&p).sub(&p).frobenius_norm() / np,
            ap.asymmetry(),
            pa.asymmetry(),
        ];
        worst = errs.iter().fold(worst, |w, e| w.max(*e));
    }
    let detail = format!("{cases} matrices, max relative residual {worst:.2e}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// One refinement step from the true frame on noiseless rank-`K` data
/// returns the true frame.
pub fn refine_fixed_point(seed: u64) -> Check {
    let mut rng = rng_split(seed, 2);
    let (n, d, k) = (400, 40, 3);
    let v = random_frame(&mut rng, d, k);
    let y = low_rank(&mut rng, n, &v, 5.0);
    // Every row keeps at least K + 2 entries so each per-row fit is exact.
    let mut mask = homogeneous(&mut rng, n, d, 0.3);
    for i in 0..n {
        for j in 0..k + 2 {
            mask.set(i, j, true);
        }
    }
    let pm = PartialMatrix::new(&y, mask).map_err(|e| e.to_string())?;
    let out = refine(k, &v, &pm).map_err(|e| e.to_string())?;
    let loss = sin_theta_loss(&out, &v).map_err(|e| e.to_string())?;
    let detail = format!("L(refine(V), V) = {loss:.2e}");
    if loss <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// `½‖P_Ω(Y − Z)‖² + λ‖Z‖_*` never increases along the soft-threshold
/// iteration, for several `λ`.
pub fn soft_impute_monotone(seed: u64) -> Check {
    let mut rng = rng_split(seed, 3);
    let (n, d) = (120, 30);
    let v = random_frame(&mut rng, d, 3);
    let y = low_rank(&mut rng, n, &v, 3.0).add(&gaussian(&mut rng, n, d).scaled(0.5));
    let pm = PartialMatrix::new(&y, homogeneous(&mut rng, n, d, 0.4)).map_err(|e| e.to_string())?;
    let mut worst_rise: f64 = 0.0;
    let mut steps = 0;
    for lambda in [0.5, 2.0, 8.0, 30.0] {
        let cfg = ImputeConfig {
            lambda,
            rank_max: 10,
            thresh: 1e-9,
            max_iter: 60,
        };
        let res = soft_impute(&pm, &cfg, 3).map_err(|e| e.to_string())?;
        for w in res.objective.windows(2) {
            worst_rise = worst_rise.max((w[1] - w[0]) / w[0].abs().max(1.0));
            steps += 1;
        }
    }
    let detail = format!("{steps} steps over 4 lambdas, max relative rise {worst_rise:.2e}");
    if worst_rise <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The hard-impute completion reproduces every observed entry exactly.
pub fn hard_impute_fidelity(seed: u64) -> Check {
    let mut rng = rng_split(seed, 4);
    let (n, d) = (150, 25);
    let v = random_frame(&mut rng, d, 2);
    let y = low_rank(&mut rng, n, &v, 4.0).add(&gaussian(&mut rng, n, d));
    let pm = PartialMatrix::new(&y, homogeneous(&mut rng, n, d, 0.35)).map_err(|e| e.to_string())?;
    let res = hard_impute(&pm, 2, &ImputeConfig::default()).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for i in 0..n {
        for j in 0..d {
            if pm.is_observed(i, j) && res.completed[(i, j)] != y[(i, j)] {
                mismatches += 1;
            }
        }
    }
    let detail = format!("{} observed entries, {mismatches} changed", pm.mask().count());
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Observation counts within 3 standard deviations of their expectation, for
/// every mechanism at the simulation scale. Counts are split by the parity
/// classes of the checkerboard mechanisms and the two-pattern columns. For the
/// random-propensity mechanism the variance includes the propensity draws.
pub fn mask_rates(seed: u64) -> Check {
    let (n, d) = (2000, 500);
    let mut lines = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, count: f64, mean: f64, var: f64| {
        let z = (count - mean) / var.sqrt();
        lines.push(format!("{name} z={z:+.2}"));
        ok &= z.abs() <= 3.0;
    };
    let count = |m: &Mask, rows: &dyn Fn(usize) -> bool, cols: &dyn Fn(usize) -> bool| {
        let mut c = 0usize;
        for i in (0..n).filter(|&i| rows(i)) {
            c += (0..d).filter(|&j| cols(j) && m.get(i, j)).count();
        }
        c as f64
    };
    let all = |_: usize| true;
    let even = |x: usize| x % 2 == 0;
    let odd = |x: usize| x % 2 == 1;
    let binom = |cells: f64, p: f64| (cells * p, cells * p * (1.0 - p));

    let m = generate_mask(&MissingnessSpec::h1(), n, d, seed).unwrap();
    let (mu, var) = binom((n * d) as f64, 0.05);
    check("h1", count(&m, &all, &all), mu, var);

    let m = generate_mask(&MissingnessSpec::h3(), n, d, seed).unwrap();
    let (mu, var) = binom((n * d / 2) as f64, 0.19);
    check("h3 cols 1,3,..", count(&m, &all, &even), mu, var);
    let (mu, var) = binom((n * d / 2) as f64, 0.01);
    check("h3 cols 2,4,..", count(&m, &all, &odd), mu, var);

    let m = generate_mask(&MissingnessSpec::h4(), n, d, seed).unwrap();
    let (mu, var) = binom((n * d / 2) as f64, 0.18);
    check("h4 rows 1,3,..", count(&m, &even, &all), mu, var);
    let (mu, var) = binom((n * d / 2) as f64, 0.02);
    check("h4 rows 2,4,..", count(&m, &odd, &all), mu, var);

    // Row propensity a ~ U(0, 0.2), column propensity b ~ U(0.05, 0.95).
    let m = generate_mask(&MissingnessSpec::h2(), n, d, seed).unwrap();
    let (ea, va) = (0.1, 0.04 / 12.0);
    let (eb, vb) = (0.5, 0.81 / 12.0);
    let (nf, df) = (n as f64, d as f64);
    let (ea_sum, eb_sum) = (nf * ea, df * eb);
    let (ea_sq, eb_sq) = (nf * va + ea_sum * ea_sum, df * vb + eb_sum * eb_sum);
    let var_mean = ea_sq * eb_sq - (ea_sum * eb_sum).powi(2);
    let mean_var = nf * df * (ea * eb - (va + ea * ea) * (vb + eb * eb));
    check("h2", count(&m, &all, &all), nf * df * ea * eb, var_mean + mean_var);

    let m = generate_mask(&MissingnessSpec::TwoPattern, n, d, seed).unwrap();
    let (mu, var) = binom(n as f64, 0.5);
    check("two_pattern col 1", count(&m, &all, &|j| j == 0), mu, var);
    let xor = (0..n).all(|i| m.get(i, 0) != m.get(i, 1));
    let rest = (0..n).all(|i| (2..d).all(|j| m.get(i, j)));
    if !(xor && rest) {
        ok = false;
        lines.push("two_pattern structure violated".into());
    }

    let detail = lines.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Frequency over `draws` homogeneous masks of `max_jk W̃_jk ≤ 2 p⁻²`,
/// against the lower bound `1 − d² exp(−3np²/32)`.
pub fn wtilde_bound_frequency(n: usize, d: usize, p: f64, draws: usize, seed: u64) -> Check {
    let mut rng = rng_split(seed, 5);
    let y = DenseMatrix::filled(n, d, 1.0);
    let limit = 2.0 / (p * p);
    let mut hits = 0;
    for _ in 0..draws {
        let pm = PartialMatrix::new(&y, homogeneous(&mut rng, n, d, p)).unwrap();
        let w = init_weights(&pm);
        if w.as_matrix().max_abs() <= limit {
            hits += 1;
        }
    }
    let freq = hits as f64 / draws as f64;
    let bound = 1.0 - (d * d) as f64 * (-3.0 * n as f64 * p * p / 32.0).exp();
    // Allow three binomial standard errors below the bound.
    let slack = 3.0 * (bound.clamp(0.0, 1.0) * (1.0 - bound.clamp(0.0, 1.0)) / draws as f64).sqrt();
    let detail = format!("frequency {freq:.4} over {draws} masks, bound {bound:.4}");
    if freq >= bound - slack {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Entrywise Monte Carlo mean of `Ĝ = (n⁻¹ Y_ΩᵀY_Ω) ∘ W` over `draws` masks,
/// compared with `n⁻¹ YᵀY`. Returns the fraction of entries within 4
/// standard errors, for the known-`p` weights and for the plug-in `p̂`.
pub fn ipw_unbiasedness(n: usize, d: usize, p: f64, draws: usize, seed: u64) -> (f64, f64) {
    use primepca::estimators::{homogeneous_weights, ipw_covariance, masked_gram};
    let mut rng = rng_split(seed, 6);
    let y = gaussian(&mut rng, n, d);
    let target = y.t_matmul(&y).scaled(1.0 / n as f64);
    let w = homogeneous_weights(p, d).unwrap();
    let cells = d * d;
    let (mut s1, mut s2) = (vec![0.0; cells], vec![0.0; cells]);
    let (mut t1, mut t2) = (vec![0.0; cells], vec![0.0; cells]);
    for _ in 0..draws {
        let pm = PartialMatrix::new(&y, homogeneous(&mut rng, n, d, p)).unwrap();
        let known = masked_gram(&pm).scaled(1.0 / n as f64);
        let plug = ipw_covariance(&pm).unwrap();
        for c in 0..cells {
            let g = known.as_slice()[c] * w.as_matrix().as_slice()[c];
            s1[c] += g;
            s2[c] += g * g;
            let h = plug.as_slice()[c];
            t1[c] += h;
            t2[c] += h * h;
        }
    }
    let m = draws as f64;
    let within = |s1: &[f64], s2: &[f64]| {
        let hits = (0..cells)
            .filter(|&c| {
                let mean = s1[c] / m;
                let var = (s2[c] / m - mean * mean).max(0.0) * m / (m - 1.0);
                (mean - target.as_slice()[c]).abs() <= 4.0 * (var / m).sqrt()
            })
            .count();
        hits as f64 / cells as f64
    };
    (within(&s1, &s2), within(&t1, &t2))
}
