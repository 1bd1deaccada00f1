mod common;

use common::*;
use primepca::data::PartialMatrix;
use primepca::estimators::{
    estimate_scores, init_estimator, prime_pca, reconstruct_covariance, refine, PrimeConfig,
};
use primepca::linalg::{
    procrustes_align, sin_theta_loss, top_k_eigenvectors, two_to_inf_distance, two_to_inf_norm,
    Frame,
};
use primepca::sim::{generate_data, generate_mask, rng_split, DataModelSpec, FrameSource, MissingnessSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metrics_ignore_right_rotations(seed in any::<u64>()) {
        let check = rotation_invariance(1, seed);
        prop_assert!(check.is_ok(), "{:?}", check);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pseudoinverse_satisfies_penrose(seed in any::<u64>()) {
        let check = penrose_identities(1, seed);
        prop_assert!(check.is_ok(), "{:?}", check);
    }

    #[test]
    fn metric_symmetry_and_ranges(seed in any::<u64>(), d in 2usize..10, k in 1usize..4) {
        prop_assume!(k <= d);
        let mut rng = rng_split(seed, 0);
        let (u, v) = (random_frame(&mut rng, d, k), random_frame(&mut rng, d, k));
        let l = sin_theta_loss(&u, &v).unwrap();
        prop_assert!((l - sin_theta_loss(&v, &u).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=(k as f64).sqrt() + 1e-12).contains(&l));
        let t = two_to_inf_distance(&u, &v).unwrap();
        // Rows of U − V W have norm at most ‖U‖_{2→∞} + ‖V‖_{2→∞} ≤ 2.
        prop_assert!((0.0..=2.0 + 1e-12).contains(&t));
        prop_assert!(t <= two_to_inf_norm(u.as_matrix()) + two_to_inf_norm(v.as_matrix()) + 1e-12);
    }

    /// The Procrustes rotation is at least as good as any random orthogonal
    /// candidate in Frobenius residual.
    #[test]
    fn procrustes_beats_random_rotations(seed in any::<u64>()) {
        let mut rng = rng_split(seed, 9);
        let (d, k) = (8, 3);
        let v1 = random_frame(&mut rng, d, k);
        let v2 = Frame::orthonormalize(&v1.as_matrix().add(&gaussian(&mut rng, d, k).scaled(0.3))).unwrap();
        let w = procrustes_align(&v1, &v2).unwrap();
        let best = v1.as_matrix().sub(&v2.as_matrix().matmul(&w)).frobenius_norm();
        for _ in 0..50 {
            let o = random_orthogonal(&mut rng, k);
            let r = v1.as_matrix().sub(&v2.as_matrix().matmul(&o)).frobenius_norm();
            prop_assert!(best <= r + 1e-12);
        }
    }

    /// Multiplying the data by a positive constant changes neither the
    /// initialiser nor a refinement step.
    #[test]
    fn estimators_are_scale_equivariant(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = rng_split(seed, 10);
        let (n, d) = (60, 10);
        let v = random_frame(&mut rng, d, 2);
        let y = low_rank(&mut rng, n, &v, 3.0).add(&gaussian(&mut rng, n, d).scaled(0.3));
        let pm = PartialMatrix::new(&y, homogeneous(&mut rng, n, d, 0.8)).unwrap();
        prop_assume!((0..n).all(|i| pm.mask().row_count(i) > 0));
        let scaled = pm.scaled(c);
        let (a, _) = init_estimator(&pm, 2).unwrap();
        let (b, _) = init_estimator(&scaled, 2).unwrap();
        prop_assert!(sin_theta_loss(&a, &b).unwrap() < 1e-9);
        let ra = refine(2, &a, &pm).unwrap();
        let rb = refine(2, &a, &scaled).unwrap();
        prop_assert!(sin_theta_loss(&ra, &rb).unwrap() < 1e-9);
    }
}

#[test]
fn refine_keeps_the_truth_on_noiseless_data() {
    for seed in 0..5 {
        let check = refine_fixed_point(seed);
        assert!(check.is_ok(), "seed {seed}: {check:?}");
    }
}

#[test]
fn soft_impute_objective_never_increases() {
    for seed in 0..3 {
        let check = soft_impute_monotone(seed);
        assert!(check.is_ok(), "seed {seed}: {check:?}");
    }
}

#[test]
fn hard_impute_keeps_observed_entries() {
    for seed in 0..3 {
        let check = hard_impute_fidelity(seed);
        assert!(check.is_ok(), "seed {seed}: {check:?}");
    }
}

#[test]
fn mask_rates_within_three_sigma() {
    let check = mask_rates(21);
    assert!(check.is_ok(), "{check:?}");
}

#[test]
fn coobservation_weights_stay_bounded() {
    let check = wtilde_bound_frequency(500, 20, 0.5, 300, 3);
    assert!(check.is_ok(), "{check:?}");
}

#[test]
fn ipw_second_moment_is_unbiased() {
    let (known, plug_in) = ipw_unbiasedness(50, 20, 0.3, 2000, 8);
    assert!(known >= 0.99, "known-p fraction {known}");
    assert!(plug_in >= 0.95, "plug-in fraction {plug_in}");
}

/// With the true frame, estimated scores equal the generating scores on
/// noiseless data wherever V_J has full rank, and the reconstructed
/// spectrum is that of `n⁻¹ ÛᵀÛ`.
#[test]
fn scores_recover_generating_scores() {
    let spec = DataModelSpec {
        n: 300,
        d: 30,
        k: 2,
        score_variances: vec![9.0, 4.0],
        noise: false,
        frame: FrameSource::BlockSign,
    };
    let data = generate_data(&spec, 4).unwrap();
    let mask = generate_mask(&MissingnessSpec::Homogeneous { p: 0.3 }, 300, 30, 4).unwrap();
    let pm = PartialMatrix::new(&data.y, mask).unwrap();
    let scores = estimate_scores(&data.frame, &pm, 2).unwrap();
    assert!(scores.len() > 250);
    let truth = data.scores.scores();
    for (r, &i) in scores.row_indices().iter().enumerate() {
        // Rows seen in only one half of the block-sign frame give a rank-one
        // V_J, where the pseudoinverse returns the minimum-norm solution.
        let row = pm.mask().row(i);
        if !row[..15].contains(&true) || !row[15..].contains(&true) {
            continue;
        }
        for a in 0..2 {
            assert!((scores.scores()[(r, a)] - truth[(i, a)]).abs() < 1e-9);
        }
    }
    let cov = reconstruct_covariance(&data.frame, &scores, 300).unwrap();
    let small = scores.scores().t_matmul(scores.scores()).scaled(1.0 / 300.0);
    let (_, expected) = top_k_eigenvectors(&small, 2).unwrap();
    for (a, b) in cov.eigenvalues.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-9 * b.abs());
    }
    let v = data.frame.as_matrix();
    let direct = v.matmul(&small).matmul(&v.transpose());
    assert!(cov.covariance.sub(&direct).max_abs() < 1e-9);
}

/// On a small noiseless problem the iteration drives the loss to rounding
/// level, with geometric decay.
#[test]
fn small_noiseless_problem_converges_geometrically() {
    let spec = DataModelSpec {
        n: 400,
        d: 40,
        k: 2,
        score_variances: vec![100.0, 100.0],
        noise: false,
        frame: FrameSource::BlockSign,
    };
    let data = generate_data(&spec, 2).unwrap();
    let mask = generate_mask(&MissingnessSpec::Homogeneous { p: 0.3 }, 400, 40, 2).unwrap();
    let pm = PartialMatrix::new(&data.y, mask).unwrap();
    let (v0, _) = init_estimator(&pm, 2).unwrap();
    let cfg = PrimeConfig {
        n_iter: 200,
        ..PrimeConfig::noiseless(2)
    };
    let run = prime_pca(&cfg, &v0, &pm, Some(&data.frame)).unwrap();
    let losses: Vec<f64> = run.iterations.iter().map(|r| r.loss_vs_truth.unwrap()).collect();
    let hit = losses.iter().position(|&l| l <= 1e-8).expect("reaches 1e-8");
    let rate = (losses[0].log10() - losses[hit].log10()) / hit.max(1) as f64;
    assert!(rate >= 0.01, "average log10 decrease {rate}");
    assert!(sin_theta_loss(&run.frame, &data.frame).unwrap() <= 1e-8);
}
