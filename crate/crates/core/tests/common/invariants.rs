//! One check per module property. Every check is a deterministic proptest
//! run, so the property tests and the acceptance binary see the same cases.

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sac_core::baselines::{chebyshev_extrapolate, least_squares_poly};
use sac_core::conformal::{
    map_data_points, map_real, map_to_disk, ConformalParams, DiskPoints, W0Rule,
};
use sac_core::estimator::{
    closed_form_alpha, estimate_noiseless, estimate_noisy, noiseless_kernel, EstimatorOptions,
    Regime,
};
use sac_core::kernel::{kernel_matrix_dilog, kernel_matrix_quadrature, min_norm_noiseless};
use sac_core::pipeline::{
    cmd_benchmark, write_report, BenchmarkConfig, Grouping, NoiseParams, Scenario, Source,
    TfimParams,
};
use sac_core::quantum::{
    partial_trace, random_density_matrix, renyi_entropy, tfim_ground_state, von_neumann_entropy,
    DensityMatrix, PureState, SpinHamiltonian, XyQuench, C64,
};
use sac_core::shadows::{
    estimate_moments, renyi_from_moments, sample_density, shadow_matrices, u_statistic_moment,
    BatchShadowSet, ShadowParams,
};
use sac_core::RenyiDataset;

use super::{exact_data, with_noise};

pub type Check = fn() -> Result<(), String>;

/// Every invariant with a readable label.
pub const ALL: &[(&str, Check)] = &[
    (
        "quantum: entropy bounds and Rényi monotonicity",
        entropy_bounds_and_monotonicity,
    ),
    (
        "quantum: flat spectrum gives order-independent entropy",
        flat_spectrum,
    ),
    (
        "quantum: partial trace keeps a valid state",
        partial_trace_is_a_state,
    ),
    (
        "quantum: quench conserves norm and energy",
        quench_conservation,
    ),
    (
        "conformal: von Neumann point maps to -1",
        conformal_von_neumann_point,
    ),
    (
        "conformal: real orders land inside the disk on the real axis",
        conformal_real_inside,
    ),
    (
        "conformal: strip interior lands inside the disk",
        conformal_complex_inside,
    ),
    ("conformal: monotone on the real axis", conformal_monotone),
    (
        "kernel: quadrature matches dilogarithm and is positive definite",
        kernel_oracle_equivalence,
    ),
    (
        "kernel: permutation covariance",
        kernel_permutation_covariance,
    ),
    (
        "kernel: minimal norm is non-negative and vanishes only at zero",
        kernel_min_norm_sign,
    ),
    (
        "estimator: noiseless norm is quadratic in alpha",
        estimator_quadratic_in_alpha,
    ),
    (
        "estimator: kernel scaling leaves alpha unchanged",
        estimator_kernel_scaling,
    ),
    (
        "estimator: noiseless shift covariance",
        estimator_shift_noiseless,
    ),
    ("estimator: noisy shift covariance", estimator_shift_noisy),
    (
        "estimator: inactive constraint reports the weighted fit",
        estimator_inactive_regime,
    ),
    (
        "estimator: minimum bounds every scanned norm",
        estimator_minimum_below_scan,
    ),
    (
        "shadows: memoized U-statistic equals naive enumeration",
        shadows_u_statistic_naive,
    ),
    (
        "shadows: exact batches reproduce Rényi entropies",
        shadows_exact_batches,
    ),
    (
        "shadows: identical batches give ordered moments",
        shadows_moment_ordering,
    ),
    (
        "shadows: single-shot shadows are unbiased",
        shadows_single_shot_unbiased,
    ),
    (
        "baselines: polynomials are reproduced",
        baselines_polynomial_reproduction,
    ),
    ("baselines: shift covariance", baselines_shift_covariance),
    (
        "pipeline: identical config gives identical bytes",
        pipeline_determinism,
    ),
    (
        "pipeline: exact references follow the config",
        pipeline_references_recomputed,
    ),
    (
        "pipeline: error cells are non-negative and guarded",
        pipeline_error_cells,
    ),
];

fn run<S>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config {
        cases,
        max_shrink_iters: 64,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn fail(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

/// `(dim, rank, seed)` for a random density matrix.
fn density_params(max_dim: usize) -> impl Strategy<Value = (usize, usize, u64)> {
    (2..=max_dim, 0.0f64..1.0, any::<u64>())
        .prop_map(|(d, f, s)| (d, 1 + ((f * d as f64) as usize).min(d - 1), s))
}

fn random_unitary(dim: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

fn params() -> impl Strategy<Value = ConformalParams> {
    (0.1f64..=5.0, 0.1f64..=5.0).prop_map(|(e, h)| ConformalParams::new(e, h).unwrap())
}

// ---- quantum ----

const ENTROPY_ORDERS: [f64; 6] = [1.5, 2.0, 3.0, 4.0, 5.0, 6.0];

pub fn entropy_bounds_and_monotonicity() -> Result<(), String> {
    run(128, density_params(16), |(dim, rank, seed)| {
        let rho = random_density_matrix(dim, rank, seed).map_err(fail)?;
        let svn = von_neumann_entropy(&rho).map_err(fail)?;
        prop_assert!(
            svn >= -1e-10 && svn <= (dim as f64).log2() + 1e-10,
            "S_vN = {svn}"
        );
        let mut prev = svn;
        for k in ENTROPY_ORDERS {
            let s = renyi_entropy(&rho, k).map_err(fail)?;
            prop_assert!(s <= prev + 1e-10, "S_{k} = {s} above previous {prev}");
            prev = s;
        }
        Ok(())
    })
}

pub fn flat_spectrum() -> Result<(), String> {
    run(96, density_params(16), |(dim, rank, seed)| {
        let u = random_unitary(dim, seed);
        let mut diag = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..rank {
            diag[(i, i)] = C64::new(1.0 / rank as f64, 0.0);
        }
        let m = &u * diag * u.adjoint();
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let rho = DensityMatrix::new(m).map_err(fail)?;
        let want = (rank as f64).log2();
        let svn = von_neumann_entropy(&rho).map_err(fail)?;
        prop_assert!((svn - want).abs() < 1e-10, "S_vN = {svn}, want {want}");
        for k in ENTROPY_ORDERS {
            let s = renyi_entropy(&rho, k).map_err(fail)?;
            prop_assert!((s - want).abs() < 1e-10, "S_{k} = {s}, want {want}");
        }
        Ok(())
    })
}

pub fn partial_trace_is_a_state() -> Result<(), String> {
    let strategy = (1usize..=8, any::<u64>(), any::<u8>());
    run(128, strategy, |(n, seed, mask)| {
        let psi = PureState::random(n, seed).map_err(fail)?;
        let mut sites: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if sites.is_empty() {
            sites.push(n - 1);
        }
        let rho = partial_trace(&psi, &sites).map_err(fail)?;
        let m = rho.matrix();
        prop_assert_eq!(m.nrows(), 1 << sites.len());
        prop_assert!((m.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!((m - m.adjoint()).camax() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|&p| p >= -1e-10));
        Ok(())
    })
}

pub fn quench_conservation() -> Result<(), String> {
    let strategy = (
        3usize..=7,
        100.0f64..1000.0,
        -500.0f64..500.0,
        0.5f64..3.0,
        0.0f64..=0.01,
        any::<u64>(),
    );
    run(48, strategy, |(n, j, field, exponent, t, seed)| {
        let ham = SpinHamiltonian::power_law(n, j, field, exponent).map_err(fail)?;
        let psi0 = PureState::random(n, seed).map_err(fail)?;
        let q = XyQuench::new(&ham, &psi0).map_err(fail)?;
        let psi = q.state_at(t).map_err(fail)?;
        prop_assert!((psi.norm() - 1.0).abs() < 1e-8);
        let (e0, e) = (ham.energy(&psi0), ham.energy(&psi));
        // relative to the coupling scale, since E0 itself may sit near zero
        let scale = e0.abs().max(j);
        prop_assert!((e - e0).abs() <= 1e-8 * scale, "E drifted from {e0} to {e}");
        Ok(())
    })
}

// ---- conformal ----

pub fn conformal_von_neumann_point() -> Result<(), String> {
    let grid = [0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
    for eps in grid {
        for eta in grid {
            let p = ConformalParams::new(eps, eta).map_err(|e| e.to_string())?;
            let w = map_to_disk(C64::new(1.0, 0.0), &p).map_err(|e| e.to_string())?;
            if (w - C64::new(-1.0, 0.0)).norm() > 1e-15 {
                return Err(format!("w(1) = {w} for epsilon={eps}, eta={eta}"));
            }
        }
    }
    Ok(())
}

pub fn conformal_real_inside() -> Result<(), String> {
    run(500, (1e-9f64..=19.0, params()), |(x, p)| {
        let w = map_to_disk(C64::new(1.0 + x, 0.0), &p).map_err(fail)?;
        prop_assert!(w.norm() < 1.0, "|w| = {}", w.norm());
        prop_assert!(w.im.abs() < 1e-12);
        Ok(())
    })
}

pub fn conformal_complex_inside() -> Result<(), String> {
    run(
        500,
        (1e-9f64..=19.0, -0.999f64..0.999, params()),
        |(x, y, p)| {
            let z = C64::new(1.0 + x, y * p.epsilon);
            let w = map_to_disk(z, &p).map_err(fail)?;
            prop_assert!(w.norm() < 1.0, "|w({z})| = {}", w.norm());
            Ok(())
        },
    )
}

/// `x = (z - 1)/ε` is kept below 20: beyond that `1 - w` approaches the
/// spacing of doubles near one and distinct orders can share an image.
pub fn conformal_monotone() -> Result<(), String> {
    run(
        500,
        (0.0f64..20.0, 1e-4f64..10.0, params()),
        |(x, gap, p)| {
            let w1 = map_real(1.0 + p.epsilon * x, &p).map_err(fail)?;
            let w2 = map_real(1.0 + p.epsilon * (x + gap), &p).map_err(fail)?;
            prop_assert!(w1 < w2, "w = {w1} then {w2}");
            Ok(())
        },
    )
}

// ---- kernel ----

#[derive(Debug, Clone, Copy)]
enum RuleChoice {
    First,
    Mid,
    Explicit(f64),
}

fn kernel_config() -> impl Strategy<Value = (u32, f64, f64, RuleChoice)> {
    let rule = prop_oneof![
        Just(RuleChoice::First),
        Just(RuleChoice::Mid),
        (-0.95f64..0.95).prop_map(RuleChoice::Explicit),
    ];
    (3u32..=8, 0.5f64..=5.0, 0.1f64..=2.0, rule)
}

fn kernel_points(
    k_max: u32,
    eps: f64,
    eta: f64,
    rule: RuleChoice,
) -> Result<(DiskPoints, Vec<u32>), TestCaseError> {
    let p = ConformalParams::new(eps, eta).map_err(fail)?;
    let (rule, exclude) = match rule {
        RuleChoice::First => (W0Rule::FirstPoint, vec![2]),
        RuleChoice::Mid => (W0Rule::Midpoint, vec![]),
        RuleChoice::Explicit(v) => (W0Rule::Explicit(v), vec![]),
    };
    let pts = map_data_points(k_max, &p, rule).map_err(fail)?;
    if exclude.is_empty() && pts.w().iter().any(|w| (w - pts.w0()).abs() < 1e-3) {
        return Err(TestCaseError::reject("w0 too close to a data point"));
    }
    Ok((pts, exclude))
}

/// Also used verbatim by the acceptance target, on the first 50 cases.
pub fn kernel_oracle_equivalence() -> Result<(), String> {
    run(50, kernel_config(), |(k_max, eps, eta, rule)| {
        let (pts, exclude) = kernel_points(k_max, eps, eta, rule)?;
        let q = kernel_matrix_quadrature(&pts, &exclude).map_err(fail)?;
        let d = kernel_matrix_dilog(&pts, &exclude).map_err(fail)?;
        let diff = (q.matrix() - d.matrix()).amax();
        prop_assert!(diff < 1e-8, "max |A_quad - A_dilog| = {diff:e}");
        prop_assert!(q.min_eigenvalue() > 0.0 && d.min_eigenvalue() > 0.0);
        prop_assert!(q.condition_number().is_finite());
        Ok(())
    })
}

pub fn kernel_permutation_covariance() -> Result<(), String> {
    run(
        64,
        (kernel_config(), any::<u64>()),
        |((k_max, eps, eta, rule), seed)| {
            let (pts, exclude) = kernel_points(k_max, eps, eta, rule)?;
            let a = kernel_matrix_dilog(&pts, &exclude).map_err(fail)?;
            let n = a.dim();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let orders: Vec<u32> = perm.iter().map(|&i| a.orders()[i]).collect();
            let w: Vec<f64> = perm.iter().map(|&i| a.disk_points()[i]).collect();
            let shuffled = DiskPoints::from_parts(orders, w, a.w0()).map_err(fail)?;
            let b = kernel_matrix_dilog(&shuffled, &[]).map_err(fail)?;
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = (b.matrix()[(i, j)], a.matrix()[(perm[i], perm[j])]);
                    prop_assert!((x - y).abs() <= 1e-14 * y.abs().max(1.0));
                }
            }
            Ok(())
        },
    )
}

pub fn kernel_min_norm_sign() -> Result<(), String> {
    let strategy = (
        kernel_config(),
        prop::collection::vec(-1.0f64..1.0, 7),
        -6i32..=2,
    );
    run(128, strategy, |((k_max, eps, eta, rule), raw, exp)| {
        let (pts, exclude) = kernel_points(k_max, eps, eta, rule)?;
        let a = kernel_matrix_dilog(&pts, &exclude).map_err(fail)?;
        let n = a.dim();
        let zero = min_norm_noiseless(&a, &DVector::zeros(n)).map_err(fail)?;
        prop_assert_eq!(zero, 0.0);
        let d = DVector::from_iterator(n, raw.iter().take(n).map(|x| x * 10f64.powi(exp)));
        prop_assume!(d.norm() > 0.0);
        let delta2 = min_norm_noiseless(&a, &d).map_err(fail)?;
        let lambda_max = a.condition_number() * a.min_eigenvalue();
        // d'ᵀA⁻¹d' ≥ |d'|²/λ_max
        prop_assert!(
            delta2 >= 0.5 * d.norm_squared() / lambda_max,
            "δ² = {delta2:e}"
        );
        Ok(())
    })
}

// ---- estimator ----

fn dataset_params() -> impl Strategy<Value = ((usize, usize, u64), u32)> {
    (density_params(16), 3u32..=8)
}

pub fn estimator_quadratic_in_alpha() -> Result<(), String> {
    run(96, dataset_params(), |((dim, rank, seed), k_max)| {
        let (data, _) = exact_data(dim, rank, seed, k_max);
        let est = estimate_noiseless(&data, &ConformalParams::default()).map_err(fail)?;
        let ys: Vec<f64> = est.alpha_scan.iter().map(|p| p.1).collect();
        let xs: Vec<f64> = est.alpha_scan.iter().map(|p| p.0).collect();
        let h = xs[1] - xs[0];
        prop_assert!(xs.windows(2).all(|p| ((p[1] - p[0]) - h).abs() < 1e-12));
        let second: Vec<f64> = ys.windows(3).map(|p| p[2] - 2.0 * p[1] + p[0]).collect();
        for s in &second {
            prop_assert!(
                (s - second[0]).abs() <= 1e-9 * second[0].abs(),
                "second differences {s:e} vs {:e}",
                second[0]
            );
        }
        Ok(())
    })
}

pub fn estimator_kernel_scaling() -> Result<(), String> {
    run(
        96,
        (dataset_params(), -3.0f64..=3.0),
        |(((dim, rank, seed), k_max), e)| {
            let (data, _) = exact_data(dim, rank, seed, k_max);
            let kernel = noiseless_kernel(&data, &EstimatorOptions::default()).map_err(fail)?;
            let a = closed_form_alpha(&data, &kernel).map_err(fail)?;
            let scaled = kernel.scaled(10f64.powf(e)).map_err(fail)?;
            let b = closed_form_alpha(&data, &scaled).map_err(fail)?;
            prop_assert!((a - b).abs() < 1e-12, "alpha {a} vs {b}");
            Ok(())
        },
    )
}

pub fn estimator_shift_noiseless() -> Result<(), String> {
    run(
        96,
        (dataset_params(), -3.0f64..=3.0),
        |(((dim, rank, seed), k_max), s)| {
            let (data, _) = exact_data(dim, rank, seed, k_max);
            let p = ConformalParams::default();
            let a = estimate_noiseless(&data, &p).map_err(fail)?.alpha_min;
            let b = estimate_noiseless(&data.shifted(s), &p)
                .map_err(fail)?
                .alpha_min;
            prop_assert!((b - a - s).abs() < 1e-9, "shift {s}: {a} -> {b}");
            Ok(())
        },
    )
}

pub fn estimator_shift_noisy() -> Result<(), String> {
    let strategy = (dataset_params(), 0.02f64..0.2, any::<u64>(), -3.0f64..=3.0);
    run(
        32,
        strategy,
        |(((dim, rank, seed), k_max), f, noise_seed, s)| {
            let (exact, _) = exact_data(dim, rank, seed, k_max);
            prop_assume!(exact.values()[0] > 1e-3);
            let data = with_noise(&exact, f, noise_seed);
            let p = ConformalParams::default();
            let chi2_0 = k_max as f64;
            let a = estimate_noisy(&data, &p, chi2_0).map_err(fail)?;
            let b = estimate_noisy(&data.shifted(s), &p, chi2_0).map_err(fail)?;
            prop_assert!(
                (b.alpha_min - a.alpha_min - s).abs() < 1e-9,
                "shift {s}: {} -> {} ({:?})",
                a.alpha_min,
                b.alpha_min,
                a.regime
            );
            Ok(())
        },
    )
}

/// Generalized least squares for `S_k ≈ α + y0 (k - 1)`.
fn weighted_fit_oracle(data: &RenyiDataset) -> f64 {
    let n = data.len();
    let cinv = data.covariance().unwrap().clone().try_inverse().unwrap();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        if j == 0 {
            1.0
        } else {
            data.orders()[i] as f64 - 1.0
        }
    });
    let y = DVector::from_column_slice(data.values());
    let normal = x.transpose() * &cinv * &x;
    let rhs = x.transpose() * &cinv * y;
    (normal.try_inverse().unwrap() * rhs)[0]
}

fn near_line(k_max: u32, a: f64, b: f64, jitter: &[f64], sd: f64) -> RenyiDataset {
    let orders: Vec<u32> = (2..=k_max).collect();
    let values: Vec<f64> = orders
        .iter()
        .zip(jitter)
        .map(|(&k, j)| a + b * (k as f64 - 1.0) + j * sd)
        .collect();
    let cov = DMatrix::identity(orders.len(), orders.len()) * (sd * sd);
    RenyiDataset::new(orders, values, Some(cov)).unwrap()
}

/// With errors of 8 bits or more every α in the scan admits a constant
/// inside the ellipsoid. With small errors only α near the weighted fit
/// does, and the fit is still what gets reported.
pub fn estimator_inactive_regime() -> Result<(), String> {
    let strategy = (
        3u32..=8,
        0.0f64..3.0,
        -0.3f64..0.0,
        prop::collection::vec(-0.3f64..0.3, 7),
        prop_oneof![8.0f64..20.0, 0.01f64..0.2],
    );
    run(96, strategy, |(k_max, a, b, jitter, sd)| {
        let data = near_line(k_max, a, b, &jitter, sd);
        let est = estimate_noisy(&data, &ConformalParams::default(), k_max as f64).map_err(fail)?;
        prop_assert_eq!(est.regime, Regime::ConstraintInactive);
        prop_assert_eq!(est.delta2_min, 0.0);
        if sd >= 8.0 {
            prop_assert!(est.alpha_scan.iter().all(|p| p.1 == 0.0));
        }
        let want = weighted_fit_oracle(&data);
        prop_assert!(
            (est.alpha_min - want).abs() < 1e-8,
            "{} vs {want}",
            est.alpha_min
        );
        Ok(())
    })
}

pub fn estimator_minimum_below_scan() -> Result<(), String> {
    let strategy = (
        dataset_params(),
        prop::option::of((0.02f64..0.2, any::<u64>())),
    );
    run(48, strategy, |(((dim, rank, seed), k_max), noise)| {
        let (exact, _) = exact_data(dim, rank, seed, k_max);
        let p = ConformalParams::default();
        let est = match noise {
            None => estimate_noiseless(&exact, &p),
            Some((f, s)) => estimate_noisy(&with_noise(&exact, f, s), &p, k_max as f64),
        }
        .map_err(fail)?;
        prop_assert!(est.delta2_min >= 0.0);
        let top = est.alpha_scan.iter().map(|p| p.1).fold(0.0, f64::max);
        for &(a, d) in &est.alpha_scan {
            prop_assert!(d >= 0.0);
            prop_assert!(
                est.delta2_min <= d + 1e-14 * top,
                "δ²({a}) = {d:e} below the minimum {:e}",
                est.delta2_min
            );
        }
        Ok(())
    })
}

// ---- shadows ----

/// Hermitian, unit-trace and generally indefinite, like a real shadow.
fn pseudo_shadow(dim: usize, seed: u64) -> DMatrix<C64> {
    let a = random_density_matrix(dim, dim, seed).unwrap();
    let b = random_density_matrix(dim, 1, seed ^ 0x9e37_79b9).unwrap();
    a.matrix() * C64::new(2.0, 0.0) - b.matrix()
}

/// Average of `Re Tr(X_{i1} ⋯ X_{ik})` over all ordered tuples of distinct batches.
fn naive_moment(batches: &[DMatrix<C64>], k: usize) -> f64 {
    fn walk(
        b: &[DMatrix<C64>],
        k: usize,
        used: &mut Vec<usize>,
        acc: &DMatrix<C64>,
        sum: &mut f64,
        count: &mut f64,
    ) {
        if used.len() == k {
            *sum += acc.trace().re;
            *count += 1.0;
            return;
        }
        for i in 0..b.len() {
            if !used.contains(&i) {
                used.push(i);
                walk(b, k, used, &(acc * &b[i]), sum, count);
                used.pop();
            }
        }
    }
    let dim = batches[0].nrows();
    let (mut sum, mut count) = (0.0, 0.0);
    walk(
        batches,
        k,
        &mut Vec::new(),
        &DMatrix::identity(dim, dim),
        &mut sum,
        &mut count,
    );
    sum / count
}

pub fn shadows_u_statistic_naive() -> Result<(), String> {
    let strategy = (2usize..=8, 1u32..=2, 2u32..=5, any::<u64>());
    run(48, strategy, |(n_b, l, k, seed)| {
        prop_assume!(k as usize <= n_b);
        let dim = 1 << l;
        let batches: Vec<_> = (0..n_b as u64)
            .map(|i| pseudo_shadow(dim, seed.wrapping_add(i)))
            .collect();
        let set = BatchShadowSet::new(batches.clone()).map_err(fail)?;
        let fast = u_statistic_moment(&set, k).map_err(fail)?;
        let slow = naive_moment(&batches, k as usize);
        prop_assert!(
            (fast - slow).abs() <= 1e-12 * slow.abs().max(1.0),
            "{fast} vs {slow}"
        );
        Ok(())
    })
}

fn identical_batches() -> impl Strategy<Value = (u32, usize, usize, u64)> {
    (1u32..=3, 6usize..=8, 0.0f64..1.0, any::<u64>()).prop_map(|(l, n_b, f, s)| {
        let dim = 1usize << l;
        (l, n_b, 1 + ((f * dim as f64) as usize).min(dim - 1), s)
    })
}

pub fn shadows_exact_batches() -> Result<(), String> {
    run(48, identical_batches(), |(l, n_b, rank, seed)| {
        let rho = random_density_matrix(1 << l, rank, seed).map_err(fail)?;
        let set = BatchShadowSet::new(vec![rho.matrix().clone(); n_b]).map_err(fail)?;
        let table = renyi_from_moments(&estimate_moments(&set, 6).map_err(fail)?);
        prop_assert_eq!(&table.orders, &vec![2, 3, 4, 5, 6]);
        for (&k, s) in table.orders.iter().zip(&table.values) {
            let want = renyi_entropy(&rho, k as f64).map_err(fail)?;
            prop_assert!((s - want).abs() < 1e-10, "S_{k}: {s} vs {want}");
        }
        Ok(())
    })
}

pub fn shadows_moment_ordering() -> Result<(), String> {
    run(48, identical_batches(), |(l, n_b, rank, seed)| {
        let rho = random_density_matrix(1 << l, rank, seed).map_err(fail)?;
        let set = BatchShadowSet::new(vec![rho.matrix().clone(); n_b]).map_err(fail)?;
        let m = estimate_moments(&set, 6).map_err(fail)?;
        prop_assert!(
            m.moments.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12)),
            "{:?}",
            m.moments
        );
        Ok(())
    })
}

/// Elementwise mean of 20000 single-shot shadows of a 3-qubit state,
/// within five standard errors of the state.
pub fn shadows_single_shot_unbiased() -> Result<(), String> {
    let rho = random_density_matrix(8, 3, 11).map_err(|e| e.to_string())?;
    let records = sample_density(&rho, 20_000, 1, 5).map_err(|e| e.to_string())?;
    let shadows = shadow_matrices(&records);
    let n = shadows.len() as f64;
    for i in 0..8 {
        for j in 0..8 {
            for part in [(|c: C64| c.re) as fn(C64) -> f64, |c: C64| c.im] {
                let xs: Vec<f64> = shadows.iter().map(|s| part(s[(i, j)])).collect();
                let m = super::mean(&xs);
                let se = (super::variance(&xs) / n).sqrt();
                let want = part(rho.matrix()[(i, j)]);
                if (m - want).abs() > 5.0 * se.max(1e-15) {
                    return Err(format!("entry ({i},{j}): mean {m}, want {want}, se {se}"));
                }
            }
        }
    }
    Ok(())
}

// ---- baselines ----

/// Values of `Σ c_j ((k - 1)/k_max)^j` at `k = 2..=k_max`, and its value at `k = 1`.
fn polynomial_data(k_max: u32, coeffs: &[f64]) -> (RenyiDataset, f64) {
    let p = |k: f64| {
        let t = (k - 1.0) / k_max as f64;
        coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    };
    let orders: Vec<u32> = (2..=k_max).collect();
    let values = orders.iter().map(|&k| p(k as f64)).collect();
    (RenyiDataset::new(orders, values, None).unwrap(), p(1.0))
}

pub fn baselines_polynomial_reproduction() -> Result<(), String> {
    let strategy = (
        3u32..=8,
        prop::collection::vec(-1.0f64..1.0, 7),
        0.0f64..1.0,
    );
    run(128, strategy, |(k_max, coeffs, f)| {
        let n = (k_max - 1) as usize;
        let (data, want) = polynomial_data(k_max, &coeffs[..n]);
        let cheb = chebyshev_extrapolate(&data).map_err(fail)?;
        prop_assert!((cheb - want).abs() < 1e-10, "Chebyshev {cheb} vs {want}");
        let degree = 1 + ((f * (n - 1) as f64) as usize).min(n - 2);
        let (data, want) = polynomial_data(k_max, &coeffs[..=degree]);
        let lsq = least_squares_poly(&data, degree).map_err(fail)?;
        prop_assert!(
            (lsq - want).abs() < 1e-10,
            "degree {degree}: {lsq} vs {want}"
        );
        Ok(())
    })
}

pub fn baselines_shift_covariance() -> Result<(), String> {
    run(
        96,
        (dataset_params(), -3.0f64..=3.0),
        |(((dim, rank, seed), k_max), s)| {
            let (data, _) = exact_data(dim, rank, seed, k_max);
            let shifted = data.shifted(s);
            let c = (chebyshev_extrapolate(&shifted).map_err(fail)?
                - chebyshev_extrapolate(&data).map_err(fail)?)
                - s;
            prop_assert!(c.abs() < 1e-10, "Chebyshev off by {c:e}");
            for degree in 1..=(k_max as usize - 2).min(3) {
                let l = (least_squares_poly(&shifted, degree).map_err(fail)?
                    - least_squares_poly(&data, degree).map_err(fail)?)
                    - s;
                prop_assert!(l.abs() < 1e-10, "degree {degree} off by {l:e}");
            }
            Ok(())
        },
    )
}

// ---- pipeline ----

fn small_config(seed: u64, shadows: bool) -> BenchmarkConfig {
    if shadows {
        BenchmarkConfig {
            scenario: Scenario::XyQuench,
            source: Source::Shadows,
            n: 4,
            l: 2,
            times_ms: vec![0.0, 2.0],
            k_max: 4,
            shadow: ShadowParams {
                n_u: 48,
                n_m: 20,
                n_b: 6,
            },
            grouping: Grouping {
                n_experiments: 4,
                group_size: 2,
            },
            seed,
            ..Default::default()
        }
    } else {
        BenchmarkConfig {
            scenario: Scenario::RandomState,
            n: 5,
            l: 2,
            k_max: 5,
            noise: NoiseParams {
                gaussian_fraction: 0.1,
                n_realizations: 6,
            },
            seed,
            ..Default::default()
        }
    }
}

fn report_bytes(
    cfg: &BenchmarkConfig,
    workers: usize,
) -> Result<(Vec<u8>, Vec<u8>), TestCaseError> {
    let dir = tempfile::tempdir().map_err(fail)?;
    let csv = dir.path().join("report.csv");
    let report = cmd_benchmark(cfg, Some(workers)).map_err(fail)?;
    write_report(&report, &csv).map_err(fail)?;
    let json = sac_core::pipeline::sidecar_path(&csv);
    Ok((
        std::fs::read(&csv).map_err(fail)?,
        std::fs::read(json).map_err(fail)?,
    ))
}

pub fn pipeline_determinism() -> Result<(), String> {
    run(4, (any::<u64>(), any::<bool>()), |(seed, shadows)| {
        let cfg = small_config(seed, shadows);
        let a = report_bytes(&cfg, 1)?;
        let b = report_bytes(&cfg, 3)?;
        prop_assert!(a == b, "reports differ between runs");
        Ok(())
    })
}

pub fn pipeline_references_recomputed() -> Result<(), String> {
    run(6, (0.2f64..2.0, 0.2f64..2.0), |(h1, h2)| {
        for h in [h1, h2] {
            let cfg = BenchmarkConfig {
                n: 6,
                l: 3,
                k_max: 4,
                tfim: TfimParams { j: 1.0, h },
                noise: NoiseParams {
                    gaussian_fraction: 0.1,
                    n_realizations: 2,
                },
                ..Default::default()
            };
            let ground = tfim_ground_state(6, 1.0, h).map_err(fail)?;
            let want =
                von_neumann_entropy(&partial_trace(&ground.state, &[0, 1, 2]).map_err(fail)?)
                    .map_err(fail)?;
            let report = cmd_benchmark(&cfg, Some(2)).map_err(fail)?;
            for row in &report.rows {
                prop_assert!((row.exact_von_neumann - want).abs() < 1e-12);
            }
        }
        Ok(())
    })
}

pub fn pipeline_error_cells() -> Result<(), String> {
    run(4, any::<u64>(), |seed| {
        let mut cfg = small_config(seed, false);
        cfg.scenario = Scenario::XyQuench;
        cfg.times_ms = vec![0.0, 1.0];
        let report = cmd_benchmark(&cfg, Some(2)).map_err(fail)?;
        for row in &report.rows {
            let err = row.error_mean.ok_or_else(|| fail(&row.first_error))?;
            prop_assert!(err >= 0.0 && row.error_std.unwrap_or(0.0) >= 0.0);
            let zero = row.exact_von_neumann.abs() < 1e-9;
            prop_assert_eq!(
                row.error_kind.as_str(),
                if zero { "absolute" } else { "percent" }
            );
            prop_assert_eq!(zero, row.time_ms == Some(0.0));
        }
        Ok(())
    })
}
