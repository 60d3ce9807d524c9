//! Minimal norm under a χ² constraint on the data.
//!
//! The covariance `C'` of the discrepancy values is diagonalized
//! (`C' = Σ ε_I² e_I e_Iᵀ`), the kernel is rotated into that basis and
//! whitened (`M_IJ = e_Iᵀ A e_J / (ε_I ε_J)`), and `M` is diagonalized into
//! `(σ_r, f_r)`. In that basis the stationarity conditions decouple:
//! `p_r = q_r / (1 + λ σ_r)` with `q_r = m_r - y0 n_r`, the subtraction value
//! `y0(λ) = Σ n_r m_r/(1+λσ_r) / Σ n_r²/(1+λσ_r)`, and the only equation
//! left is `Σ p_r(λ)² = χ²₀`. The minimal squared norm is `λ² Σ σ_r p_r²`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::optimize::{brent, golden_section};
use super::{
    discrepancy_values, estimate_noiseless_with, EstimatorOptions, Regime, RenyiDataset,
    SacEstimate, SolverDiagnostics,
};
use crate::conformal::{map_orders, ConformalParams, W0Rule};
use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix_dilog, kernel_matrix_quadrature, KernelMethod};

/// Eigenvalues of `C'` below this fraction of the largest are raised to it.
pub const COVARIANCE_FLOOR: f64 = 1e-12;

const LAMBDA_REL_TOL: f64 = 1e-10;
const MONOTONE_SAMPLES: usize = 20;
const DENSE_GRID: usize = 4000;
const MAX_WIDENINGS: u32 = 8;

/// Eigendecomposition of a covariance with the relative floor applied.
/// Returns `None` when the matrix is identically zero.
pub fn regularize_covariance(c: &DMatrix<f64>) -> Option<(DMatrix<f64>, Vec<f64>)> {
    let sym = (c + c.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    if !(max > 0.0) {
        return None;
    }
    let floor = COVARIANCE_FLOOR * max;
    let vals = eig.eigenvalues.iter().map(|&e| e.max(floor)).collect();
    Some((eig.eigenvectors, vals))
}

/// `(y - d)ᵀ C'⁻¹ (y - d)` with the floored covariance.
pub fn chi2(y: &[f64], d: &[f64], cprime: &DMatrix<f64>) -> Result<f64> {
    let n = y.len();
    if d.len() != n || cprime.nrows() != n || cprime.ncols() != n {
        return Err(Error::invalid("dimension mismatch in chi2"));
    }
    let (o, vals) = regularize_covariance(cprime).ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    let r = DVector::from_iterator(n, y.iter().zip(d).map(|(a, b)| a - b));
    let proj = o.transpose() * r;
    Ok(proj.iter().zip(&vals).map(|(x, e)| x * x / e).sum())
}

/// Solution of the constrained problem for one α.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolution {
    pub lambda: f64,
    pub y0: f64,
    /// Whitened residuals `p_r` in the eigenbasis of `M`.
    pub p: Vec<f64>,
    pub chi2: f64,
    /// `λ² Σ σ_r p_r²`.
    pub delta2: f64,
    pub iterations: usize,
    /// The unconstrained optimum already satisfies `χ² <= χ²₀`.
    pub inactive: bool,
    pub monotone: bool,
}

struct Evaluation {
    y0: f64,
    p: Vec<f64>,
    chi2: f64,
}

fn evaluate(m: &[f64], n: &[f64], sigma: &[f64], lambda: f64) -> Evaluation {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&mr, &nr), &s) in m.iter().zip(n).zip(sigma) {
        let f = 1.0 / (1.0 + lambda * s);
        num += nr * mr * f;
        den += nr * nr * f;
    }
    let y0 = num / den;
    let p: Vec<f64> = m
        .iter()
        .zip(n)
        .zip(sigma)
        .map(|((&mr, &nr), &s)| (mr - y0 * nr) / (1.0 + lambda * s))
        .collect();
    let chi2 = p.iter().map(|x| x * x).sum();
    Evaluation { y0, p, chi2 }
}

fn finish(
    sigma: &[f64],
    lambda: f64,
    e: Evaluation,
    iterations: usize,
    inactive: bool,
    monotone: bool,
) -> ConstrainedSolution {
    let delta2 = lambda * lambda * e.p.iter().zip(sigma).map(|(p, s)| s * p * p).sum::<f64>();
    ConstrainedSolution {
        lambda,
        y0: e.y0,
        p: e.p,
        chi2: e.chi2,
        delta2,
        iterations,
        inactive,
        monotone,
    }
}

/// Solves `Σ_r p_r(λ)² = χ²₀` for the Lagrange multiplier `λ >= 0`.
pub fn solve_constrained(
    m: &[f64],
    n: &[f64],
    sigma: &[f64],
    chi2_0: f64,
) -> Result<ConstrainedSolution> {
    let dim = m.len();
    if dim == 0 || n.len() != dim || sigma.len() != dim {
        return Err(Error::invalid(
            "m, n and sigma must share a non-zero length",
        ));
    }
    if sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("sigma must be positive and finite"));
    }
    if !(chi2_0 > 0.0) {
        return Err(Error::invalid("chi2_0 must be positive"));
    }
    if !(n.iter().map(|x| x * x).sum::<f64>() > 0.0) {
        return Err(Error::invalid("the constant direction n vanishes"));
    }

    let at0 = evaluate(m, n, sigma, 0.0);
    if at0.chi2 <= chi2_0 {
        return Ok(finish(sigma, 0.0, at0, 0, true, true));
    }

    let excess = |l: f64| evaluate(m, n, sigma, l).chi2 - chi2_0;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let mut hi = 1.0 / smax;
    let mut doublings = 0;
    while excess(hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if !hi.is_finite() || doublings > 4000 {
            return Err(Error::RootNotBracketed(
                "χ²(λ) never drops below χ²₀".into(),
            ));
        }
    }
    let mut lo = 0.5 * hi;
    while lo > 0.0 && excess(lo) < 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            lo = 0.0;
        }
    }

    // χ²(λ) non-increasing on [0, hi] at sampled points
    let samples: Vec<f64> = (0..=MONOTONE_SAMPLES)
        .map(|i| evaluate(m, n, sigma, hi * i as f64 / MONOTONE_SAMPLES as f64).chi2)
        .collect();
    let monotone = samples
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);

    let (a, b) = if monotone {
        (lo, hi)
    } else {
        // dense logarithmic grid: first sign change
        let floor = hi * 1e-16;
        let grid: Vec<f64> = std::iter::once(0.0)
            .chain(
                (0..=DENSE_GRID).map(|i| floor * (hi / floor).powf(i as f64 / DENSE_GRID as f64)),
            )
            .collect();
        let idx = grid
            .windows(2)
            .position(|w| excess(w[0]) >= 0.0 && excess(w[1]) < 0.0)
            .ok_or_else(|| Error::RootNotBracketed("no sign change on dense λ grid".into()))?;
        (grid[idx], grid[idx + 1])
    };
    let root = brent(excess, a, b, LAMBDA_REL_TOL, 500)?;
    let e = evaluate(m, n, sigma, root.x);
    Ok(finish(
        sigma,
        root.x,
        e,
        root.iterations + doublings,
        false,
        monotone,
    ))
}

/// Whitened, rotated form of one noisy dataset; α enters only through `m`.
#[derive(Debug, Clone)]
pub struct NoisyProblem {
    orders: Vec<u32>,
    values: Vec<f64>,
    sigma: Vec<f64>,
    /// Whitened `S_i/(z_i-1)` in the `f_r` basis.
    m_s: Vec<f64>,
    /// Whitened `1/(z_i-1)` in the `f_r` basis.
    m_v: Vec<f64>,
    /// Whitened constant vector in the `f_r` basis.
    n: Vec<f64>,
    chi2_0: f64,
    kernel_condition: f64,
}

impl NoisyProblem {
    /// `None` when the covariance is identically zero.
    pub fn new(data: &RenyiDataset, opts: &EstimatorOptions) -> Result<Option<Self>> {
        let c = data
            .covariance()
            .ok_or_else(|| Error::invalid("noisy estimate needs a covariance matrix"))?;
        if data.len() < 2 || data.k_max() < 3 {
            return Err(Error::invalid("noisy estimate needs k_max >= 3"));
        }
        let orders = data.orders().to_vec();
        let nd = orders.len();
        let zm1: Vec<f64> = orders.iter().map(|&z| z as f64 - 1.0).collect();
        let cprime = DMatrix::from_fn(nd, nd, |i, j| c[(i, j)] / (zm1[i] * zm1[j]));
        let Some((o, eps2)) = regularize_covariance(&cprime) else {
            return Ok(None);
        };
        let eps: Vec<f64> = eps2.iter().map(|e| e.sqrt()).collect();

        let points = map_orders(&orders, &opts.params, opts.noisy_w0)?;
        points.ensure_w0_distinct()?;
        let kernel = match opts.kernel {
            KernelMethod::Dilogarithm => kernel_matrix_dilog(&points, &[])?,
            KernelMethod::Quadrature => kernel_matrix_quadrature(&points, &[])?,
        };

        let b = o.transpose() * kernel.matrix() * &o;
        let m = DMatrix::from_fn(nd, nd, |i, j| b[(i, j)] / (eps[i] * eps[j]));
        let m = (&m + m.transpose()).scale(0.5);
        let eig = SymmetricEigen::new(m);
        let sigma: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        if sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        let f = eig.eigenvectors;

        let project = |x: &[f64]| -> Vec<f64> {
            let rot = o.transpose() * DVector::from_column_slice(x);
            let white = DVector::from_iterator(nd, rot.iter().zip(&eps).map(|(r, e)| r / e));
            (f.transpose() * white).iter().copied().collect()
        };
        let s_over: Vec<f64> = discrepancy_values(data.values(), &orders, 0.0);
        let v: Vec<f64> = zm1.iter().map(|z| 1.0 / z).collect();
        let chi2_0 = opts.chi2_0.unwrap_or(data.k_max() as f64);
        if !(chi2_0 > 0.0) {
            return Err(Error::invalid("chi2_0 must be positive"));
        }
        Ok(Some(Self {
            m_s: project(&s_over),
            m_v: project(&v),
            n: project(&vec![1.0; nd]),
            orders,
            values: data.values().to_vec(),
            sigma,
            chi2_0,
            kernel_condition: kernel.condition_number(),
        }))
    }

    pub fn chi2_0(&self) -> f64 {
        self.chi2_0
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn n(&self) -> &[f64] {
        &self.n
    }

    /// Whitened data vector `m(α)` in the eigenbasis of `M`.
    pub fn m(&self, alpha: f64) -> Vec<f64> {
        self.m_s
            .iter()
            .zip(&self.m_v)
            .map(|(s, v)| s - alpha * v)
            .collect()
    }

    pub fn solve(&self, alpha: f64) -> Result<ConstrainedSolution> {
        solve_constrained(&self.m(alpha), &self.n, &self.sigma, self.chi2_0)
    }

    pub fn delta2(&self, alpha: f64) -> Result<f64> {
        Ok(self.solve(alpha)?.delta2)
    }

    /// `dδ²/dα = -2 λ Σ_r p_r ∂m_r/∂(-α)` by the envelope theorem.
    pub fn delta2_slope(&self, alpha: f64) -> Result<f64> {
        let sol = self.solve(alpha)?;
        Ok(-2.0 * sol.lambda * sol.p.iter().zip(&self.m_v).map(|(p, v)| p * v).sum::<f64>())
    }

    /// χ²-weighted fit of `S_i = α + y0 (z_i - 1)`: returns `(α, y0, χ²)`.
    pub fn weighted_fit(&self) -> Result<(f64, f64, f64)> {
        // minimize |m_s - α m_v - y0 n|²
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((s, v), n) in self.m_s.iter().zip(&self.m_v).zip(&self.n) {
            a11 += v * v;
            a12 += v * n;
            a22 += n * n;
            b1 += v * s;
            b2 += n * s;
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 1e-14 * a11 * a22) {
            return Err(Error::DegenerateGeometry(
                "weighted fit is singular; orders too few".into(),
            ));
        }
        let alpha = (b1 * a22 - b2 * a12) / det;
        let y0 = (a11 * b2 - a12 * b1) / det;
        let chi2 = self
            .m_s
            .iter()
            .zip(&self.m_v)
            .zip(&self.n)
            .map(|((s, v), n)| (s - alpha * v - y0 * n).powi(2))
            .sum();
        Ok((alpha, y0, chi2))
    }

    fn bracket(&self) -> (f64, f64) {
        let first = self.values[0];
        let last = *self.values.last().expect("non-empty");
        ((last - 1.0).min(0.0), first + 2.0)
    }

    fn scan(&self, lo: f64, hi: f64, points: usize) -> Result<Vec<(f64, f64)>> {
        (0..points)
            .map(|i| {
                let a = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                self.delta2(a).map(|d| (a, d))
            })
            .collect()
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }
}

fn count_local_minima(scan: &[(f64, f64)]) -> usize {
    let tol = 1e-12 * scan.iter().map(|p| p.1).fold(0.0, f64::max);
    (0..scan.len())
        .filter(|&i| {
            let left = i == 0 || scan[i - 1].1 > scan[i].1 + tol;
            let right = i + 1 == scan.len() || scan[i + 1].1 > scan[i].1 + tol;
            left && right
        })
        .count()
}

pub fn estimate_noisy(
    data: &RenyiDataset,
    params: &ConformalParams,
    chi2_0: f64,
) -> Result<SacEstimate> {
    let opts = EstimatorOptions {
        chi2_0: Some(chi2_0),
        ..EstimatorOptions::with_params(*params)
    };
    estimate_noisy_with(data, &opts)
}

pub fn estimate_noisy_with(data: &RenyiDataset, opts: &EstimatorOptions) -> Result<SacEstimate> {
    let Some(problem) = NoisyProblem::new(data, opts)? else {
        let exact = data.without_covariance();
        let noiseless = EstimatorOptions {
            noisy_w0: W0Rule::FirstPoint,
            ..*opts
        };
        return estimate_noiseless_with(&exact, &noiseless);
    };
    let points = opts.scan_points.max(5);
    let (mut lo, mut hi) = problem.bracket();

    let (alpha_fit, y0_fit, chi2_fit) = problem.weighted_fit()?;
    if chi2_fit <= problem.chi2_0 {
        let alpha_scan = problem.scan(lo, hi, points)?;
        return Ok(SacEstimate {
            alpha_min: alpha_fit,
            delta2_min: 0.0,
            alpha_scan,
            regime: Regime::ConstraintInactive,
            solver: Some(SolverDiagnostics {
                lambda: 0.0,
                y0: y0_fit,
                chi2_achieved: chi2_fit,
                iterations: 0,
                monotone: true,
            }),
            kernel_condition: problem.kernel_condition,
            multimodal: false,
            bracket_widenings: 0,
        });
    }

    let mut widenings = 0;
    let (scan, idx) = loop {
        let scan = problem.scan(lo, hi, points)?;
        let idx = scan
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
            .expect("non-empty scan");
        let width = hi - lo;
        if idx == 0 && widenings < MAX_WIDENINGS {
            lo -= width;
        } else if idx == points - 1 && widenings < MAX_WIDENINGS {
            hi += width;
        } else {
            break (scan, idx);
        }
        widenings += 1;
    };
    let multimodal = count_local_minima(&scan) > 1;

    let a = scan[idx.saturating_sub(1)].0;
    let b = scan[(idx + 1).min(points - 1)].0;
    let mut failure = None;
    let (mut best, _, ga, gb) = golden_section(
        |x| match problem.delta2(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        a,
        b,
        opts.alpha_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    // polish on the analytic slope inside the final golden bracket
    let (sa, sb) = (problem.delta2_slope(ga)?, problem.delta2_slope(gb)?);
    if sa < 0.0 && sb > 0.0 {
        if let Ok(root) = brent(
            |x| problem.delta2_slope(x).unwrap_or(f64::NAN),
            ga,
            gb,
            1e-15,
            200,
        ) {
            if root.x.is_finite() {
                best = root.x;
            }
        }
    }
    let mut sol = problem.solve(best)?;
    let coarse = scan[idx];
    if coarse.1 < sol.delta2 {
        best = coarse.0;
        sol = problem.solve(best)?;
    }

    Ok(SacEstimate {
        alpha_min: best,
        delta2_min: sol.delta2,
        alpha_scan: scan,
        regime: Regime::Constrained,
        solver: Some(SolverDiagnostics {
            lambda: sol.lambda,
            y0: sol.y0,
            chi2_achieved: sol.chi2,
            iterations: sol.iterations,
            monotone: sol.monotone,
        }),
        kernel_condition: problem.kernel_condition,
        multimodal,
        bracket_widenings: widenings,
    })
}
