//! Gram matrix of the minimal-norm interpolation problem on the unit disk.
//!
//! Entry `(i, j)` is
//! `(2/π) ∫₀^{2π} ln|(e^{iθ} - w_i)/(e^{iθ} - w0)| ln|(e^{iθ} - w_j)/(e^{iθ} - w0)| dθ`.
//! Two independent routes are provided: panel Gauss–Legendre quadrature and
//! the closed form `2[Li₂(w_i w_j) - Li₂(w_i w0) - Li₂(w0 w_j) + Li₂(w0²)]`,
//! which follows from `ln|e^{iθ} - a| = -Σ aⁿ cos(nθ)/n` for real `|a| < 1`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::conformal::DiskPoints;
use crate::error::{Error, Result};
use crate::special::{dilog, gauss_legendre};

/// Largest condition number accepted before the quadratic form is refused.
pub const MAX_CONDITION: f64 = 1e14;

const QUAD_NODES: usize = 64;
const QUAD_CHECK_NODES: usize = 48;
const QUAD_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Quadrature,
    Dilogarithm,
}

/// Symmetric positive-definite kernel over a labelled subset of Rényi orders.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    a: DMatrix<f64>,
    orders: Vec<u32>,
    w: Vec<f64>,
    w0: f64,
    method: KernelMethod,
    condition: f64,
    min_eigenvalue: f64,
    /// Factor of the matrix that was built; `a = scale * factored matrix`.
    chol: Cholesky<f64, Dyn>,
    scale: f64,
}

impl KernelMatrix {
    fn from_matrix(
        a: DMatrix<f64>,
        orders: Vec<u32>,
        w: Vec<f64>,
        w0: f64,
        method: KernelMethod,
    ) -> Result<Self> {
        let eig = SymmetricEigen::new(a.clone());
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.max();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            a,
            orders,
            w,
            w0,
            method,
            condition: max / min,
            min_eigenvalue: min,
            chol,
            scale: 1.0,
        })
    }

    /// The same kernel multiplied by `c > 0`. The factorization is reused
    /// and `c` kept as an exact factor, so solves differ from the unscaled
    /// kernel only by the final division.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("kernel scale {c} must be positive")));
        }
        Ok(Self {
            a: &self.a * c,
            min_eigenvalue: self.min_eigenvalue * c,
            scale: self.scale * c,
            ..self.clone()
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Rényi order labelling each row and column.
    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn disk_points(&self) -> &[f64] {
        &self.w
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Entry addressed by Rényi orders rather than array positions.
    pub fn entry(&self, order_i: u32, order_j: u32) -> Option<f64> {
        let i = self.orders.iter().position(|&o| o == order_i)?;
        let j = self.orders.iter().position(|&o| o == order_j)?;
        Some(self.a[(i, j)])
    }

    fn check_conditioning(&self) -> Result<()> {
        if self.condition > MAX_CONDITION {
            return Err(Error::Singular {
                condition: self.condition,
            });
        }
        Ok(())
    }

    /// `A⁻¹ x` through the Cholesky factor.
    pub fn solve(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_conditioning()?;
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector of length {} against kernel of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.chol.solve(x) / self.scale)
    }

    /// `xᵀ A⁻¹ y`.
    pub fn inverse_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        Ok(x.dot(&self.solve(y)?))
    }
}

fn retained(points: &DiskPoints, exclude: &[u32]) -> Result<(Vec<u32>, Vec<f64>)> {
    let mut orders = Vec::new();
    let mut w = Vec::new();
    for (&o, &wi) in points.orders().iter().zip(points.w()) {
        if exclude.contains(&o) {
            continue;
        }
        if (wi - points.w0()).abs() < 1e-10 {
            return Err(Error::invalid(format!(
                "order {o} coincides with the subtraction point; exclude it"
            )));
        }
        orders.push(o);
        w.push(wi);
    }
    if orders.is_empty() {
        return Err(Error::invalid("no data points left after exclusions"));
    }
    Ok((orders, w))
}

/// `ln|e^{iθ} - w|` for real `w`, written to stay accurate as `|w| → 1`.
fn log_distance(theta: f64, w: f64) -> f64 {
    let s = (0.5 * theta).sin();
    let c = (0.5 * theta).cos();
    // 1 - 2w cosθ + w² = (1 - w)² + 4w sin²(θ/2) = (1 + w)² - 4w cos²(θ/2)
    let sq = if w >= 0.0 {
        (1.0 - w).powi(2) + 4.0 * w * s * s
    } else {
        (1.0 + w).powi(2) - 4.0 * w * c * c
    };
    0.5 * sq.ln()
}

/// Panel breakpoints on `[0, π]`, graded dyadically towards θ = 0 and θ = π
/// down to a fraction of the distance of the nearest point to the circle.
fn panels(all_w: &[f64], refine: usize) -> Vec<f64> {
    let gap_at = |sign: f64| {
        all_w
            .iter()
            .filter(|&&w| w * sign > 0.0)
            .map(|&w| 1.0 - w.abs())
            .fold(1.0f64, f64::min)
    };
    let scale = 0.5f64.powi(refine as i32);
    let h0 = 0.5 * gap_at(1.0).min(0.25) * scale;
    let hpi = 0.5 * gap_at(-1.0).min(0.25) * scale;
    let mut left = vec![0.0];
    let mut h = h0;
    while h < PI / 4.0 {
        left.push(h);
        h *= 2.0;
    }
    let mut right = Vec::new();
    let mut h = hpi;
    while h < PI / 4.0 {
        right.push(PI - h);
        h *= 2.0;
    }
    right.push(PI);
    right.reverse();
    let middle_panels = 4 << refine;
    let (a, b) = (PI / 4.0, 3.0 * PI / 4.0);
    let mut breaks = left;
    breaks.extend((0..=middle_panels).map(|i| a + (b - a) * i as f64 / middle_panels as f64));
    breaks.extend(right);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-300);
    breaks
}

fn quadrature_gram(w: &[f64], w0: f64, breaks: &[f64], nodes: usize) -> DMatrix<f64> {
    let (x, wt) = gauss_legendre(nodes);
    let n = w.len();
    let mut a = DMatrix::zeros(n, n);
    let mut f = vec![0.0; n];
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (xk, wk) in x.iter().zip(&wt) {
            let theta = mid + half * xk;
            let base = log_distance(theta, w0);
            for (fi, &wi) in f.iter_mut().zip(w) {
                *fi = log_distance(theta, wi) - base;
            }
            let weight = wk * half;
            for i in 0..n {
                for j in 0..=i {
                    a[(i, j)] += weight * f[i] * f[j];
                }
            }
        }
    }
    // integrand is even about θ = π: ∫₀^{2π} = 2 ∫₀^π, times the 2/π prefactor
    let scale = 4.0 / PI;
    for i in 0..n {
        for j in 0..=i {
            let v = a[(i, j)] * scale;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Kernel by panel Gauss–Legendre quadrature, to absolute tolerance `1e-10` per entry.
pub fn kernel_matrix_quadrature(points: &DiskPoints, exclude: &[u32]) -> Result<KernelMatrix> {
    let (orders, w) = retained(points, exclude)?;
    let w0 = points.w0();
    let mut all = w.clone();
    all.push(w0);
    let mut achieved = f64::INFINITY;
    for refine in 0..=MAX_REFINEMENTS {
        let breaks = panels(&all, refine);
        let fine = quadrature_gram(&w, w0, &breaks, QUAD_NODES);
        let coarse = quadrature_gram(&w, w0, &breaks, QUAD_CHECK_NODES);
        achieved = (&fine - &coarse).amax();
        if achieved < QUAD_TOL {
            return KernelMatrix::from_matrix(fine, orders, w, w0, KernelMethod::Quadrature);
        }
    }
    Err(Error::QuadratureNotConverged {
        achieved,
        wanted: QUAD_TOL,
    })
}

/// Kernel from the dilogarithm closed form.
pub fn kernel_matrix_dilog(points: &DiskPoints, exclude: &[u32]) -> Result<KernelMatrix> {
    let (orders, w) = retained(points, exclude)?;
    let w0 = points.w0();
    if w.iter()
        .chain(std::iter::once(&w0))
        .any(|x| !(x.abs() < 1.0))
    {
        return Err(Error::invalid("dilogarithm kernel needs |w| < 1"));
    }
    let n = w.len();
    let l00 = dilog(w0 * w0);
    let l0: Vec<f64> = w.iter().map(|&wi| dilog(wi * w0)).collect();
    let a = DMatrix::from_fn(n, n, |i, j| {
        2.0 * (dilog(w[i] * w[j]) - l0[i] - l0[j] + l00)
    });
    KernelMatrix::from_matrix(a, orders, w, w0, KernelMethod::Dilogarithm)
}

/// Minimal squared norm `δ² = d'ᵀ A⁻¹ d'`.
pub fn min_norm_noiseless(kernel: &KernelMatrix, dprime: &DVector<f64>) -> Result<f64> {
    kernel.inverse_form(dprime, dprime)
}
