//! Real dilogarithm and Gauss–Legendre rules.

use std::f64::consts::PI;

const PI2_6: f64 = PI * PI / 6.0;

/// Power series `Σ xⁿ/n²`, used only for `|x| <= 1/2`.
fn dilog_series(x: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut pow = x;
    let mut n = 1.0;
    while pow.abs() > 1e-18 * sum.abs().max(1e-300) {
        sum += pow / (n * n);
        n += 1.0;
        pow *= x;
    }
    sum
}

/// Real dilogarithm `Li₂(x)` for `x <= 1`.
///
/// Arguments outside `[-1/2, 1/2]` are folded into that range with the
/// reflection (`x > 1/2`) and Landen (`x < -1/2`) identities.
pub fn dilog(x: f64) -> f64 {
    assert!(x <= 1.0, "dilog is real only for x <= 1, got {x}");
    if x == 1.0 {
        PI2_6
    } else if x.abs() <= 0.5 {
        dilog_series(x)
    } else if x > 0.5 {
        PI2_6 - x.ln() * (-x).ln_1p() - dilog_series(1.0 - x)
    } else if x >= -1.0 {
        let l = (-x).ln_1p();
        -dilog_series(x / (x - 1.0)) - 0.5 * l * l
    } else {
        // x < -1: inversion Li₂(x) = -π²/6 - ½ ln²(-x) - Li₂(1/x)
        let l = (-x).ln();
        -PI2_6 - 0.5 * l * l - dilog(1.0 / x)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
