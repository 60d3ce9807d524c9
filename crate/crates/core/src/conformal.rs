//! Conformal map from the Rényi strip `Re z > 1, |Im z| < ε` onto the unit disk.
//!
//! `ξ = cosh((z - 1)/ε + iπ/2)` opens the strip onto the upper half plane and
//! the Möbius step `w = (ξ - iη)/(ξ + iη)` closes it onto the disk. The von
//! Neumann point `z = 1` lands on `w = -1` and the integer Rényi orders on
//! the real segment `(-1, 1)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalParams {
    /// Half-width of the analyticity strip in the z-plane.
    pub epsilon: f64,
    /// Möbius parameter.
    pub eta: f64,
}

#[derive(Deserialize)]
struct DefaultsFile {
    epsilon: f64,
    eta: f64,
}

static DEFAULTS: OnceLock<ConformalParams> = OnceLock::new();

impl ConformalParams {
    pub fn new(epsilon: f64, eta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) || !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!(
                "conformal parameters must be positive, got epsilon={epsilon}, eta={eta}"
            )));
        }
        Ok(Self { epsilon, eta })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.epsilon, self.eta).map(|_| ())
    }
}

impl Default for ConformalParams {
    /// Values selected by `examples/tune_conformal.rs`, stored in
    /// `data/conformal_defaults.json`.
    fn default() -> Self {
        *DEFAULTS.get_or_init(|| {
            let file: DefaultsFile =
                serde_json::from_str(include_str!("../data/conformal_defaults.json"))
                    .expect("bundled conformal defaults are valid JSON");
            ConformalParams::new(file.epsilon, file.eta).expect("bundled defaults are positive")
        })
    }
}

/// Image of `z` in the unit disk.
pub fn map_to_disk(z: C64, params: &ConformalParams) -> Result<C64> {
    params.validate()?;
    if !(z.re >= 1.0 || z.im.abs() < params.epsilon) {
        return Err(Error::invalid(format!(
            "z = {z} outside the analyticity strip"
        )));
    }
    let i = C64::new(0.0, 1.0);
    // cosh(a + i(b + π/2)) = -cosh a sin b + i sinh a cos b, without rounding π/2
    let (a, b) = ((z.re - 1.0) / params.epsilon, z.im / params.epsilon);
    let xi = C64::new(-a.cosh() * b.sin(), a.sinh() * b.cos());
    let den = xi + i * params.eta;
    if den.norm() < 1e-300 {
        return Err(Error::DegenerateGeometry(format!(
            "z = {z} hits the Möbius pole"
        )));
    }
    let w = (xi - i * params.eta) / den;
    // deep in the strip 1 - |w| drops below one ulp; round towards the
    // interior so the image stays inside the disk
    if xi.im > 0.0 && w.norm() >= 1.0 {
        return Ok(w * (INTERIOR_EDGE / w.norm()));
    }
    Ok(w)
}

/// Largest `f64` below one.
const INTERIOR_EDGE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Disk image of a real order `z >= 1`, `(s - η)/(s + η)` with `s = sinh((z-1)/ε)`.
pub fn map_real(z: f64, params: &ConformalParams) -> Result<f64> {
    Ok(map_to_disk(C64::new(z, 0.0), params)?.re)
}

/// How the subtraction point `w0` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum W0Rule {
    /// `w0 = w(2)`; the only rule accepted by the closed-form estimate.
    FirstPoint,
    /// `w0 = (w(2) + w(k_max)) / 2`.
    Midpoint,
    Explicit(f64),
}

/// Disk images of the Rényi orders `2..=k_max` and the subtraction point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskPoints {
    orders: Vec<u32>,
    w: Vec<f64>,
    w0: f64,
    rule: W0Rule,
}

impl DiskPoints {
    /// Builds points from explicit disk locations; `orders` label the entries.
    pub fn from_parts(orders: Vec<u32>, w: Vec<f64>, w0: f64) -> Result<Self> {
        if orders.len() != w.len() || orders.is_empty() {
            return Err(Error::invalid(
                "orders and disk points must have equal, non-zero length",
            ));
        }
        if w.iter()
            .chain(std::iter::once(&w0))
            .any(|x| !(x.abs() < 1.0))
        {
            return Err(Error::invalid(
                "disk points must lie strictly inside (-1, 1)",
            ));
        }
        Ok(Self {
            orders,
            w,
            w0,
            rule: W0Rule::Explicit(w0),
        })
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn rule(&self) -> W0Rule {
        self.rule
    }

    pub fn k_max(&self) -> u32 {
        *self.orders.last().expect("non-empty")
    }

    /// Image of the von Neumann point.
    pub fn w_target(&self) -> f64 {
        -1.0
    }

    pub fn w_of(&self, order: u32) -> Option<f64> {
        self.orders
            .iter()
            .position(|&o| o == order)
            .map(|p| self.w[p])
    }

    /// Rejects a subtraction point that sits on a data point.
    pub fn ensure_w0_distinct(&self) -> Result<()> {
        if let Some(p) = self.w.iter().position(|w| (w - self.w0).abs() < 1e-12) {
            return Err(Error::invalid(format!(
                "subtraction point coincides with the image of order {}",
                self.orders[p]
            )));
        }
        Ok(())
    }
}

pub fn map_data_points(k_max: u32, params: &ConformalParams, rule: W0Rule) -> Result<DiskPoints> {
    if k_max < 3 {
        return Err(Error::invalid(format!("k_max must be >= 3, got {k_max}")));
    }
    map_orders(&(2..=k_max).collect::<Vec<_>>(), params, rule)
}

/// Like [`map_data_points`] for an arbitrary increasing list of orders `>= 2`.
pub fn map_orders(orders: &[u32], params: &ConformalParams, rule: W0Rule) -> Result<DiskPoints> {
    if orders.len() < 2 || orders[0] < 2 {
        return Err(Error::invalid("need at least two orders, all >= 2"));
    }
    let orders = orders.to_vec();
    let w = orders
        .iter()
        .map(|&k| map_real(k as f64, params))
        .collect::<Result<Vec<_>>>()?;
    if w.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::DegenerateGeometry(
            "disk images of the orders are not strictly increasing; epsilon too small".into(),
        ));
    }
    if w.iter().any(|x| !(x.abs() < 1.0)) {
        return Err(Error::DegenerateGeometry(
            "an order maps onto the unit circle in floating point; epsilon too small".into(),
        ));
    }
    let w0 = match rule {
        W0Rule::FirstPoint => w[0],
        W0Rule::Midpoint => 0.5 * (w[0] + w[w.len() - 1]),
        W0Rule::Explicit(v) => {
            if !(v.abs() < 1.0) {
                return Err(Error::invalid(format!("explicit w0 = {v} outside (-1, 1)")));
            }
            v
        }
    };
    Ok(DiskPoints {
        orders,
        w,
        w0,
        rule,
    })
}
