use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Rényi entropies (bits) at integer orders, optionally with their covariance (bits²).
#[derive(Debug, Clone, PartialEq)]
pub struct RenyiDataset {
    orders: Vec<u32>,
    values: Vec<f64>,
    covariance: Option<DMatrix<f64>>,
}

impl RenyiDataset {
    pub fn new(
        orders: Vec<u32>,
        values: Vec<f64>,
        covariance: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        if orders.is_empty() || orders.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} orders against {} values",
                orders.len(),
                values.len()
            )));
        }
        if orders[0] != 2 || orders.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "orders must be strictly increasing and start at 2",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite Rényi value"));
        }
        if let Some(c) = &covariance {
            let n = orders.len();
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::invalid(format!(
                    "covariance is {}x{}, expected {n}x{n}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("non-finite covariance entry"));
            }
            let asym = (c - c.transpose()).amax();
            if asym > 1e-10 {
                return Err(Error::invalid(format!(
                    "covariance not symmetric ({asym:e})"
                )));
            }
        }
        Ok(Self {
            orders,
            values,
            covariance,
        })
    }

    /// Noise-free values at orders `2, 3, ...`.
    pub fn exact(values: Vec<f64>) -> Result<Self> {
        let orders = (2..2 + values.len() as u32).collect();
        Self::new(orders, values, None)
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn k_max(&self) -> u32 {
        *self.orders.last().expect("validated non-empty")
    }

    pub fn value(&self, order: u32) -> Option<f64> {
        self.orders
            .iter()
            .position(|&o| o == order)
            .map(|p| self.values[p])
    }

    pub fn with_covariance(self, covariance: Option<DMatrix<f64>>) -> Result<Self> {
        Self::new(self.orders, self.values, covariance)
    }

    pub fn without_covariance(&self) -> Self {
        Self {
            orders: self.orders.clone(),
            values: self.values.clone(),
            covariance: None,
        }
    }

    /// Keeps orders `<= k_max`.
    pub fn truncated(&self, k_max: u32) -> Result<Self> {
        let n = self.orders.iter().take_while(|&&o| o <= k_max).count();
        if n == 0 {
            return Err(Error::invalid(format!("no orders <= {k_max}")));
        }
        let cov = self
            .covariance
            .as_ref()
            .map(|c| c.view((0, 0), (n, n)).into_owned());
        Self::new(self.orders[..n].to_vec(), self.values[..n].to_vec(), cov)
    }

    /// Adds `s` bits to every value.
    pub fn shifted(&self, s: f64) -> Self {
        Self {
            orders: self.orders.clone(),
            values: self.values.iter().map(|v| v + s).collect(),
            covariance: self.covariance.clone(),
        }
    }
}
