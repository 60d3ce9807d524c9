use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RenyiDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DatasetMetadata {
    pub seed: u64,
    pub scenario: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<usize>,
    /// Exact von Neumann entropy of the underlying state, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_von_neumann: Option<f64>,
}

/// On-disk form of a [`RenyiDataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub orders: Vec<u32>,
    pub values_bits: Vec<f64>,
    /// Row-major covariance in bits².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<f64>>,
    #[serde(default)]
    pub metadata: DatasetMetadata,
}

impl DatasetFile {
    pub fn from_dataset(data: &RenyiDataset, metadata: DatasetMetadata) -> Self {
        Self {
            orders: data.orders().to_vec(),
            values_bits: data.values().to_vec(),
            covariance: data
                .covariance()
                .map(|c| c.transpose().iter().copied().collect()),
            metadata,
        }
    }

    pub fn dataset(&self) -> Result<RenyiDataset> {
        let n = self.orders.len();
        let cov = match &self.covariance {
            None => None,
            Some(v) if v.len() == n * n => Some(DMatrix::from_row_slice(n, n, v)),
            Some(v) => {
                return Err(Error::invalid(format!(
                    "covariance has {} entries, expected {}",
                    v.len(),
                    n * n
                )))
            }
        };
        RenyiDataset::new(self.orders.clone(), self.values_bits.clone(), cov)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
