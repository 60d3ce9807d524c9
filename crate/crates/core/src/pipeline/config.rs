use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conformal::ConformalParams;
use crate::error::{Error, Result};
use crate::shadows::{ShadowParams, MAX_BATCHES, MAX_SHADOW_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Ground state of `-J Σ σᶻσᶻ - h Σ σˣ`, open chain.
    TfimGround,
    /// Néel state evolved under the long-range XY model.
    XyQuench,
    /// Seeded random pure state.
    RandomState,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::TfimGround => "tfim_ground",
            Scenario::XyQuench => "xy_quench",
            Scenario::RandomState => "random_state",
        }
    }
}

/// Where the Rényi inputs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Exact entropies, optionally perturbed by Gaussian noise.
    Exact,
    /// Simulated randomized measurements with jackknife covariances.
    Shadows,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfimParams {
    pub j: f64,
    pub h: f64,
}

/// Couplings `J_ij = J / |i-j|^exponent` in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchParams {
    pub j: f64,
    pub field: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grouping {
    pub n_experiments: usize,
    pub group_size: usize,
}

impl Grouping {
    pub fn n_groups(&self) -> usize {
        self.n_experiments / self.group_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// Relative standard deviation of the Gaussian noise on each `S_k`.
    pub gaussian_fraction: f64,
    pub n_realizations: usize,
}

/// Everything a benchmark run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub scenario: Scenario,
    pub source: Source,
    /// System size in qubits.
    pub n: usize,
    /// Subsystem: sites `0..l`.
    pub l: usize,
    /// Evolution times in milliseconds (quench only).
    pub times_ms: Vec<f64>,
    pub k_max: u32,
    pub conformal: ConformalParams,
    /// `None` uses `k_max`.
    pub chi2_0: Option<f64>,
    pub lsq_degree: usize,
    pub shadow: ShadowParams,
    pub grouping: Grouping,
    pub noise: NoiseParams,
    pub tfim: TfimParams,
    pub quench: QuenchParams,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::TfimGround,
            source: Source::Exact,
            n: 12,
            l: 6,
            times_ms: vec![0.0],
            k_max: 6,
            conformal: ConformalParams::default(),
            chi2_0: None,
            lsq_degree: crate::baselines::DEFAULT_LSQ_DEGREE,
            shadow: ShadowParams::default(),
            grouping: Grouping {
                n_experiments: 100,
                group_size: 10,
            },
            noise: NoiseParams {
                gaussian_fraction: 0.1,
                n_realizations: 200,
            },
            tfim: TfimParams { j: 1.0, h: 0.5 },
            quench: QuenchParams {
                j: 420.0,
                field: 0.0,
                exponent: 1.2,
            },
            seed: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.n == 0 || self.n > 14 {
            return bad(format!("n = {} outside [1, 14]", self.n));
        }
        if self.scenario == Scenario::XyQuench && self.n > 12 {
            return bad(format!("quench needs n <= 12, got {}", self.n));
        }
        if self.l == 0 || self.l > self.n {
            return bad(format!("subsystem size {} outside [1, n]", self.l));
        }
        if self.k_max < 3 {
            return bad(format!("k_max = {} must be at least 3", self.k_max));
        }
        self.conformal.validate()?;
        if let Some(c) = self.chi2_0 {
            if !(c > 0.0) {
                return bad(format!("chi2_0 = {c} must be positive"));
            }
        }
        if self.lsq_degree < 1 || self.lsq_degree + 2 > self.k_max as usize {
            return bad(format!(
                "lsq_degree {} needs 1 <= degree <= k_max - 2",
                self.lsq_degree
            ));
        }
        if self.times_ms.is_empty() || self.times_ms.iter().any(|t| !(*t >= 0.0) || !t.is_finite())
        {
            return bad("times_ms must be a non-empty list of non-negative times".into());
        }
        if !(self.noise.gaussian_fraction >= 0.0) || !self.noise.gaussian_fraction.is_finite() {
            return bad("gaussian_fraction must be non-negative".into());
        }
        if self.noise.n_realizations == 0 {
            return bad("n_realizations must be positive".into());
        }
        if self.source == Source::Shadows {
            let s = self.shadow;
            if self.l > MAX_SHADOW_QUBITS {
                return bad(format!(
                    "shadow subsystem of {} qubits exceeds {MAX_SHADOW_QUBITS}",
                    self.l
                ));
            }
            if s.n_u == 0 || s.n_m == 0 {
                return bad("N_u and N_m must be positive".into());
            }
            if s.n_b < self.k_max as usize + 1 || s.n_b > s.n_u || s.n_b > MAX_BATCHES {
                return bad(format!(
                    "N_B = {} must lie in [k_max + 1, min(N_u, {MAX_BATCHES})]",
                    s.n_b
                ));
            }
            let g = self.grouping;
            if g.group_size == 0 || g.n_groups() == 0 {
                return bad(format!(
                    "grouping {} experiments by {} leaves no group",
                    g.n_experiments, g.group_size
                ));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn subsystem(&self) -> Vec<usize> {
        (0..self.l).collect()
    }
}

/// Deterministic seed for one work item.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
