use rayon::prelude::*;

use super::config::{derive_seed, BenchmarkConfig, Scenario, Source};
use crate::error::Result;
use crate::estimator::RenyiDataset;
use crate::quantum::{
    exact_entropies, neel_state, partial_trace, tfim_ground_state, DensityMatrix, ExactEntropies,
    PureState, SpinHamiltonian, XyQuench,
};
use crate::shadows::shadow_experiment;

const RANDOM_STATE_STREAM: u64 = 0x5eed;

/// The pure states a config refers to, built once.
pub enum ScenarioStates {
    Static(PureState),
    Quench(Box<XyQuench>),
}

impl ScenarioStates {
    pub fn new(cfg: &BenchmarkConfig) -> Result<Self> {
        Ok(match cfg.scenario {
            Scenario::TfimGround => {
                Self::Static(tfim_ground_state(cfg.n, cfg.tfim.j, cfg.tfim.h)?.state)
            }
            Scenario::RandomState => Self::Static(PureState::random(
                cfg.n,
                derive_seed(cfg.seed, &[RANDOM_STATE_STREAM]),
            )?),
            Scenario::XyQuench => {
                let q = cfg.quench;
                let ham = SpinHamiltonian::power_law(cfg.n, q.j, q.field, q.exponent)?;
                Self::Quench(Box::new(XyQuench::new(&ham, &neel_state(cfg.n)?)?))
            }
        })
    }

    pub fn state(&self, time_ms: Option<f64>) -> Result<PureState> {
        match self {
            Self::Static(s) => Ok(s.clone()),
            Self::Quench(q) => q.state_at(time_ms.unwrap_or(0.0) * 1e-3),
        }
    }
}

/// Times to sweep: the configured list for quenches, a single static point otherwise.
pub fn time_points(cfg: &BenchmarkConfig) -> Vec<Option<f64>> {
    match cfg.scenario {
        Scenario::XyQuench => cfg.times_ms.iter().map(|&t| Some(t)).collect(),
        _ => vec![None],
    }
}

/// One generated dataset with its provenance.
#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub time_ms: Option<f64>,
    pub experiment: Option<usize>,
    pub seed: u64,
    pub dataset: RenyiDataset,
    pub unreliable: bool,
}

/// All datasets for one time point, together with the exact reference.
#[derive(Debug, Clone)]
pub struct GeneratedPoint {
    pub time_ms: Option<f64>,
    pub reduced: DensityMatrix,
    pub exact: ExactEntropies,
    pub datasets: Vec<GeneratedDataset>,
}

pub fn exact_dataset(exact: &ExactEntropies) -> Result<RenyiDataset> {
    RenyiDataset::new(exact.orders.clone(), exact.renyi.clone(), None)
}

/// Exact datasets, or `n_experiments` shadow experiments per time point.
pub fn cmd_generate(cfg: &BenchmarkConfig) -> Result<Vec<GeneratedPoint>> {
    cfg.validate()?;
    let states = ScenarioStates::new(cfg)?;
    let subsystem = cfg.subsystem();
    time_points(cfg)
        .into_iter()
        .enumerate()
        .map(|(ti, time_ms)| {
            let state = states.state(time_ms)?;
            let reduced = partial_trace(&state, &subsystem)?;
            let exact = exact_entropies(&reduced, cfg.k_max)?;
            let datasets = match cfg.source {
                Source::Exact => vec![GeneratedDataset {
                    time_ms,
                    experiment: None,
                    seed: cfg.seed,
                    dataset: exact_dataset(&exact)?,
                    unreliable: false,
                }],
                Source::Shadows => (0..cfg.grouping.n_experiments)
                    .into_par_iter()
                    .map(|e| {
                        let seed = derive_seed(cfg.seed, &[ti as u64, e as u64]);
                        let jk =
                            shadow_experiment(&state, &subsystem, cfg.shadow, cfg.k_max, seed)?;
                        Ok(GeneratedDataset {
                            time_ms,
                            experiment: Some(e),
                            seed,
                            dataset: jk.dataset,
                            unreliable: jk.unreliable,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            Ok(GeneratedPoint {
                time_ms,
                reduced,
                exact,
                datasets,
            })
        })
        .collect()
}
