use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{derive_seed, BenchmarkConfig, Source};
use super::estimate::{cmd_estimate, grouped_estimate, mean_std, Method};
use super::generate::{cmd_generate, exact_dataset, GeneratedPoint};
use super::noise::cmd_add_noise;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorOptions, Regime, RenyiDataset};

/// Exact entropies below this are scored by absolute rather than relative error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-9;
/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SAC_WORKERS";
const NOISE_STREAM: u64 = 0x6e6f;

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub source: String,
    pub time_ms: Option<f64>,
    pub n: usize,
    pub l: usize,
    pub k_max: u32,
    pub method: String,
    /// Polynomial degree used by `lsq` rows, empty otherwise.
    pub lsq_degree: Option<usize>,
    pub noise_fraction: Option<f64>,
    pub exact_von_neumann: f64,
    pub estimate_mean: Option<f64>,
    pub estimate_spread: Option<f64>,
    /// Percent error, or absolute error in bits when `error_kind` is `absolute`.
    pub error_mean: Option<f64>,
    pub error_std: Option<f64>,
    pub error_kind: String,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Exact `S_2..S_kmax` in bits, `;`-separated.
    pub renyi_exact: String,
    pub sac_constraint_inactive: usize,
    pub sac_multimodal: usize,
    pub first_error: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMetadata {
    pub config: BenchmarkConfig,
    pub config_hash: String,
    pub desk_scale: &'static str,
    pub error_percent: &'static str,
    pub columns: Vec<&'static str>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub rows: Vec<ResultRow>,
    pub metadata: ReportMetadata,
}

const COLUMNS: [&str; 23] = [
    "scenario",
    "source",
    "time_ms",
    "n",
    "l",
    "k_max",
    "method",
    "lsq_degree",
    "noise_fraction",
    "exact_von_neumann",
    "estimate_mean",
    "estimate_spread",
    "error_mean",
    "error_std",
    "error_kind",
    "n_ok",
    "n_failed",
    "renyi_exact",
    "sac_constraint_inactive",
    "sac_multimodal",
    "first_error",
    "seed",
    "config_hash",
];

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

/// Error of one estimate against the exact value.
pub fn error_metric(estimate: f64, exact: f64) -> (f64, bool) {
    if exact.abs() < RELATIVE_ERROR_FLOOR {
        ((estimate - exact).abs(), true)
    } else {
        (100.0 * (estimate - exact).abs() / exact.abs(), false)
    }
}

struct Cell<'a> {
    point: &'a GeneratedPoint,
    noise: Option<f64>,
    k_max: u32,
    method: Method,
    inputs: &'a [RenyiDataset],
}

#[derive(Default)]
struct Tally {
    values: Vec<f64>,
    failures: usize,
    inactive: usize,
    multimodal: usize,
    first_error: Option<String>,
}

impl Tally {
    fn record(&mut self, r: Result<f64>) {
        match r {
            Ok(v) => self.values.push(v),
            Err(e) => {
                self.failures += 1;
                self.first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
}

fn run_cell(cfg: &BenchmarkConfig, hash: &str, cell: &Cell) -> ResultRow {
    let opts = EstimatorOptions {
        chi2_0: cfg.chi2_0,
        ..EstimatorOptions::with_params(cfg.conformal)
    };
    let exact = cell.point.exact.von_neumann;
    // the sweep starts at k_max = 3, where only a line fits
    let degree = cfg.lsq_degree.min(cell.k_max as usize - 2);
    let mut tally = Tally::default();
    let mut spread = None;
    match cfg.source {
        Source::Exact => {
            for d in cell.inputs {
                let r = d.truncated(cell.k_max).and_then(|t| {
                    cmd_estimate(&t, cell.method, &opts, degree).map(|e| {
                        if let Some(s) = &e.sac {
                            tally.inactive += usize::from(s.regime == Regime::ConstraintInactive);
                            tally.multimodal += usize::from(s.multimodal);
                        }
                        e.value
                    })
                });
                tally.record(r);
            }
        }
        Source::Shadows => {
            let truncated: Result<Vec<_>> = cell
                .inputs
                .iter()
                .map(|d| d.truncated(cell.k_max))
                .collect();
            match truncated.and_then(|t| {
                grouped_estimate(&t, cfg.grouping.group_size, cell.method, &opts, degree)
            }) {
                Ok(g) => {
                    tally.values = g.estimates;
                    tally.failures = g.failures;
                    spread = Some(g.spread);
                }
                Err(e) => tally.record(Err(e)),
            }
        }
    }
    let (est_mean, est_spread, err_mean, err_std, absolute) = if tally.values.is_empty() {
        (None, None, None, None, exact.abs() < RELATIVE_ERROR_FLOOR)
    } else {
        let (m, s) = mean_std(&tally.values);
        let errs: Vec<f64> = tally
            .values
            .iter()
            .map(|&v| error_metric(v, exact).0)
            .collect();
        let (em, es) = mean_std(&errs);
        (
            Some(m),
            Some(spread.unwrap_or(s)),
            Some(em),
            Some(es),
            error_metric(m, exact).1,
        )
    };
    let exact_inputs = &cell.point.exact;
    let renyi_exact = exact_inputs
        .orders
        .iter()
        .zip(&exact_inputs.renyi)
        .filter(|(&k, _)| k <= cell.k_max)
        .map(|(_, v)| format!("{v}"))
        .collect::<Vec<_>>()
        .join(";");
    ResultRow {
        scenario: cfg.scenario.label().into(),
        source: match cfg.source {
            Source::Exact => "exact".into(),
            Source::Shadows => "shadows".into(),
        },
        time_ms: cell.point.time_ms,
        n: cfg.n,
        l: cfg.l,
        k_max: cell.k_max,
        method: cell.method.label().into(),
        lsq_degree: (cell.method == Method::Lsq).then_some(degree),
        noise_fraction: cell.noise,
        exact_von_neumann: exact,
        estimate_mean: est_mean,
        estimate_spread: est_spread,
        error_mean: err_mean,
        error_std: err_std,
        error_kind: if absolute { "absolute" } else { "percent" }.into(),
        n_ok: tally.values.len(),
        n_failed: tally.failures,
        renyi_exact,
        sac_constraint_inactive: tally.inactive,
        sac_multimodal: tally.multimodal,
        first_error: tally.first_error.unwrap_or_default(),
        seed: cfg.seed,
        config_hash: hash.to_string(),
    }
}

/// Sweeps `k_max ∈ [3, k_max]`, all methods and noise settings.
///
/// Cells run on a pool of `workers` threads (the global pool when `None`);
/// the rows come back sorted, so the report does not depend on scheduling.
pub fn cmd_benchmark(cfg: &BenchmarkConfig, workers: Option<usize>) -> Result<BenchmarkReport> {
    let run = || -> Result<Vec<ResultRow>> {
        let hash = cfg.hash();
        let points = cmd_generate(cfg)?;
        // (point index, noise, inputs)
        let mut inputs: Vec<(usize, Option<f64>, Vec<RenyiDataset>)> = Vec::new();
        for (pi, p) in points.iter().enumerate() {
            match cfg.source {
                Source::Exact => {
                    let exact = exact_dataset(&p.exact)?;
                    inputs.push((pi, Some(0.0), vec![exact.clone()]));
                    let f = cfg.noise.gaussian_fraction;
                    if f > 0.0 {
                        let seed = derive_seed(cfg.seed, &[NOISE_STREAM, pi as u64]);
                        let noisy = cmd_add_noise(&exact, f, cfg.noise.n_realizations, seed)?;
                        inputs.push((pi, Some(f), noisy));
                    }
                }
                Source::Shadows => inputs.push((
                    pi,
                    None,
                    p.datasets.iter().map(|d| d.dataset.clone()).collect(),
                )),
            }
        }
        let mut cells = Vec::new();
        for (pi, noise, data) in &inputs {
            for k in 3..=cfg.k_max {
                for method in Method::ALL {
                    cells.push(Cell {
                        point: &points[*pi],
                        noise: *noise,
                        k_max: k,
                        method,
                        inputs: data,
                    });
                }
            }
        }
        let mut rows: Vec<ResultRow> = cells.par_iter().map(|c| run_cell(cfg, &hash, c)).collect();
        rows.sort_by(|a, b| {
            let key = |r: &ResultRow| (r.time_ms.unwrap_or(-1.0), r.noise_fraction.unwrap_or(-1.0));
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(a.method.cmp(&b.method))
                .then(a.k_max.cmp(&b.k_max))
        });
        Ok(rows)
    };
    cfg.validate()?;
    let rows = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(BenchmarkReport {
        rows,
        metadata: ReportMetadata {
            config: cfg.clone(),
            config_hash: cfg.hash(),
            desk_scale:
                "reduced system sizes and experiment counts; not comparable to full-scale runs",
            error_percent: "100 |estimate - exact| / exact; absolute bits when exact < 1e-9",
            columns: COLUMNS.to_vec(),
        },
    })
}

/// Sidecar path for a CSV report: `report.csv` gives `report.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the CSV and its JSON sidecar.
pub fn write_report(report: &BenchmarkReport, csv_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut text = serde_json::to_string_pretty(&report.metadata)?;
    text.push('\n');
    std::fs::write(sidecar_path(csv_path), text)?;
    Ok(())
}
