//! Data generation, noise injection, estimation and benchmark reports.

mod benchmark;
mod config;
mod estimate;
mod generate;
mod io;
mod noise;

pub use benchmark::{
    cmd_benchmark, error_metric, sidecar_path, workers_from_env, write_report, BenchmarkReport,
    ReportMetadata, ResultRow, RELATIVE_ERROR_FLOOR, WORKERS_ENV,
};
pub use config::{
    derive_seed, BenchmarkConfig, Grouping, NoiseParams, QuenchParams, Scenario, Source, TfimParams,
};
pub use estimate::{
    cmd_estimate, combine_group, grouped_estimate, mean_std, GroupedEstimate, Method,
    MethodEstimate,
};
pub use generate::{
    cmd_generate, exact_dataset, time_points, GeneratedDataset, GeneratedPoint, ScenarioStates,
};
pub use io::{DatasetFile, DatasetMetadata};
pub use noise::cmd_add_noise;
