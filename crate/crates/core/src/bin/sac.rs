use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sac_core::conformal::ConformalParams;
use sac_core::estimator::EstimatorOptions;
use sac_core::pipeline::{
    cmd_add_noise, cmd_benchmark, cmd_estimate, cmd_generate, grouped_estimate, write_report,
    BenchmarkConfig, DatasetFile, DatasetMetadata, Method, Scenario, Source, WORKERS_ENV,
};
use sac_core::Error;

#[derive(Parser)]
#[command(
    name = "sac",
    version,
    about = "Von Neumann entropy from integer Rényi entropies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write one dataset file per experiment.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write Gaussian-noise realizations of a dataset.
    AddNoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 200)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Estimate the von Neumann entropy of one dataset, or of groups of datasets.
    Estimate {
        /// Dataset files; several files with --group-size run the grouping protocol.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Sac)]
        method: MethodArg,
        #[arg(long, default_value_t = sac_core::baselines::DEFAULT_LSQ_DEGREE)]
        degree: usize,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        chi2_0: Option<f64>,
        #[arg(long)]
        group_size: Option<usize>,
    },
    /// Run a benchmark sweep and write a CSV report with a JSON sidecar.
    Benchmark {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sac,
    Chebyshev,
    Lsq,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sac => Method::Sac,
            MethodArg::Chebyshev => Method::Chebyshev,
            MethodArg::Lsq => Method::Lsq,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    TfimGround,
    XyQuench,
    RandomState,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Exact,
    Shadows,
}

/// JSON config file with per-field flag overrides.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    times_ms: Option<Vec<f64>>,
    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    chi2_0: Option<f64>,
    #[arg(long)]
    lsq_degree: Option<usize>,
    #[arg(long)]
    n_u: Option<usize>,
    #[arg(long)]
    n_m: Option<u32>,
    #[arg(long)]
    n_b: Option<usize>,
    #[arg(long)]
    n_experiments: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    noise_fraction: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<BenchmarkConfig, Error> {
        let mut c = match &self.config {
            Some(p) => BenchmarkConfig::from_json(&std::fs::read_to_string(p)?)?,
            None => BenchmarkConfig::default(),
        };
        if let Some(s) = self.scenario {
            c.scenario = match s {
                ScenarioArg::TfimGround => Scenario::TfimGround,
                ScenarioArg::XyQuench => Scenario::XyQuench,
                ScenarioArg::RandomState => Scenario::RandomState,
            };
        }
        if let Some(s) = self.source {
            c.source = match s {
                SourceArg::Exact => Source::Exact,
                SourceArg::Shadows => Source::Shadows,
            };
        }
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { c.$($target).+ = v; })*
            };
        }
        set!(
            n => n, l => l, times_ms => times_ms, k_max => k_max,
            epsilon => conformal.epsilon, eta => conformal.eta,
            lsq_degree => lsq_degree, n_u => shadow.n_u, n_m => shadow.n_m,
            n_b => shadow.n_b, n_experiments => grouping.n_experiments,
            group_size => grouping.group_size, noise_fraction => noise.gaussian_fraction,
            realizations => noise.n_realizations, seed => seed,
        );
        if self.chi2_0.is_some() {
            c.chi2_0 = self.chi2_0;
        }
        c.validate()?;
        Ok(c)
    }
}

fn time_tag(t: Option<f64>) -> String {
    t.map(|t| format!("_t{t}ms")).unwrap_or_default()
}

fn generate(cfg: &BenchmarkConfig, out_dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(out_dir)?;
    let hash = cfg.hash();
    let points = cmd_generate(cfg)?;
    let mut reference = Vec::new();
    let mut written = 0;
    for p in &points {
        for d in &p.datasets {
            let name = format!(
                "{}{}_{}.json",
                cfg.scenario.label(),
                time_tag(p.time_ms),
                d.experiment
                    .map_or("exact".to_string(), |e| format!("e{e:04}"))
            );
            let meta = DatasetMetadata {
                seed: d.seed,
                scenario: cfg.scenario.label().into(),
                config_hash: hash.clone(),
                time_ms: p.time_ms,
                experiment: d.experiment,
                exact_von_neumann: Some(p.exact.von_neumann),
            };
            DatasetFile::from_dataset(&d.dataset, meta).write(&out_dir.join(name))?;
            written += 1;
        }
        reference.push(json!({
            "time_ms": p.time_ms,
            "von_neumann": p.exact.von_neumann,
            "orders": p.exact.orders,
            "renyi": p.exact.renyi,
            "unreliable_experiments": p.datasets.iter().filter(|d| d.unreliable).count(),
        }));
    }
    let doc = json!({ "config": cfg, "config_hash": hash, "reference": reference });
    std::fs::write(
        out_dir.join("reference.json"),
        serde_json::to_string_pretty(&doc)? + "\n",
    )?;
    eprintln!("wrote {written} datasets to {}", out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { config, out_dir } => generate(&config.resolve()?, &out_dir),
        Command::AddNoise {
            input,
            fraction,
            realizations,
            seed,
            out_dir,
        } => {
            let file = DatasetFile::read(&input)?;
            let noisy = cmd_add_noise(&file.dataset()?, fraction, realizations, seed)?;
            std::fs::create_dir_all(&out_dir)?;
            let stem = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset");
            for (r, d) in noisy.iter().enumerate() {
                let meta = DatasetMetadata {
                    seed,
                    experiment: Some(r),
                    ..file.metadata.clone()
                };
                DatasetFile::from_dataset(d, meta)
                    .write(&out_dir.join(format!("{stem}_noise{r:04}.json")))?;
            }
            Ok(())
        }
        Command::Estimate {
            input,
            method,
            degree,
            epsilon,
            eta,
            chi2_0,
            group_size,
        } => {
            let defaults = ConformalParams::default();
            let params = ConformalParams::new(
                epsilon.unwrap_or(defaults.epsilon),
                eta.unwrap_or(defaults.eta),
            )?;
            let opts = EstimatorOptions {
                chi2_0,
                ..EstimatorOptions::with_params(params)
            };
            let files = input
                .iter()
                .map(|p| DatasetFile::read(p))
                .collect::<Result<Vec<_>, _>>()?;
            let data = files
                .iter()
                .map(DatasetFile::dataset)
                .collect::<Result<Vec<_>, _>>()?;
            let out = match (group_size, data.as_slice()) {
                (None, [single]) => {
                    let e = cmd_estimate(single, method.into(), &opts, degree)?;
                    json!({ "estimate": e, "metadata": files[0].metadata })
                }
                (None, _) => {
                    return Err(Error::InvalidInput(
                        "several inputs need --group-size".into(),
                    ))
                }
                (Some(g), _) => {
                    let e = grouped_estimate(&data, g, method.into(), &opts, degree)?;
                    json!({ "grouped": e })
                }
            };
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", serde_json::to_string_pretty(&out)?)?;
            Ok(())
        }
        Command::Benchmark {
            config,
            out,
            workers,
        } => {
            let cfg = config.resolve()?;
            let report = cmd_benchmark(&cfg, workers)?;
            write_report(&report, &out)?;
            eprintln!("wrote {} rows to {}", report.rows.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
