use std::path::{Path, PathBuf};
use std::sync::Arc;

use adaptagg::clustering::{FeatureMode, Linkage, Method};
use adaptagg::model::{Policy, TechCatalog, Variant};
use adaptagg::pipeline::ExperimentConfig;
use adaptagg::timeseries::{load_csv, synthesize, HorizonData, SynthConfig, SynthHorizon};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ConfigError;

#[derive(Debug, Parser)]
#[command(name = "adaptagg", version, about = "Time aggregation for capacity expansion planning")]
pub struct Cli {
    /// Cap on worker threads for slice solves and sweep cells.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic load / solar / wind horizon as CSV.
    Synth(SynthArgs),
    /// Solve the full-horizon model (cached by input hash).
    Benchmark(BenchmarkArgs),
    /// Select representative slices and evaluate the reduced model.
    Aggregate(AggregateArgs),
    /// Run a grid of scenarios; resumable.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, conflicts_with_all = ["weeks", "hours"])]
    pub years: Option<u32>,
    #[arg(long, conflicts_with = "hours")]
    pub weeks: Option<u32>,
    #[arg(long)]
    pub hours: Option<u32>,
    /// Generator settings (JSON); the horizon flags override its horizon.
    #[arg(long)]
    pub synth_config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn config(&self) -> anyhow::Result<SynthConfig> {
        let mut cfg: SynthConfig = match &self.synth_config {
            Some(p) => read_json(p)?,
            None => SynthConfig::default(),
        };
        if let Some(y) = self.years {
            cfg.horizon = SynthHorizon::Years(y);
        } else if let Some(w) = self.weeks {
            cfg.horizon = SynthHorizon::Weeks(w);
        } else if let Some(h) = self.hours {
            cfg.horizon = SynthHorizon::Hours(h);
        }
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Linear,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Kmeans,
    Agglomerative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinkageArg {
    Single,
    Average,
    Complete,
    Ward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Adaptive,
    Traditional,
}

impl From<ModeArg> for FeatureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Adaptive => FeatureMode::Adaptive,
            ModeArg::Traditional => FeatureMode::Traditional,
        }
    }
}

/// Inputs and model settings shared by the solving commands. Flags override the config file.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment config (JSON). Without it the built-in baseline for `--variant` is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hourly CSV with `timestamp,load,<profile ids>`.
    #[arg(long, required_unless_present = "synth_weeks")]
    pub data: Option<PathBuf>,
    /// Generate the data in memory instead of reading `--data` (uses `--seed`).
    #[arg(long, conflicts_with = "data")]
    pub synth_weeks: Option<u32>,
    /// Technology catalog (JSON), replacing the config's.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Renewable portfolio standard in [0, 1].
    #[arg(long)]
    pub rps: Option<f64>,
    #[arg(long)]
    pub slice_hours: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub linkage: Option<LinkageArg>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Represent clusters by hourly centroids instead of medoid slices.
    #[arg(long)]
    pub centroid: bool,
    #[arg(long, overrides_with = "no_standardize")]
    pub standardize: bool,
    #[arg(long, overrides_with = "standardize")]
    pub no_standardize: bool,
    /// k-means seed, and generator seed with `--synth-weeks`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Benchmark cache directory (default: `<out>/cache`).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
}

impl ExperimentArgs {
    /// Config file (or baseline) with every flag applied.
    pub fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let mut c: ExperimentConfig = read_json(p)?;
                if let Some(v) = self.variant {
                    c.variant = variant(v);
                }
                c
            }
            None => ExperimentConfig::baseline(self.variant.map_or(Variant::Integer, variant)),
        };
        if let Some(p) = &self.catalog {
            let catalog: TechCatalog = read_json(p)?;
            cfg.catalog = catalog;
        }
        if let Some(r) = self.rps {
            cfg.policy = Policy::new(r).map_err(|e| ConfigError(e.to_string()))?;
        }
        if let Some(h) = self.slice_hours {
            cfg.slice_hours = h;
        }
        if let Some(m) = self.method {
            cfg.cluster.method = match m {
                MethodArg::Kmeans => Method::Kmeans,
                MethodArg::Agglomerative => Method::Agglomerative,
            };
        }
        if let Some(l) = self.linkage {
            cfg.cluster.linkage = match l {
                LinkageArg::Single => Linkage::Single,
                LinkageArg::Average => Linkage::Average,
                LinkageArg::Complete => Linkage::Complete,
                LinkageArg::Ward => Linkage::Ward,
            };
        }
        if let Some(k) = self.k {
            cfg.cluster.k = k;
        }
        if self.centroid {
            cfg.cluster.centroid_mode = true;
        }
        if self.standardize {
            cfg.cluster.standardize = true;
        }
        if self.no_standardize {
            cfg.cluster.standardize = false;
        }
        if let Some(s) = self.seed {
            cfg.cluster.seed = s;
        }
        cfg.catalog
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if cfg.slice_hours == 0 {
            return Err(ConfigError("slice length must be positive".into()).into());
        }
        Ok(cfg)
    }

    pub fn load_data(&self) -> anyhow::Result<Arc<HorizonData>> {
        let data = match (&self.data, self.synth_weeks) {
            (Some(path), _) => load_csv(path).map_err(|e| ConfigError(e.to_string()))?,
            (None, Some(weeks)) => {
                let cfg = SynthConfig {
                    horizon: SynthHorizon::Weeks(weeks),
                    ..Default::default()
                };
                synthesize(&cfg, self.seed.unwrap_or(42)).map_err(|e| ConfigError(e.to_string()))?
            }
            (None, None) => unreachable!("clap requires a data source"),
        };
        Ok(Arc::new(data))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out.join("cache"))
    }
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::Linear => Variant::Linear,
        VariantArg::Integer => Variant::Integer,
    }
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Also write the full-horizon model as an LP file.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long, value_enum, default_value = "adaptive")]
    pub mode: ModeArg,
    /// Skip the benchmark solve and the comparison.
    #[arg(long)]
    pub no_eval: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Grid file (JSON); omitted axes take their defaults.
    #[arg(long)]
    pub grid: PathBuf,
}
