use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use adaptagg::model::build_full;
use adaptagg::pipeline::{
    run_adaptive, run_benchmark, run_traditional, sweep as run_sweep, BenchmarkCache, PipelineError,
    SweepGrid,
};
use adaptagg::timeseries::{synthesize, write_csv};
use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{
    read_json, AggregateArgs, BenchmarkArgs, ExperimentArgs, ModeArg, SweepArgs, SynthArgs,
};
use crate::PartialFailure;

#[derive(Debug, Serialize)]
struct InputRecord {
    path: PathBuf,
    sha256: String,
}

/// Provenance of one command's outputs. Contains no clock readings, so reruns are identical.
#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    inputs: BTreeMap<&'static str, InputRecord>,
    data_content_hash: String,
    seeds: BTreeMap<&'static str, u64>,
    settings: serde_json::Value,
    outputs: BTreeMap<String, String>,
}

impl Manifest {
    fn new(command: &'static str, data_content_hash: String) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: BTreeMap::new(),
            data_content_hash,
            seeds: BTreeMap::new(),
            settings: serde_json::Value::Null,
            outputs: BTreeMap::new(),
        }
    }

    fn input(&mut self, role: &'static str, path: Option<&Path>) -> anyhow::Result<()> {
        if let Some(path) = path {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            self.inputs.insert(
                role,
                InputRecord {
                    path: path.to_path_buf(),
                    sha256: sha256(&bytes),
                },
            );
        }
        Ok(())
    }

    fn record_inputs(&mut self, exp: &ExperimentArgs) -> anyhow::Result<()> {
        self.input("config", exp.config.as_deref())?;
        self.input("data", exp.data.as_deref())?;
        self.input("catalog", exp.catalog.as_deref())?;
        if exp.synth_weeks.is_some() {
            self.seeds.insert("synth", exp.seed.unwrap_or(42));
        }
        Ok(())
    }

    fn write(self, out: &Path) -> anyhow::Result<()> {
        let json = serde_json::to_string_pretty(&self)? + "\n";
        let path = out.join("manifest.json");
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))
    }
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], outputs: &mut BTreeMap<String, String>) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    outputs.insert(name.to_string(), sha256(bytes));
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, outputs: &mut BTreeMap<String, String>) -> anyhow::Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    write_file(dir, name, json.as_bytes(), outputs)
}

fn create_out(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

pub fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let data = synthesize(&cfg, args.seed).map_err(|e| crate::ConfigError(e.to_string()))?;
    create_out(&args.out)?;
    let csv_path = args.out.join("data.csv");
    write_csv(&data, &csv_path)?;
    let mut manifest = Manifest::new("synth", data.content_hash());
    manifest.input("synth_config", args.synth_config.as_deref())?;
    manifest.seeds.insert("synth", args.seed);
    manifest.settings = serde_json::to_value(&cfg)?;
    manifest
        .outputs
        .insert("data.csv".into(), sha256(&fs::read(&csv_path)?));
    log::info!("wrote {} hours to {}", data.hours(), csv_path.display());
    manifest.write(&args.out)
}

pub fn benchmark(args: &BenchmarkArgs) -> anyhow::Result<()> {
    let cfg = args.exp.resolve()?;
    let data = args.exp.load_data()?;
    let exp = cfg.experiment(data.clone());
    create_out(&args.exp.out)?;
    let mut manifest = Manifest::new("benchmark", data.content_hash());
    manifest.record_inputs(&args.exp)?;
    manifest.settings = serde_json::to_value(&cfg)?;

    if let Some(lp) = &args.export_lp {
        let instance = build_full(&exp.data, &exp.catalog, exp.policy, exp.variant, exp.build)
            .map_err(PipelineError::from)?;
        adaptagg_solver::lpfile::export_lp_file(&instance.problem, lp)?;
    }
    let bench = run_benchmark(&exp, &BenchmarkCache::at(args.exp.cache_dir()))?;
    if bench.cache_hit {
        log::info!("benchmark cache hit ({})", bench.key);
    }
    write_json(&args.exp.out, "benchmark.json", &bench.plan, &mut manifest.outputs)?;
    manifest.write(&args.exp.out)
}

pub fn aggregate(args: &AggregateArgs) -> anyhow::Result<()> {
    let cfg = args.exp.resolve()?;
    let data = args.exp.load_data()?;
    let exp = cfg.experiment(data.clone());
    create_out(&args.exp.out)?;
    let mut manifest = Manifest::new("aggregate", data.content_hash());
    manifest.record_inputs(&args.exp)?;
    manifest.seeds.insert("kmeans", cfg.cluster.seed);
    manifest.settings = serde_json::to_value(&cfg)?;

    let bench = if args.no_eval {
        None
    } else {
        Some(run_benchmark(&exp, &BenchmarkCache::at(args.exp.cache_dir()))?)
    };
    let out = match args.mode {
        ModeArg::Adaptive => run_adaptive(&exp, &cfg.cluster, bench.as_ref())?,
        ModeArg::Traditional => run_traditional(&exp, &cfg.cluster, bench.as_ref())?,
    };
    let dir = &args.exp.out;
    write_json(dir, "aggregation.json", &out.aggregation, &mut manifest.outputs)?;
    write_json(dir, "reduced.json", &out.reduced, &mut manifest.outputs)?;
    if let Some(report) = &out.report {
        write_json(dir, "report.json", report, &mut manifest.outputs)?;
        println!("MAPE {:.6}", report.mape.aggregate);
    }
    // Wall-clock numbers vary between runs, so they stay out of the manifest's output hashes.
    let timings = serde_json::to_string_pretty(&out.timings)? + "\n";
    fs::write(dir.join("timings.json"), timings)?;
    manifest.write(dir)
}

pub fn sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let cfg = args.exp.resolve()?;
    let grid: SweepGrid = read_json(&args.grid)?;
    if grid.cells().is_empty() {
        return Err(crate::ConfigError(format!("{}: grid has no cells", args.grid.display())).into());
    }
    let data = args.exp.load_data()?;
    let exp = cfg.experiment(data.clone());
    let dir = &args.exp.out;
    create_out(dir)?;
    let mut manifest = Manifest::new("sweep", data.content_hash());
    manifest.record_inputs(&args.exp)?;
    manifest.input("grid", Some(&args.grid))?;
    manifest.seeds.insert("kmeans", grid.seed);
    manifest.settings = serde_json::json!({ "base": cfg, "grid": grid });

    let table = run_sweep(&grid, &exp, &BenchmarkCache::at(args.exp.cache_dir()), Some(&dir.join("cells")))?;
    write_file(dir, "sweep.csv", table.long_csv().as_bytes(), &mut manifest.outputs)?;
    write_file(dir, "weights.csv", table.weights_csv().as_bytes(), &mut manifest.outputs)?;
    write_json(dir, "sweep.json", &table, &mut manifest.outputs)?;
    manifest.write(dir)?;
    match table.failures() {
        0 => Ok(()),
        n => Err(PartialFailure(n).into()),
    }
}
