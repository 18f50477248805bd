use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Experiment, PipelineError};
use crate::model::{build_full, PlanSolution};

const CACHE_FORMAT: u32 = 1;

/// Full-horizon plan plus how long it took to compute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub key: String,
    pub plan: PlanSolution,
    /// Seconds spent in the original solve, even when this copy came from disk.
    pub solve_seconds: f64,
    #[serde(skip)]
    pub cache_hit: bool,
}

/// Directory of benchmark plans keyed by a hash of everything that determines them.
#[derive(Debug, Clone, Default)]
pub struct BenchmarkCache {
    dir: Option<PathBuf>,
}

impl BenchmarkCache {
    /// No persistence; every call solves.
    pub fn disabled() -> Self {
        BenchmarkCache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        BenchmarkCache {
            dir: Some(dir.into()),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("benchmark-{key}.json")))
    }
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    format: u32,
    data: String,
    catalog: &'a crate::model::TechCatalog,
    policy: crate::model::Policy,
    variant: crate::model::Variant,
    build: crate::model::BuildOptions,
    solver: super::SolverChoice,
    mip_relative_gap: f64,
}

/// Content hash of the inputs that determine the benchmark.
pub(crate) fn benchmark_key(exp: &Experiment) -> String {
    let material = KeyMaterial {
        format: CACHE_FORMAT,
        data: exp.data.content_hash(),
        catalog: &exp.catalog,
        policy: exp.policy,
        variant: exp.variant,
        build: exp.build,
        solver: exp.solver.backend,
        mip_relative_gap: exp.solver.mip_relative_gap,
    };
    let json = serde_json::to_vec(&material).expect("plain data serializes");
    hex::encode(Sha256::digest(&json))
}

fn solve_full(exp: &Experiment, key: String) -> Result<Benchmark, PipelineError> {
    let instance = build_full(&exp.data, &exp.catalog, exp.policy, exp.variant, exp.build)?;
    let backend = exp.solver.backend();
    let started = Instant::now();
    let (plan, _) = instance.solve(backend.as_ref(), exp.solver.tolerances(), exp.solver.limits())?;
    let solve_seconds = started.elapsed().as_secs_f64();
    log::info!("benchmark solved in {solve_seconds:.2} s ({:?})", plan.status);
    Ok(Benchmark {
        key,
        plan,
        solve_seconds,
        cache_hit: false,
    })
}

fn cache_error(path: &Path, message: impl ToString) -> PipelineError {
    PipelineError::Cache {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Solve the whole horizon, or load the plan from `cache` if these inputs were solved before.
pub fn run_benchmark(exp: &Experiment, cache: &BenchmarkCache) -> Result<Benchmark, PipelineError> {
    let key = benchmark_key(exp);
    let path = cache.path_for(&key);
    if let Some(path) = path.as_deref().filter(|p| p.exists()) {
        let text = fs::read_to_string(path).map_err(|e| cache_error(path, e))?;
        let mut hit: Benchmark = serde_json::from_str(&text).map_err(|e| cache_error(path, e))?;
        if hit.key != key {
            return Err(cache_error(path, "stored key does not match file name"));
        }
        hit.cache_hit = true;
        log::info!("benchmark cache hit {}", &key[..12]);
        return Ok(hit);
    }
    let fresh = solve_full(exp, key)?;
    if let Some(path) = path {
        let dir = path.parent().expect("cache file has a directory");
        fs::create_dir_all(dir).map_err(|e| cache_error(dir, e))?;
        let json = serde_json::to_string_pretty(&fresh).expect("plan serializes");
        // Write then rename so concurrent readers never see a partial file.
        let tmp = path.with_extension(format!("json.{}.tmp", std::process::id()));
        fs::write(&tmp, json).map_err(|e| cache_error(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| cache_error(&path, e))?;
    }
    Ok(fresh)
}

/// Re-solve and compare with the cached plan's capacities and objective.
///
/// Returns `Ok(true)` when they agree to 1e-9 relative, `Ok(false)` otherwise (or if nothing is cached).
pub fn audit_cached_benchmark(exp: &Experiment, cache: &BenchmarkCache) -> Result<bool, PipelineError> {
    let key = benchmark_key(exp);
    let Some(path) = cache.path_for(&key).filter(|p| p.exists()) else {
        return Ok(false);
    };
    let cached = run_benchmark(exp, cache)?;
    let fresh = solve_full(exp, key)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let a = cached.plan.capacities.feature_vector();
    let b = fresh.plan.capacities.feature_vector();
    let agree = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| close(*x, *y))
        && close(cached.plan.objective, fresh.plan.objective);
    if !agree {
        log::warn!("cached benchmark {} disagrees with a fresh solve", path.display());
    }
    Ok(agree)
}
