//! The adaptive and traditional aggregation procedures, benchmark solving, error metrics, sweeps.

mod cache;
mod evaluate;
mod run;
mod sweep;

use std::path::PathBuf;
use std::sync::Arc;

use adaptagg_solver::{Backend, HighsBackend, Limits, ReferenceBackend, Status, Tolerances};
use serde::{Deserialize, Serialize};

pub use cache::{audit_cached_benchmark, run_benchmark, Benchmark, BenchmarkCache};
pub use evaluate::{mape, EvaluationReport, Mape, Scenario, Timings, ZERO_CAPACITY_MW};
pub use run::{
    extract_features, run_adaptive, run_traditional, run_with_features, solve_reduced, RunOutput,
    SliceFeatures,
};
pub use sweep::{sweep, CellOutcome, CellResult, SweepCell, SweepGrid, SweepTable};

use crate::clustering::{ClusterConfig, ClusteringError};
use crate::model::{BuildOptions, ModelError, Policy, TechCatalog, Variant};
use crate::timeseries::{HorizonData, TimeseriesError, WEEK_HOURS};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error("slice {index}: {source}")]
    SliceFailed {
        index: usize,
        #[source]
        source: ModelError,
    },
    #[error("MAPE is undefined: every benchmark capacity is zero")]
    UndefinedMetric,
    #[error("capacity vectors differ in length ({benchmark} vs {estimate})")]
    LengthMismatch { benchmark: usize, estimate: usize },
    #[error("benchmark cache {path}: {message}")]
    Cache { path: PathBuf, message: String },
}

impl PipelineError {
    /// Solver status behind the failure, if a solve ended without a usable point.
    pub fn solver_status(&self) -> Option<Status> {
        match self {
            PipelineError::Model(ModelError::NoSolution(s))
            | PipelineError::SliceFailed {
                source: ModelError::NoSolution(s),
                ..
            } => Some(*s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Highs,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub backend: SolverChoice,
    pub mip_relative_gap: f64,
    pub time_limit_seconds: f64,
    pub max_nodes: u64,
    pub max_iterations: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: SolverChoice::Highs,
            mip_relative_gap: Tolerances::default().mip_relative_gap,
            time_limit_seconds: Limits::default().time_limit,
            max_nodes: Limits::default().max_nodes,
            max_iterations: Limits::default().max_iterations,
        }
    }
}

impl SolverConfig {
    pub fn backend(&self) -> Box<dyn Backend> {
        match self.backend {
            SolverChoice::Highs => Box::new(HighsBackend::default()),
            SolverChoice::Reference => Box::new(ReferenceBackend),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            mip_relative_gap: self.mip_relative_gap,
            ..Default::default()
        }
    }

    pub fn limits(&self) -> Limits {
        Limits {
            max_iterations: self.max_iterations,
            max_nodes: self.max_nodes,
            time_limit: self.time_limit_seconds,
        }
    }
}

/// Everything that defines the optimisation side of a run, minus the clustering choices.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub data: Arc<HorizonData>,
    pub catalog: TechCatalog,
    pub policy: Policy,
    pub variant: Variant,
    pub build: BuildOptions,
    pub slice_hours: usize,
    pub solver: SolverConfig,
    /// Retry an infeasible slice without the portfolio standard instead of aborting.
    pub slice_rps_fallback: bool,
}

fn default_slice_hours() -> usize {
    WEEK_HOURS
}

/// JSON experiment file: model, slicing, clustering and solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub catalog: TechCatalog,
    pub policy: Policy,
    #[serde(default)]
    pub build: BuildOptions,
    #[serde(default = "default_slice_hours")]
    pub slice_hours: usize,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub slice_rps_fallback: bool,
}

impl ExperimentConfig {
    /// Baseline catalog, R = 0.5, weekly slices, 30 single-linkage medoids.
    pub fn baseline(variant: Variant) -> Self {
        ExperimentConfig {
            variant,
            catalog: TechCatalog::baseline(variant),
            policy: Policy::new(0.5).expect("valid"),
            build: BuildOptions::default(),
            slice_hours: WEEK_HOURS,
            cluster: ClusterConfig::default(),
            solver: SolverConfig::default(),
            slice_rps_fallback: false,
        }
    }

    pub fn experiment(&self, data: Arc<HorizonData>) -> Experiment {
        Experiment {
            data,
            catalog: self.catalog.clone(),
            policy: self.policy,
            variant: self.variant,
            build: self.build,
            slice_hours: self.slice_hours,
            solver: self.solver,
            slice_rps_fallback: self.slice_rps_fallback,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let cfg = ExperimentConfig::baseline(Variant::Integer);
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
        let bad = json.replacen("\"variant\"", "\"variantt\"", 1);
        assert!(serde_json::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn shipped_configs_carry_the_baseline_prices() {
        let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/");
        for (file, variant) in [("paper_base.json", Variant::Integer), ("paper_linear.json", Variant::Linear)] {
            let text = std::fs::read_to_string(format!("{root}{file}")).unwrap();
            let cfg: ExperimentConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(cfg, ExperimentConfig::baseline(variant), "{file}");
            let ire: Vec<f64> = cfg.catalog.ire.iter().map(|t| t.capex_usd_per_kw).collect();
            assert_eq!(ire, vec![1000.0, 1500.0]);
            let b = &cfg.catalog.storage[0];
            assert_eq!((b.energy_capex_usd_per_kwh, b.power_capex_usd_per_kw, b.throughput_cost_usd_per_mwh), (200.0, 70.0, 50.0));
            if let Some(t) = cfg.catalog.thermal.first() {
                assert_eq!((t.capex_usd_per_kw, t.opex_usd_per_mwh), (1000.0, 30.0));
                assert_eq!((t.min_up_hours, t.min_down_hours), (6, 6));
            }
        }
    }
}
