use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    extract_features, run_benchmark, run_with_features, Benchmark, BenchmarkCache, EvaluationReport,
    Experiment, PipelineError,
};
use crate::clustering::{traditional_features, ClusterConfig, FeatureMode, Linkage, Method};
use crate::model::{Policy, TechCatalog, Variant};
use crate::timeseries::{slice, TimeSlice};
use crate::TechId;

/// Axes of a scenario sweep; cells are their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub variants: Vec<Variant>,
    pub rps: Vec<f64>,
    /// Renewable CAPEX multipliers per technology; combinations are crossed.
    pub capex_multipliers: IndexMap<TechId, Vec<f64>>,
    pub features: Vec<FeatureMode>,
    pub methods: Vec<Method>,
    /// Crossed with agglomerative cells only.
    pub linkages: Vec<Linkage>,
    pub k: Vec<usize>,
    pub centroid_modes: Vec<bool>,
    pub standardize: bool,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            variants: vec![Variant::Linear],
            rps: Self::rps_range(),
            capex_multipliers: IndexMap::new(),
            features: vec![FeatureMode::Adaptive, FeatureMode::Traditional],
            methods: vec![Method::Agglomerative],
            linkages: vec![Linkage::Single],
            k: vec![30],
            centroid_modes: vec![false],
            standardize: true,
            seed: 0,
            restarts: 10,
        }
    }
}

impl SweepGrid {
    /// 0.50, 0.55, ..., 0.95.
    pub fn rps_range() -> Vec<f64> {
        (10..=19).map(|i| i as f64 * 5.0 / 100.0).collect()
    }

    /// Every combination of the renewable CAPEX multipliers, in axis order.
    fn capex_cases(&self) -> Vec<Vec<(TechId, f64)>> {
        let mut cases: Vec<Vec<(TechId, f64)>> = vec![Vec::new()];
        for (id, factors) in &self.capex_multipliers {
            cases = cases
                .into_iter()
                .flat_map(|c| {
                    factors.iter().map(move |&f| {
                        let mut next = c.clone();
                        next.push((id.clone(), f));
                        next
                    })
                })
                .collect();
        }
        cases
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            for &rps in &self.rps {
                for capex in self.capex_cases() {
                    for &features in &self.features {
                        for &method in &self.methods {
                            let linkages: &[Linkage] = match method {
                                Method::Agglomerative => &self.linkages,
                                Method::Kmeans => &[Linkage::Single],
                            };
                            for &linkage in linkages {
                                for &k in &self.k {
                                    for &centroid_mode in &self.centroid_modes {
                                        out.push(SweepCell {
                                            variant,
                                            rps,
                                            capex: capex.clone(),
                                            features,
                                            cluster: ClusterConfig {
                                                method,
                                                linkage,
                                                k,
                                                centroid_mode,
                                                standardize: self.standardize,
                                                seed: self.seed,
                                                restarts: self.restarts,
                                            },
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One point of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub variant: Variant,
    pub rps: f64,
    pub capex: Vec<(TechId, f64)>,
    pub features: FeatureMode,
    pub cluster: ClusterConfig,
}

impl SweepCell {
    /// Stable identifier, also used as the resume file name.
    pub fn id(&self) -> String {
        let mut id = format!("{}_r{}", self.variant, self.rps);
        for (tech, f) in &self.capex {
            let _ = write!(id, "_{tech}{f}");
        }
        let _ = write!(id, "_{}_{}", self.features, self.cluster.method);
        if self.cluster.method == Method::Agglomerative {
            let _ = write!(id, "_{}", self.cluster.linkage);
        }
        let rep = if self.cluster.centroid_mode { "centroid" } else { "medoid" };
        let _ = write!(id, "_k{}_{rep}", self.cluster.k);
        id
    }

    fn scenario_key(&self) -> String {
        let mut key = format!("{}|{}", self.variant, self.rps.to_bits());
        for (tech, f) in &self.capex {
            let _ = write!(key, "|{tech}={}", f.to_bits());
        }
        key
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub report: EvaluationReport,
    pub relaxed_slices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub id: String,
    pub cell: SweepCell,
    pub outcome: Result<CellOutcome, String>,
}

/// Sweep results in grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<CellResult>,
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    /// One row per cell and metric.
    pub fn long_csv(&self) -> String {
        let mut out = String::from(
            "cell,variant,rps,capex,features,method,linkage,k,representative,metric,value\n",
        );
        for c in &self.cells {
            let cell = &c.cell;
            let capex = cell
                .capex
                .iter()
                .map(|(t, f)| format!("{t}={f}"))
                .collect::<Vec<_>>()
                .join(";");
            let linkage = match cell.cluster.method {
                Method::Agglomerative => cell.cluster.linkage.to_string(),
                Method::Kmeans => String::new(),
            };
            let prefix = format!(
                "{},{},{},{},{},{},{},{},{}",
                c.id,
                cell.variant,
                cell.rps,
                capex,
                cell.features,
                cell.cluster.method,
                linkage,
                cell.cluster.k,
                if cell.cluster.centroid_mode { "centroid" } else { "medoid" }
            );
            let mut row = |metric: &str, value: String| {
                let _ = writeln!(out, "{prefix},{metric},{value}");
            };
            match &c.outcome {
                Err(message) => row("error", csv_escape(message)),
                Ok(o) => {
                    let r = &o.report;
                    row("mape", r.mape.aggregate.to_string());
                    for (i, label) in r.capacity_labels.iter().enumerate() {
                        if let Some(v) = r.mape.components[i] {
                            row(&format!("mape_{label}"), v.to_string());
                        }
                        row(&format!("benchmark_{label}"), r.benchmark_capacities[i].to_string());
                        row(&format!("reduced_{label}"), r.reduced_capacities[i].to_string());
                    }
                    row("benchmark_objective", r.benchmark_objective.to_string());
                    row("reduced_objective", r.reduced_objective.to_string());
                }
            }
        }
        out
    }

    /// Cluster weights and representative slices of every successful cell.
    pub fn weights_csv(&self) -> String {
        let mut out = String::from("cell,cluster,representative_slice,weight\n");
        for c in &self.cells {
            if let Ok(o) = &c.outcome {
                let reps = &o.report.representative_slices;
                for (i, w) in o.report.weights.iter().enumerate() {
                    let rep = reps.get(i).map(|s| s.to_string()).unwrap_or_default();
                    let _ = writeln!(out, "{},{i},{rep},{w}", c.id);
                }
            }
        }
        out
    }
}

type Shared<T> = Mutex<HashMap<String, Arc<OnceLock<Result<Arc<T>, String>>>>>;

fn once<T>(
    map: &Shared<T>,
    key: String,
    init: impl FnOnce() -> Result<T, PipelineError>,
) -> Result<Arc<T>, String> {
    let slot = map.lock().expect("cache lock").entry(key).or_default().clone();
    slot.get_or_init(|| init().map(Arc::new).map_err(|e| error_chain(&e)))
        .clone()
}

fn error_chain(e: &dyn std::error::Error) -> String {
    let mut s = e.to_string();
    let mut src = e.source();
    while let Some(inner) = src {
        let _ = write!(s, ": {inner}");
        src = inner.source();
    }
    s
}

fn cell_experiment(base: &Experiment, cell: &SweepCell) -> Result<Experiment, PipelineError> {
    let mut catalog: TechCatalog = base.catalog.clone();
    if cell.variant == Variant::Linear {
        catalog.thermal.clear();
    }
    for (tech, factor) in &cell.capex {
        catalog = catalog.with_ire_capex_scaled(tech, *factor)?;
    }
    Ok(Experiment {
        catalog,
        policy: Policy::new(cell.rps)?,
        variant: cell.variant,
        ..base.clone()
    })
}

/// Run every cell of `grid` on `base` (data, catalog, slicing, solver).
///
/// The benchmark and the adaptive feature rows are computed once per scenario (variant, R,
/// CAPEX case) and shared. With `cells_dir`, finished cells are stored as `<id>.json` and
/// loaded instead of recomputed on the next call. Cell failures are recorded, not raised.
pub fn sweep(
    grid: &SweepGrid,
    base: &Experiment,
    cache: &BenchmarkCache,
    cells_dir: Option<&Path>,
) -> Result<SweepTable, PipelineError> {
    let slices: Vec<TimeSlice> = slice(&base.data, base.slice_hours)?.slices;
    let traditional = traditional_features(&base.data, &slices);
    let benchmarks: Shared<Benchmark> = Mutex::default();
    let features: Shared<super::SliceFeatures> = Mutex::default();
    if let Some(dir) = cells_dir {
        fs::create_dir_all(dir).map_err(|e| PipelineError::Cache {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
    }

    let run_cell = |cell: &SweepCell| -> Result<CellOutcome, String> {
        let exp = cell_experiment(base, cell).map_err(|e| error_chain(&e))?;
        let key = cell.scenario_key();
        let bench = once(&benchmarks, key.clone(), || run_benchmark(&exp, cache))?;
        let (raw, relaxed) = match cell.features {
            FeatureMode::Adaptive => {
                let f = once(&features, key, || extract_features(&exp, &slices))?;
                (f.rows.clone(), f.relaxed_slices.clone())
            }
            FeatureMode::Traditional => (traditional.clone(), Vec::new()),
        };
        let out = run_with_features(&exp, &slices, &raw, cell.features, &cell.cluster, Some(&bench))
            .map_err(|e| error_chain(&e))?;
        Ok(CellOutcome {
            report: out.report.expect("benchmark supplied"),
            relaxed_slices: relaxed,
        })
    };

    let cells = grid.cells();
    let results: Vec<CellResult> = cells
        .into_par_iter()
        .map(|cell| {
            let id = cell.id();
            let stored = cells_dir.map(|d| d.join(format!("{id}.json")));
            if let Some(done) = stored
                .as_deref()
                .and_then(|p| fs::read_to_string(p).ok())
                .and_then(|t| serde_json::from_str::<CellResult>(&t).ok())
                .filter(|r| r.cell == cell)
            {
                log::info!("cell {id} already done");
                return done;
            }
            let outcome = run_cell(&cell);
            if let Err(e) = &outcome {
                log::warn!("cell {id} failed: {e}");
            }
            let result = CellResult { id, cell, outcome };
            if let (Some(path), Ok(_)) = (&stored, &result.outcome) {
                let json = serde_json::to_string_pretty(&result).expect("result serializes");
                if let Err(e) = fs::write(path, json) {
                    log::warn!("could not record {}: {e}", path.display());
                }
            }
            result
        })
        .collect();
    Ok(SweepTable { cells: results })
}
