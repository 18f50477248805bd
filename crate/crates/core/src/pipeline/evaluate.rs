use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::clustering::{ClusterConfig, FeatureMode};
use crate::model::Variant;

/// Benchmark capacities at or below this magnitude count as zero and are left out of MAPE.
///
/// LP solutions carry residuals around 1e-9, which would otherwise turn an unbuilt technology
/// into an enormous relative error.
pub const ZERO_CAPACITY_MW: f64 = 1e-6;

/// Per-capacity relative errors and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    /// `|estimate - benchmark| / benchmark`, `None` where the benchmark is zero.
    pub components: Vec<Option<f64>>,
    pub aggregate: f64,
    /// Number of components averaged.
    pub used: usize,
}

pub fn mape(benchmark: &[f64], estimate: &[f64]) -> Result<Mape, PipelineError> {
    if benchmark.len() != estimate.len() {
        return Err(PipelineError::LengthMismatch {
            benchmark: benchmark.len(),
            estimate: estimate.len(),
        });
    }
    let components: Vec<Option<f64>> = benchmark
        .iter()
        .zip(estimate)
        .map(|(&y, &yhat)| (y.abs() > ZERO_CAPACITY_MW).then(|| (yhat - y).abs() / y.abs()))
        .collect();
    let used: Vec<f64> = components.iter().flatten().copied().collect();
    if used.is_empty() {
        return Err(PipelineError::UndefinedMetric);
    }
    if used.len() < components.len() {
        log::warn!(
            "{} zero benchmark capacities excluded from MAPE",
            components.len() - used.len()
        );
    }
    Ok(Mape {
        aggregate: used.iter().sum::<f64>() / used.len() as f64,
        used: used.len(),
        components,
    })
}

/// Everything that identifies a run besides the input data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub variant: Variant,
    pub rps: f64,
    pub features: FeatureMode,
    pub cluster: ClusterConfig,
    pub slice_hours: usize,
    pub slice_count: usize,
    pub data_hash: String,
}

/// Comparison of a reduced plan with the full-horizon plan.
///
/// Wall-clock timings live in [`Timings`] so that the report itself is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scenario: Scenario,
    pub capacity_labels: Vec<String>,
    pub benchmark_capacities: Vec<f64>,
    pub reduced_capacities: Vec<f64>,
    pub mape: Mape,
    pub benchmark_objective: f64,
    pub reduced_objective: f64,
    pub representative_slices: Vec<usize>,
    pub weights: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    /// Zero when the benchmark came from the cache.
    pub benchmark_solve_s: f64,
    pub feature_extraction_s: f64,
    pub clustering_s: f64,
    pub reduced_solve_s: f64,
}

impl Timings {
    /// Reduced solve time as a fraction of `benchmark_seconds`.
    pub fn reduced_fraction(&self, benchmark_seconds: f64) -> f64 {
        self.reduced_solve_s / benchmark_seconds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_zero() {
        let y = [3.0, 7.5, 100.0];
        assert_eq!(mape(&y, &y).unwrap().aggregate, 0.0);
    }

    #[test]
    fn ten_percent_each_way() {
        let m = mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap();
        assert!((m.components[0].unwrap() - 0.1).abs() < 1e-15);
        assert!((m.components[1].unwrap() - 0.1).abs() < 1e-15);
        assert!((m.aggregate - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_benchmark_entries_are_skipped() {
        let m = mape(&[0.0, 100.0], &[5.0, 100.0]).unwrap();
        assert_eq!(m.components, vec![None, Some(0.0)]);
        assert_eq!((m.aggregate, m.used), (0.0, 1));
    }

    #[test]
    fn undefined_and_mismatched() {
        assert!(matches!(mape(&[0.0, 0.0], &[1.0, 2.0]), Err(PipelineError::UndefinedMetric)));
        assert!(matches!(mape(&[1.0], &[1.0, 2.0]), Err(PipelineError::LengthMismatch { .. })));
    }

    proptest! {
        #[test]
        fn aggregate_is_mean_of_components(
            pairs in prop::collection::vec((1.0f64..1e4, 0.0f64..1e4), 1..8)
        ) {
            let (y, yhat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = mape(&y, &yhat).unwrap();
            let mean = m.components.iter().flatten().sum::<f64>() / m.used as f64;
            prop_assert_eq!(m.aggregate, mean);
            prop_assert!(m.aggregate >= 0.0);
        }
    }
}
