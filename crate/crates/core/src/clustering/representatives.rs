use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{
    cluster, mean_of, squared_distance, ClusterConfig, ClusteringError, FeatureMatrix, FeatureMode,
    Partition,
};
use crate::timeseries::{HorizonData, TimeSlice};
use crate::TechId;

/// What stands in for a cluster in the reduced model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Representative {
    /// An actual slice of the horizon.
    Slice { index: usize },
    /// Hour-by-hour mean of the members' load and profiles.
    Centroid {
        load: Vec<f64>,
        profiles: IndexMap<TechId, Vec<f64>>,
    },
}

impl Representative {
    pub fn slice_index(&self) -> Option<usize> {
        match self {
            Representative::Slice { index } => Some(*index),
            Representative::Centroid { .. } => None,
        }
    }
}

/// How an aggregation was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub features: FeatureMode,
    pub cluster: ClusterConfig,
}

/// Clusters over slices, one representative and one integer weight per cluster.
///
/// Clusters are numbered in order of their lowest member slice; weights are member counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub slice_hours: usize,
    pub slice_count: usize,
    pub assignments: Vec<usize>,
    pub representatives: Vec<Representative>,
    pub weights: Vec<u32>,
    pub method: Option<MethodInfo>,
}

impl AggregationResult {
    /// Representative slice indices in cluster order (empty in centroid mode).
    pub fn representative_slices(&self) -> Vec<usize> {
        self.representatives
            .iter()
            .filter_map(Representative::slice_index)
            .collect()
    }
}

/// Pick a medoid slice or build a centroid profile for every cluster of `partition`.
///
/// The medoid is the member nearest (Euclidean, in feature space) to the cluster's feature mean,
/// lowest slice index on ties.
pub fn select_representatives(
    partition: &Partition,
    features: &FeatureMatrix,
    data: &HorizonData,
    slices: &[TimeSlice],
    centroid_mode: bool,
) -> Result<AggregationResult, ClusteringError> {
    if partition.len() != features.len() || partition.len() != slices.len() {
        return Err(ClusteringError::Inconsistent(format!(
            "{} assignments, {} feature rows, {} slices",
            partition.len(),
            features.len(),
            slices.len()
        )));
    }
    let slice_hours = slices.first().ok_or(ClusteringError::Empty)?.length;
    let rows = features.rows();
    let members = partition.members();
    let mut representatives = Vec::with_capacity(members.len());
    for group in &members {
        if group.is_empty() {
            return Err(ClusteringError::Inconsistent("empty cluster".into()));
        }
        let rep = if centroid_mode {
            let n = group.len() as f64;
            let mean_series = |series: &[f64]| -> Vec<f64> {
                let mut acc = vec![0.0; slice_hours];
                for &m in group {
                    for (a, v) in acc.iter_mut().zip(&series[slices[m].hours()]) {
                        *a += v;
                    }
                }
                acc.iter().map(|a| a / n).collect()
            };
            Representative::Centroid {
                load: mean_series(data.load()),
                profiles: data
                    .profiles()
                    .iter()
                    .map(|(id, s)| (id.clone(), mean_series(s).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()))
                    .collect(),
            }
        } else {
            let center = mean_of(rows, group);
            let mut best = (group[0], f64::INFINITY);
            for &m in group {
                let d = squared_distance(&rows[m], &center);
                if d < best.1 {
                    best = (m, d);
                }
            }
            Representative::Slice {
                index: slices[best.0].index,
            }
        };
        representatives.push(rep);
    }
    Ok(AggregationResult {
        slice_hours,
        slice_count: slices.len(),
        assignments: partition.labels().to_vec(),
        representatives,
        weights: members.iter().map(|g| g.len() as u32).collect(),
        method: None,
    })
}

/// Cluster then select representatives, recording the method.
pub fn aggregate(
    features: &FeatureMatrix,
    config: &ClusterConfig,
    data: &HorizonData,
    slices: &[TimeSlice],
) -> Result<AggregationResult, ClusteringError> {
    let partition = cluster(features, config)?;
    let mut result = select_representatives(&partition, features, data, slices, config.centroid_mode)?;
    result.method = Some(MethodInfo {
        features: features.mode(),
        cluster: *config,
    });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{slice, synthesize, SynthConfig, SynthHorizon};

    fn setup() -> (HorizonData, Vec<TimeSlice>) {
        let cfg = SynthConfig {
            horizon: SynthHorizon::Hours(96),
            ..Default::default()
        };
        let data = synthesize(&cfg, 3).unwrap();
        let slices = slice(&data, 24).unwrap().slices;
        (data, slices)
    }

    fn fm(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::unscaled(rows, FeatureMode::Adaptive).unwrap()
    }

    #[test]
    fn singleton_is_its_own_medoid_and_centroid() {
        let (data, slices) = setup();
        let p = Partition::from_labels(&[0, 1, 2, 3]);
        let f = fm(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let med = select_representatives(&p, &f, &data, &slices, false).unwrap();
        assert_eq!(med.representative_slices(), vec![0, 1, 2, 3]);
        let cen = select_representatives(&p, &f, &data, &slices, true).unwrap();
        match &cen.representatives[2] {
            Representative::Centroid { load, profiles } => {
                assert_eq!(load.as_slice(), &data.load()[48..72]);
                for (id, s) in profiles {
                    assert_eq!(s.as_slice(), &data.profile(id).unwrap()[48..72]);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn centroid_averages_and_smooths() {
        let (data, slices) = setup();
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        let f = fm(vec![vec![0.0], vec![1.0], vec![5.0], vec![6.0]]);
        let agg = select_representatives(&p, &f, &data, &slices, true).unwrap();
        assert_eq!(agg.weights, vec![2, 2]);
        let wind = TechId::new("wind").unwrap();
        let w = data.profile(&wind).unwrap();
        let Representative::Centroid { profiles, .. } = &agg.representatives[0] else {
            panic!()
        };
        let c = &profiles[&wind];
        for t in 0..24 {
            assert!((c[t] - (w[t] + w[24 + t]) / 2.0).abs() < 1e-15);
        }
        let peak = |s: &[f64]| s.iter().cloned().fold(f64::MIN, f64::max);
        assert!(peak(c) <= peak(&w[0..24]).max(peak(&w[24..48])));
    }

    #[test]
    fn medoid_ties_go_to_lowest_index() {
        let (data, slices) = setup();
        let p = Partition::from_labels(&[0, 0, 0, 0]);
        let f = fm(vec![vec![0.0], vec![2.0], vec![2.0], vec![4.0]]);
        let agg = select_representatives(&p, &f, &data, &slices, false).unwrap();
        assert_eq!(agg.representative_slices(), vec![1]);
        assert_eq!(agg.weights, vec![4]);
    }

    #[test]
    fn relabeling_keeps_the_medoid_set() {
        let (data, slices) = setup();
        let f = fm(vec![vec![0.0], vec![0.4], vec![9.0], vec![9.5]]);
        let a = select_representatives(&Partition::from_labels(&[0, 0, 1, 1]), &f, &data, &slices, false).unwrap();
        let b = select_representatives(&Partition::from_labels(&[5, 5, 2, 2]), &f, &data, &slices, false).unwrap();
        assert_eq!(a.representative_slices(), b.representative_slices());
    }
}
