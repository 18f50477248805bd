//! Feature scaling, k-means, agglomerative clustering, representative selection, elbow scans.

mod elbow;
mod features;
mod hierarchy;
mod kmeans;
mod representatives;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use elbow::{elbow_scan, ElbowPoint};
pub use features::{standardize, traditional_features, FeatureMatrix, FeatureMode, Scaling};
pub use hierarchy::{
    agglomerative, agglomerative_from_distances, dendrogram, dendrogram_from_distances,
    Dendrogram, Linkage, Merge,
};
pub use kmeans::{kmeans, kmeans_run, KmeansRun};
pub use representatives::{
    aggregate, select_representatives, AggregationResult, MethodInfo, Representative,
};

#[derive(Debug, thiserror::Error)]
pub enum ClusteringError {
    #[error("feature matrix is empty")]
    Empty,
    #[error("feature row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("feature matrix contains a non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("cannot form {k} clusters from {rows} rows")]
    InvalidK { k: usize, rows: usize },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kmeans,
    Agglomerative,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kmeans => "kmeans",
            Method::Agglomerative => "agglomerative",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kmeans" | "k-means" => Ok(Method::Kmeans),
            "agglomerative" | "hierarchical" => Ok(Method::Agglomerative),
            other => Err(format!("unknown method `{other}` (kmeans | agglomerative)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub method: Method,
    /// Only used by agglomerative clustering.
    pub linkage: Linkage,
    pub k: usize,
    pub centroid_mode: bool,
    pub standardize: bool,
    /// Only used by k-means.
    pub seed: u64,
    /// k-means runs from independent seedings; the lowest dispersion wins.
    pub restarts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            method: Method::Agglomerative,
            linkage: Linkage::Single,
            k: 30,
            centroid_mode: false,
            standardize: true,
            seed: 0,
            restarts: 10,
        }
    }
}

/// Assignment of rows to clusters, numbered in order of each cluster's lowest row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabel arbitrary cluster ids into canonical order.
    pub fn from_labels(raw: &[usize]) -> Partition {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            labels,
            k: map.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (row, &c) in self.labels.iter().enumerate() {
            out[c].push(row);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.labels {
            out[c] += 1;
        }
        out
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn mean_of(rows: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dim = rows.first().map_or(0, Vec::len);
    let mut m = vec![0.0; dim];
    for &r in members {
        for (acc, v) in m.iter_mut().zip(&rows[r]) {
            *acc += v;
        }
    }
    let n = members.len() as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Sum over clusters of squared Euclidean distances from members to their cluster mean.
pub fn within_cluster_dispersion(rows: &[Vec<f64>], partition: &Partition) -> f64 {
    partition
        .members()
        .iter()
        .map(|members| {
            let c = mean_of(rows, members);
            members
                .iter()
                .map(|&r| squared_distance(&rows[r], &c))
                .sum::<f64>()
        })
        .sum()
}

/// Cluster `features` according to `config` (k, method, linkage, seed).
pub fn cluster(features: &FeatureMatrix, config: &ClusterConfig) -> Result<Partition, ClusteringError> {
    match config.method {
        Method::Kmeans => kmeans(features, config.k, config.seed, config.restarts.max(1)),
        Method::Agglomerative => agglomerative(features, config.k, config.linkage),
    }
}

pub(crate) fn check_k(k: usize, rows: usize) -> Result<(), ClusteringError> {
    if k == 0 || k > rows {
        Err(ClusteringError::InvalidK { k, rows })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_labels_follow_first_member() {
        let p = Partition::from_labels(&[7, 7, 2, 9, 2]);
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.sizes(), vec![2, 2, 1]);
        assert_eq!(p.members()[1], vec![2, 4]);
    }

    #[test]
    fn dispersion_of_two_pairs() {
        let rows = vec![vec![0.0], vec![2.0], vec![10.0], vec![14.0]];
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        assert_eq!(within_cluster_dispersion(&rows, &p), 2.0 + 8.0);
    }
}
