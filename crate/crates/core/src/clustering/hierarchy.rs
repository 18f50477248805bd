use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_k, squared_distance, ClusteringError, FeatureMatrix, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Average,
    Complete,
    /// Distances between merged clusters are `sqrt(2 * increase in within-cluster SSE)`.
    Ward,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Ward => "ward",
        })
    }
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "ward" => Ok(Linkage::Ward),
            other => Err(format!(
                "unknown linkage `{other}` (single | average | complete | ward)"
            )),
        }
    }
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [
        Linkage::Single,
        Linkage::Average,
        Linkage::Complete,
        Linkage::Ward,
    ];

    /// Lance-Williams update: distance from `c` to the union of `a` and `b`.
    fn update(self, d_ac: f64, d_bc: f64, d_ab: f64, n_a: f64, n_b: f64, n_c: f64) -> f64 {
        match self {
            Linkage::Single => d_ac.min(d_bc),
            Linkage::Complete => d_ac.max(d_bc),
            Linkage::Average => (n_a * d_ac + n_b * d_bc) / (n_a + n_b),
            Linkage::Ward => {
                let sq = ((n_a + n_c) * d_ac * d_ac + (n_b + n_c) * d_bc * d_bc
                    - n_c * d_ab * d_ab)
                    / (n_a + n_b + n_c);
                sq.max(0.0).sqrt()
            }
        }
    }
}

/// One merge. Clusters are named by their lowest member row; `left < right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    /// Size of the merged cluster.
    pub size: usize,
}

/// Full bottom-up merge history over `n` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Partition after the first `n - k` merges.
    pub fn cut(&self, k: usize) -> Result<Partition, ClusteringError> {
        check_k(k, self.n)?;
        let mut owner: Vec<usize> = (0..self.n).collect();
        for m in &self.merges[..self.n - k] {
            for o in owner.iter_mut() {
                if *o == m.right {
                    *o = m.left;
                }
            }
        }
        Ok(Partition::from_labels(&owner))
    }
}

/// Merge history from a symmetric matrix of pairwise distances.
///
/// Each step merges the closest active pair; equal distances go to the lexicographically
/// smallest `(left, right)`.
pub fn dendrogram_from_distances(mut d: Vec<Vec<f64>>, linkage: Linkage) -> Dendrogram {
    let n = d.len();
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<usize> = vec![1; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in a + 1..n {
                if active[b] && best.is_none_or(|(_, _, dist)| d[a][b] < dist) {
                    best = Some((a, b, d[a][b]));
                }
            }
        }
        let (a, b, d_ab) = best.expect("two active clusters remain");
        let (n_a, n_b) = (size[a] as f64, size[b] as f64);
        for c in 0..n {
            if c == a || c == b || !active[c] {
                continue;
            }
            let v = linkage.update(d[a][c], d[b][c], d_ab, n_a, n_b, size[c] as f64);
            d[a][c] = v;
            d[c][a] = v;
        }
        active[b] = false;
        size[a] += size[b];
        merges.push(Merge {
            left: a,
            right: b,
            distance: d_ab,
            size: size[a],
        });
    }
    Dendrogram { n, linkage, merges }
}

pub fn dendrogram(features: &FeatureMatrix, linkage: Linkage) -> Dendrogram {
    let rows = features.rows();
    let d = rows
        .iter()
        .map(|a| rows.iter().map(|b| squared_distance(a, b).sqrt()).collect())
        .collect();
    dendrogram_from_distances(d, linkage)
}

pub fn agglomerative(
    features: &FeatureMatrix,
    k: usize,
    linkage: Linkage,
) -> Result<Partition, ClusteringError> {
    check_k(k, features.len())?;
    dendrogram(features, linkage).cut(k)
}

pub fn agglomerative_from_distances(
    distances: Vec<Vec<f64>>,
    k: usize,
    linkage: Linkage,
) -> Result<Partition, ClusteringError> {
    check_k(k, distances.len())?;
    dendrogram_from_distances(distances, linkage).cut(k)
}
