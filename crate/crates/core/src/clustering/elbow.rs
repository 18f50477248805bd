use serde::{Deserialize, Serialize};

use super::{
    check_k, dendrogram, kmeans, mean_of, squared_distance, within_cluster_dispersion,
    ClusterConfig, ClusteringError, FeatureMatrix, Method,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElbowPoint {
    pub k: usize,
    pub dispersion: f64,
}

/// Within-cluster dispersion for every `k` in `k_values` (ascending).
///
/// Agglomerative partitions are nested, so the dispersion at `k` is accumulated from the
/// sum-of-squares increase of each merge; every step adds a non-negative amount and the curve
/// is non-increasing in `k` in floating point as well. k-means partitions are not nested and a
/// rise between consecutive `k` is only logged.
pub fn elbow_scan(
    features: &FeatureMatrix,
    k_values: &[usize],
    config: &ClusterConfig,
) -> Result<Vec<ElbowPoint>, ClusteringError> {
    let n = features.len();
    for w in k_values.windows(2) {
        if w[0] >= w[1] {
            return Err(ClusteringError::Inconsistent(
                "k values must be strictly increasing".into(),
            ));
        }
    }
    for &k in k_values {
        check_k(k, n)?;
    }
    let rows = features.rows();
    let points: Vec<ElbowPoint> = match config.method {
        Method::Agglomerative => {
            let tree = dendrogram(features, config.linkage);
            // Replay merges, tracking members to price each merge's SSE increase.
            let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
            let mut after = vec![0.0; n + 1];
            let mut total = 0.0;
            for (step, m) in tree.merges.iter().enumerate() {
                let (a, b) = (&members[m.left], &members[m.right]);
                let (na, nb) = (a.len() as f64, b.len() as f64);
                let gap = squared_distance(&mean_of(rows, a), &mean_of(rows, b));
                total += na * nb / (na + nb) * gap;
                let moved = std::mem::take(&mut members[m.right]);
                members[m.left].extend(moved);
                after[n - step - 1] = total;
            }
            k_values
                .iter()
                .map(|&k| ElbowPoint {
                    k,
                    dispersion: after[k],
                })
                .collect()
        }
        Method::Kmeans => {
            let mut out = Vec::with_capacity(k_values.len());
            for &k in k_values {
                let p = kmeans(features, k, config.seed, config.restarts.max(1))?;
                out.push(ElbowPoint {
                    k,
                    dispersion: within_cluster_dispersion(rows, &p),
                });
            }
            for w in out.windows(2) {
                if w[1].dispersion > w[0].dispersion {
                    log::warn!(
                        "k-means dispersion rises from k = {} to k = {}; consider more restarts",
                        w[0].k,
                        w[1].k
                    );
                }
            }
            out
        }
    };
    if config.method == Method::Agglomerative {
        assert!(
            points.windows(2).all(|w| w[1].dispersion <= w[0].dispersion),
            "nested partitions cannot gain dispersion"
        );
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{FeatureMode, Linkage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs() -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let rows = (0..60)
            .map(|i| {
                let c = centers[i % 3];
                vec![c[0] + rng.gen_range(-0.5..0.5), c[1] + rng.gen_range(-0.5..0.5)]
            })
            .collect();
        FeatureMatrix::unscaled(rows, FeatureMode::Adaptive).unwrap()
    }

    #[test]
    fn endpoints_and_knee() {
        let fm = blobs();
        for linkage in Linkage::ALL {
            let cfg = ClusterConfig {
                linkage,
                ..Default::default()
            };
            let curve = elbow_scan(&fm, &[1, 2, 3, 4, 60], &cfg).unwrap();
            let total: f64 = {
                let all: Vec<usize> = (0..60).collect();
                let c = mean_of(fm.rows(), &all);
                fm.rows().iter().map(|r| squared_distance(r, &c)).sum()
            };
            assert!((curve[0].dispersion - total).abs() < 1e-9 * total);
            assert_eq!(curve[4].dispersion, 0.0);
            let drop23 = curve[1].dispersion - curve[2].dispersion;
            let drop34 = curve[2].dispersion - curve[3].dispersion;
            assert!(drop23 > 5.0 * drop34, "{linkage}: {curve:?}");
        }
        let km = ClusterConfig {
            method: Method::Kmeans,
            ..Default::default()
        };
        let curve = elbow_scan(&fm, &[2, 3, 4], &km).unwrap();
        assert!(curve[0].dispersion - curve[1].dispersion > 5.0 * (curve[1].dispersion - curve[2].dispersion));
    }

    #[test]
    fn accumulated_matches_direct_dispersion() {
        let fm = blobs();
        let cfg = ClusterConfig {
            linkage: Linkage::Average,
            ..Default::default()
        };
        let ks: Vec<usize> = (1..=60).collect();
        let curve = elbow_scan(&fm, &ks, &cfg).unwrap();
        for p in curve {
            let part = crate::clustering::agglomerative(&fm, p.k, Linkage::Average).unwrap();
            let direct = within_cluster_dispersion(fm.rows(), &part);
            assert!((p.dispersion - direct).abs() <= 1e-9 * direct.max(1.0));
        }
    }

    #[test]
    fn rejects_unsorted_k() {
        assert!(elbow_scan(&blobs(), &[3, 2], &ClusterConfig::default()).is_err());
    }
}
