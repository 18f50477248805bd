use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_k, squared_distance, ClusteringError, FeatureMatrix, Partition};

const MAX_ITERATIONS: usize = 300;

/// One Lloyd run from a k-means++ seeding.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansRun {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub dispersion: f64,
    pub iterations: usize,
    /// Objective after every assignment step; never increases.
    pub trace: Vec<f64>,
}

fn seed_centers(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.gen_range(0..n)].clone()];
    let mut nearest: Vec<f64> = rows
        .iter()
        .map(|r| squared_distance(r, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // Rounding can walk past the end; fall back to the farthest point.
            if nearest[chosen] == 0.0 {
                chosen = (0..n).fold(0, |b, i| if nearest[i] > nearest[b] { i } else { b });
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.push(rows[pick].clone());
        for (d, r) in nearest.iter_mut().zip(rows) {
            *d = d.min(squared_distance(r, &rows[pick]));
        }
    }
    centers
}

fn assign(rows: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    rows.iter()
        .map(|r| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = squared_distance(r, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

/// A single seeded k-means++ / Lloyd run on raw rows.
pub fn kmeans_run(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> KmeansRun {
    let dim = rows[0].len();
    let mut centers = seed_centers(rows, k, rng);
    let (mut labels, mut dist) = assign(rows, &centers);
    let mut trace = vec![dist.iter().sum::<f64>()];
    let mut iterations = 0;
    loop {
        iterations += 1;
        // Update step: means of the current members.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &c) in rows.iter().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(r) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Empty clusters take the point farthest from its center among clusters with spares.
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far: Option<usize> = None;
            for i in 0..rows.len() {
                if counts[labels[i]] > 1 && far.is_none_or(|f| dist[i] > dist[f]) {
                    far = Some(i);
                }
            }
            let Some(i) = far else { break };
            counts[labels[i]] -= 1;
            labels[i] = c;
            counts[c] = 1;
            dist[i] = 0.0;
            centers[c] = rows[i].clone();
        }

        let (next, next_dist) = assign(rows, &centers);
        let objective: f64 = next_dist.iter().sum();
        let previous = *trace.last().expect("seeded");
        assert!(
            objective <= previous * (1.0 + 1e-12) + 1e-12,
            "k-means objective rose from {previous} to {objective}"
        );
        trace.push(objective);
        let converged = next == labels;
        labels = next;
        dist = next_dist;
        if converged || iterations >= MAX_ITERATIONS {
            break;
        }
    }
    KmeansRun {
        dispersion: dist.iter().sum(),
        labels,
        centers,
        iterations,
        trace,
    }
}

/// Best of `restarts` seeded runs by within-cluster dispersion; earlier runs win ties.
pub fn kmeans(
    features: &FeatureMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<Partition, ClusteringError> {
    let rows = features.rows();
    check_k(k, rows.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KmeansRun> = None;
    for _ in 0..restarts.max(1) {
        let run = kmeans_run(rows, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.dispersion < b.dispersion) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one run");
    let partition = Partition::from_labels(&best.labels);
    if partition.k() < k {
        // Only possible with fewer than k distinct rows.
        log::warn!("k-means produced {} distinct clusters for k = {k}", partition.k());
    }
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::FeatureMode;

    fn fm(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::unscaled(rows, FeatureMode::Adaptive).unwrap()
    }

    #[test]
    fn separates_two_blobs() {
        let p = kmeans(&fm(vec![vec![0.0], vec![0.0], vec![10.0], vec![10.0]]), 2, 1, 1).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn k_equal_rows_gives_singletons() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let p = kmeans(&fm(rows), 6, 3, 2).unwrap();
        assert_eq!(p.sizes(), vec![1; 6]);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![r.gen(), r.gen()]).collect();
        let a = kmeans(&fm(rows.clone()), 4, 11, 5).unwrap();
        let b = kmeans(&fm(rows), 4, 11, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_never_increases() {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![r.gen(), r.gen(), r.gen()]).collect();
        let run = kmeans_run(&rows, 7, &mut r);
        assert!(run.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
        assert!(run.iterations <= MAX_ITERATIONS);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kmeans(&fm(vec![vec![1.0]]), 2, 0, 1).is_err());
        assert!(kmeans(&fm(vec![vec![1.0]]), 0, 0, 1).is_err());
    }
}
