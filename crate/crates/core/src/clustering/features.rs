use serde::{Deserialize, Serialize};

use super::ClusteringError;
use crate::timeseries::{HorizonData, TimeSlice};

const STD_FLOOR: f64 = 1e-12;

/// Where the feature rows come from: per-slice optimal capacities, or the raw series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Adaptive,
    Traditional,
}

impl std::fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureMode::Adaptive => "adaptive",
            FeatureMode::Traditional => "traditional",
        })
    }
}

/// Per-dimension affine map applied before clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub std: f64,
    /// The column had no spread; it was mapped to zeros.
    pub constant: bool,
}

/// One feature vector per slice, in slice order, plus the scaling that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    mode: FeatureMode,
    scaling: Vec<Scaling>,
}

fn check_shape(raw: &[Vec<f64>]) -> Result<usize, ClusteringError> {
    let dim = raw.first().ok_or(ClusteringError::Empty)?.len();
    for (row, r) in raw.iter().enumerate() {
        if r.len() != dim {
            return Err(ClusteringError::Ragged {
                row,
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(ClusteringError::NonFinite { row });
        }
    }
    Ok(dim)
}

/// Shift every column to zero mean and unit population standard deviation.
pub fn standardize(raw: &[Vec<f64>], mode: FeatureMode) -> Result<FeatureMatrix, ClusteringError> {
    let dim = check_shape(raw)?;
    let n = raw.len() as f64;
    let scaling: Vec<Scaling> = (0..dim)
        .map(|j| {
            let mean = raw.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            Scaling {
                mean,
                std,
                constant: std <= STD_FLOOR,
            }
        })
        .collect();
    let constant = scaling.iter().filter(|s| s.constant).count();
    if constant > 0 {
        log::info!("{constant} of {dim} feature columns are constant and map to zero");
    }
    let rows = raw
        .iter()
        .map(|r| {
            r.iter()
                .zip(&scaling)
                .map(|(v, s)| if s.constant { 0.0 } else { (v - s.mean) / s.std })
                .collect()
        })
        .collect();
    Ok(FeatureMatrix {
        rows,
        mode,
        scaling,
    })
}

impl FeatureMatrix {
    /// Use `raw` as is, recording an identity scaling.
    pub fn unscaled(raw: Vec<Vec<f64>>, mode: FeatureMode) -> Result<FeatureMatrix, ClusteringError> {
        let dim = check_shape(&raw)?;
        Ok(FeatureMatrix {
            rows: raw,
            mode,
            scaling: vec![
                Scaling {
                    mean: 0.0,
                    std: 1.0,
                    constant: false,
                };
                dim
            ],
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.scaling.len()
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn scaling(&self) -> &[Scaling] {
        &self.scaling
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.scaling[j].constant).collect()
    }

    /// Undo the scaling.
    pub fn invert(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&self.scaling)
                    .map(|(v, s)| if s.constant { s.mean } else { v * s.std + s.mean })
                    .collect()
            })
            .collect()
    }
}

/// Raw-data features: each slice's load followed by each resource profile, concatenated.
pub fn traditional_features(data: &HorizonData, slices: &[TimeSlice]) -> Vec<Vec<f64>> {
    slices
        .iter()
        .map(|s| {
            let mut row = data.load()[s.hours()].to_vec();
            for series in data.profiles().values() {
                row.extend_from_slice(&series[s.hours()]);
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_points_become_plus_minus_one() {
        let fm = standardize(&[vec![1.0], vec![3.0]], FeatureMode::Adaptive).unwrap();
        assert_eq!(fm.rows(), &[vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn constant_column_is_flagged() {
        let fm = standardize(&[vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]], FeatureMode::Adaptive).unwrap();
        assert_eq!(fm.constant_columns(), vec![0]);
        assert!(fm.rows().iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(standardize(&[], FeatureMode::Adaptive), Err(ClusteringError::Empty)));
        assert!(matches!(
            standardize(&[vec![1.0], vec![1.0, 2.0]], FeatureMode::Adaptive),
            Err(ClusteringError::Ragged { row: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn inversion_restores_input(raw in prop::collection::vec(prop::collection::vec(-1e4f64..1e4, 3), 1..20)) {
            let fm = standardize(&raw, FeatureMode::Traditional).unwrap();
            for (a, b) in fm.invert().iter().zip(&raw) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
            }
            for j in 0..3 {
                if !fm.scaling()[j].constant {
                    let m: f64 = fm.rows().iter().map(|r| r[j]).sum::<f64>() / raw.len() as f64;
                    prop_assert!(m.abs() < 1e-9);
                }
            }
        }
    }
}
