use serde::{Deserialize, Serialize};

use crate::data::AttributeSchema;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Encoded value used for absent cells before normalization.
pub const MISSING_CODE: f64 = -1.0;

/// Per-column min–max statistics fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormStats {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Data("cannot fit normalization on zero rows".into()));
        }
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for row in x.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// `(x - min) / (max - min)`; constant columns map to 0. Values outside
    /// the fitted range are not clipped.
    #[inline]
    pub fn apply_value(&self, column: usize, x: f64) -> f64 {
        let range = self.max[column] - self.min[column];
        if range > 0.0 {
            (x - self.min[column]) / range
        } else {
            0.0
        }
    }

    /// Normalized representation of an absent cell in `column`.
    pub fn missing_code(&self, column: usize) -> f64 {
        self.apply_value(column, MISSING_CODE)
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.len() {
            return Err(Error::Shape {
                op: "normalize",
                left: x.shape(),
                right: (1, self.len()),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = self.apply_value(j, *v);
            }
        }
        Ok(out)
    }
}

/// Encoded feature table with binary labels (1 = positive diagnosis).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub attributes: Vec<AttributeSchema>,
    pub norm_stats: Option<NormStats>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>, attributes: Vec<AttributeSchema>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if features.cols() != attributes.len() {
            return Err(Error::Data(format!(
                "{} feature columns but {} attributes",
                features.cols(),
                attributes.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Data(format!("label {bad} is not binary")));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("dataset features".into()));
        }
        Ok(Self {
            features,
            labels,
            attributes,
            norm_stats: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            attributes: self.attributes.clone(),
            norm_stats: self.norm_stats.clone(),
        }
    }

    /// Min–max normalizes with statistics fitted on this dataset and records
    /// them.
    pub fn normalize(&self) -> Result<Dataset> {
        let stats = NormStats::fit(&self.features)?;
        self.normalize_with(&stats)
    }

    /// Applies previously fitted (training) statistics.
    pub fn normalize_with(&self, stats: &NormStats) -> Result<Dataset> {
        Ok(Dataset {
            features: stats.apply(&self.features)?,
            labels: self.labels.clone(),
            attributes: self.attributes.clone(),
            norm_stats: Some(stats.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AttributeKind;

    fn attrs(k: usize) -> Vec<AttributeSchema> {
        (0..k)
            .map(|j| AttributeSchema {
                name: format!("A{j}"),
                kind: AttributeKind::Numeric,
                categories: vec![],
                is_feature: true,
            })
            .collect()
    }

    #[test]
    fn min_max_column() {
        let x = Matrix::column_vector(&[-1.0, 0.0, 3.0]);
        let ds = Dataset::new(x, vec![0, 1, 0], attrs(1)).unwrap().normalize().unwrap();
        assert_eq!(ds.features.as_slice(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let x = Matrix::column_vector(&[2.0, 2.0]);
        let ds = Dataset::new(x, vec![0, 1], attrs(1)).unwrap().normalize().unwrap();
        assert_eq!(ds.features.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn frozen_stats_apply_to_test_values() {
        let stats = NormStats {
            min: vec![-1.0],
            max: vec![3.0],
        };
        assert_eq!(stats.apply_value(0, 1.0), 0.5);
        assert_eq!(stats.missing_code(0), 0.0);
        // not clipped
        assert_eq!(stats.apply_value(0, 7.0), 2.0);
    }

    #[test]
    fn normalize_is_idempotent() {
        let x = Matrix::from_rows(&[[-1.0, 5.0, 2.0], [0.0, 1.0, 2.0], [4.0, -1.0, 2.0]]).unwrap();
        let once = Dataset::new(x, vec![0, 1, 1], attrs(3)).unwrap().normalize().unwrap();
        let twice = once.normalize().unwrap();
        assert_eq!(once.features, twice.features);
        assert!(once.features.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn rejects_non_binary_labels() {
        let x = Matrix::column_vector(&[1.0, 2.0]);
        assert!(Dataset::new(x, vec![0, 2], attrs(1)).is_err());
    }
}
