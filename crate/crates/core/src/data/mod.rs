//! Dataset shapes plus ingestion and persistence formats.

pub mod artifact;
pub mod csv;
pub mod pgm;
pub mod synth;

pub use artifact::{load_model, save_model, ModelArtifact, ARTIFACT_VERSION};
pub use csv::{load_csv, save_csv};
pub use pgm::{load_image, save_image, PgmFlavor};
pub use synth::{contact_angle_oracle, generate_synthetic, synthetic_columns};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("target column {0:?} not found")]
    MissingTarget(String),
    #[error("id column {0:?} not found")]
    MissingId(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image header: {0}")]
    CorruptHeader(String),
    #[error("pixel data ends early: expected {expected} values, got {got}")]
    TruncatedData { expected: usize, got: usize },
    #[error("artifact version {got:?} does not match {expected:?}")]
    VersionMismatch { expected: String, got: String },
    #[error("corrupt model artifact: {0}")]
    CorruptArtifact(String),
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Feature matrix with named columns, a target vector, and sample ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub ids: Vec<String>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Keep only the named columns, in the given order.
    pub fn project(&self, keep: &[String]) -> Option<Dataset> {
        let idx: Option<Vec<usize>> =
            keep.iter().map(|name| self.columns.iter().position(|c| c == name)).collect();
        let idx = idx?;
        Some(Dataset {
            columns: keep.to_vec(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect(),
            target: self.target.clone(),
            ids: self.ids.clone(),
        })
    }

    /// Row subset by index, preserving order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// Structural invariants: rectangular, aligned lengths, unique names.
    pub fn check_shape(&self) -> Result<(), DataError> {
        for (j, name) in self.columns.iter().enumerate() {
            if self.columns[..j].contains(name) {
                return Err(DataError::DuplicateColumn(name.clone()));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(DataError::MalformedRow {
                    line: i + 1,
                    reason: format!("row has {} cells, expected {}", row.len(), self.columns.len()),
                });
            }
        }
        if self.target.len() != self.rows.len() || self.ids.len() != self.rows.len() {
            return Err(DataError::MalformedRow {
                line: 0,
                reason: "target/id lengths do not match row count".into(),
            });
        }
        Ok(())
    }

    /// Pearson correlation matrix of the feature columns. Constant
    /// columns correlate 0 with everything (and 1 with themselves).
    pub fn correlation_matrix(&self) -> Vec<Vec<f64>> {
        let p = self.n_features();
        let n = self.n_rows() as f64;
        let mut means = vec![0.0; p];
        for row in &self.rows {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut cov = vec![vec![0.0; p]; p];
        for row in &self.rows {
            for a in 0..p {
                let da = row[a] - means[a];
                for b in a..p {
                    cov[a][b] += da * (row[b] - means[b]);
                }
            }
        }
        let std: Vec<f64> = (0..p).map(|a| cov[a][a].sqrt()).collect();
        let mut out = vec![vec![0.0; p]; p];
        for a in 0..p {
            for b in a..p {
                let r = if a == b {
                    1.0
                } else if std[a] == 0.0 || std[b] == 0.0 {
                    0.0
                } else {
                    cov[a][b] / (std[a] * std[b])
                };
                out[a][b] = r;
                out[b][a] = r;
            }
        }
        out
    }

    /// Physical invariants of surface records: finite features, contact
    /// angles in [0, 180] degrees, area fractions in [0, 1].
    pub fn check_physical(&self) -> Result<(), DataError> {
        for (i, row) in self.rows.iter().enumerate() {
            for (name, &v) in self.columns.iter().zip(row) {
                if !v.is_finite() {
                    return Err(DataError::MalformedRow {
                        line: i + 1,
                        reason: format!("non-finite value in {name:?}"),
                    });
                }
                if name.ends_with("Area Fraction") && !(0.0..=1.0).contains(&v) {
                    return Err(DataError::MalformedRow {
                        line: i + 1,
                        reason: format!("{name:?} = {v} outside [0, 1]"),
                    });
                }
            }
        }
        for (i, &t) in self.target.iter().enumerate() {
            if !(0.0..=180.0).contains(&t) {
                return Err(DataError::MalformedRow {
                    line: i + 1,
                    reason: format!("contact angle {t} outside [0, 180] degrees"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset {
            columns: vec!["a".into(), "b".into()],
            rows: vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            target: vec![10.0, 20.0, 30.0],
            ids: vec!["r1".into(), "r2".into(), "r3".into()],
        }
    }

    #[test]
    fn project_reorders_columns() {
        let ds = tiny();
        let p = ds.project(&["b".into(), "a".into()]).unwrap();
        assert_eq!(p.rows[0], vec![2.0, 1.0]);
        assert!(ds.project(&["missing".into()]).is_none());
    }

    #[test]
    fn subset_selects_rows_in_order() {
        let ds = tiny();
        let s = ds.subset(&[2, 0]);
        assert_eq!(s.target, vec![30.0, 10.0]);
        assert_eq!(s.ids, vec!["r3".to_string(), "r1".to_string()]);
    }

    #[test]
    fn shape_check_catches_duplicates() {
        let mut ds = tiny();
        ds.columns[1] = "a".into();
        assert!(matches!(ds.check_shape(), Err(DataError::DuplicateColumn(_))));
    }

    #[test]
    fn correlation_matrix_hand_values() {
        let ds = Dataset {
            columns: vec!["up".into(), "down".into(), "flat".into()],
            rows: vec![
                vec![1.0, 6.0, 4.0],
                vec![2.0, 4.0, 4.0],
                vec![3.0, 2.0, 4.0],
            ],
            target: vec![0.0; 3],
            ids: vec!["a".into(), "b".into(), "c".into()],
        };
        let m = ds.correlation_matrix();
        // Perfectly anti-correlated pair, constant column correlates 0.
        assert!((m[0][1] + 1.0).abs() < 1e-12);
        assert_eq!(m[0][2], 0.0);
        for (a, row) in m.iter().enumerate() {
            assert_eq!(row[a], 1.0);
            for (b, &v) in row.iter().enumerate() {
                assert_eq!(v, m[b][a], "symmetry at ({a},{b})");
                assert!((-1.0..=1.0).contains(&v));
            }
        }
    }
}
