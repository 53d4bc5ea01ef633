//! Column-wise power transformation and standardization.
//!
//! Each feature column gets a Yeo-Johnson transform with a maximum-likelihood
//! lambda, followed by z-scoring against the post-transform statistics. The
//! fitted parameters replay exactly on new data, so there is no dependence on
//! test-set statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lambdas closer than this to the log-branch points use the log form.
const BRANCH_EPS: f64 = 1e-8;
/// Search interval for the maximum-likelihood lambda.
const LAMBDA_RANGE: (f64, f64) = (-5.0, 5.0);
/// Width of the coarse pre-scan grid feeding the golden-section refinement.
const GRID_STEP: f64 = 0.05;
/// Golden-section convergence tolerance on lambda.
const GOLDEN_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("column {0:?} has fewer than two distinct values")]
    ConstantColumn(String),
    #[error("need at least three rows to fit a transform")]
    EmptyMatrix,
    #[error("column names or order do not match the fitted parameters")]
    SchemaMismatch,
    #[error("value {value} is outside the image of the transform for lambda {lambda}")]
    OutOfRange { value: f64, lambda: f64 },
}

/// Fitted per-column parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnTransform {
    pub name: String,
    pub lambda: f64,
    pub mean: f64,
    pub std: f64,
}

/// One entry per feature column, in column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub columns: Vec<ColumnTransform>,
}

/// The four-branch power transform; continuous in `y` at 0 and in `lambda`
/// at the branch points 0 and 2.
///
/// Both branches reduce to the identity at lambda = 1; that case is
/// computed exactly rather than through `powf` rounding.
pub fn yeo_johnson(y: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        return y;
    }
    if y >= 0.0 {
        if lambda.abs() < BRANCH_EPS {
            (y + 1.0).ln()
        } else {
            ((y + 1.0).powf(lambda) - 1.0) / lambda
        }
    } else if (lambda - 2.0).abs() < BRANCH_EPS {
        -(-y + 1.0).ln()
    } else {
        -((-y + 1.0).powf(2.0 - lambda) - 1.0) / (2.0 - lambda)
    }
}

/// Exact inverse of [`yeo_johnson`] on the image of the forward map.
pub fn yeo_johnson_inverse(z: f64, lambda: f64) -> Result<f64, TransformError> {
    if lambda == 1.0 {
        return Ok(z);
    }
    if z >= 0.0 {
        if lambda.abs() < BRANCH_EPS {
            Ok(z.exp() - 1.0)
        } else {
            let base = lambda * z + 1.0;
            if base <= 0.0 {
                return Err(TransformError::OutOfRange { value: z, lambda });
            }
            Ok(base.powf(1.0 / lambda) - 1.0)
        }
    } else if (lambda - 2.0).abs() < BRANCH_EPS {
        Ok(1.0 - (-z).exp())
    } else {
        let base = 1.0 - (2.0 - lambda) * z;
        if base <= 0.0 {
            return Err(TransformError::OutOfRange { value: z, lambda });
        }
        Ok(1.0 - base.powf(1.0 / (2.0 - lambda)))
    }
}

/// Profile log-likelihood of the transformed column under a Gaussian model:
/// `-n/2 * ln(var) + (lambda - 1) * sum(sign(y) * ln(|y| + 1))`.
pub(crate) fn profile_log_likelihood(column: &[f64], lambda: f64) -> f64 {
    let n = column.len() as f64;
    let transformed: Vec<f64> = column.iter().map(|&y| yeo_johnson(y, lambda)).collect();
    let mean = transformed.iter().sum::<f64>() / n;
    let var = transformed.iter().map(|&t| (t - mean) * (t - mean)).sum::<f64>() / n;
    if !var.is_finite() || var <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let jacobian: f64 = column.iter().map(|&y| y.signum() * y.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

/// Maximum-likelihood lambda via a coarse grid scan plus golden-section
/// refinement on `[-5, 5]`.
pub fn fit_lambda(column: &[f64]) -> Result<f64, TransformError> {
    fit_lambda_named(column, "<unnamed>")
}

fn fit_lambda_named(column: &[f64], name: &str) -> Result<f64, TransformError> {
    if column.len() < 3 {
        return Err(TransformError::EmptyMatrix);
    }
    let first = column[0];
    if column.iter().all(|&v| v == first) {
        return Err(TransformError::ConstantColumn(name.to_string()));
    }

    let (lo, hi) = LAMBDA_RANGE;
    let steps = ((hi - lo) / GRID_STEP).round() as usize;
    let mut best_lambda = lo;
    let mut best_ll = f64::NEG_INFINITY;
    for i in 0..=steps {
        let lambda = lo + GRID_STEP * i as f64;
        let ll = profile_log_likelihood(column, lambda);
        if ll > best_ll {
            best_ll = ll;
            best_lambda = lambda;
        }
    }

    let refined = golden_section_max(
        (best_lambda - GRID_STEP).max(lo),
        (best_lambda + GRID_STEP).min(hi),
        |lambda| profile_log_likelihood(column, lambda),
    );
    if profile_log_likelihood(column, refined) >= best_ll {
        Ok(refined)
    } else {
        Ok(best_lambda)
    }
}

/// Golden-section search for the maximum of a unimodal function on [a, b].
fn golden_section_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn column_of(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

/// Fit per-column lambda plus post-transform mean and standard deviation.
///
/// Constant columns pass through untouched: lambda 1, mean 0, std 1.
pub fn fit_transformer(names: &[String], rows: &[Vec<f64>]) -> Result<TransformParams, TransformError> {
    if rows.len() < 3 {
        return Err(TransformError::EmptyMatrix);
    }
    debug_assert!(rows.iter().all(|r| r.len() == names.len()));
    let mut columns = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let col = column_of(rows, j);
        let lambda = match fit_lambda_named(&col, name) {
            Ok(l) => l,
            Err(TransformError::ConstantColumn(_)) => {
                columns.push(ColumnTransform { name: name.clone(), lambda: 1.0, mean: 0.0, std: 1.0 });
                continue;
            }
            Err(e) => return Err(e),
        };
        let transformed: Vec<f64> = col.iter().map(|&y| yeo_johnson(y, lambda)).collect();
        let n = transformed.len() as f64;
        let mean = transformed.iter().sum::<f64>() / n;
        let var = transformed.iter().map(|&t| (t - mean) * (t - mean)).sum::<f64>() / n;
        columns.push(ColumnTransform { name: name.clone(), lambda, mean, std: var.sqrt() });
    }
    Ok(TransformParams { columns })
}

impl TransformParams {
    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    fn check_schema(&self, names: &[String]) -> Result<(), TransformError> {
        if names.len() != self.columns.len()
            || names.iter().zip(&self.columns).any(|(n, c)| *n != c.name)
        {
            return Err(TransformError::SchemaMismatch);
        }
        Ok(())
    }

    /// Transform then z-score every cell.
    pub fn apply(&self, names: &[String], rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, TransformError> {
        self.check_schema(names)?;
        Ok(rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.columns)
                    .map(|(&y, c)| (yeo_johnson(y, c.lambda) - c.mean) / c.std)
                    .collect()
            })
            .collect())
    }

    /// Undo the z-scoring and the power transform.
    pub fn inverse(&self, names: &[String], rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, TransformError> {
        self.check_schema(names)?;
        rows.iter()
            .map(|row| {
                row.iter()
                    .zip(&self.columns)
                    .map(|(&z, c)| yeo_johnson_inverse(z * c.std + c.mean, c.lambda))
                    .collect()
            })
            .collect()
    }
}
