//! CSV ingestion and emission for feature tables.
//!
//! Header row required, UTF-8, `.` decimal separator. Floats are written
//! with the shortest representation that round-trips, so save/load is
//! value-exact and files stay diffable.

use std::fs;
use std::path::Path;

use super::{DataError, Dataset};

/// Minimal CSV field splitter; quotes are not part of the format.
fn split_line(line: &str) -> Vec<String> {
    line.split(',').map(|s| s.trim().to_string()).collect()
}

/// Parse a strictly finite numeric cell.
fn parse_cell(cell: &str, line: usize, column: &str) -> Result<f64, DataError> {
    let value: f64 = cell.parse().map_err(|_| DataError::MalformedRow {
        line,
        reason: format!("cell {cell:?} in column {column:?} is not numeric"),
    })?;
    if !value.is_finite() {
        return Err(DataError::MalformedRow {
            line,
            reason: format!("cell {cell:?} in column {column:?} is not finite"),
        });
    }
    Ok(value)
}

/// Load a dataset; every non-id, non-target column becomes a feature.
///
/// `target` may be None for prediction-time tables without ground truth
/// (the dataset then carries an empty target vector).
pub fn load_csv(
    path: &Path,
    target: Option<&str>,
    id: Option<&str>,
) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(DataError::EmptyFile)?;
    let names = split_line(header);

    let target_idx = match target {
        Some(t) => {
            Some(names.iter().position(|n| n == t).ok_or_else(|| DataError::MissingTarget(t.into()))?)
        }
        None => None,
    };
    let id_idx = match id {
        Some(c) => Some(names.iter().position(|n| n == c).ok_or_else(|| DataError::MissingId(c.into()))?),
        None => None,
    };

    let feature_idx: Vec<usize> = (0..names.len())
        .filter(|j| Some(*j) != target_idx && Some(*j) != id_idx)
        .collect();
    let columns: Vec<String> = feature_idx.iter().map(|&j| names[j].clone()).collect();

    let mut rows = Vec::new();
    let mut target_vec = Vec::new();
    let mut ids = Vec::new();
    for (line_zero, line) in lines {
        let line_no = line_zero + 1; // 1-based as shown in editors
        if line.trim().is_empty() {
            continue;
        }
        let cells = split_line(line);
        if cells.len() != names.len() {
            return Err(DataError::MalformedRow {
                line: line_no,
                reason: format!("expected {} cells, found {}", names.len(), cells.len()),
            });
        }
        let mut row = Vec::with_capacity(feature_idx.len());
        for &j in &feature_idx {
            row.push(parse_cell(&cells[j], line_no, &names[j])?);
        }
        if let Some(t) = target_idx {
            target_vec.push(parse_cell(&cells[t], line_no, &names[t])?);
        }
        ids.push(match id_idx {
            Some(j) => cells[j].clone(),
            None => rows.len().to_string(),
        });
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::EmptyFile);
    }

    let ds = Dataset { columns, rows, target: target_vec, ids };
    if target.is_some() {
        ds.check_shape()?;
    }
    Ok(ds)
}

/// Shortest round-trip decimal for a float cell.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v}")
}

/// Write a dataset with an `id` column first and the target (when present)
/// last under the given name.
pub fn save_csv(ds: &Dataset, path: &Path, target_name: Option<&str>) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("id");
    for c in &ds.columns {
        out.push(',');
        out.push_str(c);
    }
    if let Some(t) = target_name {
        out.push(',');
        out.push_str(t);
    }
    out.push('\n');
    for (i, row) in ds.rows.iter().enumerate() {
        out.push_str(&ds.ids[i]);
        for &v in row {
            out.push(',');
            out.push_str(&format_float(v));
        }
        if target_name.is_some() {
            out.push(',');
            out.push_str(&format_float(ds.target[i]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
