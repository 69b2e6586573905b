//! CSV dataset format: one row per sample, feature columns as decimal
//! literals, optional trailing `label` column declared by the header.
//! UTF-8, LF line endings. Feature values must be finite and nonnegative;
//! the first violation is reported with its row and column.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Result, SnmfError};
use crate::numerics::{DenseMatrix, NonNegMatrix};

#[derive(Clone, Debug)]
pub struct Dataset {
    pub features: NonNegMatrix,
    pub labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn new(features: NonNegMatrix, labels: Option<Vec<u8>>) -> Result<Self> {
        if let Some(y) = &labels {
            if y.len() != features.rows() {
                return Err(SnmfError::ShapeMismatch(format!(
                    "{} rows vs {} labels",
                    features.rows(),
                    y.len()
                )));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn require_labels(&self, path: &Path) -> Result<&[u8]> {
        self.labels.as_deref().ok_or_else(|| SnmfError::Dataset {
            path: path.to_path_buf(),
            message: "no label column; a header declaring `label` is required".into(),
        })
    }
}

pub fn to_csv(ds: &Dataset) -> String {
    let m = ds.features.cols();
    let mut out = String::new();
    for j in 0..m {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "f{j}");
    }
    if ds.labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for i in 0..ds.features.rows() {
        for (j, v) in ds.features.as_dense().row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        if let Some(y) = &ds.labels {
            let _ = write!(out, ",{}", y[i]);
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(path: &Path, ds: &Dataset) -> Result<()> {
    crate::report::write_atomic(path, to_csv(ds).as_bytes())
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, path)
}

fn parse_csv(text: &str, path: &Path) -> Result<Dataset> {
    let fail = |message: String| SnmfError::Dataset {
        path: PathBuf::from(path),
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| fail("empty file".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let has_label = columns.last().map(|c| c.trim() == "label").unwrap_or(false);
    let n_features = if has_label {
        columns.len() - 1
    } else {
        columns.len()
    };
    if n_features == 0 {
        return Err(fail("no feature columns".into()));
    }
    let mut data = Vec::new();
    let mut labels = if has_label { Some(Vec::new()) } else { None };
    let mut n_rows = 0usize;
    for (line_no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(fail(format!(
                "row {} has {} fields, expected {}",
                line_no + 1,
                fields.len(),
                columns.len()
            )));
        }
        for (j, field) in fields[..n_features].iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                fail(format!(
                    "row {} column {} is not a number: {:?}",
                    line_no + 1,
                    j,
                    field
                ))
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(fail(format!(
                    "row {} column {} must be finite and ≥ 0, got {}",
                    line_no + 1,
                    j,
                    v
                )));
            }
            data.push(v);
        }
        if let Some(y) = &mut labels {
            let raw = fields[n_features].trim();
            let label: u8 = raw
                .parse()
                .ok()
                .filter(|&l| l <= 1)
                .ok_or_else(|| {
                    fail(format!(
                        "row {} label must be 0 or 1, got {:?}",
                        line_no + 1,
                        raw
                    ))
                })?;
            y.push(label);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(fail("no data rows".into()));
    }
    let features = NonNegMatrix::new(DenseMatrix::new(n_rows, n_features, data)?)?;
    Dataset::new(features, labels)
}
