//! Datasets, CSV ingestion and the column standardization the solvers assume.

use std::io::{Read, Write};
use std::path::Path;

use log::info;
use ndarray::{Array2, ShapeBuilder};

use crate::error::{BernError, Result};

/// Observations `x` (n rows, p columns) with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<f64>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        let names = (0..x.ncols()).map(|j| format!("x{}", j + 1)).collect();
        Self::with_names(x, y, names)
    }

    pub fn with_names(x: Array2<f64>, y: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        let (n, p) = x.dim();
        if y.len() != n {
            return Err(BernError::DimensionMismatch { what: "labels", expected: n, got: y.len() });
        }
        if feature_names.len() != p {
            return Err(BernError::DimensionMismatch {
                what: "feature names",
                expected: p,
                got: feature_names.len(),
            });
        }
        if n < 2 {
            return Err(BernError::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(BernError::InvalidData("need at least one feature column".into()));
        }
        for (row, &v) in y.iter().enumerate() {
            if v != 1.0 && v != -1.0 {
                return Err(BernError::InvalidLabel { row, value: v });
            }
        }
        if let Some(((row, col), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(BernError::NonFinite { row, col });
        }
        Ok(Dataset { x, y, feature_names })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Errors unless both classes occur.
    pub fn require_both_classes(&self) -> Result<()> {
        let first = self.y[0];
        if self.y.iter().all(|&v| v == first) {
            return Err(BernError::SingleClass(first));
        }
        Ok(())
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let p = self.p();
        let mut x = Array2::zeros((rows.len(), p));
        let mut y = Vec::with_capacity(rows.len());
        for (k, &i) in rows.iter().enumerate() {
            x.row_mut(k).assign(&self.x.row(i));
            y.push(self.y[i]);
        }
        Dataset::with_names(x, y, self.feature_names.clone())
    }
}

/// Column-standardized design: every retained column has mean 0 and mean
/// square 1 (1/n convention). Zero-variance columns are dropped.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    /// Retained columns only, stored column-major.
    x_std: Array2<f64>,
    centers: Vec<f64>,
    scales: Vec<f64>,
    retained: Vec<usize>,
    dropped: Vec<usize>,
}

impl StandardizedDesign {
    pub fn x_std(&self) -> &Array2<f64> {
        &self.x_std
    }

    /// Column `k` of the retained design as a contiguous slice.
    #[inline]
    pub fn column(&self, k: usize) -> &[f64] {
        let start = k * self.x_std.nrows();
        &self.x_std.as_slice_memory_order().expect("column-major storage")
            [start..start + self.x_std.nrows()]
    }

    pub fn n(&self) -> usize {
        self.x_std.nrows()
    }

    /// Number of retained (fitted) columns.
    pub fn n_retained(&self) -> usize {
        self.retained.len()
    }

    /// Number of columns of the original data.
    pub fn p_total(&self) -> usize {
        self.centers.len()
    }

    /// Column means of the original data (length `p_total`).
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Column scales of the original data; 0 for dropped columns.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// Builds a design from columns that are already standardized; used by
    /// tests and by callers that standardize on their own.
    pub fn from_standardized(x_std: &Array2<f64>) -> Result<Self> {
        let (n, p) = x_std.dim();
        let mut buf = Array2::zeros((n, p).f());
        buf.assign(x_std);
        Ok(StandardizedDesign {
            x_std: buf,
            centers: vec![0.0; p],
            scales: vec![1.0; p],
            retained: (0..p).collect(),
            dropped: Vec::new(),
        })
    }

    /// `x_std b` for a retained-space coefficient vector.
    pub fn linear_predictor(&self, beta0: f64, beta: &[f64]) -> Vec<f64> {
        let mut eta = vec![beta0; self.n()];
        for (k, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, &v) in eta.iter_mut().zip(self.column(k)) {
                    *e += v * b;
                }
            }
        }
        eta
    }
}

/// Centers each column and scales it to unit mean square.
pub fn standardize(data: &Dataset) -> Result<StandardizedDesign> {
    let (n, p) = data.x.dim();
    let nf = n as f64;
    let mut centers = vec![0.0; p];
    let mut scales = vec![0.0; p];
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..p {
        let col = data.x.column(j);
        let mean = col.sum() / nf;
        let ms = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        centers[j] = mean;
        // Treat columns whose spread is at rounding level as constant.
        let tiny = 1e-12 * (1.0 + mean.abs());
        if ms.sqrt() > tiny {
            scales[j] = ms.sqrt();
            retained.push(j);
        } else {
            dropped.push(j);
        }
    }
    if retained.is_empty() {
        return Err(BernError::AllColumnsConstant);
    }
    let mut x_std = Array2::zeros((n, retained.len()).f());
    for (k, &j) in retained.iter().enumerate() {
        let (c, s) = (centers[j], scales[j]);
        for (dst, &v) in x_std.column_mut(k).iter_mut().zip(data.x.column(j)) {
            *dst = (v - c) / s;
        }
    }
    Ok(StandardizedDesign { x_std, centers, scales, retained, dropped })
}

/// Maps retained-space standardized coefficients back to the original columns.
pub fn destandardize_coefficients(
    beta0_std: f64,
    beta_std: &[f64],
    design: &StandardizedDesign,
) -> Result<(f64, Vec<f64>)> {
    if beta_std.len() != design.n_retained() {
        return Err(BernError::DimensionMismatch {
            what: "standardized coefficients",
            expected: design.n_retained(),
            got: beta_std.len(),
        });
    }
    let mut beta = vec![0.0; design.p_total()];
    let mut beta0 = beta0_std;
    for (k, &j) in design.retained.iter().enumerate() {
        let b = beta_std[k] / design.scales[j];
        beta[j] = b;
        beta0 -= b * design.centers[j];
    }
    Ok((beta0, beta))
}

/// Reads a headered CSV. `label` names the label column; labels may be
/// `{-1, 1}` or `{0, 1}` (0 is mapped to -1). Every other column is a feature.
pub fn read_csv<R: Read>(reader: R, label: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| BernError::Csv { row: 1, column: "-".into(), message: e.to_string() })?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| BernError::MissingLabelColumn(label.to_string()))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let p = names.len();
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        // Row numbers are 1-based file lines, counting the header.
        let row = r + 2;
        let rec = rec.map_err(|e| BernError::Csv { row, column: "-".into(), message: e.to_string() })?;
        if rec.len() != headers.len() {
            return Err(BernError::Csv {
                row,
                column: "-".into(),
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| BernError::Csv {
                row,
                column: headers[i].to_string(),
                message: format!("cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(BernError::Csv {
                    row,
                    column: headers[i].to_string(),
                    message: "non-finite value".into(),
                });
            }
            if i == label_idx {
                raw_labels.push((row, v));
            } else {
                values.push(v);
            }
        }
    }
    let n = raw_labels.len();
    let zero_one = raw_labels.iter().all(|&(_, v)| v == 0.0 || v == 1.0)
        && raw_labels.iter().any(|&(_, v)| v == 0.0);
    if zero_one {
        info!("labels given as {{0, 1}}; mapping 0 to -1");
    }
    let mut y = Vec::with_capacity(n);
    for (row, v) in raw_labels {
        let mapped = if zero_one && v == 0.0 { -1.0 } else { v };
        if mapped != 1.0 && mapped != -1.0 {
            return Err(BernError::Csv {
                row,
                column: label.to_string(),
                message: format!("label {v} is not one of -1, 0, 1"),
            });
        }
        y.push(mapped);
    }
    let x = Array2::from_shape_vec((n, p), values)
        .map_err(|e| BernError::InvalidData(e.to_string()))?;
    Dataset::with_names(x, y, names)
}

/// Reads the named columns of a headered CSV, in the order given; other
/// columns are ignored. Used to apply a fitted model to new rows.
pub fn read_features<R: Read>(reader: R, names: &[String]) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| BernError::Csv { row: 1, column: "-".into(), message: e.to_string() })?
        .clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers.iter().position(|h| h == n).ok_or_else(|| BernError::Csv {
                row: 1,
                column: n.clone(),
                message: "feature column is missing".into(),
            })
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 2;
        let rec = rec.map_err(|e| BernError::Csv { row, column: "-".into(), message: e.to_string() })?;
        for (&i, name) in idx.iter().zip(names) {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| BernError::Csv {
                row,
                column: name.clone(),
                message: format!("cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(BernError::Csv { row, column: name.clone(), message: "non-finite value".into() });
            }
            values.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, names.len()), values).map_err(|e| BernError::InvalidData(e.to_string()))
}

pub fn read_csv_path(path: &Path, label: &str) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(f), label)
}

/// Writes `data` as CSV with the label in the first column named `label`.
/// Values use Rust's shortest round-trip formatting.
pub fn write_csv<W: Write>(data: &Dataset, label: &str, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![label.to_string()];
    header.extend(data.feature_names.iter().cloned());
    let csv_err = |e: csv::Error| BernError::Csv { row: 0, column: "-".into(), message: e.to_string() };
    w.write_record(&header).map_err(csv_err)?;
    let mut rec = Vec::with_capacity(data.p() + 1);
    for (i, row) in data.x.rows().into_iter().enumerate() {
        rec.clear();
        rec.push(format!("{}", data.y[i]));
        rec.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
