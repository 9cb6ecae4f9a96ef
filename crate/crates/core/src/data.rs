//! Tabular dataset ingestion, splitting and standardization.
//!
//! Features are expected to be numerically encoded already; the loader does
//! no categorical handling. Labels are binary.

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Ordered feature names plus the name of the label column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct FeatureSchema {
    names: Vec<String>,
    label_name: String,
}

#[derive(Deserialize)]
struct RawSchema {
    names: Vec<String>,
    label_name: String,
}

impl TryFrom<RawSchema> for FeatureSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        FeatureSchema::new(raw.names, raw.label_name)
    }
}

impl FeatureSchema {
    pub fn new(names: Vec<String>, label_name: impl Into<String>) -> Result<Self> {
        let label_name = label_name.into();
        if names.is_empty() {
            return Err(Error::Schema("at least one feature is required".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.trim().is_empty() {
                return Err(Error::Schema("feature names must be non-empty".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{name}`")));
            }
        }
        if label_name.trim().is_empty() {
            return Err(Error::Schema("label name must be non-empty".into()));
        }
        if seen.contains(label_name.as_str()) {
            return Err(Error::Schema(format!(
                "label `{label_name}` is also listed as a feature"
            )));
        }
        Ok(Self { names, label_name })
    }

    /// Reads a schema JSON document `{"names": [...], "label_name": "..."}`.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(file)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    /// Feature count.
    pub fn d(&self) -> usize {
        self.names.len()
    }
}

/// Feature matrix with binary labels. Rows are dense and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, x: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        Error::check_dim(x.len(), y.len())?;
        let d = schema.d();
        for (i, row) in x.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Data(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {i} column {j} is not finite")));
            }
        }
        if let Some(i) = y.iter().position(|&l| l > 1) {
            return Err(Error::Data(format!("row {i}: label {} not in {{0,1}}", y[i])));
        }
        Ok(Self { schema, x, y })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn d(&self) -> usize {
        self.schema.d()
    }

    /// Same labels and schema, new feature matrix.
    pub fn with_features(&self, x: Vec<Vec<f64>>) -> Result<Self> {
        Dataset::new(self.schema.clone(), x, self.y.clone())
    }

    /// Keeps the listed rows, in the listed order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let x = rows.iter().map(|&i| self.x[i].clone()).collect();
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Dataset::new(self.schema.clone(), x, y)
    }

    /// Per-feature `max - min`.
    pub fn feature_ranges(&self) -> Vec<f64> {
        (0..self.d())
            .map(|j| {
                let (lo, hi) = self
                    .x
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), row| {
                        (lo.min(row[j]), hi.max(row[j]))
                    });
                hi - lo
            })
            .collect()
    }
}

/// Loads a comma-separated file with a header row.
///
/// The header must contain every schema feature, in schema order, plus the
/// label column (at any position). No other columns are allowed.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let label_col = header
        .iter()
        .position(|h| h == schema.label_name())
        .ok_or_else(|| {
            Error::Data(format!(
                "{}: header has no label column `{}`",
                path.display(),
                schema.label_name()
            ))
        })?;
    let feature_cols: Vec<&String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h)
        .collect();
    if feature_cols.len() != schema.d()
        || feature_cols.iter().zip(schema.names()).any(|(a, b)| *a != b)
    {
        return Err(Error::Data(format!(
            "{}: header [{}] does not match schema features [{}] + label `{}`",
            path.display(),
            header.join(","),
            schema.names().join(","),
            schema.label_name()
        )));
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Data(format!(
                "row {row}: expected {} cells, found {}",
                header.len(),
                record.len()
            )));
        }
        let mut values = Vec::with_capacity(schema.d());
        for (col, cell) in record.iter().enumerate() {
            let parsed: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "row {row}, column `{}`: cannot parse `{cell}` as a number",
                    header[col]
                ))
            })?;
            if !parsed.is_finite() {
                return Err(Error::Data(format!(
                    "row {row}, column `{}`: value is not finite",
                    header[col]
                )));
            }
            if col == label_col {
                let label = match parsed {
                    v if v == 0.0 => 0,
                    v if v == 1.0 => 1,
                    _ => {
                        return Err(Error::Data(format!(
                            "row {row}: label `{cell}` is not in {{0,1}}"
                        )))
                    }
                };
                y.push(label);
            } else {
                values.push(parsed);
            }
        }
        x.push(values);
    }
    Dataset::new(schema.clone(), x, y)
}

/// Writes a dataset back out in the layout [`load_csv`] reads, label last.
pub fn write_csv(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = ds.schema.names().iter().map(String::as_str).collect();
    header.push(ds.schema.label_name());
    w.write_record(&header)?;
    for (row, label) in ds.x.iter().zip(&ds.y) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Number of test rows for a split: `ceil(fraction * n)`.
///
/// A 1e-9 slack absorbs representation error so that e.g. `0.3 * 10`
/// yields 3 rather than 4.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    (test_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Seeded shuffle split. Returns `(train, test)`.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n = ds.n();
    if n < 2 {
        return Err(Error::Data("need at least 2 rows to split".into()));
    }
    let n_test = test_size(n, test_fraction);
    if n_test == 0 || n_test >= n {
        return Err(Error::Data(format!(
            "test fraction {test_fraction} on {n} rows leaves an empty split"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let (test_idx, train_idx) = order.split_at(n_test);
    Ok((ds.select(train_idx)?, ds.select(test_idx)?))
}

/// Per-column affine map to zero mean and unit population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Zero-variance columns are stored as 1.
    pub stds: Vec<f64>,
}

pub fn fit_standardizer(ds: &Dataset) -> Standardizer {
    let n = ds.n() as f64;
    let d = ds.d();
    let mut means = vec![0.0; d];
    for row in ds.x() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; d];
    for row in ds.x() {
        for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stds = vars
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Standardizer { means, stds }
}

impl Standardizer {
    pub fn d(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.d(), row.len())?;
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn inverse_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.d(), row.len())?;
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    pub fn transform_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        ds.with_features(standardize(self, ds.x())?)
    }
}

/// `(x - mean) / std`, elementwise.
pub fn standardize(s: &Standardizer, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    x.iter().map(|row| s.transform_row(row)).collect()
}

pub fn unstandardize(s: &Standardizer, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    x.iter().map(|row| s.inverse_row(row)).collect()
}
