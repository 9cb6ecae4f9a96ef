//! Aggregated matrices, report rows and their file formats.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::Method;
use crate::metrics::MetricId;

/// What a matrix was computed over: a top-k size or a feature-subset
/// descriptor (`all` or `;`-joined indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scope {
    TopK(usize),
    Features(String),
}

impl Ord for Scope {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scope::TopK(a), Scope::TopK(b)) => a.cmp(b),
            (Scope::Features(a), Scope::Features(b)) => a.cmp(b),
            (Scope::TopK(_), Scope::Features(_)) => Ordering::Less,
            (Scope::Features(_), Scope::TopK(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for Scope {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::TopK(k) => write!(f, "{k}"),
            Scope::Features(s) => f.write_str(s),
        }
    }
}

/// Mean and standard error (`sample sd / sqrt(n)`, 0 for a single value).
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Metric("cannot aggregate an empty list".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt() / n.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairwiseMatrix {
    pub metric: MetricId,
    pub k: Scope,
    pub methods: Vec<String>,
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub n: usize,
}

impl PairwiseMatrix {
    pub fn validate(&self) -> Result<()> {
        let m = self.methods.len();
        let square = |g: &Vec<Vec<f64>>| g.len() == m && g.iter().all(|r| r.len() == m);
        if m == 0 || !square(&self.mean) || !square(&self.stderr) {
            return Err(Error::Data(format!(
                "{} matrix at k={} is not {m}×{m}",
                self.metric, self.k
            )));
        }
        let (lo, hi) = self.metric.bounds();
        for i in 0..m {
            for j in 0..m {
                let (v, s) = (self.mean[i][j], self.stderr[i][j]);
                if !(v >= lo - 1e-9 && v <= hi + 1e-9) {
                    return Err(Error::Data(format!("{} mean {v} outside [{lo}, {hi}]", self.metric)));
                }
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(Error::Data(format!("{} stderr {s} is not a finite non-negative value", self.metric)));
                }
            }
        }
        Ok(())
    }

    /// `(mean, stderr)` for the first occurrence of each label.
    pub fn entry(&self, a: &str, b: &str) -> Option<(f64, f64)> {
        let i = self.methods.iter().position(|m| m == a)?;
        let j = self.methods.iter().position(|m| m == b)?;
        Some((self.mean[i][j], self.stderr[i][j]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method_a: String,
    pub method_b: String,
    pub metric: MetricId,
    pub k: Scope,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// One row per unordered method pair per matrix, names in canonical
/// (lexicographic) order, sorted by metric, k, then pair.
pub fn report_rows(matrices: &[PairwiseMatrix]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for mat in matrices {
        for i in 0..mat.methods.len() {
            for j in i + 1..mat.methods.len() {
                let (a, b) = if mat.methods[i] <= mat.methods[j] { (i, j) } else { (j, i) };
                rows.push(ReportRow {
                    method_a: mat.methods[a].clone(),
                    method_b: mat.methods[b].clone(),
                    metric: mat.metric,
                    k: mat.k.clone(),
                    mean: mat.mean[a][b],
                    stderr: mat.stderr[a][b],
                    n: mat.n,
                });
            }
        }
    }
    rows.sort_by(|x, y| {
        (x.metric.as_str(), &x.k, &x.method_a, &x.method_b)
            .cmp(&(y.metric.as_str(), &y.k, &y.method_a, &y.method_b))
    });
    rows
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["method_a", "method_b", "metric", "k", "mean", "stderr", "n"])?;
    for r in rows {
        w.write_record([
            r.method_a.clone(),
            r.method_b.clone(),
            r.metric.as_str().to_owned(),
            r.k.to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrices_json(path: &Path) -> Result<Vec<PairwiseMatrix>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mats: Vec<PairwiseMatrix> =
        serde_json::from_str(&text).map_err(|e| Error::Json(format!("{}: {e}", path.display())))?;
    for m in &mats {
        m.validate()?;
    }
    Ok(mats)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyRow {
    pub method_a: String,
    pub method_b: String,
    pub mean: f64,
    pub stderr: f64,
    /// Both methods are gradient based.
    pub gradient_pair: bool,
    /// Mean rank correlation above the threshold.
    pub flagged: bool,
}

/// Method pairs of the full-feature rank-correlation matrix, most agreeing
/// first.
pub fn dichotomy_report(matrices: &[PairwiseMatrix], threshold: f64) -> Result<Vec<DichotomyRow>> {
    let all = Scope::Features("all".into());
    let mat = matrices
        .iter()
        .find(|m| m.metric == MetricId::RankCorrelation && m.k == all)
        .or_else(|| matrices.iter().find(|m| m.metric == MetricId::RankCorrelation))
        .ok_or_else(|| Error::Metric("dichotomy report needs a rank_correlation matrix".into()))?;
    let is_grad = |s: &str| s.parse::<Method>().is_ok_and(Method::needs_gradients);
    let mut rows = Vec::new();
    for r in report_rows(std::slice::from_ref(mat)) {
        rows.push(DichotomyRow {
            gradient_pair: is_grad(&r.method_a) && is_grad(&r.method_b),
            flagged: r.mean > threshold,
            method_a: r.method_a,
            method_b: r.method_b,
            mean: r.mean,
            stderr: r.stderr,
        });
    }
    rows.sort_by(|x, y| {
        y.mean
            .total_cmp(&x.mean)
            .then_with(|| (&x.method_a, &x.method_b).cmp(&(&y.method_a, &y.method_b)))
    });
    Ok(rows)
}

pub fn write_dichotomy_csv(path: &Path, rows: &[DichotomyRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["method_a", "method_b", "mean", "stderr", "gradient_pair", "flagged"])?;
    for r in rows {
        w.write_record([
            r.method_a.clone(),
            r.method_b.clone(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.gradient_pair.to_string(),
            r.flagged.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
