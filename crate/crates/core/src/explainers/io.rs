//! JSON records and wide CSV files for attributions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Attribution, Method};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributionRecord {
    pub method: Method,
    pub instance_index: usize,
    pub target_class: u8,
    pub values: Vec<f64>,
}

impl From<&Attribution> for AttributionRecord {
    fn from(a: &Attribution) -> Self {
        Self {
            method: a.method,
            instance_index: a.instance_index,
            target_class: a.target_class,
            values: a.values.clone(),
        }
    }
}

impl TryFrom<AttributionRecord> for Attribution {
    type Error = Error;

    fn try_from(r: AttributionRecord) -> Result<Self> {
        if r.target_class > 1 {
            return Err(Error::Data(format!("target_class {} is not 0 or 1", r.target_class)));
        }
        Attribution::new(r.values, r.method, r.instance_index, r.target_class)
    }
}

/// Header `instance_index,target_class,v_0,...,v_{d-1}`, one row per instance.
pub fn write_attributions_csv(path: &Path, attrs: &[Attribution]) -> Result<()> {
    let d = attrs.first().map_or(0, Attribution::d);
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    let mut header = vec!["instance_index".to_owned(), "target_class".to_owned()];
    header.extend((0..d).map(|i| format!("v_{i}")));
    w.write_record(&header)?;
    for a in attrs {
        Error::check_dim(d, a.d())?;
        let mut row = vec![a.instance_index.to_string(), a.target_class.to_string()];
        row.extend(a.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_attributions_csv(path: &Path, method: Method) -> Result<Vec<Attribution>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "instance_index" || &header[1] != "target_class" {
        return Err(Error::Csv(format!(
            "{}: expected header `instance_index,target_class,v_0,...`",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |col: usize| {
            Error::Csv(format!(
                "{}: row {}, column `{}`: cannot parse `{}`",
                path.display(),
                row + 1,
                &header[col],
                &rec[col]
            ))
        };
        let instance_index = rec[0].parse().map_err(|_| bad(0))?;
        let target_class = rec[1].parse().map_err(|_| bad(1))?;
        let values = (2..rec.len())
            .map(|c| rec[c].parse::<f64>().map_err(|_| bad(c)))
            .collect::<Result<Vec<_>>>()?;
        out.push(Attribution::try_from(AttributionRecord {
            method,
            instance_index,
            target_class,
            values,
        })?);
    }
    Ok(out)
}
