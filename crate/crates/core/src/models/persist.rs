//! JSON model document.
//!
//! Both kinds share one layout: `layer_dims` is `[d, hidden..., 1]` and
//! `parameters` holds one flattened `{weights, bias}` pair per layer, weights
//! row-major `n_out × n_in`. A logistic model is the single-layer case.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DenseLayer, LinearModel, MlpModel, Model, TrainConfig};
use crate::data::{FeatureSchema, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Mlp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp => "mlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: ModelKind,
    pub layer_dims: Vec<usize>,
    pub parameters: Vec<LayerParams>,
    pub schema: FeatureSchema,
    /// Fitted on the raw training split; models consume standardized rows.
    pub standardizer: Standardizer,
    /// Per-feature `max - min` of the standardized training rows.
    pub standardized_ranges: Vec<f64>,
    pub train_config: TrainConfig,
}

impl ModelFile {
    pub fn new(
        model: &Model,
        schema: FeatureSchema,
        standardizer: Standardizer,
        standardized_ranges: Vec<f64>,
        train_config: TrainConfig,
    ) -> Self {
        let (kind, layer_dims, parameters) = match model {
            Model::Logistic(m) => (
                ModelKind::Logistic,
                vec![m.w.len(), 1],
                vec![LayerParams {
                    weights: m.w.clone(),
                    bias: vec![m.b],
                }],
            ),
            Model::Mlp(m) => {
                let mut dims = vec![m.layers()[0].n_in];
                dims.extend(m.layers().iter().map(|l| l.n_out));
                let params = m
                    .layers()
                    .iter()
                    .map(|l| LayerParams {
                        weights: l.weights.clone(),
                        bias: l.bias.clone(),
                    })
                    .collect();
                (ModelKind::Mlp, dims, params)
            }
        };
        Self {
            kind,
            layer_dims,
            parameters,
            schema,
            standardizer,
            standardized_ranges,
            train_config,
        }
    }

    /// Rebuilds the model, validating every shape.
    pub fn model(&self) -> Result<Model> {
        let d = self.schema.d();
        if self.layer_dims.first() != Some(&d) || self.layer_dims.last() != Some(&1) {
            return Err(Error::Config(format!(
                "layer_dims {:?} must start at d={d} and end at 1",
                self.layer_dims
            )));
        }
        if self.parameters.len() + 1 != self.layer_dims.len() {
            return Err(Error::Config(
                "parameters must hold one entry per layer".into(),
            ));
        }
        Error::check_dim(d, self.standardizer.d())?;
        Error::check_dim(d, self.standardized_ranges.len())?;
        match self.kind {
            ModelKind::Logistic => {
                if self.layer_dims.len() != 2 {
                    return Err(Error::Config("logistic model has exactly one layer".into()));
                }
                let p = &self.parameters[0];
                Error::check_dim(d, p.weights.len())?;
                Error::check_dim(1, p.bias.len())?;
                Ok(Model::Logistic(LinearModel::new(p.weights.clone(), p.bias[0])?))
            }
            ModelKind::Mlp => {
                let layers = self
                    .layer_dims
                    .windows(2)
                    .zip(&self.parameters)
                    .map(|(w, p)| DenseLayer {
                        n_in: w[0],
                        n_out: w[1],
                        weights: p.weights.clone(),
                        bias: p.bias.clone(),
                    })
                    .collect();
                Ok(Model::Mlp(MlpModel::from_layers(layers)?))
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let doc: ModelFile = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Json(format!("{}: {e}", path.display())))?;
        doc.model()?;
        Ok(doc)
    }
}
