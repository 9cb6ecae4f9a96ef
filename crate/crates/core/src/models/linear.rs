use serde::{Deserialize, Serialize};

use super::{sigmoid, Classifier, Differentiable};
use crate::error::{Error, Result};

/// Logistic regression: `logit(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Config("linear model needs at least one weight".into()));
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("linear model parameters must be finite".into()));
        }
        Ok(Self { w, b })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            w: vec![0.0; d],
            b: 0.0,
        }
    }
}

impl Classifier for LinearModel {
    fn n_features(&self) -> usize {
        self.w.len()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        Some(self)
    }
}

impl Differentiable for LinearModel {
    fn logit(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.w.len(), x.len())?;
        Ok(self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b)
    }

    fn logit_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.w.len(), x.len())?;
        Ok(self.w.clone())
    }
}
