//! Binary classifiers with a single-logit sigmoid head.
//!
//! [`Classifier`] is the predict-only surface that perturbation explainers
//! need. [`Differentiable`] adds the logit and its exact input gradient for
//! the gradient-based explainers.

mod linear;
mod mlp;
mod persist;
mod train;

pub use linear::LinearModel;
pub use mlp::{DenseLayer, MlpModel};
pub use persist::{ModelFile, ModelKind};
pub use train::{train_logistic, train_mlp, TrainConfig};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub trait Classifier: Sync {
    fn n_features(&self) -> usize;

    /// Probability of class 1.
    fn predict_proba(&self, x: &[f64]) -> Result<f64>;

    /// Thresholds at 0.5; exactly 0.5 resolves to class 1.
    fn predict_label(&self, x: &[f64]) -> Result<u8> {
        Ok(label_from_proba(self.predict_proba(x)?))
    }

    /// Probability assigned to `class`.
    fn class_proba(&self, x: &[f64], class: u8) -> Result<f64> {
        let p = self.predict_proba(x)?;
        Ok(if class == 1 { p } else { 1.0 - p })
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        None
    }
}

pub fn label_from_proba(p: f64) -> u8 {
    u8::from(p >= 0.5)
}

pub trait Differentiable: Classifier {
    fn logit(&self, x: &[f64]) -> Result<f64>;

    /// d logit / dx.
    fn logit_gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Quantity whose input gradient the gradient explainers differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientTarget {
    #[default]
    Logit,
    Probability,
}

/// Class-1 target value at `x`.
pub fn target_value(model: &dyn Differentiable, x: &[f64], target: GradientTarget) -> Result<f64> {
    let z = model.logit(x)?;
    Ok(match target {
        GradientTarget::Logit => z,
        GradientTarget::Probability => sigmoid(z),
    })
}

/// Gradient of the class-1 target with respect to the input.
pub fn input_gradient(
    model: &dyn Differentiable,
    x: &[f64],
    target: GradientTarget,
) -> Result<Vec<f64>> {
    let mut g = model.logit_gradient(x)?;
    if target == GradientTarget::Probability {
        let p = sigmoid(model.logit(x)?);
        let scale = p * (1.0 - p);
        g.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(g)
}

/// Target value for `class`. The class-0 logit is the negated class-1 logit.
pub fn class_target_value(
    model: &dyn Differentiable,
    x: &[f64],
    target: GradientTarget,
    class: u8,
) -> Result<f64> {
    let v = target_value(model, x, target)?;
    Ok(match (class, target) {
        (1, _) => v,
        (_, GradientTarget::Logit) => -v,
        (_, GradientTarget::Probability) => 1.0 - v,
    })
}

/// Gradient of the `class` target; for class 0 this is the negated class-1 gradient.
pub fn class_gradient(
    model: &dyn Differentiable,
    x: &[f64],
    target: GradientTarget,
    class: u8,
) -> Result<Vec<f64>> {
    let mut g = input_gradient(model, x, target)?;
    if class == 0 {
        g.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(g)
}

/// Fraction of rows whose predicted label equals the true label.
pub fn accuracy(model: &dyn Classifier, ds: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for (x, &y) in ds.x().iter().zip(ds.y()) {
        if model.predict_label(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.n() as f64)
}

/// A trained model of either differentiable kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic(LinearModel),
    Mlp(MlpModel),
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Logistic(m) => m.n_features(),
            Model::Mlp(m) => m.n_features(),
        }
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Logistic(m) => m.predict_proba(x),
            Model::Mlp(m) => m.predict_proba(x),
        }
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        Some(self)
    }
}

impl Differentiable for Model {
    fn logit(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Logistic(m) => m.logit(x),
            Model::Mlp(m) => m.logit(x),
        }
    }

    fn logit_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Logistic(m) => m.logit_gradient(x),
            Model::Mlp(m) => m.logit_gradient(x),
        }
    }
}

/// Wraps an arbitrary class-1 probability function as a predict-only model.
pub struct PredictOnly<F> {
    d: usize,
    f: F,
}

impl<F> PredictOnly<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(d: usize, f: F) -> Self {
        Self { d, f }
    }
}

impl<F> Classifier for PredictOnly<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn n_features(&self) -> usize {
        self.d
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.d, x.len())?;
        Ok((self.f)(x))
    }
}
