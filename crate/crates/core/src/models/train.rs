//! Mini-batch gradient descent on the regularized logistic loss.
//!
//! Plain SGD with a fixed learning rate, per-epoch reshuffling from a seeded
//! stream, mean gradient over each batch, and an L2 penalty on weights only.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::linear::LinearModel;
use super::mlp::{logistic_loss, MlpModel};
use super::{sigmoid, Differentiable};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 64,
            l2_penalty: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::Config("l2_penalty must be non-negative".into()));
        }
        Ok(())
    }
}

// Keeps the shuffle stream independent of the MLP init stream.
const SHUFFLE_STREAM: u64 = 0x5348_5546_464c_45;

fn epochs<F>(train: &Dataset, cfg: &TrainConfig, mut step: F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train.n()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            loss += step(batch)?;
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
    }
    Ok(())
}

pub fn train_logistic(train: &Dataset, cfg: &TrainConfig) -> Result<LinearModel> {
    let d = train.d();
    let mut model = LinearModel::zeros(d);
    let (x, y) = (train.x(), train.y());
    let mut gw = vec![0.0; d];
    epochs(train, cfg, |batch| {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        let mut loss = 0.0;
        for &i in batch {
            let z = model.logit(&x[i])?;
            let r = sigmoid(z) - f64::from(y[i]);
            for (g, v) in gw.iter_mut().zip(&x[i]) {
                *g += r * v;
            }
            gb += r;
            loss += logistic_loss(z, y[i]);
        }
        let scale = cfg.learning_rate / batch.len() as f64;
        for (w, g) in model.w.iter_mut().zip(&gw) {
            *w -= scale * g + cfg.learning_rate * cfg.l2_penalty * *w;
        }
        model.b -= scale * gb;
        Ok(loss)
    })?;
    Ok(model)
}

pub fn train_mlp(train: &Dataset, hidden: &[usize], cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let mut model = MlpModel::init(train.d(), hidden, cfg.seed)?;
    let (x, y) = (train.x(), train.y());
    let mut grads = model.zero_grads();
    epochs(train, cfg, |batch| {
        for g in grads.iter_mut() {
            g.weights.iter_mut().for_each(|v| *v = 0.0);
            g.bias.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut loss = 0.0;
        for &i in batch {
            loss += model.accumulate_loss_grad(&x[i], y[i], &mut grads)?;
        }
        let scale = cfg.learning_rate / batch.len() as f64;
        let decay = cfg.learning_rate * cfg.l2_penalty;
        for (layer, g) in model.layers_mut().iter_mut().zip(&grads) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= scale * gw + decay * *w;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= scale * gb;
            }
        }
        Ok(loss)
    })?;
    Ok(model)
}
