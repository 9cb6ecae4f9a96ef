//! Gradient-based attributions: vanilla gradient, Gradient*Input,
//! Integrated Gradients and SmoothGrad.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{class_gradient, Differentiable, GradientTarget};
use crate::seed;

/// Running mean of gradient vectors. Constant inputs give the input back
/// exactly.
struct MeanGradient {
    mean: Vec<f64>,
    count: usize,
}

impl MeanGradient {
    fn new(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            count: 0,
        }
    }

    fn push(&mut self, g: &[f64]) {
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        for (m, v) in self.mean.iter_mut().zip(g) {
            *m += (v - *m) * inv;
        }
    }
}

pub fn gradient(
    model: &dyn Differentiable,
    x: &[f64],
    class: u8,
    target: GradientTarget,
) -> Result<Vec<f64>> {
    class_gradient(model, x, target, class)
}

/// `gradient ⊙ x`.
pub fn grad_times_input(
    model: &dyn Differentiable,
    x: &[f64],
    class: u8,
    target: GradientTarget,
) -> Result<Vec<f64>> {
    let g = class_gradient(model, x, target, class)?;
    Ok(g.iter().zip(x).map(|(g, x)| g * x).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedGradientsConfig {
    pub steps: usize,
    pub baseline: Vec<f64>,
    #[serde(default)]
    pub target: GradientTarget,
}

impl IntegratedGradientsConfig {
    /// 1500 steps from the zero vector (the training mean after standardization).
    pub fn for_features(d: usize) -> Self {
        Self {
            steps: 1500,
            baseline: vec![0.0; d],
            target: GradientTarget::Logit,
        }
    }
}

/// `(x - x0) ⊙ mean_j ∇f(x0 + t_j (x - x0))` with midpoints
/// `t_j = (j - 1/2) / m`, `j = 1..=m`.
pub fn integrated_gradients(
    model: &dyn Differentiable,
    x: &[f64],
    class: u8,
    cfg: &IntegratedGradientsConfig,
) -> Result<Vec<f64>> {
    if cfg.steps == 0 {
        return Err(Error::Config("integrated gradients needs at least 1 step".into()));
    }
    Error::check_dim(x.len(), cfg.baseline.len())?;
    let delta: Vec<f64> = x.iter().zip(&cfg.baseline).map(|(x, b)| x - b).collect();
    let m = cfg.steps as f64;
    let mut acc = MeanGradient::new(x.len());
    let mut point = vec![0.0; x.len()];
    for j in 0..cfg.steps {
        let t = (j as f64 + 0.5) / m;
        for ((p, b), d) in point.iter_mut().zip(&cfg.baseline).zip(&delta) {
            *p = b + t * d;
        }
        acc.push(&class_gradient(model, &point, cfg.target, class)?);
    }
    Ok(acc.mean.iter().zip(&delta).map(|(g, d)| g * d).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothGradConfig {
    pub n_samples: usize,
    /// Standard deviation of the isotropic Gaussian input noise.
    pub sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub target: GradientTarget,
}

impl SmoothGradConfig {
    /// `sigma = 0.1 × mean_j(max_j - min_j)` over standardized training features.
    pub fn default_sigma(ranges: &[f64]) -> f64 {
        if ranges.is_empty() {
            return 0.0;
        }
        0.1 * ranges.iter().sum::<f64>() / ranges.len() as f64
    }

    pub fn from_ranges(ranges: &[f64]) -> Self {
        Self {
            n_samples: 1500,
            sigma: Self::default_sigma(ranges),
            seed: 0,
            target: GradientTarget::Logit,
        }
    }
}

/// Mean gradient over `n_samples` noisy copies `x + ε`, `ε ~ N(0, σ² I)`.
pub fn smoothgrad(
    model: &dyn Differentiable,
    x: &[f64],
    class: u8,
    cfg: &SmoothGradConfig,
) -> Result<Vec<f64>> {
    if cfg.n_samples == 0 {
        return Err(Error::Config("SmoothGrad needs at least 1 sample".into()));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::Config(format!("SmoothGrad sigma {} must be >= 0", cfg.sigma)));
    }
    if cfg.sigma == 0.0 {
        return class_gradient(model, x, cfg.target, class);
    }
    let mut rng = seed::rng(cfg.seed);
    let mut acc = MeanGradient::new(x.len());
    let mut noisy = vec![0.0; x.len()];
    for _ in 0..cfg.n_samples {
        for (n, v) in noisy.iter_mut().zip(x) {
            let e: f64 = rng.sample(StandardNormal);
            *n = v + cfg.sigma * e;
        }
        acc.push(&class_gradient(model, &noisy, cfg.target, class)?);
    }
    Ok(acc.mean)
}
