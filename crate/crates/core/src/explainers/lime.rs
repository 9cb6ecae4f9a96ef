//! LIME: a locally weighted ridge surrogate around the instance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl LimeConfig {
    /// 3000 samples, kernel width `0.75·sqrt(d)`, ridge 1e-3.
    pub fn for_features(d: usize) -> Self {
        Self {
            n_samples: 3000,
            kernel_width: 0.75 * (d as f64).sqrt(),
            ridge_lambda: 1e-3,
            seed: 0,
        }
    }
}

/// Fits `f(z) ≈ c + β·(z - x)` on Gaussian perturbations `z ~ N(x, I)`,
/// weighted by `exp(-‖z - x‖² / width²)`, with an L2 penalty on `β` only,
/// and returns `β`.
///
/// Perturbations are drawn sequentially from the seeded stream, so a run
/// with more samples extends the sample set of a smaller run.
pub fn lime<F>(f: F, x: &[f64], cfg: &LimeConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = x.len();
    if cfg.n_samples < d + 2 {
        return Err(Error::Config(format!(
            "LIME needs at least d + 2 = {} samples, got {}",
            d + 2,
            cfg.n_samples
        )));
    }
    if !(cfg.kernel_width > 0.0 && cfg.kernel_width.is_finite()) {
        return Err(Error::Config("LIME kernel width must be positive".into()));
    }
    if !(cfg.ridge_lambda >= 0.0 && cfg.ridge_lambda.is_finite()) {
        return Err(Error::Config("LIME ridge lambda must be non-negative".into()));
    }

    let p = d + 1;
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut rng = seed::rng(cfg.seed);
    let mut offset = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut row = vec![0.0; p];
    let width2 = cfg.kernel_width * cfg.kernel_width;
    for _ in 0..cfg.n_samples {
        for ((o, zi), xi) in offset.iter_mut().zip(z.iter_mut()).zip(x) {
            *o = rng.sample(StandardNormal);
            *zi = xi + *o;
        }
        let dist2: f64 = offset.iter().map(|o| o * o).sum();
        let w = (-dist2 / width2).exp();
        let y = f(&z)?;
        row[0] = 1.0;
        row[1..].copy_from_slice(&offset);
        for i in 0..p {
            let wi = w * row[i];
            rhs[i] += wi * y;
            for j in i..p {
                gram[(i, j)] += wi * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    for i in 1..p {
        gram[(i, i)] += cfg.ridge_lambda;
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Singular("LIME normal equations are not positive definite".into())
    })?;
    let beta = chol.solve(&rhs);
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("LIME solution is not finite".into()));
    }
    Ok(beta.iter().skip(1).copied().collect())
}
