//! Exact Shapley values and KernelSHAP with single-reference masking.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Enumeration guard for [`exact_shapley`].
pub const MAX_EXACT_FEATURES: usize = 20;

/// Coalitions are `u64` bitmasks in sampled mode.
const MAX_SAMPLED_FEATURES: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelShapConfig {
    pub mode: ShapMode,
    pub n_samples: usize,
    pub baseline: Vec<f64>,
    pub seed: u64,
}

impl KernelShapConfig {
    /// 3000 coalitions from the zero baseline. Exact mode whenever the budget
    /// already covers every proper coalition.
    pub fn for_features(d: usize) -> Self {
        let n_samples = 3000;
        let covers = d < 63 && (1u64 << d) - 2 <= n_samples as u64;
        Self {
            mode: if covers { ShapMode::Exact } else { ShapMode::Sampled },
            n_samples,
            baseline: vec![0.0; d],
            seed: 0,
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn hybrid(x: &[f64], baseline: &[f64], mask: u64, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = if mask >> i & 1 == 1 { x[i] } else { baseline[i] };
    }
}

/// Shapley values of `f` at `x` over all `2^d` coalitions; absent features
/// take their baseline value.
pub fn exact_shapley<F>(f: F, x: &[f64], baseline: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = x.len();
    Error::check_dim(d, baseline.len())?;
    if d > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            d,
            max: MAX_EXACT_FEATURES,
        });
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let n = 1usize << d;
    let mut value = Vec::with_capacity(n);
    let mut z = vec![0.0; d];
    for mask in 0..n {
        hybrid(x, baseline, mask as u64, &mut z);
        value.push(f(&z)?);
    }
    // |S|!(d-|S|-1)!/d! = 1 / (d · C(d-1, |S|))
    let weight: Vec<f64> = (0..d)
        .map(|s| 1.0 / (d as f64 * binomial(d - 1, s) as f64))
        .collect();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        let mut acc = 0.0;
        for mask in (0..n).filter(|m| m & bit == 0) {
            acc += weight[mask.count_ones() as usize] * (value[mask | bit] - value[mask]);
        }
        *p = acc;
    }
    Ok(phi)
}

/// KernelSHAP. Exact mode is [`exact_shapley`]. Sampled mode solves the
/// Shapley-kernel weighted least squares under `Σφ = f(x) - f(baseline)`.
///
/// The sampled budget first enumerates whole coalition sizes (smallest and
/// largest first, in complementary pairs) while they fit, then spends the
/// rest on paired random draws from the remaining sizes, weighted so every
/// coalition keeps its kernel weight in expectation. A budget of at least
/// `2^d - 2` therefore enumerates everything and reproduces exact values.
pub fn kernel_shap<F>(f: F, x: &[f64], cfg: &KernelShapConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    Error::check_dim(x.len(), cfg.baseline.len())?;
    match cfg.mode {
        ShapMode::Exact => exact_shapley(f, x, &cfg.baseline),
        ShapMode::Sampled => sampled(f, x, cfg),
    }
}

fn sampled<F>(f: F, x: &[f64], cfg: &KernelShapConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = x.len();
    if d > MAX_SAMPLED_FEATURES {
        return Err(Error::TooManyFeatures {
            d,
            max: MAX_SAMPLED_FEATURES,
        });
    }
    if cfg.n_samples == 0 {
        return Err(Error::Config("KernelSHAP needs at least 1 sample".into()));
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let base = &cfg.baseline;
    let v0 = f(base)?;
    let delta = f(x)? - v0;
    if d == 1 {
        return Ok(vec![delta]);
    }

    let df = d as f64;
    let kernel = |s: usize| (df - 1.0) / (binomial(d, s) as f64 * s as f64 * (df - s as f64));
    let class_mass = |s: usize| (df - 1.0) / (s as f64 * (df - s as f64));

    let mut rows: Vec<(u64, f64)> = Vec::new();
    let mut remaining = cfg.n_samples as u128;
    let mut leftover: Vec<usize> = Vec::new();
    let mut enumerating = true;
    for s in 1..=d / 2 {
        let sizes: Vec<usize> = if s == d - s { vec![s] } else { vec![s, d - s] };
        let count: u128 = sizes.iter().map(|&t| binomial(d, t)).sum();
        if enumerating && count <= remaining {
            remaining -= count;
            for &t in &sizes {
                let w = kernel(t);
                for mask in masks_of_size(d, t) {
                    rows.push((mask, w));
                }
            }
        } else {
            enumerating = false;
            leftover.extend(sizes);
        }
    }

    let n_pairs = (remaining / 2) as usize;
    if !leftover.is_empty() && n_pairs > 0 {
        let masses: Vec<f64> = leftover.iter().map(|&s| class_mass(s)).collect();
        let total: f64 = masses.iter().sum();
        let w = total / (2 * n_pairs) as f64;
        let full = (1u64 << d) - 1;
        let mut rng = seed::rng(cfg.seed);
        let mut idx: Vec<usize> = (0..d).collect();
        for _ in 0..n_pairs {
            let mut u = rng.random::<f64>() * total;
            let mut s = *leftover.last().unwrap();
            for (&size, &m) in leftover.iter().zip(&masses) {
                if u < m {
                    s = size;
                    break;
                }
                u -= m;
            }
            for i in 0..s {
                let j = rng.random_range(i..d);
                idx.swap(i, j);
            }
            let mask = idx[..s].iter().fold(0u64, |m, &i| m | 1 << i);
            rows.push((mask, w));
            rows.push((full ^ mask, w));
        }
    }

    // Substitute φ_last = Δ - Σ_{i<last} φ_i and solve for the rest.
    let p = d - 1;
    let last = 1u64 << p;
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut z = vec![0.0; d];
    let mut u = vec![0.0; p];
    for &(mask, w) in &rows {
        hybrid(x, base, mask, &mut z);
        let z_last = (mask & last != 0) as u8 as f64;
        let y = f(&z)? - v0 - z_last * delta;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = (mask >> i & 1) as f64 - z_last;
        }
        for i in 0..p {
            if u[i] == 0.0 {
                continue;
            }
            let wi = w * u[i];
            rhs[i] += wi * y;
            for j in 0..p {
                gram[(i, j)] += wi * u[j];
            }
        }
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Singular(format!(
            "KernelSHAP coalition design with {} rows does not identify {d} features",
            rows.len()
        ))
    })?;
    let head = chol.solve(&rhs);
    let mut phi: Vec<f64> = head.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("KernelSHAP solution is not finite".into()));
    }
    Ok(phi)
}

/// All `d`-bit masks with exactly `s` bits set, in increasing order.
fn masks_of_size(d: usize, s: usize) -> impl Iterator<Item = u64> {
    let end = 1u64 << d;
    let mut next = if s == 0 { Some(0) } else { Some((1u64 << s) - 1) };
    std::iter::from_fn(move || {
        let m = next?;
        next = if m == 0 {
            None
        } else {
            let c = m & m.wrapping_neg();
            let r = m + c;
            let n = (((r ^ m) >> 2) / c) | r;
            (n < end).then_some(n)
        };
        Some(m)
    })
}
