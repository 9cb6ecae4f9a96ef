use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Classifier, Differentiable};
use crate::error::{Error, Result};
use crate::seed;

/// Fully connected layer, weights stored row-major as `n_out × n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.n_in..(o + 1) * self.n_in]
    }

    fn affine(&self, input: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| dot(self.row(o), input) + self.bias[o])
            .collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Feed-forward ReLU network with a single output logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpLayers")]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
}

#[derive(Deserialize)]
struct MlpLayers {
    layers: Vec<DenseLayer>,
}

impl TryFrom<MlpLayers> for MlpModel {
    type Error = Error;

    fn try_from(raw: MlpLayers) -> Result<Self> {
        MlpModel::from_layers(raw.layers)
    }
}

/// Per-layer parameter gradients, same shapes as the layers.
pub(crate) struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl MlpModel {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::Config("MLP needs at least one layer".into()));
        };
        if last.n_out != 1 {
            return Err(Error::Config("MLP output layer must have width 1".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.n_in == 0 || layer.n_out == 0 {
                return Err(Error::Config(format!("layer {i} has a zero dimension")));
            }
            if layer.weights.len() != layer.n_in * layer.n_out || layer.bias.len() != layer.n_out {
                return Err(Error::Config(format!("layer {i} parameter shapes are inconsistent")));
            }
            if i > 0 && layers[i - 1].n_out != layer.n_in {
                return Err(Error::Config(format!(
                    "layer {i} expects {} inputs but layer {} emits {}",
                    layer.n_in,
                    i - 1,
                    layers[i - 1].n_out
                )));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights in `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases.
    pub fn init(d: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if d == 0 || hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let mut rng = seed::rng(seed);
        let mut dims = vec![d];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let r = (6.0 / (n_in + n_out) as f64).sqrt();
                DenseLayer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| rng.random_range(-r..=r)).collect(),
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.n_out)
            .collect()
    }

    /// Activations of every layer, input first and the logit last.
    fn trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        Error::check_dim(self.n_features(), x.len())?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(acts.last().unwrap());
            if i < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        Ok(acts)
    }

    /// Backpropagates `d_logit` through a trace, optionally accumulating
    /// parameter gradients, and returns the input gradient.
    fn backward(
        &self,
        acts: &[Vec<f64>],
        d_logit: f64,
        mut grads: Option<&mut [LayerGrads]>,
    ) -> Vec<f64> {
        let mut delta = vec![d_logit];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            if let Some(g) = grads.as_deref_mut() {
                let g = &mut g[i];
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, input, &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in]);
                    }
                    g.bias[o] += d;
                }
            }
            let mut next = vec![0.0; layer.n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, layer.row(o), &mut next);
                }
            }
            if i > 0 {
                // ReLU derivative, taken as 0 at the kink.
                for (n, a) in next.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *n = 0.0;
                    }
                }
            }
            delta = next;
        }
        delta
    }

    /// Which hidden units are strictly positive at `x`, layer by layer.
    ///
    /// The network is affine on each region of constant pattern.
    pub fn activation_pattern(&self, x: &[f64]) -> Result<Vec<bool>> {
        let acts = self.trace(x)?;
        Ok(acts[1..acts.len() - 1]
            .iter()
            .flat_map(|a| a.iter().map(|v| *v > 0.0))
            .collect())
    }

    pub(crate) fn zero_grads(&self) -> Vec<LayerGrads> {
        self.layers
            .iter()
            .map(|l| LayerGrads {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect()
    }

    /// Adds the gradient of the per-sample logistic loss to `grads` and
    /// returns the loss.
    pub(crate) fn accumulate_loss_grad(
        &self,
        x: &[f64],
        y: u8,
        grads: &mut [LayerGrads],
    ) -> Result<f64> {
        let acts = self.trace(x)?;
        let z = acts.last().unwrap()[0];
        let p = sigmoid(z);
        self.backward(&acts, p - f64::from(y), Some(grads));
        Ok(logistic_loss(z, y))
    }
}

/// Binary cross-entropy evaluated from the logit.
pub(crate) fn logistic_loss(z: f64, y: u8) -> f64 {
    // log(1 + exp(-|z|)) + max(z, 0) - y z
    (-z.abs()).exp().ln_1p() + z.max(0.0) - f64::from(y) * z
}

impl Classifier for MlpModel {
    fn n_features(&self) -> usize {
        self.layers[0].n_in
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        Some(self)
    }
}

impl Differentiable for MlpModel {
    fn logit(&self, x: &[f64]) -> Result<f64> {
        Ok(self.trace(x)?.last().unwrap()[0])
    }

    fn logit_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let acts = self.trace(x)?;
        Ok(self.backward(&acts, 1.0, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_last_bias() {
        let mut m = MlpModel::init(3, &[4, 2], 1).unwrap();
        let n = m.layers().len();
        for l in m.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        m.layers_mut()[n - 1].bias[0] = 0.37;
        assert_eq!(m.logit(&[0.0; 3]).unwrap(), 0.37);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = MlpModel::init(7, &[50, 100, 100, 50], 3).unwrap();
        assert_eq!(a, MlpModel::init(7, &[50, 100, 100, 50], 3).unwrap());
        assert_ne!(a, MlpModel::init(7, &[50, 100, 100, 50], 4).unwrap());
        assert_eq!(a.hidden_widths(), vec![50, 100, 100, 50]);
        let r = (6.0f64 / 57.0).sqrt();
        assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= r));
    }

    #[test]
    fn rejects_incompatible_layers() {
        let bad = vec![
            DenseLayer { n_in: 2, n_out: 3, weights: vec![0.0; 6], bias: vec![0.0; 3] },
            DenseLayer { n_in: 4, n_out: 1, weights: vec![0.0; 4], bias: vec![0.0] },
        ];
        assert!(MlpModel::from_layers(bad).is_err());
        assert!(MlpModel::init(2, &[0], 1).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = MlpModel::init(5, &[16, 8], 11).unwrap();
        let x = [0.3, -1.2, 0.8, 0.05, -0.4];
        let g = m.logit_gradient(&x).unwrap();
        let h = 1e-6;
        for j in 0..5 {
            let mut up = x;
            let mut dn = x;
            up[j] += h;
            dn[j] -= h;
            let fd = (m.logit(&up).unwrap() - m.logit(&dn).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-7, "{j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn loss_is_stable() {
        assert!((logistic_loss(0.0, 1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(logistic_loss(-800.0, 1).is_finite());
        assert!(logistic_loss(800.0, 1) < 1e-300);
    }

    #[test]
    fn serde_round_trip_validates() {
        let m = MlpModel::init(2, &[3], 5).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MlpModel>(&s).unwrap(), m);
        let broken = s.replacen("\"n_in\":3", "\"n_in\":4", 1);
        assert!(serde_json::from_str::<MlpModel>(&broken).is_err());
    }
}
