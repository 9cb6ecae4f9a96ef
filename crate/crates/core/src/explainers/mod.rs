//! Local feature-attribution methods behind one interface.
//!
//! Every explanation targets the model's predicted class for the instance.
//! Gradient methods need a [`Differentiable`] model; LIME and KernelSHAP only
//! query predicted probabilities, so any [`Classifier`] works.

mod convergence;
mod gradient;
mod io;
mod lime;
mod shapley;

pub use convergence::{convergence_check, ConvergenceReport};
pub use gradient::{
    grad_times_input, gradient, integrated_gradients, smoothgrad, IntegratedGradientsConfig,
    SmoothGradConfig,
};
pub use io::{read_attributions_csv, write_attributions_csv, AttributionRecord};
pub use lime::{lime, LimeConfig};
pub use shapley::{exact_shapley, kernel_shap, KernelShapConfig, ShapMode, MAX_EXACT_FEATURES};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Classifier, Differentiable, GradientTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lime,
    KernelShap,
    Gradient,
    GradTimesInput,
    IntegratedGradients,
    #[serde(rename = "smoothgrad")]
    SmoothGrad,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Lime,
        Method::KernelShap,
        Method::Gradient,
        Method::GradTimesInput,
        Method::IntegratedGradients,
        Method::SmoothGrad,
    ];

    /// Stable id used in configs, file names and reports.
    pub fn id(self) -> &'static str {
        match self {
            Method::Lime => "lime",
            Method::KernelShap => "kernel_shap",
            Method::Gradient => "gradient",
            Method::GradTimesInput => "grad_times_input",
            Method::IntegratedGradients => "integrated_gradients",
            Method::SmoothGrad => "smoothgrad",
        }
    }

    /// Short human label for plots.
    pub fn label(self) -> &'static str {
        match self {
            Method::Lime => "LIME",
            Method::KernelShap => "KernelSHAP",
            Method::Gradient => "Grad",
            Method::GradTimesInput => "Grad*Input",
            Method::IntegratedGradients => "IntGrad",
            Method::SmoothGrad => "SmoothGrad",
        }
    }

    pub fn needs_gradients(self) -> bool {
        !matches!(self, Method::Lime | Method::KernelShap)
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Lime | Method::KernelShap | Method::SmoothGrad)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.id() == s).ok_or_else(|| {
            let valid: Vec<_> = Method::ALL.iter().map(|m| m.id()).collect();
            Error::Config(format!("unknown method `{s}`; valid: {}", valid.join(", ")))
        })
    }
}

/// Signed per-feature importances for one instance, method and class.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub values: Vec<f64>,
    pub method: Method,
    pub instance_index: usize,
    pub target_class: u8,
}

impl Attribution {
    pub fn new(values: Vec<f64>, method: Method, instance_index: usize, target_class: u8) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "{method} attribution for instance {instance_index} has a non-finite value at feature {i}"
            )));
        }
        Ok(Self {
            values,
            method,
            instance_index,
            target_class,
        })
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }
}

fn differentiable<'a>(model: &'a dyn Classifier, method: Method) -> Result<&'a dyn Differentiable> {
    model.as_differentiable().ok_or(Error::NotDifferentiable {
        method: method.id().to_owned(),
    })
}

/// Resolved settings for all six methods.
///
/// Seeds inside the per-method configs are ignored by [`ExplainerSuite::explain`],
/// which takes the seed for each call explicitly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplainerSuite {
    pub target: GradientTarget,
    pub lime: LimeConfig,
    pub kernel_shap: KernelShapConfig,
    pub integrated_gradients: IntegratedGradientsConfig,
    pub smoothgrad: SmoothGradConfig,
}

impl ExplainerSuite {
    /// Defaults for `d` standardized features. `ranges` are per-feature
    /// `max - min` of the standardized training rows and set SmoothGrad's
    /// noise scale.
    pub fn defaults(d: usize, ranges: &[f64]) -> Self {
        Self {
            target: GradientTarget::Logit,
            lime: LimeConfig::for_features(d),
            kernel_shap: KernelShapConfig::for_features(d),
            integrated_gradients: IntegratedGradientsConfig::for_features(d),
            smoothgrad: SmoothGradConfig::from_ranges(ranges),
        }
    }

    /// Explains the predicted class of `x`.
    pub fn explain(
        &self,
        method: Method,
        model: &dyn Classifier,
        x: &[f64],
        instance_index: usize,
        seed: u64,
    ) -> Result<Attribution> {
        Error::check_dim(model.n_features(), x.len())?;
        let class = model.predict_label(x)?;
        let values = match method {
            Method::Gradient => gradient(differentiable(model, method)?, x, class, self.target)?,
            Method::GradTimesInput => {
                grad_times_input(differentiable(model, method)?, x, class, self.target)?
            }
            Method::IntegratedGradients => {
                let cfg = IntegratedGradientsConfig {
                    target: self.target,
                    ..self.integrated_gradients.clone()
                };
                integrated_gradients(differentiable(model, method)?, x, class, &cfg)?
            }
            Method::SmoothGrad => {
                let cfg = SmoothGradConfig {
                    seed,
                    target: self.target,
                    ..self.smoothgrad.clone()
                };
                smoothgrad(differentiable(model, method)?, x, class, &cfg)?
            }
            Method::Lime => {
                let cfg = LimeConfig {
                    seed,
                    ..self.lime.clone()
                };
                lime(|z| model.class_proba(z, class), x, &cfg)?
            }
            Method::KernelShap => {
                let cfg = KernelShapConfig {
                    seed,
                    ..self.kernel_shap.clone()
                };
                kernel_shap(|z| model.class_proba(z, class), x, &cfg)?
            }
        };
        Attribution::new(values, method, instance_index, class)
    }
}

/// Gradient of the predicted-class target.
pub fn explain_gradient(model: &dyn Classifier, x: &[f64], target: GradientTarget) -> Result<Attribution> {
    let m = differentiable(model, Method::Gradient)?;
    let class = model.predict_label(x)?;
    Attribution::new(gradient(m, x, class, target)?, Method::Gradient, 0, class)
}

pub fn explain_grad_times_input(
    model: &dyn Classifier,
    x: &[f64],
    target: GradientTarget,
) -> Result<Attribution> {
    let m = differentiable(model, Method::GradTimesInput)?;
    let class = model.predict_label(x)?;
    Attribution::new(grad_times_input(m, x, class, target)?, Method::GradTimesInput, 0, class)
}

pub fn explain_integrated_gradients(
    model: &dyn Classifier,
    x: &[f64],
    cfg: &IntegratedGradientsConfig,
) -> Result<Attribution> {
    let m = differentiable(model, Method::IntegratedGradients)?;
    let class = model.predict_label(x)?;
    Attribution::new(
        integrated_gradients(m, x, class, cfg)?,
        Method::IntegratedGradients,
        0,
        class,
    )
}

pub fn explain_smoothgrad(model: &dyn Classifier, x: &[f64], cfg: &SmoothGradConfig) -> Result<Attribution> {
    let m = differentiable(model, Method::SmoothGrad)?;
    let class = model.predict_label(x)?;
    Attribution::new(smoothgrad(m, x, class, cfg)?, Method::SmoothGrad, 0, class)
}

pub fn explain_lime(model: &dyn Classifier, x: &[f64], cfg: &LimeConfig) -> Result<Attribution> {
    let class = model.predict_label(x)?;
    let values = lime(|z| model.class_proba(z, class), x, cfg)?;
    Attribution::new(values, Method::Lime, 0, class)
}

pub fn explain_kernelshap(model: &dyn Classifier, x: &[f64], cfg: &KernelShapConfig) -> Result<Attribution> {
    let class = model.predict_label(x)?;
    let values = kernel_shap(|z| model.class_proba(z, class), x, cfg)?;
    Attribution::new(values, Method::KernelShap, 0, class)
}
