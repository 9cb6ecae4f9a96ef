//! Declarative experiment description, loaded from one JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::{
    ExplainerSuite, KernelShapConfig, LimeConfig, Method, ShapMode, SmoothGradConfig,
};
use crate::metrics::{FeatureSubset, MetricId, RankingBasis};
use crate::models::{GradientTarget, ModelKind, TrainConfig};

/// Environment variable that replaces the master seed.
pub const SEED_ENV: &str = "DISAGREE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// CSV with a header row; relative paths resolve against the config file.
    pub path: PathBuf,
    pub schema: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Hidden layer widths; must be empty for `logistic`.
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeSettings {
    pub n_samples: Option<usize>,
    pub kernel_width: Option<f64>,
    pub ridge_lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelShapSettings {
    pub mode: Option<ShapMode>,
    pub n_samples: Option<usize>,
    /// Standardized coordinates; defaults to the zero vector.
    pub baseline: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratedGradientsSettings {
    pub steps: Option<usize>,
    pub baseline: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothGradSettings {
    pub n_samples: Option<usize>,
    pub sigma: Option<f64>,
}

/// Per-method overrides; anything left out takes the built-in default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainerSettings {
    pub gradient_target: GradientTarget,
    pub lime: LimeSettings,
    pub kernel_shap: KernelShapSettings,
    pub integrated_gradients: IntegratedGradientsSettings,
    pub smoothgrad: SmoothGradSettings,
}

impl ExplainerSettings {
    /// Fills in defaults for `d` features. `ranges` are the standardized
    /// training ranges (SmoothGrad noise scale).
    pub fn resolve(&self, d: usize, ranges: &[f64]) -> Result<ExplainerSuite> {
        Error::check_dim(d, ranges.len())?;
        let mut suite = ExplainerSuite::defaults(d, ranges);
        suite.target = self.gradient_target;

        let l = &self.lime;
        suite.lime = LimeConfig {
            n_samples: l.n_samples.unwrap_or(suite.lime.n_samples),
            kernel_width: l.kernel_width.unwrap_or(suite.lime.kernel_width),
            ridge_lambda: l.ridge_lambda.unwrap_or(suite.lime.ridge_lambda),
            seed: 0,
        };
        if suite.lime.n_samples < d + 2 {
            return Err(Error::Config(format!("lime.n_samples must be at least d + 2 = {}", d + 2)));
        }

        let k = &self.kernel_shap;
        if let Some(n) = k.n_samples {
            suite.kernel_shap = KernelShapConfig {
                n_samples: n,
                ..KernelShapConfig::for_features(d)
            };
            let covers = d < 63 && (1u64 << d) - 2 <= n as u64;
            suite.kernel_shap.mode = if covers { ShapMode::Exact } else { ShapMode::Sampled };
        }
        if let Some(mode) = k.mode {
            suite.kernel_shap.mode = mode;
        }
        if let Some(b) = &k.baseline {
            Error::check_dim(d, b.len())?;
            suite.kernel_shap.baseline = b.clone();
        }
        if suite.kernel_shap.n_samples == 0 {
            return Err(Error::Config("kernel_shap.n_samples must be positive".into()));
        }

        let ig = &self.integrated_gradients;
        if let Some(steps) = ig.steps {
            if steps == 0 {
                return Err(Error::Config("integrated_gradients.steps must be positive".into()));
            }
            suite.integrated_gradients.steps = steps;
        }
        if let Some(b) = &ig.baseline {
            Error::check_dim(d, b.len())?;
            suite.integrated_gradients.baseline = b.clone();
        }
        suite.integrated_gradients.target = self.gradient_target;

        let sg = &self.smoothgrad;
        suite.smoothgrad = SmoothGradConfig {
            n_samples: sg.n_samples.unwrap_or(suite.smoothgrad.n_samples),
            sigma: sg.sigma.unwrap_or(suite.smoothgrad.sigma),
            seed: 0,
            target: self.gradient_target,
        };
        if suite.smoothgrad.n_samples == 0 {
            return Err(Error::Config("smoothgrad.n_samples must be positive".into()));
        }
        if !(suite.smoothgrad.sigma >= 0.0 && suite.smoothgrad.sigma.is_finite()) {
            return Err(Error::Config("smoothgrad.sigma must be >= 0".into()));
        }
        Ok(suite)
    }
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn all_metrics() -> Vec<MetricId> {
    MetricId::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    pub model: ModelConfig,
    #[serde(default = "all_methods")]
    pub explainers: Vec<Method>,
    #[serde(default)]
    pub explainer_settings: ExplainerSettings,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<MetricId>,
    /// Top-k sizes; defaults to 25/50/75/100 % of d, rounded up.
    #[serde(default)]
    pub k_values: Option<Vec<usize>>,
    /// Feature subset for the rank-correlation metrics; defaults to all.
    #[serde(default)]
    pub features: Option<Vec<usize>>,
    #[serde(default)]
    pub ranking_basis: RankingBasis,
    /// Explain only the first `max_instances` test rows.
    #[serde(default)]
    pub max_instances: Option<usize>,
    /// Master seed for per-instance explainer seeds.
    #[serde(default)]
    pub seed: u64,
}

/// `ceil(q·d)` for q in 25, 50, 75, 100 %, deduplicated.
pub fn default_k_grid(d: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = [1, 2, 3, 4].iter().map(|q| (q * d).div_ceil(4).max(1)).collect();
    ks.dedup();
    ks
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in [&mut cfg.dataset.path, &mut cfg.dataset.schema] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Replaces the master seed with `DISAGREE_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    /// Checks everything that does not need the data itself.
    pub fn validate(&self) -> Result<()> {
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("split.test_fraction must be in (0, 1), got {f}")));
        }
        match self.model.kind {
            ModelKind::Logistic if !self.model.hidden.is_empty() => {
                return Err(Error::Config("model.hidden must be empty for a logistic model".into()))
            }
            ModelKind::Mlp if self.model.hidden.iter().any(|&h| h == 0) => {
                return Err(Error::Config("model.hidden widths must be positive".into()))
            }
            _ => {}
        }
        self.model.train.validate()?;
        if self.explainers.len() < 2 {
            return Err(Error::Config("explainers must list at least 2 methods".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("metrics must not be empty".into()));
        }
        if self.max_instances == Some(0) {
            return Err(Error::Config("max_instances must be positive".into()));
        }
        Ok(())
    }

    /// Validated top-k sizes for `d` features.
    pub fn k_values_for(&self, d: usize) -> Result<Vec<usize>> {
        let ks = self.k_values.clone().unwrap_or_else(|| default_k_grid(d));
        if ks.is_empty() && self.metrics.iter().any(|m| m.is_top_k()) {
            return Err(Error::Config("k_values must not be empty".into()));
        }
        if let Some(k) = ks.iter().find(|&&k| k == 0 || k > d) {
            return Err(Error::Config(format!("k = {k} outside 1..={d}")));
        }
        Ok(ks)
    }

    pub fn feature_subset(&self, d: usize) -> Result<FeatureSubset> {
        match &self.features {
            None => FeatureSubset::all(d),
            Some(f) => FeatureSubset::new(f.clone(), d).map_err(|e| Error::Config(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset": {"path": "data.csv", "schema": "schema.json"},
        "model": {"kind": "mlp", "hidden": [4]}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(MINIMAL, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.dataset.path, PathBuf::from("/cfg/data.csv"));
        assert_eq!(cfg.explainers, Method::ALL.to_vec());
        assert_eq!(cfg.metrics, MetricId::ALL.to_vec());
        assert_eq!(cfg.split, SplitConfig::default());
        assert_eq!(cfg.k_values_for(7).unwrap(), vec![2, 4, 6, 7]);
        assert!(cfg.feature_subset(7).unwrap().is_all(7));
        cfg.validate().unwrap();
    }

    #[test]
    fn default_grid_rounds_up() {
        assert_eq!(default_k_grid(7), vec![2, 4, 6, 7]);
        assert_eq!(default_k_grid(4), vec![1, 2, 3, 4]);
        assert_eq!(default_k_grid(2), vec![1, 2]);
        assert_eq!(default_k_grid(1), vec![1]);
    }

    #[test]
    fn missing_dataset_names_the_field() {
        let err = ExperimentConfig::from_json(r#"{"model": {"kind": "logistic"}}"#, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(err.contains("dataset"), "{err}");
        let err = ExperimentConfig::from_json(
            r#"{"dataset": {"schema": "s.json"}, "model": {"kind": "logistic"}}"#,
            Path::new("."),
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("path"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL, Path::new(".")).unwrap();
        cfg.explainers = vec![Method::Lime];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_json(MINIMAL, Path::new(".")).unwrap();
        cfg.k_values = Some(vec![2, 8]);
        assert!(cfg.k_values_for(7).is_err());
        cfg.features = Some(vec![7]);
        assert!(cfg.feature_subset(7).is_err());
        let err = ExperimentConfig::from_json(r#"{"dataset": {"path": "a", "schema": "b"}, "model": {"kind": "mlp"}, "explainers": ["deeplift"]}"#, Path::new("."));
        assert!(err.is_err());
    }

    #[test]
    fn settings_resolve() {
        let s = ExplainerSettings::default().resolve(7, &[2.0; 7]).unwrap();
        assert_eq!(s.kernel_shap.mode, ShapMode::Exact);
        assert_eq!(s.lime.n_samples, 3000);
        assert!((s.smoothgrad.sigma - 0.2).abs() < 1e-15);
        let custom: ExplainerSettings = serde_json::from_str(
            r#"{"kernel_shap": {"n_samples": 50}, "smoothgrad": {"sigma": 0.0}, "gradient_target": "probability"}"#,
        )
        .unwrap();
        let s = custom.resolve(7, &[2.0; 7]).unwrap();
        assert_eq!(s.kernel_shap.mode, ShapMode::Sampled);
        assert_eq!(s.smoothgrad.sigma, 0.0);
        assert_eq!(s.target, GradientTarget::Probability);
        let bad: ExplainerSettings = serde_json::from_str(r#"{"lime": {"n_samples": 3}}"#).unwrap();
        assert!(bad.resolve(7, &[2.0; 7]).is_err());
    }
}
