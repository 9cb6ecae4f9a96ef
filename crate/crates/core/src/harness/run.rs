//! Train, explain, compare, aggregate.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::report::{aggregate, PairwiseMatrix, Scope};
use crate::data::{self, Dataset, FeatureSchema, Standardizer};
use crate::error::{Error, Result};
use crate::explainers::{Attribution, ExplainerSuite, Method};
use crate::metrics::{self, FeatureSubset, MetricId, MetricScope, RankingBasis};
use crate::models::{self, Classifier, Model, ModelFile, ModelKind};
use crate::seed;

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the config's canonical JSON serialization.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(cfg)?.as_bytes()))
}

/// A trained model with the splits it was trained and evaluated on.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: Model,
    pub model_file: ModelFile,
    pub standardizer: Standardizer,
    /// Per-feature `max - min` of the standardized training rows.
    pub ranges: Vec<f64>,
    pub train: Dataset,
    pub test: Dataset,
    /// Test rows before standardization, in split order.
    pub test_raw: Dataset,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub dataset_sha256: String,
}

/// Loads the dataset, splits, standardizes on the training part and trains.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let schema = FeatureSchema::from_json_file(&cfg.dataset.schema)?;
    let path = &cfg.dataset.path;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let full = data::load_csv(path, &schema)?;
    let (train_raw, test_raw) = data::train_test_split(&full, cfg.split.test_fraction, cfg.split.seed)?;
    let standardizer = data::fit_standardizer(&train_raw);
    let train = standardizer.transform_dataset(&train_raw)?;
    let test = standardizer.transform_dataset(&test_raw)?;
    let ranges = train.feature_ranges();
    let tc = &cfg.model.train;
    let model = match cfg.model.kind {
        ModelKind::Logistic => Model::Logistic(models::train_logistic(&train, tc)?),
        ModelKind::Mlp => Model::Mlp(models::train_mlp(&train, &cfg.model.hidden, tc)?),
    };
    let model_file = ModelFile::new(&model, schema, standardizer.clone(), ranges.clone(), tc.clone());
    Ok(Prepared {
        train_accuracy: models::accuracy(&model, &train)?,
        test_accuracy: models::accuracy(&model, &test)?,
        model,
        model_file,
        standardizer,
        ranges,
        train,
        test,
        test_raw,
        dataset_sha256: sha256_hex(&bytes),
    })
}

/// Attributions for every `(instance, method)`, in input order.
///
/// Each call is seeded with `instance_seed(master, index, method id)`, so the
/// result does not depend on how instances are scheduled across threads.
pub fn explain_instances(
    model: &dyn Classifier,
    suite: &ExplainerSuite,
    methods: &[Method],
    rows: &[(usize, &[f64])],
    master_seed: u64,
) -> Result<Vec<Vec<Attribution>>> {
    rows.par_iter()
        .map(|&(index, x)| {
            methods
                .iter()
                .map(|&m| suite.explain(m, model, x, index, seed::instance_seed(master_seed, index, m.id())))
                .collect()
        })
        .collect()
}

/// Which metrics to compute and over what.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPlan {
    pub metrics: Vec<MetricId>,
    pub k_values: Vec<usize>,
    pub subset: FeatureSubset,
    pub basis: RankingBasis,
}

impl MetricPlan {
    /// `(metric, scope)` in plan order.
    pub fn cells(&self, d: usize) -> Vec<(MetricId, Scope)> {
        let mut out = Vec::new();
        for &m in &self.metrics {
            if m.is_top_k() {
                out.extend(self.k_values.iter().map(|&k| (m, Scope::TopK(k))));
            } else {
                out.push((m, Scope::Features(self.subset.descriptor(d))));
            }
        }
        out
    }
}

/// One metric value for methods `a < b` (positions in the method list).
#[derive(Debug, Clone, PartialEq)]
pub struct PairValue {
    pub a: usize,
    pub b: usize,
    pub metric: MetricId,
    pub k: Scope,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub instance_index: usize,
    /// One vector per method, in method-list order.
    pub attributions: Vec<Vec<f64>>,
    pub values: Vec<PairValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub methods: Vec<String>,
    pub matrices: Vec<PairwiseMatrix>,
    pub records: Vec<InstanceRecord>,
    /// Rank correlations where one side was all ties (reported as 0).
    pub degenerate_rank_correlations: usize,
}

fn metric_value(metric: MetricId, k: &Scope, plan: &MetricPlan, a: &[f64], b: &[f64]) -> Result<(f64, bool)> {
    match (metric, k) {
        (MetricId::RankCorrelation, _) => {
            let c = metrics::rank_correlation_by(a, b, &plan.subset, plan.basis)?;
            Ok((c.value, c.degenerate))
        }
        (_, Scope::TopK(k)) => Ok((metrics::evaluate(metric, a, b, MetricScope::TopK(*k))?, false)),
        (_, Scope::Features(_)) => Ok((
            metrics::evaluate(metric, a, b, MetricScope::Subset(&plan.subset, plan.basis))?,
            false,
        )),
    }
}

/// Per-instance pairwise metrics and their mean ± stderr matrices.
///
/// `instances` holds `(instance_index, per-method attribution values)`.
/// Diagonal cells compare each method with itself.
pub fn evaluate_attributions(
    methods: &[String],
    instances: &[(usize, Vec<Vec<f64>>)],
    plan: &MetricPlan,
) -> Result<Evaluation> {
    let m = methods.len();
    if m == 0 || instances.is_empty() {
        return Err(Error::Data("nothing to compare: need at least one method and one instance".into()));
    }
    let d = instances[0].1.first().map_or(0, Vec::len);
    for (idx, vals) in instances {
        Error::check_dim(m, vals.len())?;
        for v in vals {
            if v.len() != d {
                return Err(Error::Data(format!(
                    "instance {idx}: attribution length {} differs from {d}",
                    v.len()
                )));
            }
        }
    }
    let cells = plan.cells(d);
    for (metric, k) in &cells {
        if let Scope::TopK(k) = k {
            if *k == 0 || *k > d {
                return Err(Error::Config(format!("{metric}: k = {k} outside 1..={d}")));
            }
        }
    }

    // values[cell][i][j][instance] for i <= j
    let per_instance: Vec<(Vec<PairValue>, Vec<f64>, usize)> = instances
        .par_iter()
        .map(|(_, vals)| -> Result<_> {
            let mut pairs = Vec::new();
            let mut flat = Vec::with_capacity(cells.len() * m * (m + 1) / 2);
            let mut degenerate = 0;
            for (metric, k) in &cells {
                for i in 0..m {
                    for j in i..m {
                        let (v, deg) = metric_value(*metric, k, plan, &vals[i], &vals[j])?;
                        degenerate += (deg && i < j) as usize;
                        flat.push(v);
                        if i < j {
                            pairs.push(PairValue { a: i, b: j, metric: *metric, k: k.clone(), value: v });
                        }
                    }
                }
            }
            Ok((pairs, flat, degenerate))
        })
        .collect::<Result<_>>()?;

    let mut matrices = Vec::with_capacity(cells.len());
    let per_cell = m * (m + 1) / 2;
    let mut column = Vec::with_capacity(instances.len());
    for (c, (metric, k)) in cells.iter().enumerate() {
        let mut mean = vec![vec![0.0; m]; m];
        let mut stderr = vec![vec![0.0; m]; m];
        let mut slot = 0;
        for i in 0..m {
            for j in i..m {
                column.clear();
                column.extend(per_instance.iter().map(|(_, flat, _)| flat[c * per_cell + slot]));
                let (mu, se) = aggregate(&column)?;
                mean[i][j] = mu;
                mean[j][i] = mu;
                stderr[i][j] = se;
                stderr[j][i] = se;
                slot += 1;
            }
        }
        matrices.push(PairwiseMatrix {
            metric: *metric,
            k: k.clone(),
            methods: methods.to_vec(),
            mean,
            stderr,
            n: instances.len(),
        });
    }

    let degenerate_rank_correlations = per_instance.iter().map(|p| p.2).sum();
    let records = instances
        .iter()
        .zip(per_instance)
        .map(|((idx, vals), (values, _, _))| InstanceRecord {
            instance_index: *idx,
            attributions: vals.clone(),
            values,
        })
        .collect();
    Ok(Evaluation {
        methods: methods.to_vec(),
        matrices,
        records,
        degenerate_rank_correlations,
    })
}

pub fn write_records_csv(path: &Path, eval: &Evaluation) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["instance_index", "method_a", "method_b", "metric", "k", "value"])?;
    for r in &eval.records {
        for v in &r.values {
            w.write_record([
                r.instance_index.to_string(),
                eval.methods[v.a].clone(),
                eval.methods[v.b].clone(),
                v.metric.as_str().to_owned(),
                v.k.to_string(),
                v.value.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub prepare_seconds: f64,
    pub explain_seconds: f64,
    pub metrics_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub config_hash: String,
    pub dataset_sha256: String,
    pub seed: u64,
    pub model_kind: ModelKind,
    pub hidden: Vec<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_instances: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub methods: Vec<Method>,
    pub metrics: Vec<MetricId>,
    pub k_values: Vec<usize>,
    pub features: String,
    pub ranking_basis: RankingBasis,
    pub explainers: ExplainerSuite,
    pub degenerate_rank_correlations: usize,
    pub threads: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub attributions: Vec<Vec<Attribution>>,
    pub evaluation: Evaluation,
    pub manifest: RunManifest,
}

/// The full pipeline for one config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let t0 = Instant::now();
    let prepared = prepare(cfg)?;
    let d = prepared.train.d();
    let plan = MetricPlan {
        metrics: cfg.metrics.clone(),
        k_values: cfg.k_values_for(d)?,
        subset: cfg.feature_subset(d)?,
        basis: cfg.ranking_basis,
    };
    let suite = cfg.explainer_settings.resolve(d, &prepared.ranges)?;
    let prepare_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let n = cfg.max_instances.map_or(prepared.test.n(), |cap| cap.min(prepared.test.n()));
    let rows: Vec<(usize, &[f64])> = prepared.test.x()[..n]
        .iter()
        .enumerate()
        .map(|(i, x)| (i, x.as_slice()))
        .collect();
    let attributions = explain_instances(&prepared.model, &suite, &cfg.explainers, &rows, cfg.seed)?;
    let explain_seconds = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let methods: Vec<String> = cfg.explainers.iter().map(|m| m.id().to_owned()).collect();
    let instances: Vec<(usize, Vec<Vec<f64>>)> = attributions
        .iter()
        .map(|attrs| (attrs[0].instance_index, attrs.iter().map(|a| a.values.clone()).collect()))
        .collect();
    let evaluation = evaluate_attributions(&methods, &instances, &plan)?;
    let metrics_seconds = t2.elapsed().as_secs_f64();

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(cfg)?,
        dataset_sha256: prepared.dataset_sha256.clone(),
        seed: cfg.seed,
        model_kind: cfg.model.kind,
        hidden: cfg.model.hidden.clone(),
        n_train: prepared.train.n(),
        n_test: prepared.test.n(),
        n_instances: n,
        train_accuracy: prepared.train_accuracy,
        test_accuracy: prepared.test_accuracy,
        methods: cfg.explainers.clone(),
        metrics: cfg.metrics.clone(),
        k_values: plan.k_values.clone(),
        features: plan.subset.descriptor(d),
        ranking_basis: plan.basis,
        explainers: suite,
        degenerate_rank_correlations: evaluation.degenerate_rank_correlations,
        threads: rayon::current_num_threads(),
        timings: Timings {
            prepare_seconds,
            explain_seconds,
            metrics_seconds,
        },
    };
    Ok(RunOutput {
        prepared,
        attributions,
        evaluation,
        manifest,
    })
}

/// Top-k matrices for every `k`, from one set of attributions.
pub fn sweep_k(cfg: &ExperimentConfig, k_values: &[usize]) -> Result<Vec<PairwiseMatrix>> {
    let mut c = cfg.clone();
    c.k_values = Some(k_values.to_vec());
    c.metrics.retain(|m| m.is_top_k());
    if c.metrics.is_empty() {
        return Err(Error::Config("sweep_k needs at least one top-k metric".into()));
    }
    Ok(run_experiment(&c)?.evaluation.matrices)
}
