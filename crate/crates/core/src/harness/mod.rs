//! End-to-end experiments: train, explain a test set with every configured
//! method, score every method pair, and aggregate into mean ± stderr
//! matrices.

mod config;
mod heatmap;
mod report;
mod run;

pub use config::{
    default_k_grid, DatasetConfig, ExperimentConfig, ExplainerSettings, IntegratedGradientsSettings,
    KernelShapSettings, LimeSettings, ModelConfig, SmoothGradSettings, SplitConfig, SEED_ENV,
};
pub use heatmap::{heatmap_file_name, render_svg, write_heatmaps};
pub use report::{
    aggregate, dichotomy_report, read_matrices_json, report_rows, write_dichotomy_csv, write_json,
    write_report_csv, DichotomyRow, PairwiseMatrix, ReportRow, Scope,
};
pub use run::{
    config_hash, evaluate_attributions, explain_instances, prepare, run_experiment, sweep_k,
    write_records_csv, Evaluation, InstanceRecord, MetricPlan, PairValue, Prepared, RunManifest,
    RunOutput, Timings,
};

/// Mean rank correlation above which the dichotomy report flags a pair.
pub const DICHOTOMY_THRESHOLD: f64 = 0.5;
