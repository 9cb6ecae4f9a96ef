//! The `disagree` command line.
//!
//! Every failure ends in one stderr line `error: <category>: <message>` and
//! a nonzero exit code (2 for usage errors, 1 otherwise).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data;
use crate::error::{Error, Result};
use crate::explainers::{read_attributions_csv, write_attributions_csv, Attribution, Method};
use crate::harness::{
    self, default_k_grid, ExperimentConfig, ExplainerSettings, MetricPlan, SEED_ENV,
};
use crate::metrics::{FeatureSubset, MetricId, RankingBasis};
use crate::models::ModelFile;

#[derive(Debug, Parser)]
#[command(name = "disagree", version, about = "Measure disagreement between feature-attribution methods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the configured model; writes model.json, test.csv, train_manifest.json.
    Train(TrainArgs),
    /// Explain dataset rows; writes one attribution CSV per method.
    Explain(ExplainArgs),
    /// Compare attribution CSVs; writes report.csv and matrices.json.
    Compare(CompareArgs),
    /// Render matrices.json as one SVG heatmap per matrix.
    Heatmap(HeatmapArgs),
    /// Train, explain the test split, compare, and render, in one go.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Training seed (replaces model.train.seed).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV in the model's schema (raw, unstandardized values).
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated method ids; default all six.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Experiment config whose explainer settings and seed to use.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Explain only the first N rows.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Attribution CSVs; each file stem names its method.
    #[arg(required = true, num_args = 2..)]
    pub files: Vec<PathBuf>,
    /// Comma-separated metric ids; default all six.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Comma-separated top-k sizes; default 25/50/75/100 % of d.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// `all` or comma-separated feature indices for the rank-correlation metrics.
    #[arg(long, default_value = "all")]
    pub features: String,
    /// `magnitude` or `signed`.
    #[arg(long, default_value = "magnitude")]
    pub basis: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub matrices: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Explain only the first N test rows.
    #[arg(long)]
    pub limit: Option<usize>,
}

fn parse_methods(ids: &[String]) -> Result<Vec<Method>> {
    ids.iter().map(|s| s.trim().parse()).collect()
}

fn parse_metrics(ids: &[String]) -> Result<Vec<MetricId>> {
    ids.iter().map(|s| s.trim().parse()).collect()
}

fn parse_features(spec: &str, d: usize) -> Result<FeatureSubset> {
    if spec.trim() == "all" {
        return FeatureSubset::all(d);
    }
    let idx = spec
        .split([',', ';'])
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("--features: `{s}` is not a feature index")))
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureSubset::new(idx, d).map_err(|e| Error::Config(e.to_string()))
}

fn parse_basis(s: &str) -> Result<RankingBasis> {
    match s.trim() {
        "magnitude" => Ok(RankingBasis::Magnitude),
        "signed" => Ok(RankingBasis::Signed),
        other => Err(Error::Config(format!("--basis `{other}`; valid: magnitude, signed"))),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Flag > `DISAGREE_SEED` > config > 0.
fn master_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")));
    }
    Ok(config.unwrap_or(0))
}

fn unique(methods: &[Method]) -> Vec<Method> {
    let mut seen = BTreeSet::new();
    methods.iter().copied().filter(|m| seen.insert(*m)).collect()
}

fn write_attribution_files(dir: &Path, methods: &[Method], per_instance: &[Vec<Attribution>]) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut paths = Vec::new();
    for m in unique(methods) {
        let pos = methods.iter().position(|x| *x == m).unwrap();
        let rows: Vec<Attribution> = per_instance.iter().map(|a| a[pos].clone()).collect();
        let path = dir.join(format!("{}.csv", m.id()));
        write_attributions_csv(&path, &rows)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.model.train.seed = s;
    }
    let start = std::time::Instant::now();
    let prepared = harness::prepare(&cfg)?;
    create_dir(&args.out)?;
    prepared.model_file.save(args.out.join("model.json"))?;
    data::write_csv(args.out.join("test.csv"), &prepared.test_raw)?;
    let manifest = serde_json::json!({
        "config_hash": harness::config_hash(&cfg)?,
        "dataset_sha256": prepared.dataset_sha256,
        "model_kind": cfg.model.kind,
        "hidden": cfg.model.hidden,
        "train_config": cfg.model.train,
        "n_train": prepared.train.n(),
        "n_test": prepared.test.n(),
        "train_accuracy": prepared.train_accuracy,
        "test_accuracy": prepared.test_accuracy,
        "train_seconds": start.elapsed().as_secs_f64(),
    });
    harness::write_json(&args.out.join("train_manifest.json"), &manifest)?;
    println!("train accuracy: {:.4}", prepared.train_accuracy);
    println!("test accuracy: {:.4}", prepared.test_accuracy);
    println!("wrote {}", args.out.join("model.json").display());
    Ok(())
}

pub fn cmd_explain(args: &ExplainArgs) -> Result<()> {
    let methods = if args.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        parse_methods(&args.methods)?
    };
    let file = ModelFile::load(&args.model)?;
    let model = file.model()?;
    let (settings, cfg_seed) = match &args.config {
        Some(p) => {
            let cfg = ExperimentConfig::load(p)?;
            (cfg.explainer_settings, Some(cfg.seed))
        }
        None => (ExplainerSettings::default(), None),
    };
    let seed = master_seed(args.seed, cfg_seed)?;
    let d = file.schema.d();
    let suite = settings.resolve(d, &file.standardized_ranges)?;
    let raw = data::load_csv(&args.data, &file.schema)?;
    let ds = file.standardizer.transform_dataset(&raw)?;
    let n = args.limit.map_or(ds.n(), |l| l.min(ds.n()));
    let rows: Vec<(usize, &[f64])> = ds.x()[..n].iter().enumerate().map(|(i, x)| (i, x.as_slice())).collect();
    let attrs = harness::explain_instances(&model, &suite, &methods, &rows, seed)?;
    let paths = write_attribution_files(&args.out, &methods, &attrs)?;
    println!("explained {n} instances with {} methods", unique(&methods).len());
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let mut labels = Vec::new();
    let mut tables = Vec::new();
    for path in &args.files {
        let label = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Config(format!("{}: cannot derive a method name", path.display())))?
            .to_owned();
        // The method tag is only carried along; values are what is compared.
        tables.push(read_attributions_csv(path, Method::Lime)?);
        labels.push(label);
    }
    let first = &tables[0];
    let d = first.first().map_or(0, Attribution::d);
    for (t, path) in tables.iter().zip(&args.files).skip(1) {
        let same = t.len() == first.len()
            && t.iter().zip(first).all(|(a, b)| a.instance_index == b.instance_index);
        if !same {
            return Err(Error::Data(format!(
                "{} and {} cover different instances",
                args.files[0].display(),
                path.display()
            )));
        }
    }
    let instances: Vec<(usize, Vec<Vec<f64>>)> = (0..first.len())
        .map(|i| (first[i].instance_index, tables.iter().map(|t| t[i].values.clone()).collect()))
        .collect();
    let plan = MetricPlan {
        metrics: if args.metrics.is_empty() { MetricId::ALL.to_vec() } else { parse_metrics(&args.metrics)? },
        k_values: if args.k.is_empty() { default_k_grid(d) } else { args.k.clone() },
        subset: parse_features(&args.features, d)?,
        basis: parse_basis(&args.basis)?,
    };
    let eval = harness::evaluate_attributions(&labels, &instances, &plan)?;
    create_dir(&args.out)?;
    let rows = harness::report_rows(&eval.matrices);
    harness::write_report_csv(&args.out.join("report.csv"), &rows)?;
    harness::write_json(&args.out.join("matrices.json"), &eval.matrices)?;
    println!("compared {} methods over {} instances: {} rows", labels.len(), instances.len(), rows.len());
    Ok(())
}

pub fn cmd_heatmap(args: &HeatmapArgs) -> Result<()> {
    let mats = harness::read_matrices_json(&args.matrices)?;
    let paths = harness::write_heatmaps(&mats, &args.out)?;
    println!("wrote {} heatmaps to {}", paths.len(), args.out.display());
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.seed = master_seed(args.seed, Some(cfg.seed))?;
    if !args.k.is_empty() {
        cfg.k_values = Some(args.k.clone());
    }
    if !args.methods.is_empty() {
        cfg.explainers = parse_methods(&args.methods)?;
    }
    if args.limit.is_some() {
        cfg.max_instances = args.limit;
    }
    let out = harness::run_experiment(&cfg)?;
    let dir = &args.out;
    create_dir(dir)?;
    out.prepared.model_file.save(dir.join("model.json"))?;
    write_attribution_files(&dir.join("attributions"), &cfg.explainers, &out.attributions)?;
    harness::write_records_csv(&dir.join("records.csv"), &out.evaluation)?;
    let rows = harness::report_rows(&out.evaluation.matrices);
    harness::write_report_csv(&dir.join("report.csv"), &rows)?;
    harness::write_json(&dir.join("matrices.json"), &out.evaluation.matrices)?;
    if cfg.metrics.contains(&MetricId::RankCorrelation) {
        let dich = harness::dichotomy_report(&out.evaluation.matrices, harness::DICHOTOMY_THRESHOLD)?;
        harness::write_dichotomy_csv(&dir.join("dichotomy.csv"), &dich)?;
    }
    harness::write_heatmaps(&out.evaluation.matrices, &dir.join("heatmaps"))?;
    harness::write_json(&dir.join("manifest.json"), &out.manifest)?;
    let m = &out.manifest;
    println!("test accuracy: {:.4}", m.test_accuracy);
    println!(
        "explained {} instances with {} methods in {:.1}s",
        m.n_instances,
        m.methods.len(),
        m.timings.explain_seconds
    );
    println!("wrote {} matrices to {}", out.evaluation.matrices.len(), dir.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::Run(a) => cmd_run(a),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", one_line(first.trim_start_matches("error: ")));
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), one_line(&e.to_string()));
            1
        }
    }
}
