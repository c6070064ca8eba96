//! End-to-end orchestration: dataset generation, training, batch
//! explanation, evaluation, and report emission, all driven by one run
//! configuration and one seed.
//!
//! Every stage reads its inputs from files and writes its outputs via
//! atomic renames, so reruns with identical config and seed are
//! byte-identical and interrupted runs never leave partial artifacts under
//! their final names. All per-graph random streams derive from the run
//! seed and the graph index, which makes results independent of worker
//! count and scheduling.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explainer::{
    explain, validate_sparsity_set, ExplainError, Explanation, ExplainerConfig, ExplainerKind,
};
use crate::gnn::{load_model, save_model, train, GnnError, TrainConfig};
use crate::graph::{load_dataset, save_dataset, Dataset, Graph, GraphError};
use crate::metrics::{
    fidelity_csv, fidelity_curve, motif_recovery, FidelityReport, MetricsError,
    MotifRecoveryReport, RiskMatrix,
};
use crate::separability::{
    separability_csv, separability_report, ComplementWeighting, SeparabilityOptions,
    SeparabilityReport,
};
use crate::synth::{generate_dataset, GeneratorConfig, GeneratorError};
use crate::util::{derive_seed, tag64, write_atomic};

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error("config: {0}")]
    InvalidConfig(String),
    #[error("missing input file {0}; run the upstream command first")]
    MissingInput(PathBuf),
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub explanations_dir: PathBuf,
    pub reports_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            dataset: "out/dataset.json".into(),
            model: "out/model.json".into(),
            explanations_dir: "out/explanations".into(),
            reports_dir: "out/reports".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerSection {
    #[serde(flatten)]
    pub config: ExplainerConfig,
    #[serde(default = "all_explainer_names")]
    pub explainers: Vec<String>,
}

fn all_explainer_names() -> Vec<String> {
    ExplainerKind::ALL.iter().map(|k| k.name().to_string()).collect()
}

impl Default for ExplainerSection {
    fn default() -> Self {
        ExplainerSection {
            config: ExplainerConfig::default(),
            explainers: all_explainer_names(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSection {
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// `None` selects the neutral all-ones off-diagonal matrix.
    #[serde(default)]
    pub risk_matrix: Option<RiskMatrix>,
    #[serde(default = "crate::explainer::default_sparsity_set")]
    pub sparsity_set: Vec<f64>,
    #[serde(default)]
    pub complement_weighting: ComplementWeighting,
}

fn default_bins() -> usize {
    20
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            bins: default_bins(),
            risk_matrix: None,
            sparsity_set: crate::explainer::default_sparsity_set(),
            complement_weighting: ComplementWeighting::default(),
        }
    }
}

/// One file describing a full run. Per-section seeds are derived from the
/// run-level seed, so a single value controls every random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub worker_count: usize,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub explainer: ExplainerSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

fn default_workers() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            worker_count: 1,
            paths: Paths::default(),
            generator: GeneratorConfig::default(),
            train: TrainConfig::default(),
            explainer: ExplainerSection::default(),
            metrics: MetricsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        if !path.exists() {
            return Err(PipelineError::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|source| PipelineError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.worker_count == 0 {
            return Err(PipelineError::InvalidConfig("worker_count must be >= 1".into()));
        }
        let paths = [
            self.paths.dataset.as_path(),
            self.paths.model.as_path(),
            self.paths.explanations_dir.as_path(),
            self.paths.reports_dir.as_path(),
        ];
        for i in 0..paths.len() {
            for j in (i + 1)..paths.len() {
                if paths[i] == paths[j] {
                    return Err(PipelineError::InvalidConfig(format!(
                        "paths must be distinct; {} is reused",
                        paths[i].display()
                    )));
                }
            }
        }
        if self.explainer.explainers.is_empty() {
            return Err(PipelineError::InvalidConfig(
                "explainer.explainers must name at least one explainer".into(),
            ));
        }
        for name in &self.explainer.explainers {
            if ExplainerKind::parse(name).is_none() {
                return Err(PipelineError::InvalidConfig(format!(
                    "explainer.explainers: unknown explainer {name:?}"
                )));
            }
        }
        self.explainer
            .config
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(format!("explainer: {e}")))?;
        validate_sparsity_set(&self.metrics.sparsity_set)
            .map_err(|e| PipelineError::InvalidConfig(format!("metrics.sparsity_set: {e}")))?;
        if self.metrics.bins == 0 {
            return Err(PipelineError::InvalidConfig("metrics.bins must be >= 1".into()));
        }
        self.generator
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(format!("generator: {e}")))?;
        Ok(())
    }

    pub fn explainer_kinds(&self) -> Vec<ExplainerKind> {
        self.explainer
            .explainers
            .iter()
            .filter_map(|n| ExplainerKind::parse(n))
            .collect()
    }

    fn generator_config(&self) -> GeneratorConfig {
        let mut config = self.generator.clone();
        config.seed = derive_seed(self.seed, &[tag64("generate")]);
        config
    }

    fn train_config(&self) -> TrainConfig {
        let mut config = self.train.clone();
        config.seed = derive_seed(self.seed, &[tag64("train")]);
        config
    }

    fn explainer_config_for(&self, kind: ExplainerKind, graph_index: usize) -> ExplainerConfig {
        let mut config = self.explainer.config.clone();
        config.seed = derive_seed(
            self.seed,
            &[tag64("explain"), tag64(kind.name()), graph_index as u64],
        );
        config
    }

    pub fn explanation_path(&self, kind: ExplainerKind) -> PathBuf {
        self.paths.explanations_dir.join(format!("{}.json", kind.name()))
    }
}

fn require(path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput(path.to_path_buf()))
    }
}

fn load_dataset_checked(path: &Path) -> Result<Dataset, PipelineError> {
    require(path)?;
    Ok(load_dataset(path)?)
}

/// Generates the synthetic dataset and writes it to `paths.dataset`.
pub fn cmd_generate(config: &RunConfig) -> Result<(), PipelineError> {
    config.validate()?;
    let dataset = generate_dataset(&config.generator_config())?;
    save_dataset(&dataset, &config.paths.dataset)?;
    Ok(())
}

/// Trains the classifier on the generated dataset; writes the model file
/// and a per-epoch accuracy log.
pub fn cmd_train(config: &RunConfig) -> Result<(), PipelineError> {
    config.validate()?;
    let dataset = load_dataset_checked(&config.paths.dataset)?;
    let train_config = config.train_config();
    let result = train(&dataset, &train_config)?;
    save_model(&result.model, &train_config, result.best_val_accuracy, &config.paths.model)?;

    let mut log = String::from("epoch,train_loss,train_accuracy,val_accuracy\n");
    for row in &result.history {
        log.push_str(&format!(
            "{},{},{},{}\n",
            row.epoch, row.train_loss, row.train_accuracy, row.val_accuracy
        ));
    }
    write_atomic(&config.paths.reports_dir.join("train_log.csv"), &log)?;
    Ok(())
}

/// One explanation file entry; the explanation fields are inlined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub graph_index: usize,
    #[serde(flatten)]
    pub explanation: Explanation,
}

/// Explains every test-split graph with each configured explainer.
/// Work is distributed over `worker_count` threads; per-graph seeds are
/// derived from (run seed, explainer, graph index), so output does not
/// depend on the worker count.
pub fn cmd_explain(config: &RunConfig) -> Result<(), PipelineError> {
    config.validate()?;
    let dataset = load_dataset_checked(&config.paths.dataset)?;
    require(&config.paths.model)?;
    let (model, _, _) = load_model(&config.paths.model)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count)
        .build()
        .map_err(|e| PipelineError::InvalidConfig(format!("worker pool: {e}")))?;

    for kind in config.explainer_kinds() {
        let records: Result<Vec<ExplanationRecord>, ExplainError> = pool.install(|| {
            dataset
                .splits
                .test
                .par_iter()
                .map(|&graph_index| {
                    let graph = &dataset.graphs[graph_index];
                    let econfig = config.explainer_config_for(kind, graph_index);
                    let explanation = explain(kind, &model, graph, &econfig)?;
                    Ok(ExplanationRecord {
                        graph_index,
                        explanation,
                    })
                })
                .collect()
        });
        let records = records?;
        let text = serde_json::to_string_pretty(&records).expect("explanations serialize");
        write_atomic(&config.explanation_path(kind), &text)?;
    }
    Ok(())
}

fn load_explanations(
    config: &RunConfig,
    kind: ExplainerKind,
) -> Result<Vec<ExplanationRecord>, PipelineError> {
    let path = config.explanation_path(kind);
    require(&path)?;
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Parse { path, source })
}

/// Pairs each test-split graph with its explanation record, in split order.
fn align<'a>(
    dataset: &'a Dataset,
    records: &'a [ExplanationRecord],
    kind: ExplainerKind,
) -> Result<(Vec<&'a Graph>, Vec<&'a Explanation>), PipelineError> {
    let mut graphs = Vec::with_capacity(dataset.splits.test.len());
    let mut explanations = Vec::with_capacity(dataset.splits.test.len());
    for &idx in &dataset.splits.test {
        let record = records
            .iter()
            .find(|r| r.graph_index == idx)
            .ok_or_else(|| {
                PipelineError::InvalidConfig(format!(
                    "explanation file for {} lacks graph {idx}",
                    kind.name()
                ))
            })?;
        graphs.push(&dataset.graphs[idx]);
        explanations.push(&record.explanation);
    }
    Ok((graphs, explanations))
}

/// Evaluates all configured explainers on the test split: fidelity curves,
/// separability scores, and ground-truth motif recovery.
pub fn cmd_evaluate(config: &RunConfig) -> Result<(), PipelineError> {
    config.validate()?;
    let dataset = load_dataset_checked(&config.paths.dataset)?;
    require(&config.paths.model)?;
    let (model, _, _) = load_model(&config.paths.model)?;
    let risk = config
        .metrics
        .risk_matrix
        .clone()
        .unwrap_or_else(|| RiskMatrix::ones(dataset.class_count()));
    risk.validate(dataset.class_count())?;
    let options = SeparabilityOptions {
        bins: config.metrics.bins,
        complement_weighting: config.metrics.complement_weighting,
    };

    let mut fidelity_reports = Vec::new();
    let mut separability_reports = Vec::new();
    let mut recovery_reports: Vec<MotifRecoveryReport> = Vec::new();
    for kind in config.explainer_kinds() {
        let records = load_explanations(config, kind)?;
        let (graphs, explanations) = align(&dataset, &records, kind)?;
        fidelity_reports.push(fidelity_curve(
            &model,
            &graphs,
            &explanations,
            &config.metrics.sparsity_set,
            kind.name(),
        )?);
        separability_reports.push(separability_report(
            &model,
            &graphs,
            &explanations,
            &dataset.schema,
            &dataset.class_names,
            &config.metrics.sparsity_set,
            &risk,
            &options,
            kind.name(),
        )?);
        if graphs.iter().any(|g| g.motif_nodes.is_some()) {
            recovery_reports.push(motif_recovery(&graphs, &explanations, kind.name())?);
        }
    }

    let reports_dir = &config.paths.reports_dir;
    write_atomic(
        &reports_dir.join("fidelity.json"),
        &serde_json::to_string_pretty(&fidelity_reports).expect("serialize"),
    )?;
    write_atomic(&reports_dir.join("fidelity.csv"), &fidelity_csv(&fidelity_reports))?;
    write_atomic(
        &reports_dir.join("separability.json"),
        &serde_json::to_string_pretty(&separability_reports).expect("serialize"),
    )?;
    write_atomic(
        &reports_dir.join("separability.csv"),
        &separability_csv(&separability_reports),
    )?;
    write_atomic(
        &reports_dir.join("motif_recovery.json"),
        &serde_json::to_string_pretty(&recovery_reports).expect("serialize"),
    )?;
    Ok(())
}

/// Consolidates evaluation output into a text summary table and plot-data
/// CSVs.
pub fn cmd_report(config: &RunConfig) -> Result<(), PipelineError> {
    config.validate()?;
    let reports_dir = &config.paths.reports_dir;
    let fidelity_path = reports_dir.join("fidelity.json");
    let separability_path = reports_dir.join("separability.json");
    let recovery_path = reports_dir.join("motif_recovery.json");
    require(&fidelity_path)?;
    require(&separability_path)?;

    let fidelity: Vec<FidelityReport> = read_json(&fidelity_path)?;
    let separability: Vec<SeparabilityReport> = read_json(&separability_path)?;
    let recovery: Vec<MotifRecoveryReport> = if recovery_path.exists() {
        read_json(&recovery_path)?
    } else {
        Vec::new()
    };

    write_atomic(&reports_dir.join("plot_fidelity.csv"), &fidelity_csv(&fidelity))?;
    write_atomic(
        &reports_dir.join("plot_separability.csv"),
        &separability_csv(&separability),
    )?;
    write_atomic(
        &reports_dir.join("summary.txt"),
        &summary_table(&fidelity, &separability, &recovery),
    )?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Renders the consolidated summary: per-explainer separability scores
/// (pair-wise, aggregated, risk-aggregated; max block then ave block),
/// fidelity at the largest sparsity, and motif recovery.
pub fn summary_table(
    fidelity: &[FidelityReport],
    separability: &[SeparabilityReport],
    recovery: &[MotifRecoveryReport],
) -> String {
    let mut out = String::new();
    if let Some(first) = separability.first() {
        let pair_names: Vec<String> = first
            .pair_scores
            .iter()
            .map(|p| {
                format!(
                    "{} vs {}",
                    short_name(&first.class_names[p.pair.0]),
                    short_name(&first.class_names[p.pair.1])
                )
            })
            .collect();
        for (block, lower) in [("max", false), ("ave", true)] {
            out.push_str(&format!("separability ({block} over concepts)\n"));
            let mut header = format!("{:<12}", "explainer");
            for pn in &pair_names {
                header.push_str(&format!(" | {pn}: C_{block} S_{block}"));
            }
            header.push_str(&format!(" | all: C_{block} S_{block}"));
            header.push_str(&format!(" | risk: C_{block},R S_{block},R"));
            out.push_str(&header);
            out.push('\n');
            for r in separability {
                let mut line = format!("{:<12}", r.explainer);
                for p in &r.pair_scores {
                    let (c, s) = if lower { (p.c_ave, p.s_ave) } else { (p.c_max, p.s_max) };
                    line.push_str(&format!(" | {c:.3} {s:.3}"));
                }
                let (ac, as_) = if lower {
                    (r.aggregated.c_ave, r.aggregated.s_ave)
                } else {
                    (r.aggregated.c_max, r.aggregated.s_max)
                };
                let (rc, rs) = if lower {
                    (r.risk_aggregated.c_ave, r.risk_aggregated.s_ave)
                } else {
                    (r.risk_aggregated.c_max, r.risk_aggregated.s_max)
                };
                line.push_str(&format!(" | {ac:.3} {as_:.3} | {rc:.3} {rs:.3}"));
                out.push_str(&line);
                out.push('\n');
            }
            out.push('\n');
        }
    }
    if !fidelity.is_empty() {
        out.push_str("fidelity at largest sparsity\n");
        out.push_str(&format!(
            "{:<12} | {:>6} | {:>10} | {:>10}\n",
            "explainer", "k", "fidelity+", "fidelity-"
        ));
        for r in fidelity {
            if let Some(row) = r.rows.last() {
                out.push_str(&format!(
                    "{:<12} | {:>6} | {:>10.3} | {:>10.3}\n",
                    r.explainer, row.k, row.fidelity_plus, row.fidelity_minus
                ));
            }
        }
        out.push('\n');
    }
    if !recovery.is_empty() {
        out.push_str("motif recovery (ranking score)\n");
        out.push_str(&format!("{:<12} | {:>6}\n", "explainer", "mean"));
        for r in recovery {
            out.push_str(&format!("{:<12} | {:>6.3}\n", r.explainer, r.mean));
        }
        out.push('\n');
    }
    out
}

fn short_name(name: &str) -> String {
    name.chars().take(12).collect()
}

/// Parses a `start:end:step` sparsity range into a canonical set, snapping
/// each value to a 1e-9 grid so accumulated float error does not leak into
/// file keys.
pub fn parse_sparsity_range(text: &str) -> Result<Vec<f64>, PipelineError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = |msg: &str| PipelineError::InvalidConfig(format!("--sparsity {text:?}: {msg}"));
    let values = match parts.as_slice() {
        [single] => {
            let v: f64 = single.parse().map_err(|_| bad("not a number"))?;
            vec![v]
        }
        [start, end, step] => {
            let start: f64 = start.parse().map_err(|_| bad("bad start"))?;
            let end: f64 = end.parse().map_err(|_| bad("bad end"))?;
            let step: f64 = step.parse().map_err(|_| bad("bad step"))?;
            if step <= 0.0 || end < start {
                return Err(bad("need start <= end and step > 0"));
            }
            let count = ((end - start) / step + 0.5).floor() as usize;
            (0..=count)
                .map(|i| {
                    let v = start + i as f64 * step;
                    (v * 1e9).round() / 1e9
                })
                .collect()
        }
        _ => return Err(bad("expected start:end:step or a single value")),
    };
    validate_sparsity_set(&values)
        .map_err(|e| PipelineError::InvalidConfig(format!("--sparsity: {e}")))?;
    Ok(values)
}
