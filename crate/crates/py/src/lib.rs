//! Python bindings: generate benchmarks, train the classifier, explain
//! predictions, and score explanations from Python. Configs cross the
//! boundary as JSON strings so the Python side stays dependency-free.
//!
//! Build the extension with `cargo build -p infoflow-py --release`, then
//! import the produced cdylib as `infoflow_py` (see python/smoke_test.py).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use infoflow::explainer::{self, ExplainerConfig, ExplainerKind};
use infoflow::gnn::{self, GnnModel, TrainConfig};
use infoflow::graph;
use infoflow::metrics;
use infoflow::pipeline::{self, RunConfig};
use infoflow::synth::{self, GeneratorConfig};

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn runtime_err(err: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

fn parse_config<T: serde::de::DeserializeOwned + Default>(json: Option<&str>) -> PyResult<T> {
    match json {
        None => Ok(T::default()),
        Some(text) => serde_json::from_str(text).map_err(value_err),
    }
}

/// A generated or loaded benchmark dataset.
#[pyclass]
struct Dataset {
    inner: graph::Dataset,
}

#[pymethods]
impl Dataset {
    /// Generate a synthetic planted-motif dataset. `config_json` overrides
    /// the default generator configuration; `seed` overrides its seed.
    #[staticmethod]
    #[pyo3(signature = (config_json=None, seed=None))]
    fn generate(config_json: Option<&str>, seed: Option<u64>) -> PyResult<Self> {
        let mut config: GeneratorConfig = parse_config(config_json)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let inner = synth::generate_dataset(&config).map_err(value_err)?;
        Ok(Dataset { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = graph::load_dataset(std::path::Path::new(path)).map_err(value_err)?;
        Ok(Dataset { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        graph::save_dataset(&self.inner, std::path::Path::new(path)).map_err(runtime_err)
    }

    fn graph_count(&self) -> usize {
        self.inner.graphs.len()
    }

    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    fn train_indices(&self) -> Vec<usize> {
        self.inner.splits.train.clone()
    }

    fn test_indices(&self) -> Vec<usize> {
        self.inner.splits.test.clone()
    }

    fn label(&self, graph_index: usize) -> PyResult<usize> {
        self.graph(graph_index).map(|g| g.label)
    }

    fn node_count(&self, graph_index: usize) -> PyResult<usize> {
        self.graph(graph_index).map(|g| g.n)
    }

    fn edges(&self, graph_index: usize) -> PyResult<Vec<(usize, usize)>> {
        self.graph(graph_index).map(|g| g.edges.clone())
    }

    /// Ground-truth explanation nodes, when the generator recorded them.
    fn motif_nodes(&self, graph_index: usize) -> PyResult<Option<Vec<usize>>> {
        self.graph(graph_index).map(|g| g.motif_nodes.clone())
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(graphs={}, classes={}, test={})",
            self.inner.graphs.len(),
            self.inner.class_names.len(),
            self.inner.splits.test.len()
        )
    }
}

impl Dataset {
    fn graph(&self, graph_index: usize) -> PyResult<&graph::Graph> {
        self.inner
            .graphs
            .get(graph_index)
            .ok_or_else(|| value_err(format!("graph index {graph_index} out of range")))
    }
}

/// A trained masked graph classifier.
#[pyclass]
struct Model {
    inner: GnnModel,
    train_config: TrainConfig,
    val_accuracy: f64,
}

#[pymethods]
impl Model {
    /// Train on the dataset's train split. `config_json` overrides the
    /// default training configuration; `seed` overrides its seed.
    #[staticmethod]
    #[pyo3(signature = (dataset, config_json=None, seed=None))]
    fn train(dataset: &Dataset, config_json: Option<&str>, seed: Option<u64>) -> PyResult<Self> {
        let mut config: TrainConfig = parse_config(config_json)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let result = gnn::train(&dataset.inner, &config).map_err(runtime_err)?;
        Ok(Model {
            inner: result.model,
            train_config: config,
            val_accuracy: result.best_val_accuracy,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (inner, train_config, val_accuracy) =
            gnn::load_model(std::path::Path::new(path)).map_err(value_err)?;
        Ok(Model {
            inner,
            train_config,
            val_accuracy,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        gnn::save_model(
            &self.inner,
            &self.train_config,
            self.val_accuracy,
            std::path::Path::new(path),
        )
        .map_err(runtime_err)
    }

    #[getter]
    fn val_accuracy(&self) -> f64 {
        self.val_accuracy
    }

    fn predict(&self, dataset: &Dataset, graph_index: usize) -> PyResult<usize> {
        gnn::predict(&self.inner, dataset.graph(graph_index)?).map_err(runtime_err)
    }

    /// Class probabilities under an optional node mask (all-ones default).
    #[pyo3(signature = (dataset, graph_index, mask=None))]
    fn forward(
        &self,
        dataset: &Dataset,
        graph_index: usize,
        mask: Option<Vec<f64>>,
    ) -> PyResult<Vec<f64>> {
        let graph = dataset.graph(graph_index)?;
        let mask = mask.unwrap_or_else(|| vec![1.0; graph.n]);
        gnn::forward(&self.inner, graph, &mask).map_err(value_err)
    }

    /// Accuracy over one of the splits: "train", "validation", or "test".
    fn accuracy(&self, dataset: &Dataset, split: &str) -> PyResult<f64> {
        let indices = match split {
            "train" => &dataset.inner.splits.train,
            "validation" => &dataset.inner.splits.validation,
            "test" => &dataset.inner.splits.test,
            other => return Err(value_err(format!("unknown split {other:?}"))),
        };
        let graphs = dataset.inner.split_graphs(indices);
        gnn::accuracy(&self.inner, &graphs).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(features={}, hidden={:?}, classes={}, val_accuracy={:.3})",
            self.inner.feature_dim, self.inner.hidden_dims, self.inner.class_count, self.val_accuracy
        )
    }
}

/// One explanation: a soft node mask with derived hard subgraphs.
#[pyclass]
struct Explanation {
    inner: explainer::Explanation,
}

#[pymethods]
impl Explanation {
    #[getter]
    fn mask(&self) -> Vec<f64> {
        self.inner.mask.clone()
    }

    #[getter]
    fn explainer(&self) -> String {
        self.inner.explainer_name.clone()
    }

    /// Node indices of the top-k hard subgraph recorded at sparsity `k`.
    fn hard_subgraph(&self, k: f64) -> Option<Vec<usize>> {
        self.inner.hard_subgraph(k).cloned()
    }

    /// (data, size, entropy, total) loss tuples over the optimization.
    fn loss_trace(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner
            .loss_trace
            .iter()
            .map(|r| (r.l_f, r.l_size, r.l_ent, r.total))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Explanation(explainer={:?}, n={}, steps={})",
            self.inner.explainer_name,
            self.inner.mask.len(),
            self.inner.loss_trace.len().saturating_sub(1)
        )
    }
}

/// Explain one graph's prediction. `explainer` is one of ifx, mi, cf,
/// gradient, random.
#[pyfunction]
#[pyo3(signature = (model, dataset, graph_index, explainer="ifx", config_json=None, seed=None))]
fn explain(
    model: &Model,
    dataset: &Dataset,
    graph_index: usize,
    explainer: &str,
    config_json: Option<&str>,
    seed: Option<u64>,
) -> PyResult<Explanation> {
    let kind = ExplainerKind::parse(explainer)
        .ok_or_else(|| value_err(format!("unknown explainer {explainer:?}")))?;
    let mut config: ExplainerConfig = parse_config(config_json)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let graph = dataset.graph(graph_index)?;
    let inner = explainer::explain(kind, &model.inner, graph, &config).map_err(runtime_err)?;
    Ok(Explanation { inner })
}

/// Fidelity of masks over the test split at sparsity `k`; masks are listed
/// in test-split order. Returns (fidelity_plus, fidelity_minus).
#[pyfunction]
fn fidelity(model: &Model, dataset: &Dataset, masks: Vec<Vec<f64>>, k: f64) -> PyResult<(f64, f64)> {
    let (graphs, explanations) = masks_to_explanations(dataset, masks)?;
    let refs: Vec<&explainer::Explanation> = explanations.iter().collect();
    metrics::fidelity_scores(&model.inner, &graphs, &refs, k).map_err(value_err)
}

/// Mean ranking score of masks against the recorded motif ground truth,
/// masks in test-split order.
#[pyfunction]
fn motif_recovery_mean(dataset: &Dataset, masks: Vec<Vec<f64>>) -> PyResult<f64> {
    let (graphs, explanations) = masks_to_explanations(dataset, masks)?;
    let refs: Vec<&explainer::Explanation> = explanations.iter().collect();
    Ok(metrics::motif_recovery(&graphs, &refs, "py")
        .map_err(value_err)?
        .mean)
}

fn masks_to_explanations(
    dataset: &Dataset,
    masks: Vec<Vec<f64>>,
) -> PyResult<(Vec<&graph::Graph>, Vec<explainer::Explanation>)> {
    let test = &dataset.inner.splits.test;
    if masks.len() != test.len() {
        return Err(value_err(format!(
            "expected one mask per test graph ({} masks for {} graphs)",
            masks.len(),
            test.len()
        )));
    }
    let graphs: Vec<&graph::Graph> = dataset.inner.split_graphs(test);
    let explanations = masks
        .into_iter()
        .map(|mask| explainer::Explanation {
            explainer_name: "py".into(),
            mask,
            loss_trace: Vec::new(),
            hard_subgraphs: Default::default(),
        })
        .collect();
    Ok((graphs, explanations))
}

/// Run one pipeline stage (generate, train, explain, evaluate, report)
/// against a run-config file, exactly like the CLI.
#[pyfunction]
fn run_stage(stage: &str, config_path: &str) -> PyResult<()> {
    let config = RunConfig::load(std::path::Path::new(config_path)).map_err(value_err)?;
    let result = match stage {
        "generate" => pipeline::cmd_generate(&config),
        "train" => pipeline::cmd_train(&config),
        "explain" => pipeline::cmd_explain(&config),
        "evaluate" => pipeline::cmd_evaluate(&config),
        "report" => pipeline::cmd_report(&config),
        other => return Err(value_err(format!("unknown stage {other:?}"))),
    };
    result.map_err(runtime_err)
}

#[pymodule]
fn infoflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_class::<Explanation>()?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(motif_recovery_mean, m)?)?;
    m.add_function(wrap_pyfunction!(run_stage, m)?)?;
    Ok(())
}
