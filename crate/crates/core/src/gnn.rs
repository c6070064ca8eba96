//! Masked graph convolutional classifier.
//!
//! The model is a stack of symmetric-normalized graph convolutions with
//! rectifier activations, a mask-weighted mean readout, and a linear +
//! softmax head. The node mask enters three ways: it modulates edge weights
//! as `M_i * M_j`, self-loops as `M_i`, and readout pooling weights as
//! `M_i`, so a node with `M_i = 0` is exactly invisible to message passing
//! and readout. Gradients with respect to both the parameters and the mask
//! are exact reverse-mode derivatives of this forward computation.

// index loops are deliberate here: they mirror the formulas and pin the
// floating-point summation order
#![allow(clippy::needless_range_loop)]

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dataset, Graph, GraphError};
use crate::linalg::Matrix;
use crate::tape::{softmax, Tape, Var};
use crate::util::write_atomic;

/// Rows of the masked adjacency whose sum falls below this are treated as
/// degree 1, so an all-zero mask stays finite.
pub const DEGREE_GUARD: f64 = 1e-12;
/// Readout denominator floor.
pub const READOUT_EPS: f64 = 1e-8;

#[derive(Error, Debug)]
pub enum GnnError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training aborted: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("dataset has no graphs in the required split")]
    EmptyDataset,
    #[error("loss requires at least two classes")]
    NeedTwoClasses,
    #[error("model file invalid: {0}")]
    InvalidModel(String),
    #[error("failed to parse model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    #[serde(default)]
    pub seed: u64,
    pub hidden_dims: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            learning_rate: 0.5,
            weight_decay: 1e-4,
            seed: 0,
            hidden_dims: vec![32, 32],
        }
    }
}

/// Weights of the fixed-architecture classifier. The first
/// `hidden_dims.len()` entries of `layer_weights` are graph-convolution
/// layers; the last is the readout head.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub feature_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub class_count: usize,
    pub layer_weights: Vec<Matrix>,
    pub layer_biases: Vec<Vec<f64>>,
}

impl GnnModel {
    /// Zero-initialized model (useful as a degenerate uniform predictor).
    pub fn zeros(feature_dim: usize, hidden_dims: Vec<usize>, class_count: usize) -> Self {
        let dims = dimension_chain(feature_dim, &hidden_dims, class_count);
        let layer_weights = dims
            .windows(2)
            .map(|w| Matrix::zeros(w[0], w[1]))
            .collect();
        let layer_biases = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        GnnModel {
            feature_dim,
            hidden_dims,
            class_count,
            layer_weights,
            layer_biases,
        }
    }

    /// Glorot-style normal initialization, deterministic in the seed.
    pub fn init(feature_dim: usize, hidden_dims: Vec<usize>, class_count: usize, seed: u64) -> Self {
        let mut model = GnnModel::zeros(feature_dim, hidden_dims, class_count);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in model.layer_weights.iter_mut() {
            let std = (2.0 / (w.rows + w.cols) as f64).sqrt();
            let dist = Normal::new(0.0, std).expect("valid std");
            for x in w.data.iter_mut() {
                *x = dist.sample(&mut rng);
            }
        }
        model
    }

    pub fn conv_layer_count(&self) -> usize {
        self.hidden_dims.len()
    }

    pub fn validate(&self) -> Result<(), GnnError> {
        let dims = dimension_chain(self.feature_dim, &self.hidden_dims, self.class_count);
        if self.layer_weights.len() != dims.len() - 1 || self.layer_biases.len() != dims.len() - 1 {
            return Err(GnnError::InvalidModel(format!(
                "expected {} layers, found {} weights / {} biases",
                dims.len() - 1,
                self.layer_weights.len(),
                self.layer_biases.len()
            )));
        }
        for (l, (w, b)) in self.layer_weights.iter().zip(&self.layer_biases).enumerate() {
            if w.shape() != (dims[l], dims[l + 1]) || b.len() != dims[l + 1] {
                return Err(GnnError::InvalidModel(format!(
                    "layer {l} shape {:?}/{} does not match chain {:?}",
                    w.shape(),
                    b.len(),
                    dims
                )));
            }
            if !w.is_finite() || !b.iter().all(|v| v.is_finite()) {
                return Err(GnnError::InvalidModel(format!("layer {l} has non-finite entries")));
            }
        }
        Ok(())
    }
}

fn dimension_chain(feature_dim: usize, hidden_dims: &[usize], class_count: usize) -> Vec<usize> {
    let mut dims = vec![feature_dim];
    dims.extend_from_slice(hidden_dims);
    dims.push(class_count);
    dims
}

/// A graph paired with a node mask in `[0, 1]^n`; entries are clamped at
/// construction.
#[derive(Debug, Clone)]
pub struct MaskedInput<'a> {
    pub graph: &'a Graph,
    pub mask: Vec<f64>,
}

impl<'a> MaskedInput<'a> {
    pub fn new(graph: &'a Graph, mask: &[f64]) -> Result<Self, GnnError> {
        if mask.len() != graph.n {
            return Err(GnnError::DimensionMismatch(format!(
                "mask length {} != node count {}",
                mask.len(),
                graph.n
            )));
        }
        Ok(MaskedInput {
            graph,
            mask: mask.iter().map(|&m| m.clamp(0.0, 1.0)).collect(),
        })
    }
}

/// Symmetric-normalized masked adjacency:
/// `D^(-1/2) (A .* (M M^T) + diag(M)) D^(-1/2)` where `D` holds the row
/// sums of the inner term, with all-zero rows treated as degree 1.
pub fn masked_adjacency(graph: &Graph, mask: &[f64]) -> Result<Matrix, GnnError> {
    if mask.len() != graph.n {
        return Err(GnnError::DimensionMismatch(format!(
            "mask length {} != node count {}",
            mask.len(),
            graph.n
        )));
    }
    let n = graph.n;
    let a = graph.adjacency();
    let mut inner = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inner.set(i, j, a.get(i, j) * mask[i] * mask[j]);
        }
        let d = inner.get(i, i) + mask[i];
        inner.set(i, i, d);
    }
    let mut dinv = vec![0.0; n];
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            r += inner.get(i, j);
        }
        dinv[i] = if r < DEGREE_GUARD { 1.0 } else { 1.0 / r.sqrt() };
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, inner.get(i, j) * dinv[i] * dinv[j]);
        }
    }
    Ok(out)
}

fn check_compat(model: &GnnModel, graph: &Graph) -> Result<(), GnnError> {
    if graph.feature_dim() != model.feature_dim {
        return Err(GnnError::DimensionMismatch(format!(
            "graph feature width {} != model input dim {}",
            graph.feature_dim(),
            model.feature_dim
        )));
    }
    Ok(())
}

/// Class probability vector for the masked graph. Output sums to 1 and all
/// entries are strictly positive.
pub fn forward(model: &GnnModel, graph: &Graph, mask: &[f64]) -> Result<Vec<f64>, GnnError> {
    check_compat(model, graph)?;
    let logits = forward_logits(model, graph, mask)?;
    Ok(softmax(&logits))
}

fn forward_logits(model: &GnnModel, graph: &Graph, mask: &[f64]) -> Result<Vec<f64>, GnnError> {
    let ahat = masked_adjacency(graph, mask)?;
    let mut h = Matrix::from_rows(&graph.features);
    let conv_layers = model.conv_layer_count();
    for l in 0..conv_layers {
        let mut z = ahat.matmul(&h).matmul(&model.layer_weights[l]);
        for i in 0..z.rows {
            for j in 0..z.cols {
                let v = z.get(i, j) + model.layer_biases[l][j];
                z.set(i, j, if v < 0.0 { 0.0 } else { v });
            }
        }
        h = z;
    }
    // mask-weighted mean pooling
    let mask_row = Matrix {
        rows: 1,
        cols: graph.n,
        data: mask.to_vec(),
    };
    let numer = mask_row.matmul(&h);
    let denom = mask.iter().sum::<f64>().max(READOUT_EPS);
    let mut pooled = numer;
    for x in pooled.data.iter_mut() {
        *x /= denom;
    }
    let head = conv_layers;
    let mut logits = pooled.matmul(&model.layer_weights[head]);
    for j in 0..logits.cols {
        let v = logits.get(0, j) + model.layer_biases[head][j];
        logits.set(0, j, v);
    }
    Ok(logits.data)
}

/// Predicted class: argmax of the all-ones-mask forward pass, ties to the
/// smaller class index.
pub fn predict(model: &GnnModel, graph: &Graph) -> Result<usize, GnnError> {
    let probs = forward(model, graph, &vec![1.0; graph.n])?;
    Ok(argmax(&probs))
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of graphs whose prediction matches their label.
pub fn accuracy(model: &GnnModel, graphs: &[&Graph]) -> Result<f64, GnnError> {
    if graphs.is_empty() {
        return Err(GnnError::EmptyDataset);
    }
    let mut hits = 0usize;
    for g in graphs {
        if predict(model, g)? == g.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / graphs.len() as f64)
}

/// Differentiable scalar objectives understood by [`grad`].
///
/// "keep" denotes the forward pass under the mask `M`; "remove" the pass
/// under `1 - M`. `size` is the mask sum and `entropy` the summed binary
/// entropy of the mask entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    /// `-log f[keep](label)` — classifier training.
    CrossEntropy { label: usize },
    /// `log f[keep](class)` — saliency target.
    LogProb { class: usize },
    /// `log f[remove](target) - log f[keep](target)`, no guard.
    KeepRemoveGap { target: usize },
    /// Guarded gap plus regularizers:
    /// `max(log f[remove](t), min_{j != t} log f[remove](j)) - log f[keep](t)
    ///  + beta * size + gamma * entropy`.
    ExplainTotal { target: usize, beta: f64, gamma: f64 },
    /// `-log f[keep](t) + beta * size + gamma * entropy`.
    KeepNllTotal { target: usize, beta: f64, gamma: f64 },
    /// `max(log f[remove](t), min_{j != t} log f[remove](j))
    ///  + beta * size + gamma * entropy`.
    RemovalTotal { target: usize, beta: f64, gamma: f64 },
}

impl LossSpec {
    fn needs_remove_side(&self) -> bool {
        matches!(
            self,
            LossSpec::KeepRemoveGap { .. }
                | LossSpec::ExplainTotal { .. }
                | LossSpec::RemovalTotal { .. }
        )
    }

    fn needs_guard(&self) -> bool {
        matches!(
            self,
            LossSpec::ExplainTotal { .. } | LossSpec::RemovalTotal { .. }
        )
    }
}

/// Gradients of a scalar loss with respect to every model parameter.
#[derive(Debug, Clone)]
pub struct GnnGradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Builds the masked forward pass on the tape. Returns the logits var.
fn tape_forward(
    tape: &mut Tape,
    model: &GnnModel,
    weights: &[Var],
    biases: &[Var],
    adjacency: Var,
    features: Var,
    mask: Var,
) -> Var {
    // inner = A .* (M M^T) + diag(M)
    let am = tape.scale_rows(adjacency, mask);
    let amm = tape.scale_cols(am, mask);
    let inner = tape.add_diag(amm, mask);
    let rows = tape.row_sum(inner);
    let dinv = tape.rsqrt_guard(rows, DEGREE_GUARD);
    let scaled = tape.scale_rows(inner, dinv);
    let ahat = tape.scale_cols(scaled, dinv);

    let mut h = features;
    for l in 0..model.conv_layer_count() {
        let prop = tape.matmul(ahat, h);
        let z = tape.matmul(prop, weights[l]);
        let zb = tape.add_row(z, biases[l]);
        h = tape.relu(zb);
    }
    let mask_row = tape.transpose(mask);
    let numer = tape.matmul(mask_row, h);
    let mask_sum = tape.total_sum(mask);
    let denom = tape.max_const(mask_sum, READOUT_EPS);
    let pooled = tape.div_scalar(numer, denom);
    let head = model.conv_layer_count();
    let z = tape.matmul(pooled, weights[head]);
    tape.add_row(z, biases[head])
}

/// Exact reverse-mode gradients of `spec` with respect to all model
/// parameters and the node mask. Also returns the loss value.
pub fn grad(
    model: &GnnModel,
    graph: &Graph,
    mask: &[f64],
    spec: LossSpec,
) -> Result<(GnnGradients, Vec<f64>, f64), GnnError> {
    check_compat(model, graph)?;
    if mask.len() != graph.n {
        return Err(GnnError::DimensionMismatch(format!(
            "mask length {} != node count {}",
            mask.len(),
            graph.n
        )));
    }
    if spec.needs_guard() && model.class_count < 2 {
        return Err(GnnError::NeedTwoClasses);
    }

    let mut tape = Tape::new();
    let weights: Vec<Var> = model
        .layer_weights
        .iter()
        .map(|w| tape.input(w.clone()))
        .collect();
    let biases: Vec<Var> = model
        .layer_biases
        .iter()
        .map(|b| tape.input(Matrix {
            rows: 1,
            cols: b.len(),
            data: b.clone(),
        }))
        .collect();
    let adjacency = tape.constant(graph.adjacency());
    let features = tape.constant(Matrix::from_rows(&graph.features));
    let mask_var = tape.input(Matrix::column(mask));

    let keep_logits = tape_forward(&mut tape, model, &weights, &biases, adjacency, features, mask_var);
    let keep_lse = tape.log_sum_exp(keep_logits);

    let log_keep = |tape: &mut Tape, class: usize| {
        let z = tape.pick(keep_logits, class);
        tape.sub(z, keep_lse)
    };

    let remove_terms = if spec.needs_remove_side() {
        let inv_mask = tape.one_minus(mask_var);
        let remove_logits =
            tape_forward(&mut tape, model, &weights, &biases, adjacency, features, inv_mask);
        let remove_lse = tape.log_sum_exp(remove_logits);
        Some((remove_logits, remove_lse))
    } else {
        None
    };

    let log_remove = |tape: &mut Tape, class: usize| {
        let (logits, lse) = remove_terms.expect("remove side built");
        let z = tape.pick(logits, class);
        tape.sub(z, lse)
    };
    let guarded_remove = |tape: &mut Tape, target: usize| {
        let (logits, lse) = remove_terms.expect("remove side built");
        let own = log_remove(tape, target);
        let zmin = tape.min_excluding(logits, target);
        let other = tape.sub(zmin, lse);
        tape.max2(own, other)
    };
    let regularizers = |tape: &mut Tape, beta: f64, gamma: f64| {
        let size = tape.total_sum(mask_var);
        let ent = tape.binary_entropy_sum(mask_var);
        let bs = tape.scale(size, beta);
        let ge = tape.scale(ent, gamma);
        tape.add(bs, ge)
    };

    let loss = match spec {
        LossSpec::CrossEntropy { label } => {
            let lp = log_keep(&mut tape, label);
            tape.scale(lp, -1.0)
        }
        LossSpec::LogProb { class } => log_keep(&mut tape, class),
        LossSpec::KeepRemoveGap { target } => {
            let lr = log_remove(&mut tape, target);
            let lk = log_keep(&mut tape, target);
            tape.sub(lr, lk)
        }
        LossSpec::ExplainTotal { target, beta, gamma } => {
            let guard = guarded_remove(&mut tape, target);
            let lk = log_keep(&mut tape, target);
            let gap = tape.sub(guard, lk);
            let reg = regularizers(&mut tape, beta, gamma);
            tape.add(gap, reg)
        }
        LossSpec::KeepNllTotal { target, beta, gamma } => {
            let lk = log_keep(&mut tape, target);
            let nll = tape.scale(lk, -1.0);
            let reg = regularizers(&mut tape, beta, gamma);
            tape.add(nll, reg)
        }
        LossSpec::RemovalTotal { target, beta, gamma } => {
            let guard = guarded_remove(&mut tape, target);
            let reg = regularizers(&mut tape, beta, gamma);
            tape.add(guard, reg)
        }
    };

    let loss_value = tape.scalar(loss);
    let grads = tape.backward(loss);

    let weight_grads = weights.iter().map(|&v| grads[v.index()].clone()).collect();
    let bias_grads = biases
        .iter()
        .map(|&v| grads[v.index()].data.clone())
        .collect();
    let mask_grad = grads[mask_var.index()].data.clone();
    Ok((
        GnnGradients {
            weights: weight_grads,
            biases: bias_grads,
        },
        mask_grad,
        loss_value,
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model: GnnModel,
    pub history: Vec<EpochStats>,
    pub best_val_accuracy: f64,
}

/// Full-batch gradient descent on mean cross-entropy over the train split
/// with all-ones masks. Deterministic given the seed; returns the weights
/// with the best validation accuracy (falling back to train accuracy when
/// the validation split is empty).
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainResult, GnnError> {
    let train_graphs = dataset.split_graphs(&dataset.splits.train);
    let val_graphs = dataset.split_graphs(&dataset.splits.validation);
    if train_graphs.is_empty() {
        return Err(GnnError::EmptyDataset);
    }
    let feature_dim = dataset.feature_dim();
    for g in &train_graphs {
        if g.feature_dim() != feature_dim {
            return Err(GnnError::DimensionMismatch(
                "inconsistent feature widths across graphs".into(),
            ));
        }
    }
    let mut model = GnnModel::init(
        feature_dim,
        config.hidden_dims.clone(),
        dataset.class_count(),
        config.seed,
    );

    let mut best = model.clone();
    let mut best_score = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut acc_w: Vec<Matrix> = model
            .layer_weights
            .iter()
            .map(|w| Matrix::zeros(w.rows, w.cols))
            .collect();
        let mut acc_b: Vec<Vec<f64>> = model.layer_biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut loss_sum = 0.0;
        for g in &train_graphs {
            let mask = vec![1.0; g.n];
            let (grads, _, loss) = grad(&model, g, &mask, LossSpec::CrossEntropy { label: g.label })?;
            loss_sum += loss;
            for (a, d) in acc_w.iter_mut().zip(&grads.weights) {
                for (x, y) in a.data.iter_mut().zip(&d.data) {
                    *x += y;
                }
            }
            for (a, d) in acc_b.iter_mut().zip(&grads.biases) {
                for (x, y) in a.iter_mut().zip(d) {
                    *x += y;
                }
            }
        }
        let count = train_graphs.len() as f64;
        let mean_loss = loss_sum / count;
        if !mean_loss.is_finite() {
            return Err(GnnError::NonFiniteLoss { epoch });
        }
        for (w, g) in model.layer_weights.iter_mut().zip(&acc_w) {
            for (x, gv) in w.data.iter_mut().zip(&g.data) {
                *x -= config.learning_rate * (gv / count + config.weight_decay * *x);
            }
        }
        for (b, g) in model.layer_biases.iter_mut().zip(&acc_b) {
            for (x, gv) in b.iter_mut().zip(g) {
                *x -= config.learning_rate * (gv / count);
            }
        }

        let train_accuracy = accuracy(&model, &train_graphs)?;
        let val_accuracy = if val_graphs.is_empty() {
            train_accuracy
        } else {
            accuracy(&model, &val_graphs)?
        };
        history.push(EpochStats {
            epoch,
            train_loss: mean_loss,
            train_accuracy,
            val_accuracy,
        });
        if val_accuracy > best_score {
            best_score = val_accuracy;
            best = model.clone();
        }
    }

    if config.epochs == 0 {
        best_score = if val_graphs.is_empty() {
            accuracy(&model, &train_graphs)?
        } else {
            accuracy(&model, &val_graphs)?
        };
        best = model;
    }

    Ok(TrainResult {
        model: best,
        history,
        best_val_accuracy: best_score,
    })
}

/// On-disk model representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub hidden_dims: Vec<usize>,
    pub class_count: usize,
    pub feature_dim: usize,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub train_config: TrainConfig,
    pub val_accuracy: f64,
}

pub fn save_model(
    model: &GnnModel,
    train_config: &TrainConfig,
    val_accuracy: f64,
    path: &Path,
) -> Result<(), GnnError> {
    model.validate()?;
    let file = ModelFile {
        hidden_dims: model.hidden_dims.clone(),
        class_count: model.class_count,
        feature_dim: model.feature_dim,
        weights: model.layer_weights.clone(),
        biases: model.layer_biases.clone(),
        train_config: train_config.clone(),
        val_accuracy,
    };
    let text = serde_json::to_string_pretty(&file)?;
    write_atomic(path, &text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(GnnModel, TrainConfig, f64), GnnError> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    let model = GnnModel {
        feature_dim: file.feature_dim,
        hidden_dims: file.hidden_dims,
        class_count: file.class_count,
        layer_weights: file.weights,
        layer_biases: file.biases,
    };
    model.validate()?;
    Ok((model, file.train_config, file.val_accuracy))
}
