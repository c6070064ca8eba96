//! Information estimators and explanation quality metrics.
//!
//! The variational information measures here are defined through the fixed
//! classifier's output probabilities: the entropy of the model's empirical
//! marginal, the conditional entropy of its per-input predictions, and
//! their difference. Unlike Shannon mutual information the difference is
//! directional, reflects the model's capacity, and can go negative for a
//! poorly matched classifier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explainer::Explanation;
use crate::gnn::{forward, predict, GnnError, GnnModel};
use crate::graph::{complement_nodes, induced_subgraph, top_k_nodes, Graph, GraphError};

#[derive(Error, Debug)]
pub enum MetricsError {
    #[error("empty input batch")]
    EmptyBatch,
    #[error("no retained (correctly classified) samples")]
    NoRetainedSamples,
    #[error("class {class} has zero retained samples at sparsity {k} on the {side} side")]
    NoSamples { class: usize, k: f64, side: String },
    #[error("histogram bins must match: {0}")]
    BinMismatch(String),
    #[error("histogram config: {0}")]
    InvalidHistogram(String),
    #[error("risk matrix: {0}")]
    InvalidRisk(String),
    #[error("explanations misaligned with graphs: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Entropy of the model's empirical marginal over the batch:
/// `mean_i -ln fbar(label_i)` with `fbar(y) = mean_i p_i[y]` computed from
/// all-ones-mask forward passes.
pub fn f_entropy(model: &GnnModel, graphs: &[&Graph]) -> Result<f64, MetricsError> {
    if graphs.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let mut marginal = vec![0.0; model.class_count];
    for g in graphs {
        let p = forward(model, g, &vec![1.0; g.n])?;
        for (m, x) in marginal.iter_mut().zip(&p) {
            *m += x;
        }
    }
    for m in marginal.iter_mut() {
        *m /= graphs.len() as f64;
    }
    let mut h = 0.0;
    for g in graphs {
        h += -marginal[g.label].ln();
    }
    Ok(h / graphs.len() as f64)
}

/// Conditional entropy of the model's masked predictions:
/// `mean_i -ln p_i[label_i]`.
pub fn f_cond_entropy(
    model: &GnnModel,
    inputs: &[(&Graph, &[f64], usize)],
) -> Result<f64, MetricsError> {
    if inputs.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let mut h = 0.0;
    for &(graph, mask, label) in inputs {
        let p = forward(model, graph, mask)?;
        h += -p[label].ln();
    }
    Ok(h / inputs.len() as f64)
}

/// Marginal entropy minus conditional entropy on the same batch. Reported
/// for diagnostics; negative values are possible and meaningful (the model
/// predicts the batch labels worse than its own marginal does).
pub fn f_information(
    model: &GnnModel,
    inputs: &[(&Graph, &[f64], usize)],
) -> Result<f64, MetricsError> {
    let graphs: Vec<&Graph> = inputs.iter().map(|&(g, _, _)| g).collect();
    Ok(f_entropy(model, &graphs)? - f_cond_entropy(model, inputs)?)
}

/// Fidelity of explanations at one sparsity level.
///
/// Only graphs the model classifies correctly are retained. For each
/// retained graph the explanatory subgraph is the top-k induced subgraph
/// and the complementary subgraph is the rest; the plus/minus scores are
/// the agreement rates of their predictions with the original one. An
/// empty complement (k = 1) falls back to the all-zero-mask forward pass.
pub fn fidelity_scores(
    model: &GnnModel,
    graphs: &[&Graph],
    explanations: &[&Explanation],
    sparsity_k: f64,
) -> Result<(f64, f64), MetricsError> {
    if graphs.len() != explanations.len() {
        return Err(MetricsError::Misaligned(format!(
            "{} graphs vs {} explanations",
            graphs.len(),
            explanations.len()
        )));
    }
    let mut retained = 0usize;
    let mut plus_hits = 0usize;
    let mut minus_hits = 0usize;
    for (g, expl) in graphs.iter().zip(explanations) {
        if predict(model, g)? != g.label {
            continue;
        }
        retained += 1;
        let keep_nodes = top_k_nodes(&expl.mask, sparsity_k);
        let y_keep = predict(model, &induced_subgraph(g, &keep_nodes)?)?;
        if y_keep == g.label {
            plus_hits += 1;
        }
        let rest = complement_nodes(g.n, &keep_nodes);
        let y_rest = if rest.is_empty() {
            let p = forward(model, g, &vec![0.0; g.n])?;
            crate::gnn::argmax(&p)
        } else {
            predict(model, &induced_subgraph(g, &rest)?)?
        };
        if y_rest == g.label {
            minus_hits += 1;
        }
    }
    if retained == 0 {
        return Err(MetricsError::NoRetainedSamples);
    }
    Ok((
        plus_hits as f64 / retained as f64,
        minus_hits as f64 / retained as f64,
    ))
}

/// Count of retained (correctly classified) graphs.
pub fn retained_count(model: &GnnModel, graphs: &[&Graph]) -> Result<usize, MetricsError> {
    let mut retained = 0;
    for g in graphs {
        if predict(model, g)? == g.label {
            retained += 1;
        }
    }
    Ok(retained)
}

/// A histogram normalized to a probability density, or all-zero for an
/// empty sample (flagged by `sample_count == 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramPdf {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub sample_count: usize,
}

impl HistogramPdf {
    pub fn bin_count(&self) -> usize {
        self.densities.len()
    }
}

/// Equal-width histogram over `[lo, hi]` normalized to a density; values
/// outside the range are clamped into the boundary bins.
pub fn build_histogram(
    values: &[f64],
    bins: usize,
    range: (f64, f64),
) -> Result<HistogramPdf, MetricsError> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(MetricsError::InvalidHistogram("need at least one bin".into()));
    }
    // negated form also rejects NaN bounds
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(hi > lo) {
        return Err(MetricsError::InvalidHistogram(format!(
            "range must satisfy lo < hi, got ({lo}, {hi})"
        )));
    }
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
    }
    let densities = if values.is_empty() {
        vec![0.0; bins]
    } else {
        counts
            .iter()
            .map(|&c| c as f64 / (values.len() as f64 * width))
            .collect()
    };
    Ok(HistogramPdf {
        bin_edges,
        densities,
        sample_count: values.len(),
    })
}

/// First Wasserstein distance between two histogram densities on identical
/// bins: the bin-width-weighted sum of absolute CDF differences.
pub fn wasserstein_1d(p: &HistogramPdf, q: &HistogramPdf) -> Result<f64, MetricsError> {
    if p.bin_edges != q.bin_edges {
        return Err(MetricsError::BinMismatch(format!(
            "{} vs {} edges",
            p.bin_edges.len(),
            q.bin_edges.len()
        )));
    }
    let mut cum_p = 0.0;
    let mut cum_q = 0.0;
    let mut dist = 0.0;
    for b in 0..p.bin_count() {
        let width = p.bin_edges[b + 1] - p.bin_edges[b];
        cum_p += p.densities[b] * width;
        cum_q += q.densities[b] * width;
        dist += (cum_p - cum_q).abs() * width;
    }
    Ok(dist)
}

/// Mean Wasserstein distance over a concept's attribute histograms.
pub fn concept_distance(
    class_x: &[&HistogramPdf],
    class_y: &[&HistogramPdf],
) -> Result<f64, MetricsError> {
    if class_x.is_empty() || class_x.len() != class_y.len() {
        return Err(MetricsError::Misaligned(
            "concept histogram lists must be nonempty and aligned".into(),
        ));
    }
    let mut total = 0.0;
    for (hx, hy) in class_x.iter().zip(class_y) {
        total += wasserstein_1d(hx, hy)?;
    }
    Ok(total / class_x.len() as f64)
}

/// Trapezoidal area under `d(k)` over the sparsity set, normalized by the
/// sparsity range; a single point yields its own value.
pub fn auc_over_sparsity(points: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    if points.len() == 1 {
        return Ok(points[0].1);
    }
    let mut area = 0.0;
    for w in points.windows(2) {
        let (k0, d0) = w[0];
        let (k1, d1) = w[1];
        area += 0.5 * (d0 + d1) * (k1 - k0);
    }
    let span = points[points.len() - 1].0 - points[0].0;
    Ok(area / span)
}

/// Symmetric nonnegative misclassification risks with zero diagonal; the
/// neutral default weighs every class pair equally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMatrix {
    pub values: Vec<Vec<f64>>,
}

impl RiskMatrix {
    pub fn ones(class_count: usize) -> Self {
        let values = (0..class_count)
            .map(|i| {
                (0..class_count)
                    .map(|j| if i == j { 0.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        RiskMatrix { values }
    }

    pub fn class_count(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x][y]
    }

    pub fn validate(&self, class_count: usize) -> Result<(), MetricsError> {
        if self.values.len() != class_count || self.values.iter().any(|r| r.len() != class_count) {
            return Err(MetricsError::InvalidRisk(format!(
                "expected {class_count}x{class_count} matrix"
            )));
        }
        for i in 0..class_count {
            if self.values[i][i] != 0.0 {
                return Err(MetricsError::InvalidRisk(format!("diagonal entry ({i},{i}) nonzero")));
            }
            for j in 0..class_count {
                let v = self.values[i][j];
                if v < 0.0 || !v.is_finite() {
                    return Err(MetricsError::InvalidRisk(format!("entry ({i},{j}) = {v}")));
                }
                if (v - self.values[j][i]).abs() > 1e-12 {
                    return Err(MetricsError::InvalidRisk(format!("asymmetry at ({i},{j})")));
                }
            }
        }
        Ok(())
    }
}

/// Area under the ROC curve of mask values ranking motif vs non-motif
/// nodes; tied values count half. Returns `None` when the graph has no
/// usable ground truth (missing, empty, or all-covering motif set).
pub fn ranking_auc(mask: &[f64], motif_nodes: &[usize]) -> Option<f64> {
    let n = mask.len();
    let mut is_motif = vec![false; n];
    for &m in motif_nodes {
        if m >= n {
            return None;
        }
        is_motif[m] = true;
    }
    let positives: Vec<f64> = (0..n).filter(|&i| is_motif[i]).map(|i| mask[i]).collect();
    let negatives: Vec<f64> = (0..n).filter(|&i| !is_motif[i]).map(|i| mask[i]).collect();
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut score = 0.0;
    for &p in &positives {
        for &q in &negatives {
            if p > q {
                score += 1.0;
            } else if p == q {
                score += 0.5;
            }
        }
    }
    Some(score / (positives.len() as f64 * negatives.len() as f64))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotifRecoveryReport {
    pub explainer: String,
    /// (graph position in the evaluated slice, score); graphs without
    /// ground truth are skipped.
    pub per_graph: Vec<(usize, f64)>,
    pub mean: f64,
}

/// Scores each explanation's mask as a ranking of the ground-truth motif
/// nodes. Graphs without recorded motif nodes are skipped.
pub fn motif_recovery(
    graphs: &[&Graph],
    explanations: &[&Explanation],
    explainer: &str,
) -> Result<MotifRecoveryReport, MetricsError> {
    if graphs.len() != explanations.len() {
        return Err(MetricsError::Misaligned(format!(
            "{} graphs vs {} explanations",
            graphs.len(),
            explanations.len()
        )));
    }
    let mut per_graph = Vec::new();
    for (i, (g, expl)) in graphs.iter().zip(explanations).enumerate() {
        let Some(motif) = &g.motif_nodes else { continue };
        if let Some(score) = ranking_auc(&expl.mask, motif) {
            per_graph.push((i, score));
        }
    }
    if per_graph.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let mean = per_graph.iter().map(|&(_, s)| s).sum::<f64>() / per_graph.len() as f64;
    Ok(MotifRecoveryReport {
        explainer: explainer.to_string(),
        per_graph,
        mean,
    })
}

/// Per-sparsity fidelity curve for one explainer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityReport {
    pub explainer: String,
    pub retained: usize,
    pub rows: Vec<FidelityRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityRow {
    pub k: f64,
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
}

pub fn fidelity_curve(
    model: &GnnModel,
    graphs: &[&Graph],
    explanations: &[&Explanation],
    sparsity_set: &[f64],
    explainer: &str,
) -> Result<FidelityReport, MetricsError> {
    let mut rows = Vec::with_capacity(sparsity_set.len());
    for &k in sparsity_set {
        let (plus, minus) = fidelity_scores(model, graphs, explanations, k)?;
        rows.push(FidelityRow {
            k,
            fidelity_plus: plus,
            fidelity_minus: minus,
        });
    }
    Ok(FidelityReport {
        explainer: explainer.to_string(),
        retained: retained_count(model, graphs)?,
        rows,
    })
}

/// Flat CSV for external plotting, one row per (explainer, sparsity).
pub fn fidelity_csv(reports: &[FidelityReport]) -> String {
    let mut out = String::from("explainer,k,fidelity_plus,fidelity_minus\n");
    for r in reports {
        for row in &r.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.explainer, row.k, row.fidelity_plus, row.fidelity_minus
            ));
        }
    }
    out
}
