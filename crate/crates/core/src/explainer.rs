//! Per-instance explanation generators.
//!
//! The main explainer ("ifx") optimizes a soft node mask so that the masked
//! graph keeps the model's prediction while the complement loses it, under
//! a size budget and an entropy push toward binary masks. The baselines
//! reuse the same optimizer with reduced objectives (retention-only "mi",
//! removal-only "cf"), or skip optimization entirely (input-gradient
//! saliency, uniform random).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnn::{forward, grad, predict, GnnError, GnnModel, LossSpec};
use crate::graph::{top_k_nodes, Graph};
use crate::tape::{binary_entropy, sigmoid};
use crate::util::sparsity_key;

#[derive(Error, Debug)]
pub enum ExplainError {
    #[error("explainer config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at optimization step {step}")]
    NonFiniteLoss { step: usize },
    #[error(transparent)]
    Gnn(#[from] GnnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerConfig {
    /// Mask size weight.
    pub beta: f64,
    /// Mask entropy weight.
    pub gamma: f64,
    pub steps: usize,
    pub step_size: f64,
    pub init_logit_std: f64,
    pub sparsity_set: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            beta: 0.05,
            gamma: 0.1,
            steps: 300,
            step_size: 0.05,
            init_logit_std: 0.1,
            sparsity_set: default_sparsity_set(),
            seed: 0,
        }
    }
}

/// 1% through 10% in 1% increments.
pub fn default_sparsity_set() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 100.0).collect()
}

/// Sparsity sets must be nonempty, strictly increasing, and within (0, 1].
pub fn validate_sparsity_set(sparsity_set: &[f64]) -> Result<(), ExplainError> {
    if sparsity_set.is_empty() {
        return Err(ExplainError::InvalidConfig("sparsity_set must be nonempty".into()));
    }
    let mut prev = 0.0;
    for &k in sparsity_set {
        if !(k > prev && k <= 1.0) {
            return Err(ExplainError::InvalidConfig(format!(
                "sparsity set must be strictly increasing within (0, 1]; offending value {k}"
            )));
        }
        prev = k;
    }
    Ok(())
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.beta < 0.0 || self.gamma < 0.0 {
            return Err(ExplainError::InvalidConfig(
                "beta and gamma must be nonnegative".into(),
            ));
        }
        if self.step_size <= 0.0 {
            return Err(ExplainError::InvalidConfig("step_size must be positive".into()));
        }
        if self.init_logit_std < 0.0 {
            return Err(ExplainError::InvalidConfig(
                "init_logit_std must be nonnegative".into(),
            ));
        }
        validate_sparsity_set(&self.sparsity_set)
    }
}

/// One optimization step's loss components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub l_f: f64,
    pub l_size: f64,
    pub l_ent: f64,
    pub total: f64,
}

/// A soft node mask plus its optimization trace and the derived hard
/// subgraphs per sparsity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    #[serde(rename = "explainer")]
    pub explainer_name: String,
    pub mask: Vec<f64>,
    pub loss_trace: Vec<LossRecord>,
    pub hard_subgraphs: BTreeMap<String, Vec<usize>>,
}

impl Explanation {
    fn from_mask(name: &str, mask: Vec<f64>, trace: Vec<LossRecord>, sparsity_set: &[f64]) -> Self {
        let hard_subgraphs = sparsity_set
            .iter()
            .map(|&k| (sparsity_key(k), top_k_nodes(&mask, k)))
            .collect();
        Explanation {
            explainer_name: name.to_string(),
            mask,
            loss_trace: trace,
            hard_subgraphs,
        }
    }

    pub fn hard_subgraph(&self, k: f64) -> Option<&Vec<usize>> {
        self.hard_subgraphs.get(&sparsity_key(k))
    }
}

/// Mask sum.
pub fn loss_size(mask: &[f64]) -> f64 {
    mask.iter().sum()
}

/// Summed binary entropy of the mask entries, natural log, with the
/// 0 log 0 = 0 convention so exactly-binary masks score 0.
pub fn loss_entropy(mask: &[f64]) -> f64 {
    mask.iter().map(|&m| binary_entropy(m)).sum()
}

/// Guarded keep/remove objective from class probabilities:
/// `max(ln p_remove[y], min_{j != y} ln p_remove[j]) - ln p_keep[y]`.
///
/// The inner max floors the removal term at the smallest other-class
/// log-probability so the loss cannot diverge to negative infinity.
pub fn minimax_from_probs(p_keep: &[f64], p_remove: &[f64], y: usize) -> Result<f64, ExplainError> {
    if p_keep.len() < 2 {
        return Err(ExplainError::Gnn(GnnError::NeedTwoClasses));
    }
    Ok(removal_guard_from_probs(p_remove, y) - p_keep[y].ln())
}

fn removal_guard_from_probs(p_remove: &[f64], y: usize) -> f64 {
    let own = p_remove[y].ln();
    let mut min_other = f64::INFINITY;
    for (j, &p) in p_remove.iter().enumerate() {
        if j != y && p.ln() < min_other {
            min_other = p.ln();
        }
    }
    own.max(min_other)
}

fn inverted(mask: &[f64]) -> Vec<f64> {
    mask.iter().map(|&m| 1.0 - m).collect()
}

/// Guarded information-flow data term evaluated through two forward passes
/// (mask and its complement).
pub fn loss_f_minimax(
    model: &GnnModel,
    graph: &Graph,
    mask: &[f64],
    y: usize,
) -> Result<f64, ExplainError> {
    let p_keep = forward(model, graph, mask)?;
    let p_remove = forward(model, graph, &inverted(mask))?;
    minimax_from_probs(&p_keep, &p_remove, y)
}

/// Unguarded keep/remove gap `ln p_remove[y] - ln p_keep[y]`.
pub fn loss_f_plain(
    model: &GnnModel,
    graph: &Graph,
    mask: &[f64],
    y: usize,
) -> Result<f64, ExplainError> {
    let p_keep = forward(model, graph, mask)?;
    let p_remove = forward(model, graph, &inverted(mask))?;
    Ok(p_remove[y].ln() - p_keep[y].ln())
}

/// Full objective: guarded data term plus `beta * size + gamma * entropy`.
pub fn total_loss(
    model: &GnnModel,
    graph: &Graph,
    mask: &[f64],
    y: usize,
    beta: f64,
    gamma: f64,
) -> Result<f64, ExplainError> {
    Ok(loss_f_minimax(model, graph, mask, y)? + beta * loss_size(mask) + gamma * loss_entropy(mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Objective {
    /// Keep the prediction on the mask, lose it on the complement.
    InfoFlow,
    /// Keep the prediction on the mask only.
    Retention,
    /// Lose the prediction on the complement only.
    Removal,
}

impl Objective {
    fn name(self) -> &'static str {
        match self {
            Objective::InfoFlow => "ifx",
            Objective::Retention => "mi",
            Objective::Removal => "cf",
        }
    }

    fn spec(self, y: usize, beta: f64, gamma: f64) -> LossSpec {
        match self {
            Objective::InfoFlow => LossSpec::ExplainTotal { target: y, beta, gamma },
            Objective::Retention => LossSpec::KeepNllTotal { target: y, beta, gamma },
            Objective::Removal => LossSpec::RemovalTotal { target: y, beta, gamma },
        }
    }

    fn data_term(
        self,
        model: &GnnModel,
        graph: &Graph,
        mask: &[f64],
        y: usize,
    ) -> Result<f64, ExplainError> {
        match self {
            Objective::InfoFlow => loss_f_minimax(model, graph, mask, y),
            Objective::Retention => {
                let p = forward(model, graph, mask)?;
                Ok(-p[y].ln())
            }
            Objective::Removal => {
                let p_remove = forward(model, graph, &inverted(mask))?;
                if p_remove.len() < 2 {
                    return Err(ExplainError::Gnn(GnnError::NeedTwoClasses));
                }
                Ok(removal_guard_from_probs(&p_remove, y))
            }
        }
    }
}

/// Shared gradient-descent loop over sigmoid-parametrized mask logits.
/// Returns the mask with the lowest recorded total loss; the trace holds
/// one record per visited iterate (steps + 1 entries).
fn optimize_mask(
    model: &GnnModel,
    graph: &Graph,
    config: &ExplainerConfig,
    objective: Objective,
) -> Result<Explanation, ExplainError> {
    config.validate()?;
    let y = predict(model, graph)?;
    let n = graph.n;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = vec![0.0; n];
    if config.init_logit_std > 0.0 {
        let dist = Normal::new(0.0, config.init_logit_std).expect("valid std");
        for t in theta.iter_mut() {
            *t = dist.sample(&mut rng);
        }
    }

    let spec = objective.spec(y, config.beta, config.gamma);
    let mut trace = Vec::with_capacity(config.steps + 1);
    let mut best_total = f64::INFINITY;
    let mut best_mask: Vec<f64> = Vec::new();

    for step in 0..=config.steps {
        let mask: Vec<f64> = theta.iter().map(|&t| sigmoid(t)).collect();
        let l_f = objective.data_term(model, graph, &mask, y)?;
        let l_size = loss_size(&mask);
        let l_ent = loss_entropy(&mask);
        let total = l_f + config.beta * l_size + config.gamma * l_ent;
        if !total.is_finite() {
            return Err(ExplainError::NonFiniteLoss { step });
        }
        trace.push(LossRecord {
            l_f,
            l_size,
            l_ent,
            total,
        });
        if total < best_total {
            best_total = total;
            best_mask = mask.clone();
        }
        if step == config.steps {
            break;
        }
        let (_, mask_grad, _) = grad(model, graph, &mask, spec)?;
        for i in 0..n {
            let g_theta = mask_grad[i] * mask[i] * (1.0 - mask[i]);
            theta[i] -= config.step_size * g_theta;
        }
    }

    Ok(Explanation::from_mask(
        objective.name(),
        best_mask,
        trace,
        &config.sparsity_set,
    ))
}

/// Information-flow explainer: maximizes the prediction's log-probability
/// on the masked graph while driving it down on the complement, under the
/// size and entropy regularizers.
pub fn explain_ifx(
    model: &GnnModel,
    graph: &Graph,
    config: &ExplainerConfig,
) -> Result<Explanation, ExplainError> {
    optimize_mask(model, graph, config, Objective::InfoFlow)
}

/// Retention-only baseline: same loop minimizing
/// `-ln p_keep[y] + beta * size + gamma * entropy`.
pub fn explain_mi(
    model: &GnnModel,
    graph: &Graph,
    config: &ExplainerConfig,
) -> Result<Explanation, ExplainError> {
    optimize_mask(model, graph, config, Objective::Retention)
}

/// Removal-only baseline: same loop minimizing the guarded removal term
/// plus the regularizers. The mask marks the removed-if-flipped region and
/// is reported as importance directly.
pub fn explain_cf(
    model: &GnnModel,
    graph: &Graph,
    config: &ExplainerConfig,
) -> Result<Explanation, ExplainError> {
    optimize_mask(model, graph, config, Objective::Removal)
}

/// Input-gradient saliency: `|d ln p[y] / d M_i|` at the all-ones mask,
/// max-normalized into [0, 1]. An all-zero gradient yields the zero mask.
pub fn explain_gradient(
    model: &GnnModel,
    graph: &Graph,
    sparsity_set: &[f64],
) -> Result<Explanation, ExplainError> {
    let y = predict(model, graph)?;
    let ones = vec![1.0; graph.n];
    let (_, mask_grad, _) = grad(model, graph, &ones, LossSpec::LogProb { class: y })?;
    let saliency: Vec<f64> = mask_grad.iter().map(|g| g.abs()).collect();
    let max = saliency.iter().cloned().fold(0.0f64, f64::max);
    let mask = if max > 0.0 {
        saliency.iter().map(|s| s / max).collect()
    } else {
        vec![0.0; graph.n]
    };
    Ok(Explanation::from_mask("gradient", mask, Vec::new(), sparsity_set))
}

/// Control baseline: mask drawn uniformly on [0, 1]^n from the seed.
pub fn explain_random(graph: &Graph, sparsity_set: &[f64], seed: u64) -> Explanation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask: Vec<f64> = (0..graph.n).map(|_| rng.random::<f64>()).collect();
    Explanation::from_mask("random", mask, Vec::new(), sparsity_set)
}

/// The explainers this toolkit ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplainerKind {
    Ifx,
    Mi,
    Cf,
    Gradient,
    Random,
}

impl ExplainerKind {
    pub const ALL: [ExplainerKind; 5] = [
        ExplainerKind::Ifx,
        ExplainerKind::Mi,
        ExplainerKind::Cf,
        ExplainerKind::Gradient,
        ExplainerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExplainerKind::Ifx => "ifx",
            ExplainerKind::Mi => "mi",
            ExplainerKind::Cf => "cf",
            ExplainerKind::Gradient => "gradient",
            ExplainerKind::Random => "random",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for ExplainerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs the named explainer on one graph.
pub fn explain(
    kind: ExplainerKind,
    model: &GnnModel,
    graph: &Graph,
    config: &ExplainerConfig,
) -> Result<Explanation, ExplainError> {
    match kind {
        ExplainerKind::Ifx => explain_ifx(model, graph, config),
        ExplainerKind::Mi => explain_mi(model, graph, config),
        ExplainerKind::Cf => explain_cf(model, graph, config),
        ExplainerKind::Gradient => explain_gradient(model, graph, &config.sparsity_set),
        ExplainerKind::Random => Ok(explain_random(graph, &config.sparsity_set, config.seed)),
    }
}
