//! A desk-scale toolkit for explaining graph classifiers.
//!
//! The pieces, in dependency order:
//!
//! - [`graph`] / [`synth`]: attributed graph data model and a synthetic
//!   planted-motif benchmark generator with ground-truth explanation nodes.
//! - [`gnn`]: a masked graph convolutional classifier with exact
//!   reverse-mode gradients for both parameters and the node mask (built on
//!   the small tape in [`tape`]).
//! - [`explainer`]: soft-mask explanation optimizers (the information-flow
//!   method and four baselines).
//! - [`metrics`] / [`separability`]: fidelity scores, variational
//!   information estimators, Wasserstein-based class-separability scores,
//!   and ground-truth motif recovery.
//! - [`pipeline`]: file-driven orchestration of the five stages with a
//!   single run seed.

pub mod explainer;
pub mod gnn;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod separability;
pub mod synth;
pub mod tape;
pub mod util;

pub use explainer::{
    explain, explain_cf, explain_gradient, explain_ifx, explain_mi, explain_random, Explanation,
    ExplainerConfig, ExplainerKind,
};
pub use gnn::{forward, grad, masked_adjacency, predict, train, GnnModel, LossSpec, TrainConfig};
pub use graph::{
    induced_subgraph, load_dataset, save_dataset, top_k_nodes, AttributeSchema, Dataset, Graph,
    Splits,
};
pub use metrics::{
    build_histogram, f_cond_entropy, f_entropy, f_information, fidelity_scores, motif_recovery,
    wasserstein_1d, HistogramPdf, RiskMatrix,
};
pub use pipeline::{cmd_evaluate, cmd_explain, cmd_generate, cmd_report, cmd_train, RunConfig};
pub use separability::{aggregate_attributes, separability_report, SeparabilityReport};
pub use synth::{generate_dataset, GeneratorConfig};
