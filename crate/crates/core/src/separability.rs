//! Subgraph-level separability scoring.
//!
//! For every retained graph and sparsity level, the explanation's top-k
//! nodes and their complement are summarized by mask-weighted attribute
//! means. Per class, attribute, and sparsity these summaries become
//! histograms; Wasserstein distances between class pairs, averaged within
//! concepts and integrated over sparsity, yield the predictive scores `S`
//! (explanatory side) and counterfactual scores `C` (complement side),
//! reported pair-wise, aggregated over pairs, and risk-weighted.

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use crate::explainer::Explanation;
use crate::gnn::{predict, GnnModel};
use crate::graph::{complement_nodes, top_k_nodes, AttributeSchema, Graph};
use crate::metrics::{
    auc_over_sparsity, build_histogram, wasserstein_1d, HistogramPdf, MetricsError, RiskMatrix,
};

/// How complement-side nodes are weighted during attribute aggregation.
///
/// Under the masking convention the complement's membership weight is
/// `1 - M_i`, which is the default. The literal variant reuses `M_i` on the
/// complement as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ComplementWeighting {
    #[default]
    OneMinusMask,
    MaskLiteral,
}

/// Mask-weighted mean attributes of the top-k node set and its complement.
///
/// The complement is `None` when k selects every node. A degenerate weight
/// sum (all weights zero) falls back to the unweighted mean, so the result
/// is always a convex combination of the contributing nodes' attributes.
pub fn aggregate_attributes(
    graph: &Graph,
    mask: &[f64],
    sparsity_k: f64,
    weighting: ComplementWeighting,
) -> Result<(Vec<f64>, Option<Vec<f64>>), MetricsError> {
    if mask.len() != graph.n {
        return Err(MetricsError::Misaligned(format!(
            "mask length {} != node count {}",
            mask.len(),
            graph.n
        )));
    }
    let selected = top_k_nodes(mask, sparsity_k);
    let rest = complement_nodes(graph.n, &selected);
    let weighted = |nodes: &[usize], weight: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let d = graph.feature_dim();
        let wsum: f64 = nodes.iter().map(|&i| weight(i)).sum();
        let mut out = vec![0.0; d];
        if wsum > 0.0 {
            for &i in nodes {
                let w = weight(i);
                for (o, &x) in out.iter_mut().zip(&graph.features[i]) {
                    *o += w * x;
                }
            }
            for o in out.iter_mut() {
                *o /= wsum;
            }
        } else {
            for &i in nodes {
                for (o, &x) in out.iter_mut().zip(&graph.features[i]) {
                    *o += x;
                }
            }
            for o in out.iter_mut() {
                *o /= nodes.len() as f64;
            }
        }
        out
    };
    let a_keep = weighted(&selected, &|i| mask[i]);
    let a_rest = if rest.is_empty() {
        None
    } else {
        let w: Box<dyn Fn(usize) -> f64> = match weighting {
            ComplementWeighting::OneMinusMask => Box::new(|i| 1.0 - mask[i]),
            ComplementWeighting::MaskLiteral => Box::new(|i| mask[i]),
        };
        Some(weighted(&rest, &w))
    };
    Ok((a_keep, a_rest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Explanatory,
    Complement,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Explanatory => "explanatory",
            Side::Complement => "complement",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityOptions {
    pub bins: usize,
    pub complement_weighting: ComplementWeighting,
}

impl Default for SeparabilityOptions {
    fn default() -> Self {
        SeparabilityOptions {
            bins: 20,
            complement_weighting: ComplementWeighting::default(),
        }
    }
}

/// Sparsity-integrated concept distance for one class pair, both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub pair: (usize, usize),
    pub concept: String,
    pub explanatory: f64,
    pub complement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub pair: (usize, usize),
    pub s_max: f64,
    pub s_ave: f64,
    pub c_max: f64,
    pub c_ave: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateScores {
    pub s_max: f64,
    pub s_ave: f64,
    pub c_max: f64,
    pub c_ave: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub explainer: String,
    pub class_names: Vec<String>,
    pub sparsity_set: Vec<f64>,
    pub retained: usize,
    pub concept_scores: Vec<ConceptScore>,
    pub pair_scores: Vec<PairScores>,
    pub aggregated: AggregateScores,
    pub risk_aggregated: AggregateScores,
}

/// Runs the full separability pipeline for one explainer's explanations
/// over an evaluation split. Misclassified graphs are filtered out first,
/// consistently with the fidelity metrics.
#[allow(clippy::too_many_arguments)]
pub fn separability_report(
    model: &GnnModel,
    graphs: &[&Graph],
    explanations: &[&Explanation],
    schema: &AttributeSchema,
    class_names: &[String],
    sparsity_set: &[f64],
    risk: &RiskMatrix,
    options: &SeparabilityOptions,
    explainer: &str,
) -> Result<SeparabilityReport, MetricsError> {
    if graphs.len() != explanations.len() {
        return Err(MetricsError::Misaligned(format!(
            "{} graphs vs {} explanations",
            graphs.len(),
            explanations.len()
        )));
    }
    if schema.concepts.is_empty() {
        return Err(MetricsError::Misaligned("schema defines no concepts".into()));
    }
    let class_count = class_names.len();
    risk.validate(class_count)?;

    let mut retained: Vec<(&Graph, &Explanation)> = Vec::new();
    for (g, e) in graphs.iter().zip(explanations) {
        if predict(model, g)? == g.label {
            retained.push((g, e));
        }
    }
    if retained.is_empty() {
        return Err(MetricsError::NoRetainedSamples);
    }
    let d = retained[0].0.feature_dim();
    let kn = sparsity_set.len();

    // samples[side][k][class][attr]
    let mut samples: [Vec<Vec<Vec<Vec<f64>>>>; 2] =
        [make_store(kn, class_count, d), make_store(kn, class_count, d)];
    for (g, e) in &retained {
        for (ki, &k) in sparsity_set.iter().enumerate() {
            let (a_keep, a_rest) =
                aggregate_attributes(g, &e.mask, k, options.complement_weighting)?;
            for (attr, &v) in a_keep.iter().enumerate() {
                samples[0][ki][g.label][attr].push(v);
            }
            if let Some(rest) = a_rest {
                for (attr, &v) in rest.iter().enumerate() {
                    samples[1][ki][g.label][attr].push(v);
                }
            }
        }
    }
    for (side_idx, side) in [(0, Side::Explanatory), (1, Side::Complement)] {
        for (ki, &k) in sparsity_set.iter().enumerate() {
            for class in 0..class_count {
                if samples[side_idx][ki][class][0].is_empty() {
                    return Err(MetricsError::NoSamples {
                        class,
                        k,
                        side: side.label().to_string(),
                    });
                }
            }
        }
    }

    // per-side per-attribute histogram range over all classes and ks
    let mut ranges: [Vec<(f64, f64)>; 2] = [vec![(0.0, 0.0); d], vec![(0.0, 0.0); d]];
    for side in 0..2 {
        for attr in 0..d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for ki in 0..kn {
                for class in 0..class_count {
                    for &v in &samples[side][ki][class][attr] {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
            }
            // negated form also catches NaN samples
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(hi > lo) {
                // all samples identical; widen so the histogram is valid
                lo -= 0.5;
                hi += 0.5;
            }
            ranges[side][attr] = (lo, hi);
        }
    }

    // hists[side][k][class][attr]
    let mut hists: [Vec<Vec<Vec<HistogramPdf>>>; 2] = [Vec::new(), Vec::new()];
    for side in 0..2 {
        for ki in 0..kn {
            let mut per_class = Vec::with_capacity(class_count);
            for class in 0..class_count {
                let mut per_attr = Vec::with_capacity(d);
                for attr in 0..d {
                    per_attr.push(build_histogram(
                        &samples[side][ki][class][attr],
                        options.bins,
                        ranges[side][attr],
                    )?);
                }
                per_class.push(per_attr);
            }
            hists[side].push(per_class);
        }
    }

    let mut concept_scores = Vec::new();
    let mut pair_scores = Vec::new();
    let mut aggregated = AggregateScores {
        s_max: 0.0,
        s_ave: 0.0,
        c_max: 0.0,
        c_ave: 0.0,
    };
    let mut risk_aggregated = aggregated;

    for x in 0..class_count {
        for y in (x + 1)..class_count {
            let mut side_scores = [Vec::new(), Vec::new()]; // D_c per concept
            for (concept_name, cols) in &schema.concepts {
                for side in 0..2 {
                    let mut curve = Vec::with_capacity(kn);
                    for (ki, &k) in sparsity_set.iter().enumerate() {
                        let mut total = 0.0;
                        for &attr in cols {
                            total += wasserstein_1d(
                                &hists[side][ki][x][attr],
                                &hists[side][ki][y][attr],
                            )?;
                        }
                        curve.push((k, total / cols.len() as f64));
                    }
                    side_scores[side].push(auc_over_sparsity(&curve)?);
                }
                concept_scores.push(ConceptScore {
                    pair: (x, y),
                    concept: concept_name.clone(),
                    explanatory: *side_scores[0].last().unwrap(),
                    complement: *side_scores[1].last().unwrap(),
                });
            }
            let maxed = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let scores = PairScores {
                pair: (x, y),
                s_max: maxed(&side_scores[0]),
                s_ave: mean(&side_scores[0]),
                c_max: maxed(&side_scores[1]),
                c_ave: mean(&side_scores[1]),
            };
            let r = risk.get(x, y);
            aggregated.s_max += scores.s_max;
            aggregated.s_ave += scores.s_ave;
            aggregated.c_max += scores.c_max;
            aggregated.c_ave += scores.c_ave;
            risk_aggregated.s_max += r * scores.s_max;
            risk_aggregated.s_ave += r * scores.s_ave;
            risk_aggregated.c_max += r * scores.c_max;
            risk_aggregated.c_ave += r * scores.c_ave;
            pair_scores.push(scores);
        }
    }

    Ok(SeparabilityReport {
        explainer: explainer.to_string(),
        class_names: class_names.to_vec(),
        sparsity_set: sparsity_set.to_vec(),
        retained: retained.len(),
        concept_scores,
        pair_scores,
        aggregated,
        risk_aggregated,
    })
}

fn make_store(kn: usize, classes: usize, d: usize) -> Vec<Vec<Vec<Vec<f64>>>> {
    vec![vec![vec![Vec::new(); d]; classes]; kn]
}

/// Flat CSV rows for external plotting: concept distances plus per-pair and
/// aggregated summary rows.
pub fn separability_csv(reports: &[SeparabilityReport]) -> String {
    let mut out = String::from("explainer,side,pair,concept,D_c\n");
    for r in reports {
        let pair_name =
            |&(x, y): &(usize, usize)| format!("{}|{}", r.class_names[x], r.class_names[y]);
        for c in &r.concept_scores {
            out.push_str(&format!(
                "{},explanatory,{},{},{}\n",
                r.explainer,
                pair_name(&c.pair),
                c.concept,
                c.explanatory
            ));
            out.push_str(&format!(
                "{},complement,{},{},{}\n",
                r.explainer,
                pair_name(&c.pair),
                c.concept,
                c.complement
            ));
        }
        for p in &r.pair_scores {
            let pn = pair_name(&p.pair);
            out.push_str(&format!("{},explanatory,{pn},(max),{}\n", r.explainer, p.s_max));
            out.push_str(&format!("{},explanatory,{pn},(ave),{}\n", r.explainer, p.s_ave));
            out.push_str(&format!("{},complement,{pn},(max),{}\n", r.explainer, p.c_max));
            out.push_str(&format!("{},complement,{pn},(ave),{}\n", r.explainer, p.c_ave));
        }
        for (tag, a) in [("all", r.aggregated), ("all_risk", r.risk_aggregated)] {
            out.push_str(&format!("{},explanatory,({tag}),(max),{}\n", r.explainer, a.s_max));
            out.push_str(&format!("{},explanatory,({tag}),(ave),{}\n", r.explainer, a.s_ave));
            out.push_str(&format!("{},complement,({tag}),(max),{}\n", r.explainer, a.c_max));
            out.push_str(&format!("{},complement,({tag}),(ave),{}\n", r.explainer, a.c_ave));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainer::explain_random;
    use crate::gnn::GnnModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feature_argmax_model(d: usize, scale: f64) -> GnnModel {
        let mut m = GnnModel::zeros(d, vec![], d);
        for i in 0..d {
            m.layer_weights[0].set(i, i, scale);
        }
        m
    }

    #[test]
    fn aggregate_uniform_mask_is_plain_mean() {
        let g = Graph::new(
            3,
            vec![(0, 1)],
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            0,
        )
        .unwrap();
        let (a, _) =
            aggregate_attributes(&g, &[0.4, 0.4, 0.4], 1.0, ComplementWeighting::OneMinusMask)
                .unwrap();
        assert!((a[0] - 3.0).abs() < 1e-12);
        assert!((a[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_single_node_passthrough() {
        let g = Graph::new(2, vec![(0, 1)], vec![vec![7.0], vec![1.0]], 0).unwrap();
        let (a, rest) =
            aggregate_attributes(&g, &[0.9, 0.2], 0.5, ComplementWeighting::OneMinusMask).unwrap();
        assert_eq!(a, vec![7.0]);
        assert_eq!(rest, Some(vec![1.0]));
    }

    #[test]
    fn aggregate_matches_weighted_sum_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        let features: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
            .collect();
        let g = Graph::new(n, vec![(0, 1), (2, 3)], features.clone(), 0).unwrap();
        let mask: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let k = 0.5;
        let (a, rest) =
            aggregate_attributes(&g, &mask, k, ComplementWeighting::OneMinusMask).unwrap();

        let selected = top_k_nodes(&mask, k);
        let wsum: f64 = selected.iter().map(|&i| mask[i]).sum();
        for attr in 0..3 {
            let direct: f64 = selected.iter().map(|&i| mask[i] * features[i][attr]).sum();
            assert!((a[attr] - direct / wsum).abs() < 1e-12);
        }
        let rest_nodes = complement_nodes(n, &selected);
        let rsum: f64 = rest_nodes.iter().map(|&i| 1.0 - mask[i]).sum();
        let rest = rest.unwrap();
        for attr in 0..3 {
            let direct: f64 = rest_nodes
                .iter()
                .map(|&i| (1.0 - mask[i]) * features[i][attr])
                .sum();
            assert!((rest[attr] - direct / rsum).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_is_convex_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = 2 + (rng.random::<u32>() % 10) as usize;
            let features: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random::<f64>() * 10.0 - 5.0])
                .collect();
            let g = Graph::new(n, vec![], features.clone(), 0).unwrap();
            let mask: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let (a, rest) =
                aggregate_attributes(&g, &mask, 0.4, ComplementWeighting::OneMinusMask).unwrap();
            let selected = top_k_nodes(&mask, 0.4);
            let lo = selected.iter().map(|&i| features[i][0]).fold(f64::INFINITY, f64::min);
            let hi = selected
                .iter()
                .map(|&i| features[i][0])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(a[0] >= lo - 1e-12 && a[0] <= hi + 1e-12);
            if let Some(rest) = rest {
                let rest_nodes = complement_nodes(n, &selected);
                let lo = rest_nodes.iter().map(|&i| features[i][0]).fold(f64::INFINITY, f64::min);
                let hi = rest_nodes
                    .iter()
                    .map(|&i| features[i][0])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(rest[0] >= lo - 1e-12 && rest[0] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn complement_weighting_variants_differ_and_degrade_gracefully() {
        let g = Graph::new(
            4,
            vec![(0, 1)],
            vec![vec![1.0], vec![2.0], vec![5.0], vec![9.0]],
            0,
        )
        .unwrap();
        let mask = [0.9, 0.8, 0.3, 0.1];
        // top-2 = {0, 1}; complement {2, 3}
        let (_, rest_inv) =
            aggregate_attributes(&g, &mask, 0.5, ComplementWeighting::OneMinusMask).unwrap();
        let (_, rest_lit) =
            aggregate_attributes(&g, &mask, 0.5, ComplementWeighting::MaskLiteral).unwrap();
        // one-minus: (0.7*5 + 0.9*9) / 1.6; literal: (0.3*5 + 0.1*9) / 0.4
        assert!((rest_inv.unwrap()[0] - (0.7 * 5.0 + 0.9 * 9.0) / 1.6).abs() < 1e-12);
        assert!((rest_lit.unwrap()[0] - (0.3 * 5.0 + 0.1 * 9.0) / 0.4).abs() < 1e-12);

        // binary mask makes the literal complement weights vanish; fall
        // back to the unweighted mean
        let binary = [1.0, 1.0, 0.0, 0.0];
        let (_, rest) =
            aggregate_attributes(&g, &binary, 0.5, ComplementWeighting::MaskLiteral).unwrap();
        assert!((rest.unwrap()[0] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_complement_absent_at_full_sparsity() {
        let g = Graph::new(2, vec![(0, 1)], vec![vec![1.0], vec![2.0]], 0).unwrap();
        let (_, rest) =
            aggregate_attributes(&g, &[0.3, 0.6], 1.0, ComplementWeighting::OneMinusMask).unwrap();
        assert!(rest.is_none());
    }

    /// Two classes of 2-node graphs: a shared node with identical
    /// attributes and a class-specific node. Masks always point at the
    /// shared node.
    fn shared_node_setup() -> (GnnModel, Vec<Graph>, Vec<Explanation>, AttributeSchema) {
        let model = feature_argmax_model(2, 40.0);
        let mut graphs = Vec::new();
        let mut explanations = Vec::new();
        for rep in 0..12 {
            for label in 0..2 {
                let jitter = rep as f64 * 1e-3;
                let mut class_feat = vec![0.0, 0.0];
                class_feat[label] = 9.0 + jitter;
                let features = vec![vec![2.0 + jitter, 2.0 + jitter], class_feat];
                let g = Graph::new(2, vec![(0, 1)], features, label).unwrap();
                let mut e = explain_random(&g, &[0.5], 0);
                e.mask = vec![0.9, 0.1];
                e.hard_subgraphs = [("0.5".to_string(), vec![0usize])].into_iter().collect();
                graphs.push(g);
                explanations.push(e);
            }
        }
        let schema = AttributeSchema {
            attribute_names: vec!["a0".into(), "a1".into()],
            concepts: vec![("c0".into(), vec![0]), ("c1".into(), vec![1])],
        };
        (model, graphs, explanations, schema)
    }

    #[test]
    fn identical_explanatory_distributions_score_zero_s() {
        let (model, graphs, explanations, schema) = shared_node_setup();
        let refs: Vec<&Graph> = graphs.iter().collect();
        let erefs: Vec<&Explanation> = explanations.iter().collect();
        let names = vec!["b".to_string(), "m".to_string()];
        let report = separability_report(
            &model,
            &refs,
            &erefs,
            &schema,
            &names,
            &[0.5],
            &RiskMatrix::ones(2),
            &SeparabilityOptions::default(),
            "test",
        )
        .unwrap();
        // explanatory side saw identical per-class samples
        assert!(report.pair_scores[0].s_max.abs() < 1e-12);
        assert!(report.pair_scores[0].s_ave.abs() < 1e-12);
        // complement side separates the classes
        assert!(report.pair_scores[0].c_max > 0.1);
    }

    #[test]
    fn single_concept_max_equals_ave() {
        let (model, graphs, explanations, _) = shared_node_setup();
        let schema = AttributeSchema {
            attribute_names: vec!["a0".into(), "a1".into()],
            concepts: vec![("both".into(), vec![0, 1])],
        };
        let refs: Vec<&Graph> = graphs.iter().collect();
        let erefs: Vec<&Explanation> = explanations.iter().collect();
        let names = vec!["b".to_string(), "m".to_string()];
        let report = separability_report(
            &model,
            &refs,
            &erefs,
            &schema,
            &names,
            &[0.5],
            &RiskMatrix::ones(2),
            &SeparabilityOptions::default(),
            "test",
        )
        .unwrap();
        let p = &report.pair_scores[0];
        assert_eq!(p.s_max, p.s_ave);
        assert_eq!(p.c_max, p.c_ave);
    }

    #[test]
    fn unit_risk_matches_aggregated() {
        let (model, graphs, explanations, schema) = shared_node_setup();
        let refs: Vec<&Graph> = graphs.iter().collect();
        let erefs: Vec<&Explanation> = explanations.iter().collect();
        let names = vec!["b".to_string(), "m".to_string()];
        let report = separability_report(
            &model,
            &refs,
            &erefs,
            &schema,
            &names,
            &[0.5],
            &RiskMatrix::ones(2),
            &SeparabilityOptions::default(),
            "test",
        )
        .unwrap();
        assert!((report.aggregated.s_max - report.risk_aggregated.s_max).abs() < 1e-12);
        assert!((report.aggregated.c_ave - report.risk_aggregated.c_ave).abs() < 1e-12);
    }

    #[test]
    fn full_sparsity_errors_naming_class_and_k() {
        let (model, graphs, explanations, schema) = shared_node_setup();
        let refs: Vec<&Graph> = graphs.iter().collect();
        let erefs: Vec<&Explanation> = explanations.iter().collect();
        let names = vec!["b".to_string(), "m".to_string()];
        let err = separability_report(
            &model,
            &refs,
            &erefs,
            &schema,
            &names,
            &[1.0],
            &RiskMatrix::ones(2),
            &SeparabilityOptions::default(),
            "test",
        )
        .unwrap_err();
        match err {
            MetricsError::NoSamples { class, k, side } => {
                assert_eq!(class, 0);
                assert_eq!(k, 1.0);
                assert_eq!(side, "complement");
            }
            other => panic!("expected NoSamples, got {other}"),
        }
    }

    #[test]
    fn s_max_dominates_s_ave() {
        let (model, graphs, explanations, schema) = shared_node_setup();
        let refs: Vec<&Graph> = graphs.iter().collect();
        let erefs: Vec<&Explanation> = explanations.iter().collect();
        let names = vec!["b".to_string(), "m".to_string()];
        let report = separability_report(
            &model,
            &refs,
            &erefs,
            &schema,
            &names,
            &[0.5],
            &RiskMatrix::ones(2),
            &SeparabilityOptions::default(),
            "test",
        )
        .unwrap();
        for p in &report.pair_scores {
            assert!(p.s_max >= p.s_ave - 1e-15);
            assert!(p.c_max >= p.c_ave - 1e-15);
        }
    }
}
