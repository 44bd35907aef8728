//! Reference implementations by exhaustive enumeration. These exist to
//! validate the production paths in tests and are deliberately written
//! from the definitions, without sharing code with the fast versions.
//! Costs range from cubic to quartic in |V|; use on small graphs only.

#![doc(hidden)]

use crate::census::TriangleCensus;
use crate::graph::RelGraph;
use crate::model::{BridgeMode, EmbeddingTable};
use crate::sampling::{Case, StructureSample};
use crate::sigmoid::log_sigmoid;

/// Triangle census by scanning every ordered node triple and every
/// relation label combination against the fact set.
pub fn triangle_census(graph: &RelGraph, same_relation_only: bool) -> TriangleCensus {
    let n = graph.n_nodes();
    let r = graph.n_relations();
    let mut feedforward = 0u64;
    let mut cyclic_rotations = 0u64;
    let mut tri = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let mut ff = 0u64;
                let mut cyc = 0u64;
                for r1 in 0..r {
                    if !graph.contains_fact(i, r1, j) {
                        continue;
                    }
                    for r2 in 0..r {
                        if !graph.contains_fact(j, r2, k) {
                            continue;
                        }
                        if same_relation_only && r2 != r1 {
                            continue;
                        }
                        for r3 in 0..r {
                            if same_relation_only && r3 != r1 {
                                continue;
                            }
                            if graph.contains_fact(i, r3, k) {
                                ff += 1;
                            }
                            if graph.contains_fact(k, r3, i) {
                                cyc += 1;
                            }
                        }
                    }
                }
                if ff > 0 || cyc > 0 {
                    tri[i] = true;
                    tri[j] = true;
                    tri[k] = true;
                }
                feedforward += ff;
                cyclic_rotations += cyc;
            }
        }
    }
    assert_eq!(cyclic_rotations % 3, 0);
    TriangleCensus {
        feedforward,
        cyclic: cyclic_rotations / 3,
        tri_nodes: tri.iter().enumerate().filter_map(|(v, &h)| h.then_some(v)).collect(),
    }
}

/// Parallelogram count by scanning every node quadruple in canonical
/// wing order (v2 < v3); a quadruple counts once if any relation pair
/// realizes the pattern.
pub fn parallelogram_count(graph: &RelGraph) -> u64 {
    let n = graph.n_nodes();
    let nr = graph.n_relations();
    let mut count = 0u64;
    for v1 in 0..n {
        for v2 in 0..n {
            if v2 == v1 {
                continue;
            }
            for v3 in (v2 + 1)..n {
                if v3 == v1 {
                    continue;
                }
                for v7 in 0..n {
                    if v7 == v1 || v7 == v2 || v7 == v3 {
                        continue;
                    }
                    let r1_ok = (0..nr)
                        .any(|r| graph.contains_fact(v1, r, v3) && graph.contains_fact(v2, r, v7));
                    if !r1_ok {
                        continue;
                    }
                    let r5_ok = (0..nr)
                        .any(|r| graph.contains_fact(v1, r, v2) && graph.contains_fact(v3, r, v7));
                    if r5_ok {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Edge logit computed from scratch: explicit loops, and the dense d×d
/// projection for the multiplication bridge.
pub fn naive_triple_score(
    table: &EmbeddingTable,
    mode: BridgeMode,
    source: usize,
    relation: usize,
    target: usize,
) -> f64 {
    let d = table.dim();
    let s = table.source_row(source);
    let r = table.relation_row(relation);
    let t = table.target_row(target);
    match mode {
        BridgeMode::Addition => {
            let mut acc = 0.0;
            for i in 0..d {
                acc += t[i] * (s[i] + r[i]);
            }
            acc
        }
        BridgeMode::Multiplication => {
            // bridged = (r rᵀ) s, materialized.
            let mut bridged = vec![0.0; d];
            for a in 0..d {
                for b in 0..d {
                    bridged[a] += r[a] * r[b] * s[b];
                }
            }
            let mut acc = 0.0;
            for i in 0..d {
                acc += t[i] * bridged[i];
            }
            acc
        }
    }
}

fn naive_incident_score(
    table: &EmbeddingTable,
    mode: BridgeMode,
    center: usize,
    node: usize,
    relation: usize,
    outgoing: bool,
) -> f64 {
    if outgoing {
        naive_triple_score(table, mode, center, relation, node)
    } else {
        naive_triple_score(table, mode, node, relation, center)
    }
}

/// Out-edge probability by direct exponentiation, no max shift.
pub fn naive_p_out(
    graph: &RelGraph,
    table: &EmbeddingTable,
    mode: BridgeMode,
    v_i: usize,
    v_j: usize,
    r_s: usize,
) -> f64 {
    let num = naive_triple_score(table, mode, v_i, r_s, v_j).exp();
    let den: f64 = graph
        .out_adj(v_i)
        .iter()
        .map(|e| naive_triple_score(table, mode, v_i, e.relation, e.node).exp())
        .sum();
    num / den
}

/// In-edge probability by direct exponentiation, no max shift.
pub fn naive_p_in(
    graph: &RelGraph,
    table: &EmbeddingTable,
    mode: BridgeMode,
    v_i: usize,
    v_j: usize,
    r_s: usize,
) -> f64 {
    let num = naive_triple_score(table, mode, v_j, r_s, v_i).exp();
    let den: f64 = graph
        .in_adj(v_i)
        .iter()
        .map(|e| naive_triple_score(table, mode, e.node, e.relation, v_i).exp())
        .sum();
    num / den
}

/// Case probability by enumerating every ordered pair in the denominator
/// set directly.
pub fn naive_case_probability(
    graph: &RelGraph,
    table: &EmbeddingTable,
    mode: BridgeMode,
    sample: &StructureSample,
) -> f64 {
    let center = sample.center;
    let (j_out, k_out) = match sample.case {
        Case::TwoOut => (true, true),
        Case::InOut => (false, true),
        Case::TwoIn => (false, false),
    };
    let adj_j = if j_out { graph.out_adj(center) } else { graph.in_adj(center) };
    let adj_k = if k_out { graph.out_adj(center) } else { graph.in_adj(center) };
    let same_side = j_out == k_out;
    let mut den = 0.0;
    for (a, ea) in adj_j.iter().enumerate() {
        for (b, eb) in adj_k.iter().enumerate() {
            if same_side && a == b {
                continue;
            }
            let sa = naive_incident_score(table, mode, center, ea.node, ea.relation, j_out);
            let sb = naive_incident_score(table, mode, center, eb.node, eb.relation, k_out);
            den += (sa + sb).exp();
        }
    }
    let sj = naive_incident_score(
        table,
        mode,
        center,
        sample.edge_j.node,
        sample.edge_j.relation,
        j_out,
    );
    let sk = naive_incident_score(
        table,
        mode,
        center,
        sample.edge_k.node,
        sample.edge_k.relation,
        k_out,
    );
    (sj + sk).exp() / den
}

/// Exact value of the negative-sampling surrogate for one structure
/// sample, with the expectation over negatives computed by enumerating
/// every non-fact (node, relation) pair in the case's direction:
/// log σ(s_j + s_k) + K · E log σ(−s_j − s_neg).
pub fn expected_structure_surrogate(
    graph: &RelGraph,
    table: &EmbeddingTable,
    mode: BridgeMode,
    sample: &StructureSample,
    negatives: usize,
) -> f64 {
    let center = sample.center;
    let (j_out, k_out) = match sample.case {
        Case::TwoOut => (true, true),
        Case::InOut => (false, true),
        Case::TwoIn => (false, false),
    };
    let s_j = naive_incident_score(
        table,
        mode,
        center,
        sample.edge_j.node,
        sample.edge_j.relation,
        j_out,
    );
    let s_k = naive_incident_score(
        table,
        mode,
        center,
        sample.edge_k.node,
        sample.edge_k.relation,
        k_out,
    );
    let mut acc = 0.0;
    let mut support = 0usize;
    for node in 0..graph.n_nodes() {
        for relation in 0..graph.n_relations() {
            let is_fact = if k_out {
                graph.contains_fact(center, relation, node)
            } else {
                graph.contains_fact(node, relation, center)
            };
            if is_fact {
                continue;
            }
            let s_n = naive_incident_score(table, mode, center, node, relation, k_out);
            acc += log_sigmoid(-s_j - s_n);
            support += 1;
        }
    }
    assert!(support > 0, "no admissible negative pair for this sample");
    log_sigmoid(s_j + s_k) + negatives as f64 * acc / support as f64
}
