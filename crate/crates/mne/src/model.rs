//! Embedding storage and scoring: per-node source/target vectors, per-
//! relation vectors, the two bridging functions, and exact (fully
//! normalized) probabilities used as test oracles. Training never
//! normalizes a full softmax; the exact operations exist for validation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::RelGraph;
use crate::sampling::{Case, StructureSample};

/// RNG stream id for table initialization, distinct from trainer streams.
pub(crate) const INIT_STREAM: u64 = 0x696e_6974;

/// How a node vector and a relation vector combine before scoring against
/// a target vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BridgeMode {
    /// Elementwise sum of node and relation vectors.
    Addition,
    /// Relation vector scaled by its inner product with the node vector
    /// (the rank-one projection, computed in O(d)).
    Multiplication,
}

impl BridgeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BridgeMode::Addition => "add",
            BridgeMode::Multiplication => "mul",
        }
    }
}

impl std::str::FromStr for BridgeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add" | "addition" => Ok(BridgeMode::Addition),
            "mul" | "multiplication" => Ok(BridgeMode::Multiplication),
            other => Err(format!("unknown bridge mode {other:?} (expected add or mul)")),
        }
    }
}

/// Dense embedding storage: |V|×d source and target matrices and an
/// |R|×d relation matrix, all sharing one dimensionality.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    n_nodes: usize,
    n_relations: usize,
    dim: usize,
    source: Vec<f64>,
    target: Vec<f64>,
    relation: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(n_nodes: usize, n_relations: usize, dim: usize) -> EmbeddingTable {
        assert!(dim >= 1);
        EmbeddingTable {
            n_nodes,
            n_relations,
            dim,
            source: vec![0.0; n_nodes * dim],
            target: vec![0.0; n_nodes * dim],
            relation: vec![0.0; n_relations * dim],
        }
    }

    /// Random initialization with entries uniform in (-0.5/d, 0.5/d),
    /// keeping initial logits near zero. Fill order is source, target,
    /// relation, row-major, so a (seed, shape) pair pins every entry.
    pub fn init(n_nodes: usize, n_relations: usize, dim: usize, seed: u64) -> EmbeddingTable {
        let half = 0.5 / dim as f64;
        Self::random_uniform(n_nodes, n_relations, dim, seed, half)
    }

    /// Uniform(-amplitude, amplitude) entries; wider amplitudes are used
    /// by tests that need non-trivial logits.
    pub fn random_uniform(
        n_nodes: usize,
        n_relations: usize,
        dim: usize,
        seed: u64,
        amplitude: f64,
    ) -> EmbeddingTable {
        let mut table = Self::zeros(n_nodes, n_relations, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(INIT_STREAM);
        for x in table
            .source
            .iter_mut()
            .chain(table.target.iter_mut())
            .chain(table.relation.iter_mut())
        {
            *x = rng.gen_range(-amplitude..amplitude);
        }
        table
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_relations(&self) -> usize {
        self.n_relations
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_row(&self, node: usize) -> &[f64] {
        &self.source[node * self.dim..(node + 1) * self.dim]
    }

    pub fn target_row(&self, node: usize) -> &[f64] {
        &self.target[node * self.dim..(node + 1) * self.dim]
    }

    pub fn relation_row(&self, relation: usize) -> &[f64] {
        &self.relation[relation * self.dim..(relation + 1) * self.dim]
    }

    pub fn source_row_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.source[node * self.dim..(node + 1) * self.dim]
    }

    pub fn target_row_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.target[node * self.dim..(node + 1) * self.dim]
    }

    pub fn relation_row_mut(&mut self, relation: usize) -> &mut [f64] {
        &mut self.relation[relation * self.dim..(relation + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.source
            .iter()
            .chain(self.target.iter())
            .chain(self.relation.iter())
            .all(|x| x.is_finite())
    }

    pub(crate) fn matrices_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.source, &mut self.target, &mut self.relation)
    }

    /// Mirrors the source matrix into the target matrix, for models that
    /// keep a single vector per entity.
    pub(crate) fn copy_source_to_target(&mut self) {
        let src = self.source.clone();
        self.target.copy_from_slice(&src);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Combines a node vector with a relation vector. Addition returns the
/// elementwise sum; multiplication returns the relation vector scaled by
/// ⟨u_r, u_i⟩, never materializing the d×d projection.
///
/// Panics on dimension mismatch (contract violation).
pub fn bridge(u_i: &[f64], u_r: &[f64], mode: BridgeMode) -> Vec<f64> {
    let mut out = vec![0.0; u_i.len()];
    bridge_into(u_i, u_r, mode, &mut out);
    out
}

/// Allocation-free form of [`bridge`].
pub fn bridge_into(u_i: &[f64], u_r: &[f64], mode: BridgeMode, out: &mut [f64]) {
    assert_eq!(u_i.len(), u_r.len(), "bridge: dimension mismatch");
    assert_eq!(u_i.len(), out.len(), "bridge: output dimension mismatch");
    match mode {
        BridgeMode::Addition => {
            for ((o, a), b) in out.iter_mut().zip(u_i).zip(u_r) {
                *o = a + b;
            }
        }
        BridgeMode::Multiplication => {
            let scale = dot(u_r, u_i);
            for (o, r) in out.iter_mut().zip(u_r) {
                *o = scale * r;
            }
        }
    }
}

/// Inner product of a target vector with a bridged vector; the raw logit
/// before exponentiation.
///
/// Panics on dimension mismatch (contract violation).
pub fn edge_score(u_target: &[f64], bridged: &[f64]) -> f64 {
    assert_eq!(u_target.len(), bridged.len(), "edge_score: dimension mismatch");
    dot(u_target, bridged)
}

/// Logit of the edge `(source, relation, target)` under `mode`.
pub fn triple_score(table: &EmbeddingTable, mode: BridgeMode, source: usize, relation: usize, target: usize) -> f64 {
    match mode {
        BridgeMode::Addition => {
            let s = table.source_row(source);
            let r = table.relation_row(relation);
            let t = table.target_row(target);
            t.iter().zip(s.iter().zip(r)).map(|(tv, (sv, rv))| tv * (sv + rv)).sum()
        }
        BridgeMode::Multiplication => {
            let s = table.source_row(source);
            let r = table.relation_row(relation);
            let t = table.target_row(target);
            dot(t, r) * dot(r, s)
        }
    }
}

fn softmax_prob(logits: &[f64], which: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    (logits[which] - max).exp() / z
}

/// Exact probability of the edge `(v_i, r_s, v_j)` among all outgoing
/// edges of `v_i`: a full softmax over the out-adjacency multiset.
///
/// Panics if the edge is not present (contract violation). Test oracle;
/// cost is linear in the out-degree.
pub fn exact_p_out(
    graph: &RelGraph,
    table: &EmbeddingTable,
    mode: BridgeMode,
    v_i: usize,
    v_j: usize,
    r_s: usize,
) -> f64 {
    assert!(graph.contains_fact(v_i, r_s, v_j), "exact_p_out: ({v_i}, {r_s}, {v_j}) not an edge");
    let adj = graph.out_adj(v_i);
    let logits: Vec<f64> =
        adj.iter().map(|e| triple_score(table, mode, v_i, e.relation, e.node)).collect();
    let which = adj
        .iter()
        .position(|e| e.node == v_j && e.relation == r_s)
        .expect("edge present per fact check");
    softmax_prob(&logits, which)
}

/// Exact probability of the incoming edge `(v_j, r_s, v_i)` among all
/// incoming edges of `v_i`; the numerator scores v_j bridging toward the
/// target vector of v_i, the denominator runs over the in-adjacency.
pub fn exact_p_in(
    graph: &RelGraph,
    table: &EmbeddingTable,
    mode: BridgeMode,
    v_i: usize,
    v_j: usize,
    r_s: usize,
) -> f64 {
    assert!(graph.contains_fact(v_j, r_s, v_i), "exact_p_in: ({v_j}, {r_s}, {v_i}) not an edge");
    let adj = graph.in_adj(v_i);
    let logits: Vec<f64> =
        adj.iter().map(|e| triple_score(table, mode, e.node, e.relation, v_i)).collect();
    let which = adj
        .iter()
        .position(|e| e.node == v_j && e.relation == r_s)
        .expect("edge present per fact check");
    softmax_prob(&logits, which)
}

/// Score of one incident edge in a case-specific role: outgoing edges
/// score the neighbor's target vector against the center bridged with the
/// relation; incoming edges score the center's target vector against the
/// neighbor bridged with the relation.
fn incident_score(
    table: &EmbeddingTable,
    mode: BridgeMode,
    center: usize,
    node: usize,
    relation: usize,
    outgoing: bool,
) -> f64 {
    if outgoing {
        triple_score(table, mode, center, relation, node)
    } else {
        triple_score(table, mode, node, relation, center)
    }
}

/// Exact conditional probability of the sampled edge pair among all
/// ordered pairs valid for its case at the center: pairs of distinct
/// outgoing edges, (incoming, outgoing) pairs, or pairs of distinct
/// incoming edges. Distinctness is positional, matching the multiset
/// edge semantics. Test oracle; cost is quadratic in the center degree.
///
/// Panics if the sample does not match the graph (contract violation).
pub fn exact_case_probability(
    graph: &RelGraph,
    table: &EmbeddingTable,
    mode: BridgeMode,
    sample: &StructureSample,
) -> f64 {
    validate_sample(graph, sample);
    let center = sample.center;
    let (j_out, k_out) = match sample.case {
        Case::TwoOut => (true, true),
        Case::InOut => (false, true),
        Case::TwoIn => (false, false),
    };
    let adj_j = if j_out { graph.out_adj(center) } else { graph.in_adj(center) };
    let adj_k = if k_out { graph.out_adj(center) } else { graph.in_adj(center) };
    let scores_j: Vec<f64> = adj_j
        .iter()
        .map(|e| incident_score(table, mode, center, e.node, e.relation, j_out))
        .collect();
    let scores_k: Vec<f64> = if j_out == k_out {
        scores_j.clone()
    } else {
        adj_k
            .iter()
            .map(|e| incident_score(table, mode, center, e.node, e.relation, k_out))
            .collect()
    };
    let same_side = j_out == k_out;

    let mut max = f64::NEG_INFINITY;
    for (a, &sa) in scores_j.iter().enumerate() {
        for (b, &sb) in scores_k.iter().enumerate() {
            if same_side && a == b {
                continue;
            }
            max = max.max(sa + sb);
        }
    }
    let mut z = 0.0;
    for (a, &sa) in scores_j.iter().enumerate() {
        for (b, &sb) in scores_k.iter().enumerate() {
            if same_side && a == b {
                continue;
            }
            z += (sa + sb - max).exp();
        }
    }
    let numerator = scores_j[sample.edge_j.pos] + scores_k[sample.edge_k.pos];
    (numerator - max).exp() / z
}

pub(crate) fn validate_sample(graph: &RelGraph, sample: &StructureSample) {
    let center = sample.center;
    let check = |edge: &crate::sampling::IncidentEdge, outgoing: bool, name: &str| {
        let adj = if outgoing { graph.out_adj(center) } else { graph.in_adj(center) };
        assert!(edge.pos < adj.len(), "sample {name} position out of range");
        let e = adj[edge.pos];
        assert!(
            e.node == edge.node && e.relation == edge.relation,
            "sample {name} does not match adjacency"
        );
    };
    match sample.case {
        Case::TwoOut => {
            check(&sample.edge_j, true, "edge_j");
            check(&sample.edge_k, true, "edge_k");
            assert_ne!(sample.edge_j.pos, sample.edge_k.pos, "case-1 edges must be distinct");
        }
        Case::InOut => {
            check(&sample.edge_j, false, "edge_j");
            check(&sample.edge_k, true, "edge_k");
        }
        Case::TwoIn => {
            check(&sample.edge_j, false, "edge_j");
            check(&sample.edge_k, false, "edge_k");
            assert_ne!(sample.edge_j.pos, sample.edge_k.pos, "case-3 edges must be distinct");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Triple;
    use crate::sampling::IncidentEdge;

    fn graph_from(triples: &[(usize, usize, usize)], n_nodes: usize, n_rels: usize) -> RelGraph {
        let ts = triples.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
        RelGraph::build(ts, n_nodes, n_rels, None).unwrap()
    }

    #[test]
    fn addition_with_zero_relation_is_identity() {
        let u = vec![1.0, -2.0, 3.5];
        let z = vec![0.0; 3];
        assert_eq!(bridge(&u, &z, BridgeMode::Addition), u);
    }

    #[test]
    fn multiplication_with_basis_vector_projects() {
        let u = vec![3.0, 5.0];
        let e1 = vec![1.0, 0.0];
        assert_eq!(bridge(&u, &e1, BridgeMode::Multiplication), vec![3.0, 0.0]);
    }

    #[test]
    fn multiplication_matches_dense_projection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let d = 6;
            let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = bridge(&u, &r, BridgeMode::Multiplication);
            // Dense oracle: materialize r rᵀ and multiply.
            let mut slow = vec![0.0; d];
            for a in 0..d {
                for b in 0..d {
                    slow[a] += r[a] * r[b] * u[b];
                }
            }
            for (f, s) in fast.iter().zip(&slow) {
                let denom = s.abs().max(1e-12);
                assert!((f - s).abs() / denom < 1e-12, "{f} vs {s}");
            }
        }
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn bridge_rejects_dimension_mismatch() {
        bridge(&[1.0, 2.0], &[1.0], BridgeMode::Addition);
    }

    #[test]
    fn edge_score_hand_cases() {
        assert_eq!(edge_score(&[1.0, 0.0], &[0.0, 5.0]), 0.0);
        assert_eq!(edge_score(&[1.0, 1.0], &[2.0, -3.0]), -1.0);
    }

    #[test]
    fn edge_score_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d = 9;
            let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut oracle = 0.0;
            for i in 0..d {
                oracle += a[i] * b[i];
            }
            assert!((edge_score(&a, &b) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn single_out_edge_has_probability_one() {
        let g = graph_from(&[(0, 0, 1)], 2, 1);
        let table = EmbeddingTable::random_uniform(2, 1, 4, 3, 0.5);
        for mode in [BridgeMode::Addition, BridgeMode::Multiplication] {
            assert!((exact_p_out(&g, &table, mode, 0, 1, 0) - 1.0).abs() < 1e-12);
            assert!((exact_p_in(&g, &table, mode, 1, 0, 0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_scores_split_evenly() {
        let g = graph_from(&[(0, 0, 1), (0, 0, 2)], 3, 1);
        // Zero table: all logits are zero, so both out-edges get 1/2.
        let table = EmbeddingTable::zeros(3, 1, 4);
        let p = exact_p_out(&g, &table, BridgeMode::Addition, 0, 1, 0);
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "not an edge")]
    fn exact_p_out_requires_the_edge() {
        let g = graph_from(&[(0, 0, 1)], 2, 1);
        let table = EmbeddingTable::zeros(2, 1, 2);
        exact_p_out(&g, &table, BridgeMode::Addition, 1, 0, 0);
    }

    #[test]
    fn singleton_case_pair_has_probability_one() {
        // Center 0 with exactly one in-edge and one out-edge: the only
        // valid pair for the in/out case.
        let g = graph_from(&[(1, 0, 0), (0, 0, 2)], 3, 1);
        let table = EmbeddingTable::random_uniform(3, 1, 4, 5, 0.5);
        let sample = StructureSample {
            case: Case::InOut,
            center: 0,
            edge_j: IncidentEdge { pos: 0, node: 1, relation: 0, weight: 1.0 },
            edge_k: IncidentEdge { pos: 0, node: 2, relation: 0, weight: 1.0 },
        };
        for mode in [BridgeMode::Addition, BridgeMode::Multiplication] {
            let p = exact_case_probability(&g, &table, mode, &sample);
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_table_gives_uniform_case_probability() {
        // Center 0 with three out-edges: 6 ordered distinct pairs.
        let g = graph_from(&[(0, 0, 1), (0, 0, 2), (0, 1, 3)], 4, 2);
        let table = EmbeddingTable::zeros(4, 2, 3);
        let sample = StructureSample {
            case: Case::TwoOut,
            center: 0,
            edge_j: IncidentEdge { pos: 0, node: 1, relation: 0, weight: 1.0 },
            edge_k: IncidentEdge { pos: 2, node: 3, relation: 1, weight: 1.0 },
        };
        let p = exact_case_probability(&g, &table, BridgeMode::Addition, &sample);
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn mul_bridge_role_swap_is_symmetric_and_add_is_not() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = 8;
        for _ in 0..200 {
            let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = edge_score(&b, &bridge(&a, &r, BridgeMode::Multiplication));
            let rhs = edge_score(&a, &bridge(&b, &r, BridgeMode::Multiplication));
            assert!((lhs - rhs).abs() < 1e-12);
            let lhs_add = edge_score(&b, &bridge(&a, &r, BridgeMode::Addition));
            let rhs_add = edge_score(&a, &bridge(&b, &r, BridgeMode::Addition));
            assert!((lhs_add - rhs_add).abs() > 1e-9, "addition bridge should break role swap");
        }
    }

    #[test]
    fn init_entries_are_small_and_reproducible() {
        let a = EmbeddingTable::init(5, 2, 8, 3);
        let b = EmbeddingTable::init(5, 2, 8, 3);
        assert_eq!(a, b);
        let half = 0.5 / 8.0;
        for v in 0..5 {
            for x in a.source_row(v).iter().chain(a.target_row(v)) {
                assert!(x.abs() < half);
            }
        }
        let c = EmbeddingTable::init(5, 2, 8, 4);
        assert_ne!(a, c);
    }
}
