//! Census of the two connectivity motifs that motivate the training
//! objective: triangular structures (feed-forward and cyclic modes) and
//! parallelogram structures, plus construction of subgraphs with a
//! controlled tri-node ratio.
//!
//! All counts are over distinct labeled edges; duplicate triples collapse
//! for census purposes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{RelGraph, Triple};

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("graph has no triangular structures; tri-node ratio is undefined")]
    NoTriangles,
    #[error(
        "tri-node ratio {requested} is unreachable; achievable interval is \
         [{min:.6}, {max:.6}] and the nearest integral subgraph gives {nearest:.6}"
    )]
    UnreachableRatio { requested: f64, min: f64, max: f64, nearest: f64 },
}

/// Triangle counts and the nodes participating in at least one triangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriangleCensus {
    /// Feed-forward mode: edges i→j, j→k, i→k.
    pub feedforward: u64,
    /// Cyclic mode: edges i→j, j→k, k→i, counted once per orbit.
    pub cyclic: u64,
    /// Sorted node indices belonging to at least one counted triangle.
    pub tri_nodes: Vec<usize>,
}

impl TriangleCensus {
    pub fn tri_node_ratio(&self, n_nodes: usize) -> f64 {
        if n_nodes == 0 {
            0.0
        } else {
            self.tri_nodes.len() as f64 / n_nodes as f64
        }
    }
}

/// Parallelogram count, exact or an unbiased sampled estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParallelogramCount {
    Exact(u64),
    Estimated(f64),
}

impl ParallelogramCount {
    pub fn value(&self) -> f64 {
        match *self {
            ParallelogramCount::Exact(c) => c as f64,
            ParallelogramCount::Estimated(c) => c,
        }
    }

    pub fn is_estimated(&self) -> bool {
        matches!(self, ParallelogramCount::Estimated(_))
    }
}

/// Combined census result for reporting.
#[derive(Clone, Debug)]
pub struct StructureCensus {
    pub triangles: TriangleCensus,
    pub parallelograms: ParallelogramCount,
    pub n_nodes: usize,
}

impl StructureCensus {
    pub fn tri_node_ratio(&self) -> f64 {
        self.triangles.tri_node_ratio(self.n_nodes)
    }
}

/// Deduplicated neighbor lists: per node, sorted `(neighbor, relations)`
/// with the relation list sorted. Built once per census call.
struct DedupAdj {
    out: Vec<Vec<(usize, Vec<usize>)>>,
    inc: Vec<Vec<(usize, Vec<usize>)>>,
}

impl DedupAdj {
    fn build(graph: &RelGraph) -> DedupAdj {
        let n = graph.n_nodes();
        let mut out: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); n];
        let mut inc: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); n];
        let mut seen: HashSet<(u32, u32, u32)> = HashSet::with_capacity(graph.n_edges());
        let mut out_flat: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for t in graph.triples() {
            if seen.insert((t.head as u32, t.relation as u32, t.tail as u32)) {
                out_flat[t.head].push((t.tail, t.relation));
            }
        }
        for (head, mut edges) in out_flat.into_iter().enumerate() {
            edges.sort_unstable();
            let mut i = 0;
            while i < edges.len() {
                let (tail, _) = edges[i];
                let mut rels = Vec::new();
                while i < edges.len() && edges[i].0 == tail {
                    rels.push(edges[i].1);
                    i += 1;
                }
                out[head].push((tail, rels.clone()));
                inc[tail].push((head, rels));
            }
        }
        for lists in inc.iter_mut() {
            lists.sort_unstable_by_key(|(node, _)| *node);
        }
        DedupAdj { out, inc }
    }

    /// Sorted relation labels of distinct edges a → b, empty if none.
    fn rels_between(&self, a: usize, b: usize) -> &[usize] {
        match self.out[a].binary_search_by_key(&b, |(node, _)| *node) {
            Ok(i) => &self.out[a][i].1,
            Err(_) => &[],
        }
    }
}

fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Counts both triangle modes and collects tri-node membership.
///
/// A feed-forward triangle on nodes {i, j, k} has edges i→j, j→k, i→k; a
/// cyclic one has i→j, j→k, k→i and is counted once per orbit rather than
/// once per rotation. With `same_relation_only` all three edges must carry
/// one shared relation label (the definition used for the benchmark
/// statistics); otherwise any label combination qualifies, and each
/// distinct labeled-edge combination counts separately.
pub fn count_triangles(graph: &RelGraph, same_relation_only: bool) -> TriangleCensus {
    let adj = DedupAdj::build(graph);
    let mut feedforward = 0u64;
    let mut cyclic_rotations = 0u64;
    let mut tri_nodes: Vec<bool> = vec![false; graph.n_nodes()];

    for j in 0..graph.n_nodes() {
        for (i, rels_ij) in &adj.inc[j] {
            let i = *i;
            if i == j {
                continue;
            }
            for (k, rels_jk) in &adj.out[j] {
                let k = *k;
                if k == j || k == i {
                    continue;
                }
                let (pair_combos, shared) = if same_relation_only {
                    let shared = sorted_intersection(rels_ij, rels_jk);
                    if shared.is_empty() {
                        continue;
                    }
                    (0, shared)
                } else {
                    (rels_ij.len() * rels_jk.len(), Vec::new())
                };

                let closing_ff = adj.rels_between(i, k);
                let ff = if same_relation_only {
                    sorted_intersection_count(&shared, closing_ff) as u64
                } else {
                    (pair_combos * closing_ff.len()) as u64
                };
                let closing_cyc = adj.rels_between(k, i);
                let cyc = if same_relation_only {
                    sorted_intersection_count(&shared, closing_cyc) as u64
                } else {
                    (pair_combos * closing_cyc.len()) as u64
                };

                if ff > 0 || cyc > 0 {
                    tri_nodes[i] = true;
                    tri_nodes[j] = true;
                    tri_nodes[k] = true;
                }
                feedforward += ff;
                cyclic_rotations += cyc;
            }
        }
    }

    debug_assert_eq!(cyclic_rotations % 3, 0);
    TriangleCensus {
        feedforward,
        cyclic: cyclic_rotations / 3,
        tri_nodes: tri_nodes
            .iter()
            .enumerate()
            .filter_map(|(v, &hit)| hit.then_some(v))
            .collect(),
    }
}

/// Counts node quadruples (v1, v2, v3, v7), all distinct, with edges
/// v1→v3 and v2→v7 sharing a relation and edges v1→v2 and v3→v7 sharing
/// a relation. A quadruple counts once no matter how many relation pairs
/// realize it, and the wing-swapped reading (v1, v3, v2, v7) of the same
/// four edges is the same parallelogram, so quadruples are canonicalized
/// to v2 < v3.
///
/// Enumeration is exact while the graph has at most `exact_limit` edges;
/// larger graphs get an unbiased estimate from `sample_budget` uniform
/// draws of distinct-edge pairs, scaled Horvitz-Thompson style by the
/// inverse of each quadruple's realization multiplicity.
pub fn count_parallelograms(
    graph: &RelGraph,
    exact_limit: usize,
    sample_budget: usize,
    seed: u64,
) -> ParallelogramCount {
    let adj = DedupAdj::build(graph);
    if graph.n_edges() <= exact_limit {
        ParallelogramCount::Exact(count_parallelograms_exact(&adj, graph.n_nodes()))
    } else {
        ParallelogramCount::Estimated(estimate_parallelograms(&adj, sample_budget, seed))
    }
}

fn count_parallelograms_exact(adj: &DedupAdj, n_nodes: usize) -> u64 {
    let mut count = 0u64;
    for v1 in 0..n_nodes {
        for (v2, rels_12) in &adj.out[v1] {
            let v2 = *v2;
            if v2 == v1 {
                continue;
            }
            for (v3, rels_13) in &adj.out[v1] {
                let v3 = *v3;
                // Canonical wing order; v2 > v3 is the mirror reading.
                if v3 == v1 || v3 <= v2 {
                    continue;
                }
                for (v7, rels_27) in &adj.out[v2] {
                    let v7 = *v7;
                    if v7 == v1 || v7 == v2 || v7 == v3 {
                        continue;
                    }
                    if sorted_intersection_count(rels_13, rels_27) == 0 {
                        continue;
                    }
                    if sorted_intersection_count(rels_12, adj.rels_between(v3, v7)) > 0 {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

fn estimate_parallelograms(adj: &DedupAdj, sample_budget: usize, seed: u64) -> f64 {
    // Flat list of distinct edges for uniform pair draws.
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    for (head, lists) in adj.out.iter().enumerate() {
        for (tail, rels) in lists {
            for &r in rels {
                edges.push((head, r, *tail));
            }
        }
    }
    let m = edges.len();
    if m == 0 || sample_budget == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0f64;
    for _ in 0..sample_budget {
        let (v1, r1, v3) = edges[rng.gen_range(0..m)];
        let (v2, r1b, v7) = edges[rng.gen_range(0..m)];
        if r1 != r1b {
            continue;
        }
        if v1 == v2 || v1 == v3 || v1 == v7 || v2 >= v3 || v2 == v7 || v3 == v7 {
            continue;
        }
        if sorted_intersection_count(adj.rels_between(v1, v2), adj.rels_between(v3, v7)) == 0 {
            continue;
        }
        // This quadruple is hit once per relation shared by both r1-sides.
        let multiplicity =
            sorted_intersection_count(adj.rels_between(v1, v3), adj.rels_between(v2, v7));
        debug_assert!(multiplicity >= 1);
        acc += 1.0 / multiplicity as f64;
    }
    acc / sample_budget as f64 * (m as f64) * (m as f64)
}

/// A tri-node-ratio-controlled subgraph together with its recount metadata.
#[derive(Clone, Debug)]
pub struct FilteredGraph {
    pub graph: RelGraph,
    /// New-index → old-index mapping (sorted by old index).
    pub node_map: Vec<usize>,
    /// Tri-nodes carried over from the parent graph.
    pub tri_node_count: usize,
    /// Achieved tri-node ratio of the subgraph.
    pub ratio: f64,
}

/// Builds the induced subgraph on all tri-nodes plus uniformly sampled
/// non-triangle nodes, sized so the tri-node ratio lands within 0.5
/// percentage points of `target_ratio`. Deterministic under `seed`.
///
/// Tri-nodes use the default census definition (`same_relation_only`).
/// Since non-triangle nodes cannot form new triangles among themselves,
/// the subgraph's recounted tri-node set is exactly the parent's.
pub fn filter_by_trinode_ratio(
    graph: &RelGraph,
    target_ratio: f64,
    seed: u64,
) -> Result<FilteredGraph, CensusError> {
    let census = count_triangles(graph, true);
    let n_tri = census.tri_nodes.len();
    if n_tri == 0 {
        return Err(CensusError::NoTriangles);
    }
    let n_free = graph.n_nodes() - n_tri;
    let min_ratio = n_tri as f64 / graph.n_nodes() as f64;
    if !target_ratio.is_finite() || target_ratio <= 0.0 || target_ratio > 1.0 {
        return Err(CensusError::UnreachableRatio {
            requested: target_ratio,
            min: min_ratio,
            max: 1.0,
            nearest: min_ratio,
        });
    }

    // Closest integral number of filler nodes for the requested ratio.
    let desired_total = (n_tri as f64 / target_ratio).round();
    let n_fill = if desired_total.is_finite() && desired_total >= n_tri as f64 {
        ((desired_total as usize) - n_tri).min(n_free)
    } else {
        0
    };
    let achieved = n_tri as f64 / (n_tri + n_fill) as f64;
    if (achieved - target_ratio).abs() > 0.005 {
        return Err(CensusError::UnreachableRatio {
            requested: target_ratio,
            min: min_ratio,
            max: 1.0,
            nearest: achieved,
        });
    }

    let tri_set: HashSet<usize> = census.tri_nodes.iter().copied().collect();
    let mut free: Vec<usize> = (0..graph.n_nodes()).filter(|v| !tri_set.contains(v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    free.shuffle(&mut rng);
    free.truncate(n_fill);

    let mut keep: Vec<usize> = census.tri_nodes.iter().copied().chain(free).collect();
    keep.sort_unstable();
    let mut new_index: Vec<Option<usize>> = vec![None; graph.n_nodes()];
    for (new, &old) in keep.iter().enumerate() {
        new_index[old] = Some(new);
    }

    let mut triples = Vec::new();
    let mut weights = Vec::new();
    for (t, &w) in graph.triples().iter().zip(graph.weights()) {
        if let (Some(h), Some(t2)) = (new_index[t.head], new_index[t.tail]) {
            triples.push(Triple::new(h, t.relation, t2));
            weights.push(w);
        }
    }
    let sub = RelGraph::build(triples, keep.len(), graph.n_relations(), Some(weights))
        .expect("induced subgraph indices are in range by construction");
    Ok(FilteredGraph { graph: sub, node_map: keep, tri_node_count: n_tri, ratio: achieved })
}

/// Census of both motifs, as reported by the `census` CLI subcommand.
pub fn full_census(
    graph: &RelGraph,
    same_relation_only: bool,
    exact_limit: usize,
    sample_budget: usize,
    seed: u64,
) -> StructureCensus {
    StructureCensus {
        triangles: count_triangles(graph, same_relation_only),
        parallelograms: count_parallelograms(graph, exact_limit, sample_budget, seed),
        n_nodes: graph.n_nodes(),
    }
}
