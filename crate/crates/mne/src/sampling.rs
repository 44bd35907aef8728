//! Stochastic draws for training: center nodes, incident edge pairs
//! realizing the three local connectivity cases, and negative
//! (node, relation) pairs with fact rejection.
//!
//! All draws are reproducible from the seed; two samplers with equal seeds
//! and equal call sequences agree exactly.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;
use thiserror::Error;

use crate::alias::AliasTable;
use crate::graph::{AdjEntry, RelGraph};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("graph has no node with a valid incident edge pair")]
    NoEligibleCenter,
    #[error("node {node} has no valid incident edge pair")]
    NoValidCase { node: usize },
    #[error("negative sampling saturated at node {node}: no acceptable pair within {cap} draws")]
    NegativeSaturated { node: usize, cap: usize },
}

/// The three local two-edge patterns at a center node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Case {
    /// Both edges leave the center (out-degree-2 pattern).
    TwoOut,
    /// First edge enters the center, second leaves it.
    InOut,
    /// Both edges enter the center (in-degree-2 pattern).
    TwoIn,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::TwoOut, Case::InOut, Case::TwoIn];

    /// 1-based index used in reports.
    pub fn index(self) -> u8 {
        match self {
            Case::TwoOut => 1,
            Case::InOut => 2,
            Case::TwoIn => 3,
        }
    }
}

/// Direction of the edge slot a negative pair stands in for, relative to
/// the center node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// One incident edge of the center, identified by its position in the
/// center's adjacency list for the relevant direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentEdge {
    pub pos: usize,
    /// Neighbor node (the target of an outgoing edge, the source of an
    /// incoming one).
    pub node: usize,
    pub relation: usize,
    pub weight: f64,
}

/// A sampled two-edge structure at a center node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureSample {
    pub case: Case,
    pub center: usize,
    pub edge_j: IncidentEdge,
    pub edge_k: IncidentEdge,
}

impl StructureSample {
    /// Product of the two edge weights, the scaling factor of the sample's
    /// gradient contribution.
    pub fn weight_product(&self) -> f64 {
        self.edge_j.weight * self.edge_k.weight
    }
}

/// Per-node ω-proportional position sampler: alias slots for weighted
/// segments packed into one flat array, with an exact-uniform fast path
/// that skips slot storage entirely (the common case for unweighted
/// graphs).
#[derive(Debug, Default)]
struct NodeAlias {
    offsets: Vec<usize>,
    /// (acceptance probability, alias position) per slot, weighted
    /// segments only.
    slots: Vec<(f64, u32)>,
    uniform: Vec<bool>,
}

impl NodeAlias {
    fn build<'a>(n_nodes: usize, adj: impl Fn(usize) -> &'a [AdjEntry]) -> NodeAlias {
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        let mut slots = Vec::new();
        let mut uniform = Vec::with_capacity(n_nodes);
        offsets.push(0);
        for v in 0..n_nodes {
            let weights: Vec<f64> = adj(v).iter().map(|e| e.weight).collect();
            let is_uniform = weights.windows(2).all(|p| p[0] == p[1]);
            uniform.push(is_uniform);
            if !is_uniform {
                let table = AliasTable::new(&weights);
                for i in 0..weights.len() {
                    slots.push(table.slot(i));
                }
            }
            offsets.push(slots.len());
        }
        NodeAlias { offsets, slots, uniform }
    }

    /// Draws a position in `0..segment_len` ∝ the segment's weights.
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, node: usize, segment_len: usize, rng: &mut R) -> usize {
        debug_assert!(segment_len > 0);
        if self.uniform[node] {
            return rng.gen_range(0..segment_len);
        }
        let slots = &self.slots[self.offsets[node]..self.offsets[node + 1]];
        debug_assert_eq!(slots.len(), segment_len);
        let i = rng.gen_range(0..slots.len());
        let (prob, alias) = slots[i];
        if rng.gen::<f64>() < prob {
            i
        } else {
            alias as usize
        }
    }
}

/// Per-graph sampling precompute: eligibility, case masks and per-node
/// position samplers for ω-proportional edge draws. Shared read-only
/// between workers.
#[derive(Debug)]
struct SamplerTables {
    n_nodes: usize,
    n_relations: usize,
    eligible: Vec<usize>,
    case_masks: Vec<u8>,
    out_alias: NodeAlias,
    in_alias: NodeAlias,
}

fn case_mask(graph: &RelGraph, node: usize) -> u8 {
    let n_out = graph.out_adj(node).len();
    let n_in = graph.in_adj(node).len();
    let mut mask = 0u8;
    if n_out >= 2 {
        mask |= 1;
    }
    if n_in >= 1 && n_out >= 1 {
        mask |= 2;
    }
    if n_in >= 2 {
        mask |= 4;
    }
    mask
}

impl SamplerTables {
    fn build(graph: &RelGraph) -> SamplerTables {
        let n = graph.n_nodes();
        let mut case_masks = Vec::with_capacity(n);
        let mut eligible = Vec::new();
        for v in 0..n {
            let mask = case_mask(graph, v);
            case_masks.push(mask);
            if mask != 0 {
                eligible.push(v);
            }
        }
        SamplerTables {
            n_nodes: n,
            n_relations: graph.n_relations(),
            eligible,
            case_masks,
            out_alias: NodeAlias::build(n, |v| graph.out_adj(v)),
            in_alias: NodeAlias::build(n, |v| graph.in_adj(v)),
        }
    }
}

/// Seeded sampler over one graph. [`Sampler::fork`] reuses the precompute
/// under an independent RNG stream, one per training worker.
#[derive(Debug)]
pub struct Sampler {
    tables: Arc<SamplerTables>,
    rng: ChaCha8Rng,
    /// Retry cap for negative rejection sampling.
    pub retry_cap: usize,
}

/// Default cap on fact-rejection retries; keeps worst-case step time bounded.
pub const DEFAULT_RETRY_CAP: usize = 100;

/// Cap on distinct-pair rejection before falling back to a linear scan.
const PAIR_RETRY_CAP: usize = 10_000;

impl Sampler {
    pub fn new(graph: &RelGraph, seed: u64) -> Sampler {
        Sampler {
            tables: Arc::new(SamplerTables::build(graph)),
            rng: ChaCha8Rng::seed_from_u64(seed),
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }

    /// Same precompute, fresh RNG stream (`stream` must differ between
    /// concurrent samplers derived from one seed).
    pub fn fork(&self, seed: u64, stream: u64) -> Sampler {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { tables: Arc::clone(&self.tables), rng, retry_cap: self.retry_cap }
    }

    /// Nodes with at least one valid incident edge pair.
    pub fn n_eligible(&self) -> usize {
        self.tables.eligible.len()
    }

    /// Draws a center node uniformly from the eligible set.
    pub fn sample_center(&mut self) -> Result<usize, SamplingError> {
        if self.tables.eligible.is_empty() {
            return Err(SamplingError::NoEligibleCenter);
        }
        let i = self.rng.gen_range(0..self.tables.eligible.len());
        Ok(self.tables.eligible[i])
    }

    /// Draws a case uniformly among those valid for `center`, then the two
    /// edges ω-proportionally within the case, respecting distinctness for
    /// the same-direction cases.
    pub fn sample_structure(
        &mut self,
        graph: &RelGraph,
        center: usize,
    ) -> Result<StructureSample, SamplingError> {
        debug_assert_eq!(graph.n_nodes(), self.tables.n_nodes);
        let mask = self.tables.case_masks[center];
        if mask == 0 {
            return Err(SamplingError::NoValidCase { node: center });
        }
        let valid: SmallVec<[Case; 3]> = Case::ALL
            .iter()
            .copied()
            .filter(|c| mask & (1 << (c.index() - 1)) != 0)
            .collect();
        let case = valid[self.rng.gen_range(0..valid.len())];

        let tables = Arc::clone(&self.tables);
        let (j_pos, k_pos) = match case {
            Case::TwoOut => self.distinct_pair(&tables.out_alias, center, graph.out_adj(center)),
            Case::InOut => {
                let in_adj = graph.in_adj(center);
                let out_adj = graph.out_adj(center);
                let j = tables.in_alias.sample(center, in_adj.len(), &mut self.rng);
                let k = tables.out_alias.sample(center, out_adj.len(), &mut self.rng);
                (j, k)
            }
            Case::TwoIn => self.distinct_pair(&tables.in_alias, center, graph.in_adj(center)),
        };

        let adj_j = match case {
            Case::TwoOut => graph.out_adj(center),
            Case::InOut | Case::TwoIn => graph.in_adj(center),
        };
        let adj_k = match case {
            Case::TwoOut | Case::InOut => graph.out_adj(center),
            Case::TwoIn => graph.in_adj(center),
        };
        let ej = adj_j[j_pos];
        let ek = adj_k[k_pos];
        Ok(StructureSample {
            case,
            center,
            edge_j: IncidentEdge {
                pos: j_pos,
                node: ej.node,
                relation: ej.relation,
                weight: ej.weight,
            },
            edge_k: IncidentEdge {
                pos: k_pos,
                node: ek.node,
                relation: ek.relation,
                weight: ek.weight,
            },
        })
    }

    /// Ordered pair of distinct positions with probability proportional to
    /// the weight product, via whole-pair rejection.
    fn distinct_pair(
        &mut self,
        alias: &NodeAlias,
        node: usize,
        adj: &[AdjEntry],
    ) -> (usize, usize) {
        debug_assert!(adj.len() >= 2);
        for _ in 0..PAIR_RETRY_CAP {
            let a = alias.sample(node, adj.len(), &mut self.rng);
            let b = alias.sample(node, adj.len(), &mut self.rng);
            if a != b {
                return (a, b);
            }
        }
        // Extremely skewed weights: fall back to an O(deg) conditional draw.
        let a = alias.sample(node, adj.len(), &mut self.rng);
        let total: f64 = adj.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, e)| e.weight).sum();
        let mut x = self.rng.gen::<f64>() * total;
        for (i, e) in adj.iter().enumerate() {
            if i == a {
                continue;
            }
            x -= e.weight;
            if x <= 0.0 {
                return (a, i);
            }
        }
        (a, if a == 0 { 1 } else { 0 })
    }

    /// Draws a uniform (node, relation) pair, rejecting pairs that form a
    /// fact with `center` in the given direction.
    pub fn sample_negative(
        &mut self,
        graph: &RelGraph,
        center: usize,
        direction: Direction,
    ) -> Result<(usize, usize), SamplingError> {
        debug_assert_eq!(graph.n_nodes(), self.tables.n_nodes);
        debug_assert_eq!(graph.n_relations(), self.tables.n_relations);
        for _ in 0..self.retry_cap {
            let node = self.rng.gen_range(0..self.tables.n_nodes);
            let relation = self.rng.gen_range(0..self.tables.n_relations);
            let is_fact = match direction {
                Direction::Outgoing => graph.contains_fact(center, relation, node),
                Direction::Incoming => graph.contains_fact(node, relation, center),
            };
            if !is_fact {
                return Ok((node, relation));
            }
        }
        Err(SamplingError::NegativeSaturated { node: center, cap: self.retry_cap })
    }

    /// Uniform entity draw used by corruption-style negatives.
    pub fn sample_entity(&mut self) -> usize {
        self.rng.gen_range(0..self.tables.n_nodes)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Triple;

    fn graph_from(triples: &[(usize, usize, usize)], n_nodes: usize, n_rels: usize) -> RelGraph {
        let ts = triples.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
        RelGraph::build(ts, n_nodes, n_rels, None).unwrap()
    }

    #[test]
    fn singleton_support_always_returns_that_node() {
        // One node with a self-loop pair: two self-loops make case 1 valid.
        let g = graph_from(&[(0, 0, 0), (0, 0, 0)], 1, 1);
        let mut s = Sampler::new(&g, 1);
        for _ in 0..50 {
            assert_eq!(s.sample_center().unwrap(), 0);
        }
    }

    #[test]
    fn empty_graph_has_no_eligible_center() {
        let g = graph_from(&[(0, 0, 1)], 3, 1);
        // A single edge supports no two-edge structure anywhere.
        let mut s = Sampler::new(&g, 1);
        assert!(matches!(s.sample_center(), Err(SamplingError::NoEligibleCenter)));
    }

    #[test]
    fn center_frequencies_are_uniform_over_the_four_eligible_nodes() {
        // Nodes 0..4 each have two out-edges to their own degree-1 sinks,
        // so exactly those four nodes are eligible centers.
        let g = graph_from(
            &[
                (0, 0, 4),
                (0, 0, 5),
                (1, 0, 6),
                (1, 0, 7),
                (2, 0, 8),
                (2, 0, 9),
                (3, 0, 10),
                (3, 0, 11),
            ],
            12,
            1,
        );
        let mut s = Sampler::new(&g, 7);
        assert_eq!(s.n_eligible(), 4);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let center = s.sample_center().unwrap();
            assert!(center < 4, "ineligible center {center}");
            counts[center] += 1;
        }
        let p = 0.25;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for (v, &c) in counts.iter().enumerate() {
            let observed = c as f64 / n as f64;
            assert!(
                (observed - p).abs() < 3.0 * sigma,
                "node {v}: observed {observed}, expected {p} ± 3σ={:.5}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn seeded_samplers_agree_exactly() {
        let g = graph_from(&[(0, 0, 1), (0, 0, 2), (1, 0, 2), (2, 0, 0)], 3, 1);
        let mut a = Sampler::new(&g, 7);
        let mut b = Sampler::new(&g, 7);
        for _ in 0..500 {
            let ca = a.sample_center().unwrap();
            let cb = b.sample_center().unwrap();
            assert_eq!(ca, cb);
            let sa = a.sample_structure(&g, ca).unwrap();
            let sb = b.sample_structure(&g, cb).unwrap();
            assert_eq!(sa, sb);
            let na = a.sample_negative(&g, ca, Direction::Outgoing).unwrap();
            let nb = b.sample_negative(&g, cb, Direction::Outgoing).unwrap();
            assert_eq!(na, nb);
        }
    }

    #[test]
    fn two_out_edges_force_case_one() {
        let g = graph_from(&[(0, 0, 1), (0, 0, 2)], 3, 1);
        let mut s = Sampler::new(&g, 3);
        for _ in 0..200 {
            let sample = s.sample_structure(&g, 0).unwrap();
            assert_eq!(sample.case, Case::TwoOut);
            assert_ne!(sample.edge_j.pos, sample.edge_k.pos);
            assert_eq!(sample.weight_product(), 1.0);
        }
    }

    #[test]
    fn one_in_one_out_forces_case_two() {
        let g = graph_from(&[(1, 0, 0), (0, 0, 2)], 3, 1);
        let mut s = Sampler::new(&g, 3);
        for _ in 0..200 {
            let sample = s.sample_structure(&g, 0).unwrap();
            assert_eq!(sample.case, Case::InOut);
            assert_eq!(sample.edge_j.node, 1);
            assert_eq!(sample.edge_k.node, 2);
        }
    }

    #[test]
    fn ineligible_center_is_an_error() {
        let g = graph_from(&[(0, 0, 1), (0, 0, 2)], 3, 1);
        let mut s = Sampler::new(&g, 3);
        assert!(matches!(
            s.sample_structure(&g, 1),
            Err(SamplingError::NoValidCase { node: 1 })
        ));
    }

    #[test]
    fn case_and_pair_frequencies_match_uniform_expectation() {
        // Node 0 with 2 in and 2 out edges, uniform ω.
        let g = graph_from(&[(1, 0, 0), (2, 0, 0), (0, 0, 3), (0, 0, 4)], 5, 1);
        let mut s = Sampler::new(&g, 11);
        let n = 100_000;
        let mut case_counts = [0usize; 3];
        let mut pair_counts: std::collections::HashMap<(Case, usize, usize), usize> =
            std::collections::HashMap::new();
        for _ in 0..n {
            let sample = s.sample_structure(&g, 0).unwrap();
            case_counts[(sample.case.index() - 1) as usize] += 1;
            *pair_counts
                .entry((sample.case, sample.edge_j.pos, sample.edge_k.pos))
                .or_default() += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for (i, &c) in case_counts.iter().enumerate() {
            let observed = c as f64 / n as f64;
            assert!((observed - p).abs() < 3.0 * sigma, "case {}: {observed}", i + 1);
        }
        // Within each case the valid ordered pairs are equally likely:
        // cases 1 and 3 have 2 ordered pairs, case 2 has 4.
        for ((case, j, k), count) in pair_counts {
            let within = match case {
                Case::TwoOut | Case::TwoIn => 2.0,
                Case::InOut => 4.0,
            };
            let p = (1.0 / 3.0) * (1.0 / within);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let observed = count as f64 / n as f64;
            assert!(
                (observed - p).abs() < 4.0 * sigma,
                "case {case:?} pair ({j},{k}): observed {observed}, expected {p}"
            );
        }
    }

    #[test]
    fn weighted_pair_draws_follow_the_weight_product() {
        // Node 0 has three out-edges with weights 1, 2, 3.
        let ts = [Triple::new(0, 0, 1), Triple::new(0, 0, 2), Triple::new(0, 0, 3)].to_vec();
        let g = RelGraph::build(ts, 4, 1, Some(vec![1.0, 2.0, 3.0])).unwrap();
        let mut s = Sampler::new(&g, 13);
        let n = 150_000;
        let mut counts: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for _ in 0..n {
            let sample = s.sample_structure(&g, 0).unwrap();
            *counts.entry((sample.edge_j.pos, sample.edge_k.pos)).or_default() += 1;
        }
        let w = [1.0, 2.0, 3.0];
        let z: f64 = (0..3)
            .flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| w[a] * w[b]))
            .sum();
        for ((a, b), count) in counts {
            let p = w[a] * w[b] / z;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let observed = count as f64 / n as f64;
            assert!(
                (observed - p).abs() < 4.0 * sigma,
                "pair ({a},{b}): observed {observed}, expected {p}"
            );
        }
    }

    #[test]
    fn two_node_negative_support_is_the_self_pair() {
        // Only fact (0, 0, 1); for center 0 outgoing the draw (1, 0) is
        // rejected and (0, 0) accepted, so the self pair always comes back.
        let g = graph_from(&[(0, 0, 1)], 2, 1);
        let mut s = Sampler::new(&g, 5);
        for _ in 0..200 {
            assert_eq!(s.sample_negative(&g, 0, Direction::Outgoing).unwrap(), (0, 0));
        }
    }

    #[test]
    fn center_without_outgoing_facts_accepts_first_draw() {
        let g = graph_from(&[(0, 0, 1)], 2, 1);
        let mut s = Sampler::new(&g, 5);
        // Node 1 has no outgoing facts at all, so no draw can be rejected.
        for _ in 0..100 {
            let (n, l) = s.sample_negative(&g, 1, Direction::Outgoing).unwrap();
            assert!(n < 2 && l < 1);
        }
    }

    #[test]
    fn accepted_negatives_are_never_facts() {
        let g = graph_from(
            &[(0, 0, 1), (0, 0, 2), (1, 1, 2), (2, 0, 0), (3, 1, 0), (1, 0, 3)],
            4,
            2,
        );
        let mut s = Sampler::new(&g, 17);
        for _ in 0..10_000 {
            let center = s.sample_center().unwrap();
            let (n, l) = s.sample_negative(&g, center, Direction::Outgoing).unwrap();
            assert!(!g.contains_fact(center, l, n));
            let (n, l) = s.sample_negative(&g, center, Direction::Incoming).unwrap();
            assert!(!g.contains_fact(n, l, center));
        }
    }

    #[test]
    fn saturated_negative_sampling_reports_the_center() {
        // Single node, single relation, self-loop fact: every (node,
        // relation) pair is a fact, so rejection can never terminate.
        let g = graph_from(&[(0, 0, 0), (0, 0, 0)], 1, 1);
        let mut s = Sampler::new(&g, 3);
        match s.sample_negative(&g, 0, Direction::Outgoing) {
            Err(SamplingError::NegativeSaturated { node, cap }) => {
                assert_eq!(node, 0);
                assert_eq!(cap, DEFAULT_RETRY_CAP);
            }
            other => panic!("expected saturation, got {other:?}"),
        }
    }
}
