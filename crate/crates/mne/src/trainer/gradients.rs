//! Gradients of the negative-sampling surrogates, shared between the
//! training hot loop and the finite-difference checker.
//!
//! Every surrogate is a sum of per-edge logits ("parts"); each part scores
//! a target-role row against a source-role row bridged with a relation
//! row. Gradients are accumulated from pre-step copies of the involved
//! rows, so one step applies the exact gradient of the surrogate at the
//! step's starting parameters regardless of row collisions.

use std::collections::BTreeMap;
use std::marker::PhantomData;

use smallvec::SmallVec;

use crate::graph::RelGraph;
use crate::model::{BridgeMode, EmbeddingTable};
use crate::sampling::{Case, StructureSample};
use crate::sigmoid::{log_sigmoid, Sigmoid};

/// One embedding row, identified by matrix and index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowId {
    Source(usize),
    Target(usize),
    Relation(usize),
}

/// Raw-pointer view over an embedding table for lock-free updates. Safe
/// use requires either a single worker or tolerance of benign element
/// races (workers never read rows they are not told to).
pub(crate) struct TableView<'a> {
    source: *mut f64,
    target: *mut f64,
    relation: *mut f64,
    n_nodes: usize,
    n_relations: usize,
    dim: usize,
    _marker: PhantomData<&'a mut EmbeddingTable>,
}

unsafe impl Send for TableView<'_> {}
unsafe impl Sync for TableView<'_> {}

impl<'a> TableView<'a> {
    pub fn new(table: &'a mut EmbeddingTable) -> TableView<'a> {
        let n_nodes = table.n_nodes();
        let n_relations = table.n_relations();
        let dim = table.dim();
        let (source, target, relation) = table.matrices_mut();
        TableView {
            source: source.as_mut_ptr(),
            target: target.as_mut_ptr(),
            relation: relation.as_mut_ptr(),
            n_nodes,
            n_relations,
            dim,
            _marker: PhantomData,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub unsafe fn row(&self, id: RowId) -> &[f64] {
        let (ptr, idx, bound) = match id {
            RowId::Source(i) => (self.source, i, self.n_nodes),
            RowId::Target(i) => (self.target, i, self.n_nodes),
            RowId::Relation(i) => (self.relation, i, self.n_relations),
        };
        debug_assert!(idx < bound);
        std::slice::from_raw_parts(ptr.add(idx * self.dim), self.dim)
    }

    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn row_mut(&self, id: RowId) -> &mut [f64] {
        let (ptr, idx, bound) = match id {
            RowId::Source(i) => (self.source, i, self.n_nodes),
            RowId::Target(i) => (self.target, i, self.n_nodes),
            RowId::Relation(i) => (self.relation, i, self.n_relations),
        };
        debug_assert!(idx < bound);
        std::slice::from_raw_parts_mut(ptr.add(idx * self.dim), self.dim)
    }
}

/// Row roles of one logit: score = ⟨target, f(source, relation)⟩.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ScorePart {
    pub target: usize,
    pub source: usize,
    pub relation: usize,
}

/// The two positive parts of a structure sample. The first ("j") part
/// recurs inside every negative term; the second ("k") part is the slot
/// negatives replace.
pub(crate) fn sample_parts(sample: &StructureSample) -> (ScorePart, ScorePart) {
    let c = sample.center;
    match sample.case {
        Case::TwoOut => (
            ScorePart { target: sample.edge_j.node, source: c, relation: sample.edge_j.relation },
            ScorePart { target: sample.edge_k.node, source: c, relation: sample.edge_k.relation },
        ),
        Case::InOut => (
            ScorePart { target: c, source: sample.edge_j.node, relation: sample.edge_j.relation },
            ScorePart { target: sample.edge_k.node, source: c, relation: sample.edge_k.relation },
        ),
        Case::TwoIn => (
            ScorePart { target: c, source: sample.edge_j.node, relation: sample.edge_j.relation },
            ScorePart { target: c, source: sample.edge_k.node, relation: sample.edge_k.relation },
        ),
    }
}

/// The part standing in for the k slot with a negative (node, relation).
pub(crate) fn negative_part(sample: &StructureSample, negative: (usize, usize)) -> ScorePart {
    match sample.case {
        Case::TwoOut | Case::InOut => {
            ScorePart { target: negative.0, source: sample.center, relation: negative.1 }
        }
        Case::TwoIn => {
            ScorePart { target: sample.center, source: negative.0, relation: negative.1 }
        }
    }
}

/// Reusable buffers holding pre-step copies of everything the gradient
/// application reads, so emitted updates never observe their own writes.
#[derive(Default)]
pub(crate) struct GradScratch {
    buf: Vec<f64>,
    scalars: SmallVec<[(f64, f64); 8]>,
}

const LANES: usize = 3; // bridged/t_copy (+ r/t/s copies for the product bridge)

impl GradScratch {
    fn prepare(&mut self, parts: usize, dim: usize) {
        self.buf.resize(parts * LANES * dim, 0.0);
        self.scalars.clear();
    }

    fn lanes(&self, part: usize, dim: usize) -> (&[f64], &[f64], &[f64]) {
        let base = part * LANES * dim;
        let a = &self.buf[base..base + dim];
        let b = &self.buf[base + dim..base + 2 * dim];
        let c = &self.buf[base + 2 * dim..base + 3 * dim];
        (a, b, c)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pass 1: snapshot one part's rows into scratch and return its score.
///
/// Lane layout per part: addition stores (bridged, target-copy, unused);
/// multiplication stores (relation-copy, target-copy, source-copy) plus
/// the two inner products.
unsafe fn load_part(
    view: &TableView,
    mode: BridgeMode,
    part: ScorePart,
    index: usize,
    scratch: &mut GradScratch,
) -> f64 {
    let dim = view.dim();
    let s_row = view.row(RowId::Source(part.source));
    let t_row = view.row(RowId::Target(part.target));
    let r_row = view.row(RowId::Relation(part.relation));
    let base = index * LANES * dim;
    match mode {
        BridgeMode::Addition => {
            let mut score = 0.0;
            for i in 0..dim {
                let bridged = s_row[i] + r_row[i];
                scratch.buf[base + i] = bridged;
                scratch.buf[base + dim + i] = t_row[i];
                score += t_row[i] * bridged;
            }
            scratch.scalars.push((0.0, 0.0));
            score
        }
        BridgeMode::Multiplication => {
            let a = dot(t_row, r_row);
            let b = dot(r_row, s_row);
            scratch.buf[base..base + dim].copy_from_slice(r_row);
            scratch.buf[base + dim..base + 2 * dim].copy_from_slice(t_row);
            scratch.buf[base + 2 * dim..base + 3 * dim].copy_from_slice(s_row);
            scratch.scalars.push((a, b));
            a * b
        }
    }
}

/// Pass 2: emit the gradient of one part's score scaled by `coeff`.
fn emit_part<F: FnMut(RowId, f64, &[f64])>(
    mode: BridgeMode,
    part: ScorePart,
    index: usize,
    coeff: f64,
    dim: usize,
    scratch: &GradScratch,
    emit: &mut F,
) {
    let (lane0, lane1, lane2) = scratch.lanes(index, dim);
    match mode {
        BridgeMode::Addition => {
            // ∂s/∂target = bridged; ∂s/∂source = ∂s/∂relation = target.
            emit(RowId::Target(part.target), coeff, lane0);
            emit(RowId::Source(part.source), coeff, lane1);
            emit(RowId::Relation(part.relation), coeff, lane1);
        }
        BridgeMode::Multiplication => {
            // s = ⟨t, r⟩⟨r, u⟩: ∂s/∂t = ⟨r,u⟩ r; ∂s/∂u = ⟨t,r⟩ r;
            // ∂s/∂r = ⟨r,u⟩ t + ⟨t,r⟩ u.
            let (a, b) = scratch.scalars[index];
            emit(RowId::Target(part.target), coeff * b, lane0);
            emit(RowId::Source(part.source), coeff * a, lane0);
            emit(RowId::Relation(part.relation), coeff * b, lane1);
            emit(RowId::Relation(part.relation), coeff * a, lane2);
        }
    }
}

/// Computes the structure surrogate
/// `log σ(s_j + s_k) + Σ_m log σ(−s_j − s_m)` at the view's current
/// values and emits every gradient contribution as `(row, coeff, vector)`
/// triples meaning `∂/∂row += coeff · vector`. Returns the surrogate value.
///
/// The caller applies its own overall scaling (ω-product, learning rate)
/// and sign convention; coefficients here are for gradient ascent on the
/// surrogate.
#[allow(clippy::too_many_arguments)]
pub(crate) unsafe fn emit_structure_gradients<F: FnMut(RowId, f64, &[f64])>(
    view: &TableView,
    mode: BridgeMode,
    sample: &StructureSample,
    negatives: &[(usize, usize)],
    sigmoid: Sigmoid,
    scratch: &mut GradScratch,
    mut emit: F,
) -> f64 {
    let dim = view.dim();
    let (part_j, part_k) = sample_parts(sample);
    let n_parts = 2 + negatives.len();
    scratch.prepare(n_parts, dim);

    let s_j = load_part(view, mode, part_j, 0, scratch);
    let s_k = load_part(view, mode, part_k, 1, scratch);
    let mut neg_parts: SmallVec<[ScorePart; 8]> = SmallVec::new();
    let mut neg_scores: SmallVec<[f64; 8]> = SmallVec::new();
    for (m, &neg) in negatives.iter().enumerate() {
        let part = negative_part(sample, neg);
        neg_scores.push(load_part(view, mode, part, 2 + m, scratch));
        neg_parts.push(part);
    }

    let g_pos = 1.0 - sigmoid.eval(s_j + s_k);
    let mut coeff_j = g_pos;
    let mut surrogate = log_sigmoid(s_j + s_k);
    let mut neg_coeffs: SmallVec<[f64; 8]> = SmallVec::new();
    for &s_n in &neg_scores {
        let g_m = -sigmoid.eval(s_j + s_n);
        neg_coeffs.push(g_m);
        coeff_j += g_m;
        surrogate += log_sigmoid(-s_j - s_n);
    }

    emit_part(mode, part_j, 0, coeff_j, dim, scratch, &mut emit);
    emit_part(mode, part_k, 1, g_pos, dim, scratch, &mut emit);
    for (m, part) in neg_parts.iter().enumerate() {
        emit_part(mode, *part, 2 + m, neg_coeffs[m], dim, scratch, &mut emit);
    }
    surrogate
}

/// Relation-aware single-edge surrogate
/// `log σ(s_pos) + Σ_m log σ(−s_m)`: the second-order edge objective with
/// the (target, relation) slot corrupted by negatives. Always uses the
/// addition bridge.
#[allow(clippy::too_many_arguments)]
pub(crate) unsafe fn emit_edge_gradients<F: FnMut(RowId, f64, &[f64])>(
    view: &TableView,
    source: usize,
    relation: usize,
    target: usize,
    negatives: &[(usize, usize)],
    sigmoid: Sigmoid,
    scratch: &mut GradScratch,
    mut emit: F,
) -> f64 {
    let mode = BridgeMode::Addition;
    let dim = view.dim();
    let n_parts = 1 + negatives.len();
    scratch.prepare(n_parts, dim);

    // Load every part before emitting anything, so the whole gradient is
    // taken at the step's starting parameters even under row collisions.
    let part_pos = ScorePart { target, source, relation };
    let s_pos = load_part(view, mode, part_pos, 0, scratch);
    let mut neg_parts: SmallVec<[ScorePart; 8]> = SmallVec::new();
    let mut neg_scores: SmallVec<[f64; 8]> = SmallVec::new();
    for (m, &(node, rel)) in negatives.iter().enumerate() {
        let part = ScorePart { target: node, source, relation: rel };
        neg_scores.push(load_part(view, mode, part, 1 + m, scratch));
        neg_parts.push(part);
    }

    let mut surrogate = log_sigmoid(s_pos);
    emit_part(mode, part_pos, 0, 1.0 - sigmoid.eval(s_pos), dim, scratch, &mut emit);
    for (m, part) in neg_parts.iter().enumerate() {
        surrogate += log_sigmoid(-neg_scores[m]);
        emit_part(mode, *part, 1 + m, -sigmoid.eval(neg_scores[m]), dim, scratch, &mut emit);
    }
    surrogate
}

fn part_score(table: &EmbeddingTable, mode: BridgeMode, part: ScorePart) -> f64 {
    crate::model::triple_score(table, mode, part.source, part.relation, part.target)
}

/// Structure surrogate evaluated directly from a table; the function the
/// finite-difference checker differentiates.
pub(crate) fn structure_surrogate(
    table: &EmbeddingTable,
    mode: BridgeMode,
    sample: &StructureSample,
    negatives: &[(usize, usize)],
) -> f64 {
    let (part_j, part_k) = sample_parts(sample);
    let s_j = part_score(table, mode, part_j);
    let s_k = part_score(table, mode, part_k);
    let mut value = log_sigmoid(s_j + s_k);
    for &neg in negatives {
        let s_n = part_score(table, mode, negative_part(sample, neg));
        value += log_sigmoid(-s_j - s_n);
    }
    value
}

/// Edge surrogate evaluated directly from a table (see
/// [`emit_edge_gradients`]).
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn edge_surrogate(
    table: &EmbeddingTable,
    source: usize,
    relation: usize,
    target: usize,
    negatives: &[(usize, usize)],
) -> f64 {
    let mode = BridgeMode::Addition;
    let s_pos = part_score(table, mode, ScorePart { target, source, relation });
    let mut value = log_sigmoid(s_pos);
    for &(node, rel) in negatives {
        let s_m = part_score(table, mode, ScorePart { target: node, source, relation: rel });
        value += log_sigmoid(-s_m);
    }
    value
}

pub(crate) fn collect_gradients(
    table: &mut EmbeddingTable,
    mode: BridgeMode,
    sample: &StructureSample,
    negatives: &[(usize, usize)],
    sigmoid: Sigmoid,
) -> BTreeMap<RowId, Vec<f64>> {
    let dim = table.dim();
    let mut grads: BTreeMap<RowId, Vec<f64>> = BTreeMap::new();
    let view = TableView::new(table);
    let mut scratch = GradScratch::default();
    unsafe {
        emit_structure_gradients(&view, mode, sample, negatives, sigmoid, &mut scratch, |row, coeff, vec| {
            let g = grads.entry(row).or_insert_with(|| vec![0.0; dim]);
            for (gi, vi) in g.iter_mut().zip(vec) {
                *gi += coeff * vi;
            }
        });
    }
    grads
}

fn table_entry_mut(table: &mut EmbeddingTable, row: RowId, col: usize) -> &mut f64 {
    match row {
        RowId::Source(i) => &mut table.source_row_mut(i)[col],
        RowId::Target(i) => &mut table.target_row_mut(i)[col],
        RowId::Relation(i) => &mut table.relation_row_mut(i)[col],
    }
}

/// Compares every analytic partial derivative of the structure surrogate
/// against central finite differences at step `epsilon`, with the given
/// fixed negative draws. Returns the worst per-row relative error
/// ‖analytic − numeric‖₂ / max(‖analytic‖₂, ‖numeric‖₂, 1e-12).
pub fn check_gradients(
    graph: &RelGraph,
    table: &mut EmbeddingTable,
    mode: BridgeMode,
    sample: &StructureSample,
    negatives: &[(usize, usize)],
    epsilon: f64,
) -> f64 {
    crate::model::validate_sample(graph, sample);
    let dim = table.dim();
    let grads = collect_gradients(table, mode, sample, negatives, Sigmoid::Exact);

    let mut worst: f64 = 0.0;
    for (&row, analytic) in &grads {
        let mut numeric = vec![0.0; dim];
        for (col, slot) in numeric.iter_mut().enumerate() {
            let original = *table_entry_mut(table, row, col);
            *table_entry_mut(table, row, col) = original + epsilon;
            let up = structure_surrogate(table, mode, sample, negatives);
            *table_entry_mut(table, row, col) = original - epsilon;
            let down = structure_surrogate(table, mode, sample, negatives);
            *table_entry_mut(table, row, col) = original;
            *slot = (up - down) / (2.0 * epsilon);
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n) * (a - n))
            .sum::<f64>()
            .sqrt();
        let a_norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let n_norm: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        let err = diff / a_norm.max(n_norm).max(1e-12);
        worst = worst.max(err);
    }
    worst
}
