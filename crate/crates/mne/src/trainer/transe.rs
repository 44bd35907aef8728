//! Margin-based translation baseline: per sampled triple, corrupt the
//! head or tail uniformly, take a subgradient step on
//! max(0, γ + ‖h + r − t‖ − ‖h' + r − t'‖), and renormalize the touched
//! entity vectors to unit length. Entities live in the source matrix;
//! relations in the relation matrix.

use rand::Rng;

use crate::graph::{RelGraph, Triple};
use crate::sampling::Sampler;
use crate::trainer::gradients::{RowId, TableView};
use crate::trainer::TrainError;

pub(crate) struct TranseScratch {
    pos_diff: Vec<f64>,
    neg_diff: Vec<f64>,
}

impl TranseScratch {
    pub fn new(dim: usize) -> TranseScratch {
        TranseScratch { pos_diff: vec![0.0; dim], neg_diff: vec![0.0; dim] }
    }
}

fn fill_diff(view: &TableView, triple: Triple, out: &mut [f64]) -> f64 {
    // h + r − t and its norm.
    unsafe {
        let h = view.row(RowId::Source(triple.head));
        let r = view.row(RowId::Relation(triple.relation));
        let t = view.row(RowId::Source(triple.tail));
        let mut norm_sq = 0.0;
        for i in 0..out.len() {
            let d = h[i] + r[i] - t[i];
            out[i] = d;
            norm_sq += d * d;
        }
        norm_sq.sqrt()
    }
}

/// L2 energy ‖h + r − t‖ of a triple under the current view.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn energy(view: &TableView, triple: Triple) -> f64 {
    let mut buf = vec![0.0; view.dim()];
    fill_diff(view, triple, &mut buf)
}

/// Hinge loss of a (positive, corrupted) pair at the current parameters.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn hinge_loss(view: &TableView, positive: Triple, corrupted: Triple, margin: f64) -> f64 {
    (margin + energy(view, positive) - energy(view, corrupted)).max(0.0)
}

/// Draws a corruption of `triple` with the head or tail replaced (50/50),
/// rejecting corruptions that happen to be facts.
pub(crate) fn corrupt_triple(
    graph: &RelGraph,
    sampler: &mut Sampler,
    triple: Triple,
    retry_cap: usize,
) -> Result<Triple, TrainError> {
    for _ in 0..retry_cap {
        let corrupt_head = sampler.rng().gen::<bool>();
        let replacement = sampler.sample_entity();
        let candidate = if corrupt_head {
            Triple::new(replacement, triple.relation, triple.tail)
        } else {
            Triple::new(triple.head, triple.relation, replacement)
        };
        if !graph.contains_fact(candidate.head, candidate.relation, candidate.tail) {
            return Ok(candidate);
        }
    }
    Err(TrainError::Sampling(crate::sampling::SamplingError::NegativeSaturated {
        node: triple.head,
        cap: retry_cap,
    }))
}

/// Computes the hinge loss and, when the hinge is active, emits the loss
/// gradient as `(row, coeff, vector)` triples meaning
/// `∂loss/∂row += coeff · vector`. Vectors point into `scratch`, never
/// into the table, so the caller may apply updates while emitting.
pub(crate) unsafe fn emit_transe_gradients<F: FnMut(RowId, f64, &[f64])>(
    view: &TableView,
    positive: Triple,
    corrupted: Triple,
    margin: f64,
    scratch: &mut TranseScratch,
    mut emit: F,
) -> f64 {
    let e_pos = fill_diff(view, positive, &mut scratch.pos_diff);
    let e_neg = fill_diff(view, corrupted, &mut scratch.neg_diff);
    let loss = margin + e_pos - e_neg;
    if loss <= 0.0 {
        return 0.0;
    }

    // Subgradients of the two norms; zero at the kink.
    if e_pos > 1e-12 {
        let inv = 1.0 / e_pos;
        scratch.pos_diff.iter_mut().for_each(|x| *x *= inv);
    } else {
        scratch.pos_diff.iter_mut().for_each(|x| *x = 0.0);
    }
    if e_neg > 1e-12 {
        let inv = 1.0 / e_neg;
        scratch.neg_diff.iter_mut().for_each(|x| *x *= inv);
    } else {
        scratch.neg_diff.iter_mut().for_each(|x| *x = 0.0);
    }

    emit(RowId::Source(positive.head), 1.0, &scratch.pos_diff);
    emit(RowId::Source(positive.tail), -1.0, &scratch.pos_diff);
    emit(RowId::Relation(positive.relation), 1.0, &scratch.pos_diff);
    emit(RowId::Source(corrupted.head), -1.0, &scratch.neg_diff);
    emit(RowId::Source(corrupted.tail), 1.0, &scratch.neg_diff);
    emit(RowId::Relation(corrupted.relation), -1.0, &scratch.neg_diff);
    loss
}

fn renormalize(row: &mut [f64]) {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
}

/// One subgradient descent step at rate `eta`, followed by unit-norm
/// renormalization of the touched entity vectors. Returns the hinge loss
/// before the step; an inactive hinge leaves parameters untouched.
pub(crate) unsafe fn transe_step(
    view: &TableView,
    positive: Triple,
    corrupted: Triple,
    margin: f64,
    eta: f64,
    scratch: &mut TranseScratch,
) -> f64 {
    let loss = emit_transe_gradients(view, positive, corrupted, margin, scratch, |row, coeff, vec| {
        let dst = view.row_mut(row);
        let k = eta * coeff;
        for (d, v) in dst.iter_mut().zip(vec) {
            *d -= k * v;
        }
    });
    if loss > 0.0 {
        renormalize(view.row_mut(RowId::Source(positive.head)));
        renormalize(view.row_mut(RowId::Source(positive.tail)));
        renormalize(view.row_mut(RowId::Source(corrupted.head)));
        renormalize(view.row_mut(RowId::Source(corrupted.tail)));
    }
    loss
}
