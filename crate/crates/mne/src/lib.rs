//! Multi-relational network embeddings that preserve the triangular and
//! parallelogram connectivity structures of directed labeled graphs.
//!
//! The crate covers the full pipeline: graph loading and indexing
//! ([`graph`]), a census of the structural motifs ([`census`]), seeded
//! stochastic sampling ([`sampling`]), embedding storage and scoring
//! ([`model`]), negative-sampling SGD training of the structure model,
//! a relation-aware edge model and a translation baseline ([`trainer`]),
//! a from-scratch logistic-regression classifier ([`classifier`]), the
//! triplet-classification and link-prediction evaluation harness with
//! sweep drivers ([`eval`]), and text checkpoints ([`checkpoint`]).

pub mod alias;
pub mod bruteforce;
pub mod census;
pub mod checkpoint;
pub mod classifier;
pub mod eval;
pub mod graph;
pub mod model;
pub mod sampling;
pub mod sigmoid;
pub mod trainer;

pub use census::{
    count_parallelograms, count_triangles, filter_by_trinode_ratio, ParallelogramCount,
    StructureCensus, TriangleCensus,
};
pub use classifier::{BinaryClassifier, ClassifierConfig};
pub use eval::{EvalResult, LabeledTripleSet, Task};
pub use graph::{load_graph, load_triples, RelGraph, Triple, Vocabulary};
pub use model::{bridge, edge_score, BridgeMode, EmbeddingTable};
pub use sampling::{Sampler, StructureSample};
pub use trainer::{
    check_gradients, train, train_mne, train_rline, train_transe, LrSchedule, Model, ModelSpec,
    TrainConfig, TrainReport,
};
