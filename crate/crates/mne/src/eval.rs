//! Downstream evaluation: triplet classification (embeddings trained on
//! the whole graph, classifier over concatenated vectors, balanced
//! non-fact negatives) and link prediction (node-covering edge split,
//! embeddings trained on the train split only, classifier tested on
//! held-out facts vs corruptions), plus the dimension and tri-node-ratio
//! sweep drivers.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::census::{filter_by_trinode_ratio, CensusError};
use crate::classifier::{self, ClassifierConfig, ClassifierError, FeatureSet};
use crate::graph::{GraphError, RelGraph, Triple};
use crate::model::{BridgeMode, EmbeddingTable};
use crate::trainer::{self, Model, ModelSpec, TrainConfig, TrainError};

const STREAM_TC_NEGATIVES: u64 = 0x6e65_6701;
const STREAM_TC_SPLIT: u64 = 0x7370_6c01;
const STREAM_LP_SPLIT: u64 = 0x7370_6c02;
const STREAM_LP_CORRUPT_TRAIN: u64 = 0x636f_7201;
const STREAM_LP_CORRUPT_TEST: u64 = 0x636f_7202;

const CORRUPT_RETRY_CAP: usize = 1000;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("split {split} leaves an empty {side} side for {n} examples")]
    EmptySplit { split: f64, side: &'static str, n: usize },
    #[error("node {node} has no incident edge; the train split cannot cover it")]
    UncoverableNode { node: usize },
    #[error("could not corrupt triple ({0}, {1}, {2}): all candidates are facts")]
    CorruptionSaturated(usize, usize, usize),
    #[error("embedding table does not match graph: {0}")]
    TableMismatch(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    TripletClassification,
    LinkPrediction,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::TripletClassification => "triplet-classification",
            Task::LinkPrediction => "link-prediction",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tc" | "triplet-classification" => Ok(Task::TripletClassification),
            "lp" | "link-prediction" => Ok(Task::LinkPrediction),
            other => Err(format!("unknown task {other:?} (expected tc or lp)")),
        }
    }
}

/// One evaluation outcome, one CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub task: Task,
    pub model: String,
    pub bridge: Option<BridgeMode>,
    pub dim: usize,
    /// Tri-node ratio of the evaluated subgraph, for ratio sweeps.
    pub ratio: Option<f64>,
    pub split: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub train_seconds: f64,
}

impl EvalResult {
    pub fn csv_header() -> &'static str {
        "task,model,bridge,dim,ratio,split,seed,accuracy,train_seconds"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.task.as_str(),
            self.model,
            self.bridge.map_or("", |b| b.as_str()),
            self.dim,
            self.ratio.map_or(String::new(), |r| r.to_string()),
            self.split,
            self.seed,
            self.accuracy,
            self.train_seconds
        )
    }
}

/// Where a labeled triple came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Fact,
    SampledNonFact,
    CorruptedHead,
    CorruptedTail,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledTriple {
    pub triple: Triple,
    pub label: bool,
    pub provenance: Provenance,
}

/// Balanced positive/negative triple set.
#[derive(Clone, Debug, Default)]
pub struct LabeledTripleSet {
    pub items: Vec<LabeledTriple>,
}

impl LabeledTripleSet {
    pub fn labels(&self) -> Vec<bool> {
        self.items.iter().map(|it| it.label).collect()
    }

    pub fn triples(&self) -> Vec<Triple> {
        self.items.iter().map(|it| it.triple).collect()
    }
}

/// Concatenation [source(head) ‖ relation ‖ target(tail)] into `out`
/// (length 3d).
pub fn featurize_into(table: &EmbeddingTable, triple: Triple, out: &mut [f64]) {
    let d = table.dim();
    assert_eq!(out.len(), 3 * d, "featurize: output must have length 3·dim");
    out[..d].copy_from_slice(table.source_row(triple.head));
    out[d..2 * d].copy_from_slice(table.relation_row(triple.relation));
    out[2 * d..].copy_from_slice(table.target_row(triple.tail));
}

/// Allocating form of [`featurize_into`].
pub fn featurize(table: &EmbeddingTable, triple: Triple) -> Vec<f64> {
    let mut out = vec![0.0; 3 * table.dim()];
    featurize_into(table, triple, &mut out);
    out
}

/// Lazy feature rows over a triple list; avoids materializing n×3d.
pub struct TripleFeatures<'a> {
    table: &'a EmbeddingTable,
    triples: Vec<Triple>,
}

impl<'a> TripleFeatures<'a> {
    pub fn new(table: &'a EmbeddingTable, triples: Vec<Triple>) -> Self {
        TripleFeatures { table, triples }
    }
}

impl FeatureSet for TripleFeatures<'_> {
    fn len(&self) -> usize {
        self.triples.len()
    }

    fn dim(&self) -> usize {
        3 * self.table.dim()
    }

    fn fill(&self, idx: usize, out: &mut [f64]) {
        featurize_into(self.table, self.triples[idx], out);
    }
}

/// All facts as positives plus an equal count of uniformly resampled
/// non-fact triples as negatives.
pub fn build_labeled_set(graph: &RelGraph, seed: u64) -> Result<LabeledTripleSet, EvalError> {
    let mut items: Vec<LabeledTriple> = graph
        .triples()
        .iter()
        .map(|&triple| LabeledTriple { triple, label: true, provenance: Provenance::Fact })
        .collect();
    let mut rng = stream_rng(seed, STREAM_TC_NEGATIVES);
    let n = graph.n_edges();
    let (nv, nr) = (graph.n_nodes(), graph.n_relations());
    for _ in 0..n {
        let mut accepted = None;
        for _ in 0..CORRUPT_RETRY_CAP {
            let h = rng.gen_range(0..nv);
            let r = rng.gen_range(0..nr);
            let t = rng.gen_range(0..nv);
            if !graph.contains_fact(h, r, t) {
                accepted = Some(Triple::new(h, r, t));
                break;
            }
        }
        let triple = accepted.ok_or(EvalError::CorruptionSaturated(0, 0, 0))?;
        items.push(LabeledTriple { triple, label: false, provenance: Provenance::SampledNonFact });
    }
    Ok(LabeledTripleSet { items })
}

fn check_table(graph: &RelGraph, table: &EmbeddingTable) -> Result<(), EvalError> {
    if table.n_nodes() != graph.n_nodes() || table.n_relations() != graph.n_relations() {
        return Err(EvalError::TableMismatch(format!(
            "table is {}x{} (entities x relations), graph needs {}x{}",
            table.n_nodes(),
            table.n_relations(),
            graph.n_nodes(),
            graph.n_relations()
        )));
    }
    Ok(())
}

/// Triplet classification: balanced fact/non-fact set, split
/// `split : 1 − split`, classifier fit on the train side, accuracy
/// reported on the test side. The embedding table is expected to be
/// trained on the full graph.
pub fn eval_triplet_classification(
    graph: &RelGraph,
    table: &EmbeddingTable,
    model_label: &str,
    bridge: Option<BridgeMode>,
    split: f64,
    seed: u64,
    clf: &ClassifierConfig,
) -> Result<EvalResult, EvalError> {
    check_table(graph, table)?;
    let set = build_labeled_set(graph, seed)?;
    let n = set.items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, STREAM_TC_SPLIT));
    let n_train = (split * n as f64).round() as usize;
    if n_train == 0 {
        return Err(EvalError::EmptySplit { split, side: "train", n });
    }
    if n_train >= n {
        return Err(EvalError::EmptySplit { split, side: "test", n });
    }
    let (train_idx, test_idx) = order.split_at(n_train);

    let collect = |idx: &[usize]| -> (Vec<Triple>, Vec<bool>) {
        (
            idx.iter().map(|&i| set.items[i].triple).collect(),
            idx.iter().map(|&i| set.items[i].label).collect(),
        )
    };
    let (train_triples, train_labels) = collect(train_idx);
    let (test_triples, test_labels) = collect(test_idx);

    let model = classifier::fit(&TripleFeatures::new(table, train_triples), &train_labels, clf)?;
    let accuracy =
        classifier::accuracy(&model, &TripleFeatures::new(table, test_triples), &test_labels);
    Ok(EvalResult {
        task: Task::TripletClassification,
        model: model_label.to_string(),
        bridge,
        dim: table.dim(),
        ratio: None,
        split,
        seed,
        accuracy,
        train_seconds: 0.0,
    })
}

/// Edge split in which every node keeps at least one incident train edge:
/// a greedy covering pass over shuffled edges reserves edges for
/// uncovered endpoints, then a random fill tops the train side up to the
/// requested fraction. Duplicate triples always land on one side.
pub fn node_covering_split(
    graph: &RelGraph,
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let n = graph.n_edges();
    if n < 2 {
        return Err(EvalError::EmptySplit { split: train_frac, side: "test", n });
    }
    for v in 0..graph.n_nodes() {
        if graph.out_adj(v).is_empty() && graph.in_adj(v).is_empty() {
            return Err(EvalError::UncoverableNode { node: v });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, STREAM_LP_SPLIT));

    let mut covered = vec![false; graph.n_nodes()];
    let mut side: HashMap<Triple, bool> = HashMap::new();
    let mut train = Vec::new();
    let mut leftovers = Vec::new();
    for &idx in &order {
        let t = graph.triple(idx);
        if side.get(&t) == Some(&true) {
            train.push(idx);
            continue;
        }
        if !covered[t.head] || !covered[t.tail] {
            covered[t.head] = true;
            covered[t.tail] = true;
            side.insert(t, true);
            train.push(idx);
        } else {
            leftovers.push(idx);
        }
    }

    let target = (train_frac * n as f64).ceil() as usize;
    let mut test = Vec::new();
    for idx in leftovers {
        let t = graph.triple(idx);
        match side.get(&t) {
            Some(&true) => train.push(idx),
            Some(&false) => test.push(idx),
            None => {
                if train.len() < target {
                    side.insert(t, true);
                    train.push(idx);
                } else {
                    side.insert(t, false);
                    test.push(idx);
                }
            }
        }
    }
    if test.is_empty() {
        return Err(EvalError::EmptySplit { split: train_frac, side: "test", n });
    }
    Ok((train, test))
}

/// One corruption per triple with the head or tail replaced (50/50),
/// rejecting candidates that are facts anywhere in the reference graph.
fn corrupt_triples(
    reference: &RelGraph,
    triples: &[Triple],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LabeledTriple>, EvalError> {
    let nv = reference.n_nodes();
    let mut out = Vec::with_capacity(triples.len());
    for &t in triples {
        let mut accepted = None;
        for _ in 0..CORRUPT_RETRY_CAP {
            let corrupt_head = rng.gen::<bool>();
            let replacement = rng.gen_range(0..nv);
            let candidate = if corrupt_head {
                Triple::new(replacement, t.relation, t.tail)
            } else {
                Triple::new(t.head, t.relation, replacement)
            };
            if !reference.contains_fact(candidate.head, candidate.relation, candidate.tail) {
                accepted = Some((candidate, corrupt_head));
                break;
            }
        }
        let (triple, was_head) =
            accepted.ok_or(EvalError::CorruptionSaturated(t.head, t.relation, t.tail))?;
        out.push(LabeledTriple {
            triple,
            label: false,
            provenance: if was_head { Provenance::CorruptedHead } else { Provenance::CorruptedTail },
        });
    }
    Ok(out)
}

/// Link prediction: node-covering `split : 1 − split` edge split,
/// embeddings trained on the train split only, classifier fit on
/// train-split facts plus their corruptions and tested on held-out facts
/// plus theirs. Corruption rejection consults the full graph's fact set.
pub fn eval_link_prediction(
    graph: &RelGraph,
    config: &TrainConfig,
    split: f64,
    seed: u64,
    clf: &ClassifierConfig,
) -> Result<EvalResult, EvalError> {
    let (train_idx, test_idx) = node_covering_split(graph, split, seed)?;
    let train_triples: Vec<Triple> = train_idx.iter().map(|&i| graph.triple(i)).collect();
    let train_weights: Vec<f64> = train_idx.iter().map(|&i| graph.weight(i)).collect();
    let test_triples: Vec<Triple> = test_idx.iter().map(|&i| graph.triple(i)).collect();

    let train_graph = RelGraph::build(
        train_triples.clone(),
        graph.n_nodes(),
        graph.n_relations(),
        Some(train_weights),
    )?;
    let report = trainer::train(&train_graph, config)?;

    let mut rng_train = stream_rng(seed, STREAM_LP_CORRUPT_TRAIN);
    let train_negatives = corrupt_triples(graph, &train_triples, &mut rng_train)?;
    let mut rng_test = stream_rng(seed, STREAM_LP_CORRUPT_TEST);
    let test_negatives = corrupt_triples(graph, &test_triples, &mut rng_test)?;

    let mut fit_triples = train_triples;
    let mut fit_labels = vec![true; fit_triples.len()];
    fit_triples.extend(train_negatives.iter().map(|it| it.triple));
    fit_labels.extend(std::iter::repeat_n(false, train_negatives.len()));

    let mut eval_triples = test_triples;
    let mut eval_labels = vec![true; eval_triples.len()];
    eval_triples.extend(test_negatives.iter().map(|it| it.triple));
    eval_labels.extend(std::iter::repeat_n(false, test_negatives.len()));

    let model =
        classifier::fit(&TripleFeatures::new(&report.table, fit_triples), &fit_labels, clf)?;
    let accuracy = classifier::accuracy(
        &model,
        &TripleFeatures::new(&report.table, eval_triples),
        &eval_labels,
    );
    Ok(EvalResult {
        task: Task::LinkPrediction,
        model: config.label().to_string(),
        bridge: (config.model == Model::Mne).then_some(config.bridge),
        dim: config.dim,
        ratio: None,
        split,
        seed,
        accuracy,
        train_seconds: report.seconds,
    })
}

/// Trains on the full graph and evaluates triplet classification, filling
/// in training time; the single-configuration unit of the sweeps.
pub fn train_and_eval_tc(
    graph: &RelGraph,
    config: &TrainConfig,
    split: f64,
    seed: u64,
    clf: &ClassifierConfig,
) -> Result<EvalResult, EvalError> {
    let report = trainer::train(graph, config)?;
    let mut result = eval_triplet_classification(
        graph,
        &report.table,
        config.label(),
        (config.model == Model::Mne).then_some(config.bridge),
        split,
        seed,
        clf,
    )?;
    result.train_seconds = report.seconds;
    Ok(result)
}

/// One full train + eval per dimension.
pub fn sweep_dimension(
    graph: &RelGraph,
    dims: &[usize],
    task: Task,
    base: &TrainConfig,
    split: f64,
    seed: u64,
    clf: &ClassifierConfig,
) -> Result<Vec<EvalResult>, EvalError> {
    let mut results = Vec::with_capacity(dims.len());
    for &dim in dims {
        let mut config = base.clone();
        config.dim = dim;
        let result = match task {
            Task::TripletClassification => train_and_eval_tc(graph, &config, split, seed, clf)?,
            Task::LinkPrediction => eval_link_prediction(graph, &config, split, seed, clf)?,
        };
        results.push(result);
    }
    Ok(results)
}

fn spec_config(base: &TrainConfig, spec: ModelSpec) -> TrainConfig {
    let mut config = base.clone();
    config.model = spec.model;
    config.bridge = spec.bridge;
    config.margin = match spec.model {
        Model::TransE => base.margin.or(Some(1.0)),
        _ => None,
    };
    config
}

/// For each target tri-node ratio, builds the filtered subgraph and runs
/// triplet classification for every model; negatives are shared across
/// models at a fixed seed.
pub fn sweep_trinode_ratio(
    graph: &RelGraph,
    ratios: &[f64],
    models: &[ModelSpec],
    base: &TrainConfig,
    split: f64,
    seed: u64,
    clf: &ClassifierConfig,
) -> Result<Vec<EvalResult>, EvalError> {
    let mut results = Vec::with_capacity(ratios.len() * models.len());
    for &ratio in ratios {
        let filtered = filter_by_trinode_ratio(graph, ratio, seed)?;
        for &spec in models {
            let config = spec_config(base, spec);
            let mut result = train_and_eval_tc(&filtered.graph, &config, split, seed, clf)?;
            result.ratio = Some(filtered.ratio);
            results.push(result);
        }
    }
    Ok(results)
}
