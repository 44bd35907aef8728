//! Sample-budgeted stochastic gradient training: the structure objective
//! under either bridge, the relation-aware edge model, and the
//! translation baseline. One training step draws a structure (or edge),
//! applies one positive and K negative updates scaled by the edge-weight
//! product and the current learning rate, and touches only the rows named
//! by its draws.

mod gradients;
mod transe;

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use smallvec::SmallVec;
use thiserror::Error;

pub use gradients::check_gradients;
pub(crate) use gradients::{
    emit_edge_gradients, emit_structure_gradients, GradScratch, RowId, TableView,
};

use crate::alias::AliasTable;
use crate::graph::RelGraph;
use crate::model::{BridgeMode, EmbeddingTable};
use crate::sampling::{Case, Direction, Sampler, SamplingError};
use crate::sigmoid::Sigmoid;

/// RNG stream base for training workers; worker w draws from stream
/// `TRAIN_STREAM_BASE + w`.
pub(crate) const TRAIN_STREAM_BASE: u64 = 0x7472_6169;

/// Row L2-norm cap; exceeding it (or going non-finite) aborts training.
const MAX_ROW_NORM_SQ: f64 = 1e6;

const PROGRESS_INTERVAL: u64 = 1_000_000;
const FLUSH_INTERVAL: u64 = 1024;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("training diverged at step {step} (learning rate {learning_rate:.6}): row norm exceeded {max_norm} or went non-finite", max_norm = 1e3)]
    Diverged { step: u64, learning_rate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    Mne,
    RLine,
    TransE,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Mne => "mne",
            Model::RLine => "rline",
            Model::TransE => "transe",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mne" => Ok(Model::Mne),
            "rline" => Ok(Model::RLine),
            "transe" => Ok(Model::TransE),
            other => Err(format!("unknown model {other:?} (expected mne, rline or transe)")),
        }
    }
}

/// A (model, bridge) pair as named on the sweep command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    pub model: Model,
    pub bridge: BridgeMode,
}

impl ModelSpec {
    pub fn label(&self) -> &'static str {
        match (self.model, self.bridge) {
            (Model::Mne, BridgeMode::Addition) => "mne+",
            (Model::Mne, BridgeMode::Multiplication) => "mne*",
            (Model::RLine, _) => "rline",
            (Model::TransE, _) => "transe",
        }
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mne+" | "mne-add" => Ok(ModelSpec { model: Model::Mne, bridge: BridgeMode::Addition }),
            "mne*" | "mne-mul" => {
                Ok(ModelSpec { model: Model::Mne, bridge: BridgeMode::Multiplication })
            }
            "rline" => Ok(ModelSpec { model: Model::RLine, bridge: BridgeMode::Addition }),
            "transe" => Ok(ModelSpec { model: Model::TransE, bridge: BridgeMode::Addition }),
            other => Err(format!(
                "unknown model spec {other:?} (expected mne+, mne*, rline or transe)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrSchedule {
    Constant,
    LinearDecay,
}

impl LrSchedule {
    pub fn as_str(self) -> &'static str {
        match self {
            LrSchedule::Constant => "constant",
            LrSchedule::LinearDecay => "linear-decay",
        }
    }

    /// η(t) for step t of `total`; linear decay is floored at η₀·1e-4.
    pub fn eta(self, lr0: f64, t: u64, total: u64) -> f64 {
        match self {
            LrSchedule::Constant => lr0,
            LrSchedule::LinearDecay => {
                let frac = if total == 0 { 1.0 } else { 1.0 - t as f64 / total as f64 };
                lr0 * frac.max(1e-4)
            }
        }
    }
}

impl std::str::FromStr for LrSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "linear-decay" | "linear" => Ok(LrSchedule::LinearDecay),
            other => Err(format!(
                "unknown learning-rate schedule {other:?} (expected constant or linear-decay)"
            )),
        }
    }
}

/// Every hyperparameter of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: Model,
    /// Bridging function; meaningful for the structure model only. The
    /// relation-aware edge model always bridges by addition.
    pub bridge: BridgeMode,
    pub dim: usize,
    pub learning_rate: f64,
    /// Negative samples per positive (K).
    pub negatives: usize,
    /// Total structure samples; defaults to 200·|E| when unset.
    pub samples: Option<u64>,
    /// Ranking margin γ; present exactly for the translation baseline.
    pub margin: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    pub lr_schedule: LrSchedule,
    /// Keep relation vectors fixed. The edge model also zeroes them at
    /// initialization, reducing it to its relation-free second-order form.
    pub freeze_relations: bool,
    /// Exact sigmoid in the hot loop instead of the lookup table.
    pub exact_sigmoid: bool,
    /// Progress lines on standard error every 10⁶ samples.
    pub progress: bool,
}

impl TrainConfig {
    pub fn new(model: Model) -> TrainConfig {
        TrainConfig {
            model,
            bridge: BridgeMode::Addition,
            dim: 100,
            learning_rate: 0.025,
            negatives: 5,
            samples: None,
            margin: (model == Model::TransE).then_some(1.0),
            seed: 0,
            workers: 1,
            lr_schedule: LrSchedule::LinearDecay,
            freeze_relations: false,
            exact_sigmoid: false,
            progress: true,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.dim < 1 {
            return Err(TrainError::Config("dim must be at least 1".into()));
        }
        if self.negatives < 1 {
            return Err(TrainError::Config("negatives must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(TrainError::Config("learning rate must be positive and finite".into()));
        }
        if self.workers < 1 {
            return Err(TrainError::Config("workers must be at least 1".into()));
        }
        match (self.model, self.margin) {
            (Model::TransE, None) => {
                return Err(TrainError::Config("transe requires a margin".into()))
            }
            (Model::TransE, Some(m)) if !m.is_finite() || m <= 0.0 => {
                return Err(TrainError::Config("margin must be positive and finite".into()))
            }
            (Model::Mne | Model::RLine, Some(_)) => {
                return Err(TrainError::Config("margin applies to transe only".into()))
            }
            _ => {}
        }
        if self.model == Model::RLine && self.bridge == BridgeMode::Multiplication {
            return Err(TrainError::Config("rline uses the addition bridge".into()));
        }
        Ok(())
    }

    pub fn total_samples(&self, graph: &RelGraph) -> u64 {
        self.samples.unwrap_or(200 * graph.n_edges() as u64)
    }

    /// Human label: mne+, mne*, rline or transe.
    pub fn label(&self) -> &'static str {
        ModelSpec { model: self.model, bridge: self.bridge }.label()
    }

    /// Canonical key=value form of every hyperparameter, the input of
    /// [`TrainConfig::config_hash`].
    pub fn canonical_string(&self) -> String {
        format!(
            "model={};bridge={};dim={};lr={};negatives={};samples={};margin={};seed={};\
             workers={};schedule={};freeze={};exact_sigmoid={}",
            self.model.as_str(),
            self.bridge.as_str(),
            self.dim,
            self.learning_rate,
            self.negatives,
            self.samples.map_or_else(|| "default".to_string(), |s| s.to_string()),
            self.margin.map_or("none".to_string(), |m| m.to_string()),
            self.seed,
            self.workers,
            self.lr_schedule.as_str(),
            self.freeze_relations,
            self.exact_sigmoid,
        )
    }

    /// FNV-1a hash of the canonical string, hex-encoded.
    pub fn config_hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_string().as_bytes()))
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// One point of the running objective trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub samples: u64,
    pub learning_rate: f64,
    /// Mean per-sample surrogate objective over the window ending here
    /// (hinge loss for the translation baseline).
    pub surrogate: f64,
}

/// Outcome of a training run.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub samples: u64,
    /// Wall time of the sampling loop (excludes initialization).
    pub seconds: f64,
    /// CPU time of the sampling loop for single-worker runs, immune to
    /// scheduler preemption; `None` under multiple workers.
    pub cpu_seconds: Option<f64>,
    pub trace: Vec<TracePoint>,
    pub table: EmbeddingTable,
}

fn thread_cpu_seconds() -> Option<f64> {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    let ok = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    (ok == 0).then(|| ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9)
}

trait StepKernel: Send {
    fn step(&mut self, view: &TableView, t: u64, eta: f64) -> Result<f64, TrainError>;
}

/// ω-proportional edge draw; unweighted graphs skip the alias table.
enum EdgeSampler {
    Uniform(usize),
    Weighted(AliasTable),
}

impl EdgeSampler {
    fn build(graph: &RelGraph) -> EdgeSampler {
        let weights = graph.weights();
        if weights.windows(2).all(|p| p[0] == p[1]) {
            EdgeSampler::Uniform(weights.len())
        } else {
            EdgeSampler::Weighted(AliasTable::new(weights))
        }
    }

    fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        match self {
            EdgeSampler::Uniform(n) => rand::Rng::gen_range(rng, 0..*n),
            EdgeSampler::Weighted(table) => table.sample(rng),
        }
    }
}

struct MneKernel<'g> {
    graph: &'g RelGraph,
    sampler: Sampler,
    scratch: GradScratch,
    bridge: BridgeMode,
    negatives: usize,
    sigmoid: Sigmoid,
    freeze_relations: bool,
}

impl StepKernel for MneKernel<'_> {
    fn step(&mut self, view: &TableView, t: u64, eta: f64) -> Result<f64, TrainError> {
        let center = self.sampler.sample_center()?;
        let sample = self.sampler.sample_structure(self.graph, center)?;
        let direction = match sample.case {
            Case::TwoOut | Case::InOut => Direction::Outgoing,
            Case::TwoIn => Direction::Incoming,
        };
        let mut negatives: SmallVec<[(usize, usize); 8]> = SmallVec::new();
        for _ in 0..self.negatives {
            negatives.push(self.sampler.sample_negative(self.graph, center, direction)?);
        }
        let scale = eta * sample.weight_product();
        let freeze = self.freeze_relations;
        let mut diverged = false;
        let surrogate = unsafe {
            emit_structure_gradients(
                view,
                self.bridge,
                &sample,
                &negatives,
                self.sigmoid,
                &mut self.scratch,
                |row, coeff, vec| {
                    if freeze && matches!(row, RowId::Relation(_)) {
                        return;
                    }
                    let dst = view.row_mut(row);
                    let k = scale * coeff;
                    let mut norm_sq = 0.0;
                    for (d, v) in dst.iter_mut().zip(vec) {
                        *d += k * v;
                        norm_sq += *d * *d;
                    }
                    if !norm_sq.is_finite() || norm_sq > MAX_ROW_NORM_SQ {
                        diverged = true;
                    }
                },
            )
        };
        if diverged {
            return Err(TrainError::Diverged { step: t, learning_rate: eta });
        }
        Ok(surrogate)
    }
}

struct RLineKernel<'g> {
    graph: &'g RelGraph,
    sampler: Sampler,
    scratch: GradScratch,
    edge_alias: &'g EdgeSampler,
    negatives: usize,
    sigmoid: Sigmoid,
    freeze_relations: bool,
}

impl StepKernel for RLineKernel<'_> {
    fn step(&mut self, view: &TableView, t: u64, eta: f64) -> Result<f64, TrainError> {
        let edge = self.graph.triple(self.edge_alias.sample(self.sampler.rng()));
        let mut negatives: SmallVec<[(usize, usize); 8]> = SmallVec::new();
        for _ in 0..self.negatives {
            negatives.push(self.sampler.sample_negative(
                self.graph,
                edge.head,
                Direction::Outgoing,
            )?);
        }
        let freeze = self.freeze_relations;
        let mut diverged = false;
        let surrogate = unsafe {
            emit_edge_gradients(
                view,
                edge.head,
                edge.relation,
                edge.tail,
                &negatives,
                self.sigmoid,
                &mut self.scratch,
                |row, coeff, vec| {
                    if freeze && matches!(row, RowId::Relation(_)) {
                        return;
                    }
                    let dst = view.row_mut(row);
                    let k = eta * coeff;
                    let mut norm_sq = 0.0;
                    for (d, v) in dst.iter_mut().zip(vec) {
                        *d += k * v;
                        norm_sq += *d * *d;
                    }
                    if !norm_sq.is_finite() || norm_sq > MAX_ROW_NORM_SQ {
                        diverged = true;
                    }
                },
            )
        };
        if diverged {
            return Err(TrainError::Diverged { step: t, learning_rate: eta });
        }
        Ok(surrogate)
    }
}

struct TranseKernel<'g> {
    graph: &'g RelGraph,
    sampler: Sampler,
    scratch: transe::TranseScratch,
    edge_alias: &'g EdgeSampler,
    margin: f64,
    retry_cap: usize,
}

impl StepKernel for TranseKernel<'_> {
    fn step(&mut self, view: &TableView, t: u64, eta: f64) -> Result<f64, TrainError> {
        let positive = self.graph.triple(self.edge_alias.sample(self.sampler.rng()));
        let corrupted = transe::corrupt_triple(self.graph, &mut self.sampler, positive, self.retry_cap)?;
        let loss =
            unsafe { transe::transe_step(view, positive, corrupted, self.margin, eta, &mut self.scratch) };
        // Entities stay unit-norm; guard the relation row and numeric health.
        let rel_norm_sq: f64 = unsafe {
            view.row(RowId::Relation(positive.relation)).iter().map(|x| x * x).sum()
        };
        if !loss.is_finite() || !rel_norm_sq.is_finite() || rel_norm_sq > MAX_ROW_NORM_SQ {
            return Err(TrainError::Diverged { step: t, learning_rate: eta });
        }
        Ok(loss)
    }
}

struct TraceState {
    window_sum: f64,
    window_n: u64,
    last_surrogate: f64,
    points: Vec<TracePoint>,
}

struct WorkerCtx<'a> {
    counter: &'a AtomicU64,
    abort: &'a AtomicBool,
    failure: &'a Mutex<Option<TrainError>>,
    trace: &'a Mutex<TraceState>,
    total: u64,
    trace_every: u64,
    lr0: f64,
    schedule: LrSchedule,
    show_progress: bool,
}

fn worker_loop<K: StepKernel>(ctx: &WorkerCtx, view: &TableView, kernel: &mut K) {
    let mut local_sum = 0.0f64;
    let mut local_n = 0u64;
    loop {
        if ctx.abort.load(Ordering::Relaxed) {
            break;
        }
        let t = ctx.counter.fetch_add(1, Ordering::Relaxed);
        if t >= ctx.total {
            break;
        }
        let eta = ctx.schedule.eta(ctx.lr0, t, ctx.total);
        match kernel.step(view, t, eta) {
            Ok(value) => {
                local_sum += value;
                local_n += 1;
            }
            Err(e) => {
                let mut failure = ctx.failure.lock().unwrap();
                if failure.is_none() {
                    *failure = Some(e);
                }
                ctx.abort.store(true, Ordering::Relaxed);
                break;
            }
        }
        let done = t + 1;
        let at_trace = done.is_multiple_of(ctx.trace_every);
        let at_progress = ctx.show_progress && done.is_multiple_of(PROGRESS_INTERVAL);
        if at_trace || at_progress || local_n >= FLUSH_INTERVAL {
            let mut trace = ctx.trace.lock().unwrap();
            trace.window_sum += local_sum;
            trace.window_n += local_n;
            local_sum = 0.0;
            local_n = 0;
            if at_trace {
                let mean = if trace.window_n > 0 {
                    trace.window_sum / trace.window_n as f64
                } else {
                    trace.last_surrogate
                };
                trace.last_surrogate = mean;
                trace.points.push(TracePoint { samples: done, learning_rate: eta, surrogate: mean });
                trace.window_sum = 0.0;
                trace.window_n = 0;
            }
            if at_progress {
                eprintln!(
                    "train: samples={done} lr={eta:.6} surrogate={:.6}",
                    trace.last_surrogate
                );
            }
        }
    }
    let mut trace = ctx.trace.lock().unwrap();
    trace.window_sum += local_sum;
    trace.window_n += local_n;
}

fn run_training<K, F>(
    graph: &RelGraph,
    config: &TrainConfig,
    table: &mut EmbeddingTable,
    mut make_kernel: F,
) -> Result<(u64, f64, Option<f64>, Vec<TracePoint>), TrainError>
where
    K: StepKernel,
    F: FnMut(usize) -> K,
{
    let total = config.total_samples(graph);
    let start = Instant::now();
    let view = TableView::new(table);
    let counter = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let failure: Mutex<Option<TrainError>> = Mutex::new(None);
    let trace = Mutex::new(TraceState {
        window_sum: 0.0,
        window_n: 0,
        last_surrogate: 0.0,
        points: Vec::new(),
    });
    let ctx = WorkerCtx {
        counter: &counter,
        abort: &abort,
        failure: &failure,
        trace: &trace,
        total,
        trace_every: (total / 20).max(1),
        lr0: config.learning_rate,
        schedule: config.lr_schedule,
        show_progress: config.progress,
    };

    let mut cpu_seconds = None;
    if config.workers <= 1 {
        let mut kernel = make_kernel(0);
        let cpu_start = thread_cpu_seconds();
        worker_loop(&ctx, &view, &mut kernel);
        cpu_seconds = thread_cpu_seconds().zip(cpu_start).map(|(end, start)| end - start);
    } else {
        let mut kernels: Vec<K> = (0..config.workers).map(&mut make_kernel).collect();
        std::thread::scope(|scope| {
            for mut kernel in kernels.drain(..) {
                let ctx = &ctx;
                let view = &view;
                scope.spawn(move || worker_loop(ctx, view, &mut kernel));
            }
        });
    }

    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    let seconds = start.elapsed().as_secs_f64();
    let mut state = trace.into_inner().unwrap();
    let mut points = std::mem::take(&mut state.points);
    points.sort_by_key(|p| p.samples);
    points.dedup_by_key(|p| p.samples);
    if total > 0 && points.last().is_none_or(|p| p.samples < total) {
        let mean = if state.window_n > 0 {
            state.window_sum / state.window_n as f64
        } else {
            state.last_surrogate
        };
        points.push(TracePoint {
            samples: total,
            learning_rate: config.lr_schedule.eta(
                config.learning_rate,
                total.saturating_sub(1),
                total,
            ),
            surrogate: mean,
        });
    }
    Ok((total, seconds, cpu_seconds, points))
}

/// Trains the structure model (either bridge) per the sampled-structure
/// objective.
pub fn train_mne(graph: &RelGraph, config: &TrainConfig) -> Result<TrainReport, TrainError> {
    if config.model != Model::Mne {
        return Err(TrainError::Config(format!(
            "train_mne called with model {}",
            config.model.as_str()
        )));
    }
    config.validate()?;
    let base = Sampler::new(graph, config.seed);
    if base.n_eligible() == 0 {
        return Err(TrainError::Sampling(SamplingError::NoEligibleCenter));
    }
    let mut table = EmbeddingTable::init(graph.n_nodes(), graph.n_relations(), config.dim, config.seed);
    let sigmoid = if config.exact_sigmoid { Sigmoid::Exact } else { Sigmoid::Table };
    let (samples, seconds, cpu_seconds, trace) = run_training(graph, config, &mut table, |w| MneKernel {
        graph,
        sampler: base.fork(config.seed, TRAIN_STREAM_BASE + w as u64),
        scratch: GradScratch::default(),
        bridge: config.bridge,
        negatives: config.negatives,
        sigmoid,
        freeze_relations: config.freeze_relations,
    })?;
    Ok(TrainReport { samples, seconds, cpu_seconds, trace, table })
}

/// Trains the relation-aware edge model (edge sampling with corrupted
/// (node, relation) negatives).
pub fn train_rline(graph: &RelGraph, config: &TrainConfig) -> Result<TrainReport, TrainError> {
    if config.model != Model::RLine {
        return Err(TrainError::Config(format!(
            "train_rline called with model {}",
            config.model.as_str()
        )));
    }
    config.validate()?;
    if graph.n_edges() == 0 {
        return Err(TrainError::Config("graph has no edges".into()));
    }
    let base = Sampler::new(graph, config.seed);
    let edge_alias = EdgeSampler::build(graph);
    let mut table = EmbeddingTable::init(graph.n_nodes(), graph.n_relations(), config.dim, config.seed);
    if config.freeze_relations {
        for r in 0..graph.n_relations() {
            table.relation_row_mut(r).iter_mut().for_each(|x| *x = 0.0);
        }
    }
    let sigmoid = if config.exact_sigmoid { Sigmoid::Exact } else { Sigmoid::Table };
    let (samples, seconds, cpu_seconds, trace) = run_training(graph, config, &mut table, |w| RLineKernel {
        graph,
        sampler: base.fork(config.seed, TRAIN_STREAM_BASE + w as u64),
        scratch: GradScratch::default(),
        edge_alias: &edge_alias,
        negatives: config.negatives,
        sigmoid,
        freeze_relations: config.freeze_relations,
    })?;
    Ok(TrainReport { samples, seconds, cpu_seconds, trace, table })
}

/// Trains the margin-ranking translation baseline. Entities are stored in
/// the source matrix during training and mirrored into the target matrix
/// at the end so downstream featurization sees one vector per node role.
pub fn train_transe(graph: &RelGraph, config: &TrainConfig) -> Result<TrainReport, TrainError> {
    if config.model != Model::TransE {
        return Err(TrainError::Config(format!(
            "train_transe called with model {}",
            config.model.as_str()
        )));
    }
    config.validate()?;
    if graph.n_edges() == 0 {
        return Err(TrainError::Config("graph has no edges".into()));
    }
    let base = Sampler::new(graph, config.seed);
    let edge_alias = EdgeSampler::build(graph);
    let margin = config.margin.expect("validated");
    let mut table = EmbeddingTable::init(graph.n_nodes(), graph.n_relations(), config.dim, config.seed);
    let (samples, seconds, cpu_seconds, trace) = run_training(graph, config, &mut table, |w| TranseKernel {
        graph,
        sampler: base.fork(config.seed, TRAIN_STREAM_BASE + w as u64),
        scratch: transe::TranseScratch::new(config.dim),
        edge_alias: &edge_alias,
        margin,
        retry_cap: crate::sampling::DEFAULT_RETRY_CAP,
    })?;
    table.copy_source_to_target();
    Ok(TrainReport { samples, seconds, cpu_seconds, trace, table })
}

/// Dispatches on `config.model`.
pub fn train(graph: &RelGraph, config: &TrainConfig) -> Result<TrainReport, TrainError> {
    match config.model {
        Model::Mne => train_mne(graph, config),
        Model::RLine => train_rline(graph, config),
        Model::TransE => train_transe(graph, config),
    }
}

#[cfg(test)]
mod tests {
    use super::gradients::{collect_gradients, edge_surrogate};
    use super::transe::{corrupt_triple, emit_transe_gradients, hinge_loss, transe_step, TranseScratch};
    use super::*;
    use crate::bruteforce;
    use crate::graph::Triple;
    use crate::sampling::{IncidentEdge, StructureSample};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn graph_from(triples: &[(usize, usize, usize)], n_nodes: usize, n_rels: usize) -> RelGraph {
        let ts = triples.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
        RelGraph::build(ts, n_nodes, n_rels, None).unwrap()
    }

    fn random_graph(n_nodes: usize, n_edges: usize, n_rels: usize, seed: u64) -> RelGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let triples = (0..n_edges)
            .map(|_| {
                Triple::new(
                    rng.gen_range(0..n_nodes),
                    rng.gen_range(0..n_rels),
                    rng.gen_range(0..n_nodes),
                )
            })
            .collect();
        RelGraph::build(triples, n_nodes, n_rels, None).unwrap()
    }

    /// Draws a random valid structure sample plus negatives, mirroring the
    /// kernel's conventions.
    fn random_sample(
        graph: &RelGraph,
        seed: u64,
        negatives: usize,
    ) -> (StructureSample, Vec<(usize, usize)>) {
        let mut sampler = Sampler::new(graph, seed);
        let center = sampler.sample_center().unwrap();
        let sample = sampler.sample_structure(graph, center).unwrap();
        let direction = match sample.case {
            Case::TwoOut | Case::InOut => Direction::Outgoing,
            Case::TwoIn => Direction::Incoming,
        };
        let negs = (0..negatives)
            .map(|_| sampler.sample_negative(graph, center, direction).unwrap())
            .collect();
        (sample, negs)
    }

    #[test]
    fn gradcheck_zero_table_addition_matches_at_the_symmetric_point() {
        let graph = graph_from(&[(0, 0, 1), (0, 1, 2), (2, 0, 0)], 3, 2);
        let (sample, negs) = random_sample(&graph, 1, 2);
        let mut table = EmbeddingTable::zeros(3, 2, 4);
        // All logits are zero, so every sigmoid term is exactly 1/2 and
        // every gradient vanishes; analytic and numeric must both be zero.
        let grads = collect_gradients(&mut table, BridgeMode::Addition, &sample, &negs, Sigmoid::Exact);
        for (row, grad) in &grads {
            assert!(grad.iter().all(|&g| g == 0.0), "row {row:?} has nonzero gradient");
        }
        let err = check_gradients(&graph, &mut table, BridgeMode::Addition, &sample, &negs, 1e-5);
        assert!(err < 1e-9, "err {err}");
        // The 1/2 factors themselves:
        assert_eq!(crate::sigmoid::sigmoid_exact(0.0), 0.5);
    }

    #[test]
    fn gradcheck_random_tables_both_bridges() {
        let graph = random_graph(10, 50, 3, 7);
        for mode in [BridgeMode::Addition, BridgeMode::Multiplication] {
            for trial in 0..20 {
                let (sample, negs) = random_sample(&graph, 100 + trial, 3);
                let mut table = EmbeddingTable::random_uniform(10, 3, 8, 500 + trial, 0.5);
                let err = check_gradients(&graph, &mut table, mode, &sample, &negs, 1e-5);
                assert!(err < 1e-4, "mode {mode:?} trial {trial}: err {err}");
            }
        }
    }

    #[test]
    fn rline_gradients_match_finite_differences() {
        let graph = random_graph(8, 30, 2, 3);
        let mut table = EmbeddingTable::random_uniform(8, 2, 8, 11, 0.5);
        let edge = graph.triple(4);
        let negs = vec![(2usize, 1usize), (5, 0), (0, 0)];

        let dim = table.dim();
        let mut grads: BTreeMap<RowId, Vec<f64>> = BTreeMap::new();
        {
            let view = TableView::new(&mut table);
            let mut scratch = GradScratch::default();
            unsafe {
                emit_edge_gradients(
                    &view,
                    edge.head,
                    edge.relation,
                    edge.tail,
                    &negs,
                    Sigmoid::Exact,
                    &mut scratch,
                    |row, coeff, vec| {
                        let g = grads.entry(row).or_insert_with(|| vec![0.0; dim]);
                        for (gi, vi) in g.iter_mut().zip(vec) {
                            *gi += coeff * vi;
                        }
                    },
                );
            }
        }

        let entry = |table: &mut EmbeddingTable, row: RowId, col: usize| -> *mut f64 {
            match row {
                RowId::Source(i) => &mut table.source_row_mut(i)[col],
                RowId::Target(i) => &mut table.target_row_mut(i)[col],
                RowId::Relation(i) => &mut table.relation_row_mut(i)[col],
            }
        };
        let eps = 1e-5;
        for (&row, analytic) in &grads {
            for (col, &a) in analytic.iter().enumerate() {
                unsafe {
                    let p = entry(&mut table, row, col);
                    let orig = *p;
                    *p = orig + eps;
                    let up = edge_surrogate(&table, edge.head, edge.relation, edge.tail, &negs);
                    *entry(&mut table, row, col) = orig - eps;
                    let down = edge_surrogate(&table, edge.head, edge.relation, edge.tail, &negs);
                    *entry(&mut table, row, col) = orig;
                    let numeric = (up - down) / (2.0 * eps);
                    let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-3);
                    assert!(rel < 1e-4, "row {row:?} col {col}: {a} vs {numeric}");
                }
            }
        }
    }

    #[test]
    fn transe_gradients_match_finite_differences_away_from_kink() {
        let mut table = EmbeddingTable::random_uniform(6, 2, 8, 13, 0.5);
        let positive = Triple::new(0, 1, 2);
        let corrupted = Triple::new(3, 1, 2);
        let margin = 5.0; // Strongly active hinge, far from both kinks.
        let dim = table.dim();

        let mut grads: BTreeMap<RowId, Vec<f64>> = BTreeMap::new();
        {
            let view = TableView::new(&mut table);
            let mut scratch = TranseScratch::new(dim);
            let loss = unsafe {
                emit_transe_gradients(&view, positive, corrupted, margin, &mut scratch, |row, coeff, vec| {
                    let g = grads.entry(row).or_insert_with(|| vec![0.0; dim]);
                    for (gi, vi) in g.iter_mut().zip(vec) {
                        *gi += coeff * vi;
                    }
                })
            };
            assert!(loss > 0.0);
        }

        let eps = 1e-6;
        for (&row, analytic) in &grads {
            for (col, &a) in analytic.iter().enumerate() {
                let get_loss = |table: &mut EmbeddingTable| -> f64 {
                    let view = TableView::new(table);
                    hinge_loss(&view, positive, corrupted, margin)
                };
                let orig = match row {
                    RowId::Source(i) => table.source_row(i)[col],
                    RowId::Target(i) => table.target_row(i)[col],
                    RowId::Relation(i) => table.relation_row(i)[col],
                };
                let set = |table: &mut EmbeddingTable, v: f64| match row {
                    RowId::Source(i) => table.source_row_mut(i)[col] = v,
                    RowId::Target(i) => table.target_row_mut(i)[col] = v,
                    RowId::Relation(i) => table.relation_row_mut(i)[col] = v,
                };
                set(&mut table, orig + eps);
                let up = get_loss(&mut table);
                set(&mut table, orig - eps);
                let down = get_loss(&mut table);
                set(&mut table, orig);
                let numeric = (up - down) / (2.0 * eps);
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-3);
                assert!(rel < 1e-4, "row {row:?} col {col}: {a} vs {numeric}");
            }
        }
    }

    #[test]
    fn zero_samples_returns_the_initial_table() {
        let graph = graph_from(&[(0, 0, 1), (0, 0, 2), (1, 0, 2)], 3, 1);
        for model in [Model::Mne, Model::RLine] {
            let mut config = TrainConfig::new(model);
            config.dim = 4;
            config.samples = Some(0);
            config.progress = false;
            let report = train(&graph, &config).unwrap();
            let init = EmbeddingTable::init(3, 1, 4, config.seed);
            assert_eq!(report.table, init, "{model:?}");
            assert_eq!(report.samples, 0);
        }
        // The translation baseline mirrors entities into the target matrix
        // as its final packaging step even when no samples ran.
        let mut config = TrainConfig::new(Model::TransE);
        config.dim = 4;
        config.samples = Some(0);
        config.progress = false;
        let report = train(&graph, &config).unwrap();
        let init = EmbeddingTable::init(3, 1, 4, config.seed);
        assert_eq!(report.table.source_row(1), init.source_row(1));
        assert_eq!(report.table.target_row(1), init.source_row(1));
    }

    #[test]
    fn toy_case1_training_improves_the_exact_surrogate() {
        // One center with two out-edges; case 1 is the only structure.
        let graph = graph_from(&[(0, 0, 1), (0, 0, 2)], 3, 1);
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = 4;
        config.negatives = 1;
        config.learning_rate = 0.05;
        config.samples = Some(10_000);
        config.seed = 5;
        config.progress = false;
        let init = EmbeddingTable::init(3, 1, 4, config.seed);
        let report = train_mne(&graph, &config).unwrap();

        let sample_for = |j_pos: usize, k_pos: usize| StructureSample {
            case: Case::TwoOut,
            center: 0,
            edge_j: IncidentEdge { pos: j_pos, node: 1 + j_pos, relation: 0, weight: 1.0 },
            edge_k: IncidentEdge { pos: k_pos, node: 1 + k_pos, relation: 0, weight: 1.0 },
        };
        let objective = |table: &EmbeddingTable| -> f64 {
            [(0, 1), (1, 0)]
                .iter()
                .map(|&(a, b)| {
                    bruteforce::expected_structure_surrogate(
                        &graph,
                        table,
                        BridgeMode::Addition,
                        &sample_for(a, b),
                        1,
                    )
                })
                .sum()
        };
        let before = objective(&init);
        let after = objective(&report.table);
        assert!(
            after > before,
            "surrogate did not improve: before {before}, after {after}"
        );
    }

    #[test]
    fn one_step_applies_exactly_the_collected_gradients() {
        let graph = random_graph(8, 40, 2, 9);
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = 6;
        config.negatives = 3;
        config.samples = Some(1);
        config.seed = 21;
        config.exact_sigmoid = true;
        config.progress = false;

        for bridge in [BridgeMode::Addition, BridgeMode::Multiplication] {
            config.bridge = bridge;
            let report = train_mne(&graph, &config).unwrap();

            // Reconstruct the kernel's draws with the same stream.
            let base = Sampler::new(&graph, config.seed);
            let mut sampler = base.fork(config.seed, TRAIN_STREAM_BASE);
            let center = sampler.sample_center().unwrap();
            let sample = sampler.sample_structure(&graph, center).unwrap();
            let direction = match sample.case {
                Case::TwoOut | Case::InOut => Direction::Outgoing,
                Case::TwoIn => Direction::Incoming,
            };
            let negs: Vec<(usize, usize)> = (0..config.negatives)
                .map(|_| sampler.sample_negative(&graph, center, direction).unwrap())
                .collect();

            let mut expected = EmbeddingTable::init(8, 2, 6, config.seed);
            let grads = collect_gradients(&mut expected, bridge, &sample, &negs, Sigmoid::Exact);
            let eta = config.lr_schedule.eta(config.learning_rate, 0, 1);
            let scale = eta * sample.weight_product();
            for (row, grad) in &grads {
                let dst = match *row {
                    RowId::Source(i) => expected.source_row_mut(i),
                    RowId::Target(i) => expected.target_row_mut(i),
                    RowId::Relation(i) => expected.relation_row_mut(i),
                };
                for (d, g) in dst.iter_mut().zip(grad) {
                    *d += scale * g;
                }
            }

            for v in 0..8 {
                for (a, b) in report.table.source_row(v).iter().zip(expected.source_row(v)) {
                    assert!((a - b).abs() < 1e-12, "{bridge:?} source {v}: {a} vs {b}");
                }
                for (a, b) in report.table.target_row(v).iter().zip(expected.target_row(v)) {
                    assert!((a - b).abs() < 1e-12, "{bridge:?} target {v}: {a} vs {b}");
                }
            }
            for r in 0..2 {
                for (a, b) in report.table.relation_row(r).iter().zip(expected.relation_row(r)) {
                    assert!((a - b).abs() < 1e-12, "{bridge:?} relation {r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn one_step_touches_only_the_sampled_rows() {
        let graph = random_graph(12, 60, 3, 17);
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = 5;
        config.negatives = 4;
        config.samples = Some(1);
        config.seed = 33;
        config.progress = false;
        let report = train_mne(&graph, &config).unwrap();
        let init = EmbeddingTable::init(12, 3, 5, config.seed);

        let base = Sampler::new(&graph, config.seed);
        let mut sampler = base.fork(config.seed, TRAIN_STREAM_BASE);
        let center = sampler.sample_center().unwrap();
        let sample = sampler.sample_structure(&graph, center).unwrap();
        let direction = match sample.case {
            Case::TwoOut | Case::InOut => Direction::Outgoing,
            Case::TwoIn => Direction::Incoming,
        };
        let negs: Vec<(usize, usize)> = (0..config.negatives)
            .map(|_| sampler.sample_negative(&graph, center, direction).unwrap())
            .collect();

        let mut allowed: std::collections::BTreeSet<RowId> = std::collections::BTreeSet::new();
        let (pj, pk) = gradients::sample_parts(&sample);
        for part in [pj, pk].into_iter().chain(negs.iter().map(|&n| gradients::negative_part(&sample, n))) {
            allowed.insert(RowId::Source(part.source));
            allowed.insert(RowId::Target(part.target));
            allowed.insert(RowId::Relation(part.relation));
        }

        for v in 0..12 {
            if report.table.source_row(v) != init.source_row(v) {
                assert!(allowed.contains(&RowId::Source(v)), "source {v} touched unexpectedly");
            }
            if report.table.target_row(v) != init.target_row(v) {
                assert!(allowed.contains(&RowId::Target(v)), "target {v} touched unexpectedly");
            }
        }
        for r in 0..3 {
            if report.table.relation_row(r) != init.relation_row(r) {
                assert!(allowed.contains(&RowId::Relation(r)), "relation {r} touched unexpectedly");
            }
        }
    }

    #[test]
    fn single_worker_runs_are_bit_reproducible() {
        let graph = random_graph(15, 80, 2, 23);
        for model in [Model::Mne, Model::RLine, Model::TransE] {
            let mut config = TrainConfig::new(model);
            config.dim = 6;
            config.samples = Some(3_000);
            config.seed = 11;
            config.progress = false;
            let a = train(&graph, &config).unwrap();
            let b = train(&graph, &config).unwrap();
            assert_eq!(a.table, b.table, "{model:?} not reproducible");
            assert_eq!(a.samples, b.samples);

            let mut other = config.clone();
            other.seed = 12;
            let c = train(&graph, &other).unwrap();
            assert_ne!(a.table, c.table, "{model:?} ignored the seed");
        }
    }

    #[test]
    fn multi_worker_training_completes_and_stays_finite() {
        let graph = random_graph(20, 150, 3, 29);
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = 8;
        config.samples = Some(40_000);
        config.workers = 4;
        config.progress = false;
        let report = train_mne(&graph, &config).unwrap();
        assert!(report.table.is_finite());
        assert_eq!(report.samples, 40_000);
    }

    #[test]
    fn divergence_guard_reports_step_and_rate() {
        let graph = random_graph(10, 60, 2, 31);
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = 4;
        config.learning_rate = 1e9;
        config.samples = Some(1_000);
        config.progress = false;
        match train_mne(&graph, &config) {
            Err(TrainError::Diverged { learning_rate, .. }) => {
                assert!(learning_rate > 0.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn frozen_zero_relations_reduce_the_edge_model_to_second_order_form() {
        let graph = random_graph(9, 40, 2, 37);
        let mut config = TrainConfig::new(Model::RLine);
        config.dim = 5;
        config.negatives = 2;
        config.samples = Some(1);
        config.seed = 41;
        config.exact_sigmoid = true;
        config.freeze_relations = true;
        config.progress = false;
        let report = train_rline(&graph, &config).unwrap();

        // Reconstruct the single step's draws.
        let base = Sampler::new(&graph, config.seed);
        let mut sampler = base.fork(config.seed, TRAIN_STREAM_BASE);
        let alias = EdgeSampler::build(&graph);
        let edge = graph.triple(alias.sample(sampler.rng()));
        let negs: Vec<(usize, usize)> = (0..config.negatives)
            .map(|_| sampler.sample_negative(&graph, edge.head, Direction::Outgoing).unwrap())
            .collect();

        // Hand computation of the relation-free second-order update:
        // logits are plain inner products once relation vectors are zero.
        // All coefficients come from pre-step snapshots.
        let mut expected = EmbeddingTable::init(9, 2, 5, config.seed);
        for r in 0..2 {
            expected.relation_row_mut(r).iter_mut().for_each(|x| *x = 0.0);
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let eta = config.lr_schedule.eta(config.learning_rate, 0, 1);
        let u_i = expected.source_row(edge.head).to_vec();
        let t_pos = expected.target_row(edge.tail).to_vec();
        let t_negs: Vec<Vec<f64>> =
            negs.iter().map(|&(n, _)| expected.target_row(n).to_vec()).collect();
        let g_pos = 1.0 - crate::sigmoid::sigmoid_exact(dot(&t_pos, &u_i));
        let g_negs: Vec<f64> = t_negs
            .iter()
            .map(|t| -crate::sigmoid::sigmoid_exact(dot(t, &u_i)))
            .collect();

        let mut delta_i = vec![0.0; 5];
        for (d, t) in delta_i.iter_mut().zip(&t_pos) {
            *d += g_pos * t;
        }
        for (g, t) in g_negs.iter().zip(&t_negs) {
            for (d, tv) in delta_i.iter_mut().zip(t) {
                *d += g * tv;
            }
        }
        for (t, &ui) in expected.target_row_mut(edge.tail).iter_mut().zip(&u_i) {
            *t += eta * g_pos * ui;
        }
        for (&(n, _), &g) in negs.iter().zip(&g_negs) {
            for (t, &ui) in expected.target_row_mut(n).iter_mut().zip(&u_i) {
                *t += eta * g * ui;
            }
        }
        for (s, d) in expected.source_row_mut(edge.head).iter_mut().zip(&delta_i) {
            *s += eta * d;
        }

        for v in 0..9 {
            for (a, b) in report.table.source_row(v).iter().zip(expected.source_row(v)) {
                assert!((a - b).abs() < 1e-12, "source {v}");
            }
            for (a, b) in report.table.target_row(v).iter().zip(expected.target_row(v)) {
                assert!((a - b).abs() < 1e-12, "target {v}");
            }
        }
        // Relation rows stayed pinned at zero.
        for r in 0..2 {
            assert!(report.table.relation_row(r).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn trace_samples_are_strictly_increasing() {
        let graph = random_graph(10, 50, 2, 43);
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = 4;
        config.samples = Some(2_000);
        config.progress = false;
        let report = train_mne(&graph, &config).unwrap();
        assert!(!report.trace.is_empty());
        for pair in report.trace.windows(2) {
            assert!(pair[0].samples < pair[1].samples);
        }
        assert_eq!(report.trace.last().unwrap().samples, 2_000);
    }

    #[test]
    fn satisfied_margin_gives_zero_update() {
        let mut table = EmbeddingTable::zeros(3, 1, 2);
        table.source_row_mut(0).copy_from_slice(&[1.0, 0.0]);
        table.source_row_mut(1).copy_from_slice(&[1.0, 1.0]);
        table.source_row_mut(2).copy_from_slice(&[-1.0, 0.0]);
        table.relation_row_mut(0).copy_from_slice(&[0.0, 1.0]);
        let before = table.clone();
        let positive = Triple::new(0, 0, 1); // energy 0
        let corrupted = Triple::new(0, 0, 2); // energy ‖(2, 1)‖ ≈ 2.24
        let mut scratch = TranseScratch::new(2);
        {
            let view = TableView::new(&mut table);
            let loss = unsafe { transe_step(&view, positive, corrupted, 1.0, 0.1, &mut scratch) };
            assert_eq!(loss, 0.0);
        }
        assert_eq!(table, before);
    }

    #[test]
    fn single_triple_hinge_loss_decreases_under_small_steps() {
        // Facts: (0, 0, 1). Corruptions: (1, 0, 1) and (0, 0, 0).
        let graph = graph_from(&[(0, 0, 1)], 2, 1);
        let mut table = EmbeddingTable::init(2, 1, 4, 3);
        // Entities live on the unit sphere during training; start there so
        // the first step's renormalization is not a jump.
        for v in 0..2 {
            let row = table.source_row_mut(v);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter_mut().for_each(|x| *x /= norm);
        }
        let corruptions = [Triple::new(1, 0, 1), Triple::new(0, 0, 0)];
        for c in corruptions {
            assert!(!graph.contains_fact(c.head, c.relation, c.tail));
        }
        let positive = Triple::new(0, 0, 1);
        let margin = 1.0;
        let mut scratch = TranseScratch::new(4);
        let view = TableView::new(&mut table);
        let objective = |view: &TableView| -> f64 {
            corruptions.iter().map(|&c| hinge_loss(view, positive, c, margin)).sum()
        };
        let mut last = objective(&view);
        let mut deactivated = false;
        for step in 0..4000 {
            let c = corruptions[step % 2];
            unsafe { transe_step(&view, positive, c, margin, 0.005, &mut scratch) };
            let now = objective(&view);
            if now == 0.0 {
                deactivated = true;
                break;
            }
            assert!(
                now <= last + 1e-9,
                "step {step}: loss rose from {last} to {now}"
            );
            last = now;
        }
        assert!(last < 2.0 * margin, "loss never moved below the initial value");
        let _ = deactivated;
    }

    #[test]
    fn transe_corruptions_are_never_facts() {
        let graph = random_graph(10, 50, 2, 51);
        let mut sampler = Sampler::new(&graph, 5);
        for idx in 0..graph.n_edges() {
            let t = graph.triple(idx % graph.n_edges());
            let c = corrupt_triple(&graph, &mut sampler, t, 100).unwrap();
            assert!(!graph.contains_fact(c.head, c.relation, c.tail));
            assert_eq!(c.relation, t.relation);
            assert!(c.head == t.head || c.tail == t.tail);
        }
    }

    #[test]
    fn negative_saturation_aborts_training() {
        // Every (node, relation) pair is a fact: rejection cannot finish.
        let graph = graph_from(&[(0, 0, 0), (0, 0, 0)], 1, 1);
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = 2;
        config.samples = Some(10);
        config.progress = false;
        match train_mne(&graph, &config) {
            Err(TrainError::Sampling(SamplingError::NegativeSaturated { node: 0, .. })) => {}
            other => panic!("expected saturation, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_catches_bad_setups() {
        let mut c = TrainConfig::new(Model::Mne);
        c.margin = Some(1.0);
        assert!(matches!(c.validate(), Err(TrainError::Config(_))));

        let mut c = TrainConfig::new(Model::TransE);
        c.margin = None;
        assert!(matches!(c.validate(), Err(TrainError::Config(_))));

        let mut c = TrainConfig::new(Model::RLine);
        c.bridge = BridgeMode::Multiplication;
        assert!(matches!(c.validate(), Err(TrainError::Config(_))));

        let mut c = TrainConfig::new(Model::Mne);
        c.learning_rate = 0.0;
        assert!(matches!(c.validate(), Err(TrainError::Config(_))));

        let mut c = TrainConfig::new(Model::Mne);
        c.negatives = 0;
        assert!(matches!(c.validate(), Err(TrainError::Config(_))));

        assert!(TrainConfig::new(Model::Mne).validate().is_ok());
        assert!(TrainConfig::new(Model::TransE).validate().is_ok());
    }

    #[test]
    fn model_mismatch_is_rejected_by_the_wrappers() {
        let graph = graph_from(&[(0, 0, 1), (0, 0, 2)], 3, 1);
        let config = TrainConfig::new(Model::Mne);
        assert!(matches!(train_rline(&graph, &config), Err(TrainError::Config(_))));
        assert!(matches!(train_transe(&graph, &config), Err(TrainError::Config(_))));
    }

    #[test]
    fn learning_rate_schedule_decays_linearly_with_a_floor() {
        let s = LrSchedule::LinearDecay;
        assert_eq!(s.eta(0.1, 0, 100), 0.1);
        assert!((s.eta(0.1, 50, 100) - 0.05).abs() < 1e-12);
        assert!((s.eta(0.1, 100, 100) - 0.1 * 1e-4).abs() < 1e-18);
        assert_eq!(LrSchedule::Constant.eta(0.1, 99, 100), 0.1);
    }

    #[test]
    fn model_spec_parses_the_canonical_labels() {
        use std::str::FromStr;
        assert_eq!(
            ModelSpec::from_str("mne+").unwrap(),
            ModelSpec { model: Model::Mne, bridge: BridgeMode::Addition }
        );
        assert_eq!(
            ModelSpec::from_str("mne*").unwrap(),
            ModelSpec { model: Model::Mne, bridge: BridgeMode::Multiplication }
        );
        assert_eq!(ModelSpec::from_str("transe").unwrap().label(), "transe");
        assert!(ModelSpec::from_str("nope").is_err());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = TrainConfig::new(Model::Mne);
        let mut b = TrainConfig::new(Model::Mne);
        assert_eq!(a.config_hash(), b.config_hash());
        b.dim = 64;
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
