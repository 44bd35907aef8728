//! Subcommand execution. Every failure here is a runtime error (exit 2);
//! argument problems never reach this module.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mne::census;
use mne::checkpoint::{self, Manifest};
use mne::classifier::ClassifierConfig;
use mne::eval::{self, EvalResult, Task};
use mne::graph::{load_graph, RelGraph, Vocabulary};
use mne::model::BridgeMode;
use mne::trainer::{self, Model, ModelSpec, TrainConfig};

use crate::args::{
    CensusArgs, ClassifierFlags, Command, DumpArgs, EvalLpArgs, EvalTcArgs, SweepDimArgs,
    SweepTriArgs, TrainArgs, TrainFlags,
};

pub struct RunError(pub String);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<E: std::error::Error> From<E> for RunError {
    fn from(e: E) -> Self {
        RunError(e.to_string())
    }
}

fn bad(message: impl Into<String>) -> RunError {
    RunError(message.into())
}

/// Writes `content` to the path or standard output.
fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), RunError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| bad(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout().flush().map_err(|e| bad(format!("stdout: {e}")))
        }
    }
}

fn load(path: &Path) -> Result<(Vocabulary, RelGraph), RunError> {
    load_graph(path, None).map_err(RunError::from)
}

fn train_config(flags: &TrainFlags) -> Result<TrainConfig, RunError> {
    let model = Model::from_str(&flags.model).map_err(RunError)?;
    let mut config = TrainConfig::new(model);
    match &flags.bridge {
        Some(b) => {
            let bridge = BridgeMode::from_str(b).map_err(RunError)?;
            if model != Model::Mne && bridge == BridgeMode::Multiplication {
                return Err(bad(format!("--bridge mul only applies to the mne model, not {}", flags.model)));
            }
            config.bridge = bridge;
        }
        None => config.bridge = BridgeMode::Addition,
    }
    config.dim = flags.dim;
    config.learning_rate = flags.lr;
    config.negatives = flags.negatives;
    config.samples = flags.samples;
    if let Some(margin) = flags.margin {
        config.margin = Some(margin);
    }
    config.seed = flags.seed;
    config.workers = flags.threads;
    config.lr_schedule = trainer::LrSchedule::from_str(&flags.lr_schedule).map_err(RunError)?;
    config.freeze_relations = flags.freeze_relations;
    config.progress = !flags.quiet;
    config.validate()?;
    Ok(config)
}

fn classifier_config(flags: &ClassifierFlags, seed: u64) -> ClassifierConfig {
    ClassifierConfig {
        epochs: flags.epochs,
        learning_rate: flags.clf_lr,
        l2: flags.l2,
        standardize: flags.standardize,
        seed,
    }
}

fn results_csv(results: &[EvalResult]) -> String {
    let mut out = String::from(EvalResult::csv_header());
    out.push('\n');
    for r in results {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn census(args: &CensusArgs) -> Result<(), RunError> {
    let (_, graph) = load(&args.graph)?;
    let report = census::full_census(
        &graph,
        !args.relaxed_relations,
        args.exact_limit,
        args.sample_budget,
        args.seed,
    );
    let tri_count = report.triangles.tri_nodes.len();
    let ratio = report.tri_node_ratio();
    let exactness = if report.parallelograms.is_estimated() { "estimated" } else { "exact" };
    let mut text = String::from("structure\tmode\tcount\texactness\ttri-node-count\ttri-node-ratio\n");
    text.push_str(&format!(
        "triangle\tfeedforward\t{}\texact\t{}\t{:.6}\n",
        report.triangles.feedforward, tri_count, ratio
    ));
    text.push_str(&format!(
        "triangle\tcyclic\t{}\texact\t{}\t{:.6}\n",
        report.triangles.cyclic, tri_count, ratio
    ));
    text.push_str(&format!(
        "parallelogram\tcanonical\t{}\t{}\t{}\t{:.6}\n",
        report.parallelograms.value(),
        exactness,
        tri_count,
        ratio
    ));
    emit(&args.out, &text)
}

pub fn train(args: &TrainArgs) -> Result<(), RunError> {
    let config = train_config(&args.train)?;
    let (vocab, graph) = load(&args.graph)?;
    let report = trainer::train(&graph, &config)?;
    let manifest = Manifest::for_config(&config);
    checkpoint::save(&args.out, &vocab, &report.table, &manifest)?;
    println!(
        "trained {} on {} ({} nodes, {} edges): {} samples in {:.2}s -> {}",
        config.label(),
        args.graph.display(),
        graph.n_nodes(),
        graph.n_edges(),
        report.samples,
        report.seconds,
        args.out.display()
    );
    Ok(())
}

fn manifest_label(manifest: &Manifest) -> Result<(String, Option<BridgeMode>), RunError> {
    let model = Model::from_str(&manifest.model).map_err(RunError)?;
    let bridge = BridgeMode::from_str(&manifest.bridge).map_err(RunError)?;
    let spec = ModelSpec { model, bridge };
    Ok((spec.label().to_string(), (model == Model::Mne).then_some(bridge)))
}

pub fn eval_tc(args: &EvalTcArgs) -> Result<(), RunError> {
    let (vocab, graph) = load(&args.graph)?;
    let ckpt = checkpoint::load(&args.ckpt)?;
    let table = ckpt.align_to(&vocab)?;
    let (label, bridge) = manifest_label(&ckpt.manifest)?;
    let clf = classifier_config(&args.classifier, args.seed);
    let result = eval::eval_triplet_classification(
        &graph,
        &table,
        &label,
        bridge,
        args.split,
        args.seed,
        &clf,
    )?;
    emit(&args.out, &results_csv(&[result]))
}

pub fn eval_lp(args: &EvalLpArgs) -> Result<(), RunError> {
    let config = train_config(&args.train)?;
    let (_, graph) = load(&args.graph)?;
    let clf = classifier_config(&args.classifier, args.train.seed);
    let result = eval::eval_link_prediction(&graph, &config, args.split, args.train.seed, &clf)?;
    emit(&args.out, &results_csv(&[result]))
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>, RunError>
where
    T::Err: std::fmt::Display,
{
    let items: Result<Vec<T>, _> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| bad(format!("bad {what} {s:?}: {e}"))))
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(bad(format!("empty {what} list")));
    }
    Ok(items)
}

pub fn sweep_dim(args: &SweepDimArgs) -> Result<(), RunError> {
    let dims: Vec<usize> = parse_list(&args.dims, "dimension")?;
    let task = Task::from_str(&args.task).map_err(RunError)?;
    let config = train_config(&args.train)?;
    let (_, graph) = load(&args.graph)?;
    let clf = classifier_config(&args.classifier, args.train.seed);
    let results =
        eval::sweep_dimension(&graph, &dims, task, &config, args.split, args.train.seed, &clf)?;
    emit(&args.out, &results_csv(&results))
}

pub fn sweep_tri(args: &SweepTriArgs) -> Result<(), RunError> {
    let ratios: Vec<f64> = parse_list(&args.ratios, "ratio")?;
    let models: Vec<ModelSpec> = parse_list(&args.models, "model")?;
    let config = train_config(&args.train)?;
    let (_, graph) = load(&args.graph)?;
    let clf = classifier_config(&args.classifier, args.train.seed);
    let results = eval::sweep_trinode_ratio(
        &graph,
        &ratios,
        &models,
        &config,
        args.split,
        args.train.seed,
        &clf,
    )?;
    emit(&args.out, &results_csv(&results))
}

pub fn dump_embeddings(args: &DumpArgs) -> Result<(), RunError> {
    let file = match args.kind.as_str() {
        "source" => checkpoint::SOURCE_FILE,
        "target" => checkpoint::TARGET_FILE,
        "relation" => checkpoint::RELATION_FILE,
        other => return Err(bad(format!("unknown kind {other:?} (expected source, target or relation)"))),
    };
    // Validate the checkpoint as a whole before dumping one file of it.
    checkpoint::load(&args.ckpt)?;
    let path = args.ckpt.join(file);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    print!("{text}");
    std::io::stdout().flush().map_err(|e| bad(format!("stdout: {e}")))?;
    Ok(())
}

pub fn dispatch(command: &Command) -> Result<(), RunError> {
    match command {
        Command::Census(args) => census(args),
        Command::Train(args) => train(args),
        Command::EvalTc(args) => eval_tc(args),
        Command::EvalLp(args) => eval_lp(args),
        Command::SweepDim(args) => sweep_dim(args),
        Command::SweepTri(args) => sweep_tri(args),
        Command::DumpEmbeddings(args) => dump_embeddings(args),
    }
}
