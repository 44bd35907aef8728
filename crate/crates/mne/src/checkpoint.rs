//! Text checkpoint format: three embedding files (`source.vec`,
//! `target.vec`, `relation.vec`) plus a `manifest.txt`.
//!
//! Each embedding file starts with a `<count> <dim> <kind>` header line
//! followed by one `label v0 v1 ...` line per row. Values are written in
//! Rust's shortest round-trip decimal form, so a write/read cycle
//! reproduces every f64 bit-exactly (well beyond 9 significant digits).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::graph::Vocabulary;
use crate::model::EmbeddingTable;
use crate::trainer::TrainConfig;

pub const SOURCE_FILE: &str = "source.vec";
pub const TARGET_FILE: &str = "target.vec";
pub const RELATION_FILE: &str = "relation.vec";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("label {label:?} contains whitespace and cannot be checkpointed")]
    BadLabel { label: String },
    #[error("checkpoint does not match vocabulary: {0}")]
    VocabMismatch(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.display().to_string(), source }
}

/// Run metadata stored next to the embedding files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub model: String,
    pub bridge: String,
    pub dim: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl Manifest {
    pub fn for_config(config: &TrainConfig) -> Manifest {
        Manifest {
            model: config.model.as_str().to_string(),
            bridge: config.bridge.as_str().to_string(),
            dim: config.dim,
            seed: config.seed,
            config_hash: config.config_hash(),
        }
    }
}

/// A loaded checkpoint, still in file row order.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub entity_labels: Vec<String>,
    pub relation_labels: Vec<String>,
    pub table: EmbeddingTable,
    pub manifest: Manifest,
}

fn write_matrix<'t>(
    path: &Path,
    kind: &str,
    labels: &[String],
    dim: usize,
    row: impl Fn(usize) -> &'t [f64],
) -> Result<(), CheckpointError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    (|| -> std::io::Result<()> {
        writeln!(out, "{} {} {}", labels.len(), dim, kind)?;
        for (i, label) in labels.iter().enumerate() {
            write!(out, "{label}")?;
            for v in row(i) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    })()
    .map_err(io_err(path))
}

/// Writes the three embedding files and the manifest into `dir`
/// (created if missing).
pub fn save(
    dir: impl AsRef<Path>,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    manifest: &Manifest,
) -> Result<(), CheckpointError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for labels in [vocab.entity_labels(), vocab.relation_labels()] {
        for label in labels {
            if label.chars().any(char::is_whitespace) || label.is_empty() {
                return Err(CheckpointError::BadLabel { label: label.clone() });
            }
        }
    }
    assert_eq!(vocab.n_entities(), table.n_nodes(), "vocabulary/table entity count mismatch");
    assert_eq!(vocab.n_relations(), table.n_relations(), "vocabulary/table relation count mismatch");
    assert_eq!(manifest.dim, table.dim(), "manifest/table dimension mismatch");

    let dim = table.dim();
    write_matrix(&dir.join(SOURCE_FILE), "source", vocab.entity_labels(), dim, |i| {
        table.source_row(i)
    })?;
    write_matrix(&dir.join(TARGET_FILE), "target", vocab.entity_labels(), dim, |i| {
        table.target_row(i)
    })?;
    write_matrix(&dir.join(RELATION_FILE), "relation", vocab.relation_labels(), dim, |i| {
        table.relation_row(i)
    })?;

    let path = dir.join(MANIFEST_FILE);
    let mut out = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    (|| -> std::io::Result<()> {
        writeln!(out, "model = {}", manifest.model)?;
        writeln!(out, "bridge = {}", manifest.bridge)?;
        writeln!(out, "dim = {}", manifest.dim)?;
        writeln!(out, "seed = {}", manifest.seed)?;
        writeln!(out, "config_hash = {}", manifest.config_hash)?;
        out.flush()
    })()
    .map_err(io_err(&path))?;
    Ok(())
}

struct MatrixFile {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
    dim: usize,
}

fn read_matrix(path: &Path, expected_kind: &str) -> Result<MatrixFile, CheckpointError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let fmt = |line: usize, message: String| CheckpointError::Format {
        path: path.display().to_string(),
        line,
        message,
    };

    let (_, header) = lines
        .next()
        .ok_or_else(|| fmt(1, "empty file".into()))
        .and_then(|(i, r)| r.map(|l| (i, l)).map_err(io_err(path)))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(fmt(1, format!("header must be '<count> <dim> <kind>', got {header:?}")));
    }
    let count: usize =
        parts[0].parse().map_err(|_| fmt(1, format!("bad count {:?}", parts[0])))?;
    let dim: usize = parts[1].parse().map_err(|_| fmt(1, format!("bad dim {:?}", parts[1])))?;
    if parts[2] != expected_kind {
        return Err(fmt(1, format!("expected kind {expected_kind:?}, got {:?}", parts[2])));
    }

    let mut labels = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for (i, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let label = fields.next().unwrap_or_default().to_string();
        let row: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| fmt(i + 1, format!("bad value: {e}")))?;
        if row.len() != dim {
            return Err(fmt(i + 1, format!("expected {dim} values, got {}", row.len())));
        }
        labels.push(label);
        values.push(row);
    }
    if labels.len() != count {
        return Err(fmt(1, format!("header says {count} rows, file has {}", labels.len())));
    }
    Ok(MatrixFile { labels, values, dim })
}

fn read_manifest(path: &Path) -> Result<Manifest, CheckpointError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut model = None;
    let mut bridge = None;
    let mut dim = None;
    let mut seed = None;
    let mut config_hash = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fmt = |message: String| CheckpointError::Format {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let (key, value) =
            line.split_once('=').ok_or_else(|| fmt("expected 'key = value'".into()))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "model" => model = Some(value.to_string()),
            "bridge" => bridge = Some(value.to_string()),
            "dim" => dim = Some(value.parse().map_err(|_| fmt(format!("bad dim {value:?}")))?),
            "seed" => seed = Some(value.parse().map_err(|_| fmt(format!("bad seed {value:?}")))?),
            "config_hash" => config_hash = Some(value.to_string()),
            other => return Err(fmt(format!("unknown manifest key {other:?}"))),
        }
    }
    let missing = |what: &str| CheckpointError::Format {
        path: path.display().to_string(),
        line: 0,
        message: format!("missing manifest key {what}"),
    };
    Ok(Manifest {
        model: model.ok_or_else(|| missing("model"))?,
        bridge: bridge.ok_or_else(|| missing("bridge"))?,
        dim: dim.ok_or_else(|| missing("dim"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
    })
}

/// Loads a checkpoint directory written by [`save`].
pub fn load(dir: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    let dir = dir.as_ref();
    let source = read_matrix(&dir.join(SOURCE_FILE), "source")?;
    let target = read_matrix(&dir.join(TARGET_FILE), "target")?;
    let relation = read_matrix(&dir.join(RELATION_FILE), "relation")?;
    let manifest = read_manifest(&dir.join(MANIFEST_FILE))?;

    let mismatch = |m: String| CheckpointError::VocabMismatch(m);
    if source.labels != target.labels {
        return Err(mismatch("source and target files disagree on entity labels".into()));
    }
    if source.dim != target.dim || source.dim != relation.dim {
        return Err(mismatch("embedding files disagree on dimension".into()));
    }
    if manifest.dim != source.dim {
        return Err(mismatch(format!(
            "manifest dim {} does not match files ({})",
            manifest.dim, source.dim
        )));
    }

    let mut table = EmbeddingTable::zeros(source.labels.len(), relation.labels.len(), source.dim);
    for (i, row) in source.values.iter().enumerate() {
        table.source_row_mut(i).copy_from_slice(row);
    }
    for (i, row) in target.values.iter().enumerate() {
        table.target_row_mut(i).copy_from_slice(row);
    }
    for (i, row) in relation.values.iter().enumerate() {
        table.relation_row_mut(i).copy_from_slice(row);
    }
    Ok(Checkpoint {
        entity_labels: source.labels,
        relation_labels: relation.labels,
        table,
        manifest,
    })
}

impl Checkpoint {
    /// Reorders the checkpoint rows to a vocabulary's index order. Label
    /// sets must match exactly in both directions.
    pub fn align_to(&self, vocab: &Vocabulary) -> Result<EmbeddingTable, CheckpointError> {
        if vocab.n_entities() != self.entity_labels.len() {
            return Err(CheckpointError::VocabMismatch(format!(
                "vocabulary has {} entities, checkpoint has {}",
                vocab.n_entities(),
                self.entity_labels.len()
            )));
        }
        if vocab.n_relations() != self.relation_labels.len() {
            return Err(CheckpointError::VocabMismatch(format!(
                "vocabulary has {} relations, checkpoint has {}",
                vocab.n_relations(),
                self.relation_labels.len()
            )));
        }
        let dim = self.table.dim();
        let mut table = EmbeddingTable::zeros(vocab.n_entities(), vocab.n_relations(), dim);
        for (row, label) in self.entity_labels.iter().enumerate() {
            let idx = vocab.entity_index(label).ok_or_else(|| {
                CheckpointError::VocabMismatch(format!("entity {label:?} not in vocabulary"))
            })?;
            table.source_row_mut(idx).copy_from_slice(self.table.source_row(row));
            table.target_row_mut(idx).copy_from_slice(self.table.target_row(row));
        }
        for (row, label) in self.relation_labels.iter().enumerate() {
            let idx = vocab.relation_index(label).ok_or_else(|| {
                CheckpointError::VocabMismatch(format!("relation {label:?} not in vocabulary"))
            })?;
            table.relation_row_mut(idx).copy_from_slice(self.table.relation_row(row));
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::Model;

    fn manifest_with_dim(dim: usize) -> Manifest {
        let mut config = TrainConfig::new(Model::Mne);
        config.dim = dim;
        Manifest::for_config(&config)
    }

    fn toy_vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        for label in ["alpha", "beta", "gamma"] {
            v.intern_entity(label);
        }
        v.intern_relation("rel_a");
        v.intern_relation("rel_b");
        v
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let vocab = toy_vocab();
        let table = EmbeddingTable::random_uniform(3, 2, 7, 99, 0.4);
        let manifest = manifest_with_dim(7);
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &vocab, &table, &manifest).unwrap();
        let loaded = load(dir.path()).unwrap();
        assert_eq!(loaded.table, table);
        assert_eq!(loaded.manifest, manifest);
        assert_eq!(loaded.entity_labels, vocab.entity_labels());
        assert_eq!(loaded.relation_labels, vocab.relation_labels());
    }

    #[test]
    fn repeated_saves_are_byte_identical() {
        let vocab = toy_vocab();
        let table = EmbeddingTable::random_uniform(3, 2, 5, 7, 0.3);
        let manifest = manifest_with_dim(5);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        save(dir_a.path(), &vocab, &table, &manifest).unwrap();
        save(dir_b.path(), &vocab, &table, &manifest).unwrap();
        for file in [SOURCE_FILE, TARGET_FILE, RELATION_FILE, MANIFEST_FILE] {
            assert_eq!(
                std::fs::read(dir_a.path().join(file)).unwrap(),
                std::fs::read(dir_b.path().join(file)).unwrap(),
                "{file}"
            );
        }
    }

    #[test]
    fn align_to_permuted_vocabulary_relocates_rows() {
        let vocab = toy_vocab();
        let table = EmbeddingTable::random_uniform(3, 2, 4, 5, 0.2);
        let manifest = manifest_with_dim(4);
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &vocab, &table, &manifest).unwrap();
        let loaded = load(dir.path()).unwrap();

        // A vocabulary with the same labels in a different first-seen order.
        let mut permuted = Vocabulary::new();
        permuted.intern_entity("gamma");
        permuted.intern_entity("alpha");
        permuted.intern_entity("beta");
        permuted.intern_relation("rel_b");
        permuted.intern_relation("rel_a");
        let aligned = loaded.align_to(&permuted).unwrap();
        assert_eq!(aligned.source_row(0), table.source_row(2));
        assert_eq!(aligned.source_row(1), table.source_row(0));
        assert_eq!(aligned.target_row(2), table.target_row(1));
        assert_eq!(aligned.relation_row(0), table.relation_row(1));
    }

    #[test]
    fn align_rejects_mismatched_labels() {
        let vocab = toy_vocab();
        let table = EmbeddingTable::zeros(3, 2, 4);
        let manifest = manifest_with_dim(4);
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &vocab, &table, &manifest).unwrap();
        let loaded = load(dir.path()).unwrap();
        let mut other = Vocabulary::new();
        other.intern_entity("alpha");
        other.intern_entity("beta");
        other.intern_entity("DIFFERENT");
        other.intern_relation("rel_a");
        other.intern_relation("rel_b");
        assert!(matches!(loaded.align_to(&other), Err(CheckpointError::VocabMismatch(_))));
    }

    #[test]
    fn whitespace_labels_are_rejected() {
        let mut vocab = Vocabulary::new();
        vocab.intern_entity("has space");
        let table = EmbeddingTable::zeros(1, 0, 2);
        let manifest = manifest_with_dim(2);
        let dir = tempfile::tempdir().unwrap();
        let err = save(dir.path(), &vocab, &table, &manifest).unwrap_err();
        assert!(matches!(err, CheckpointError::BadLabel { .. }));
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let vocab = toy_vocab();
        let table = EmbeddingTable::zeros(3, 2, 4);
        let manifest = manifest_with_dim(4);
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &vocab, &table, &manifest).unwrap();
        let path = dir.path().join(SOURCE_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        let truncated: Vec<&str> = text.lines().take(2).collect();
        std::fs::write(&path, truncated.join("\n")).unwrap();
        assert!(matches!(load(dir.path()), Err(CheckpointError::Format { .. })));
    }
}
