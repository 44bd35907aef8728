//! Directed multi-relational graph: labeled triples, dense-index vocabulary,
//! and an adjacency-indexed immutable graph with weighted degrees.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// One directed labeled edge `(head, relation, tail)` in dense-index form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple { head, relation, tail }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} tab-separated fields, found {found}")]
    MalformedLine { line: usize, expected: &'static str, found: usize },
    #[error("line {line}: unknown entity label {label:?}")]
    UnknownEntity { line: usize, label: String },
    #[error("line {line}: unknown relation label {label:?}")]
    UnknownRelation { line: usize, label: String },
    #[error("line {line}: invalid weight {text:?}")]
    BadWeight { line: usize, text: String },
    #[error("triple {index} is out of range: ({head}, {relation}, {tail}) vs |V|={n_nodes}, |R|={n_relations}")]
    IndexOutOfRange {
        index: usize,
        head: usize,
        relation: usize,
        tail: usize,
        n_nodes: usize,
        n_relations: usize,
    },
    #[error("weight {weight} for triple {index} is not strictly positive")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("{n_weights} weights supplied for {n_triples} triples")]
    WeightCountMismatch { n_weights: usize, n_triples: usize },
}

/// Bidirectional label <-> dense index mapping for entities and relations.
///
/// Indices are assigned in first-seen order, so a vocabulary built from a
/// triple file is reproducible from the file alone.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entity_labels: Vec<String>,
    relation_labels: Vec<String>,
    entity_index: HashMap<String, usize>,
    relation_index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_entities(&self) -> usize {
        self.entity_labels.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relation_labels.len()
    }

    pub fn entity_index(&self, label: &str) -> Option<usize> {
        self.entity_index.get(label).copied()
    }

    pub fn relation_index(&self, label: &str) -> Option<usize> {
        self.relation_index.get(label).copied()
    }

    pub fn entity_label(&self, index: usize) -> &str {
        &self.entity_labels[index]
    }

    pub fn relation_label(&self, index: usize) -> &str {
        &self.relation_labels[index]
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entity_labels
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relation_labels
    }

    /// Returns the index of `label`, inserting it at the end if unseen.
    pub fn intern_entity(&mut self, label: &str) -> usize {
        if let Some(&i) = self.entity_index.get(label) {
            return i;
        }
        let i = self.entity_labels.len();
        self.entity_labels.push(label.to_owned());
        self.entity_index.insert(label.to_owned(), i);
        i
    }

    pub fn intern_relation(&mut self, label: &str) -> usize {
        if let Some(&i) = self.relation_index.get(label) {
            return i;
        }
        let i = self.relation_labels.len();
        self.relation_labels.push(label.to_owned());
        self.relation_index.insert(label.to_owned(), i);
        i
    }
}

/// One incident edge as seen from a node: the relation, the node at the
/// other end (target for out-adjacency, source for in-adjacency) and ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjEntry {
    pub relation: usize,
    pub node: usize,
    pub weight: f64,
}

/// Immutable directed multi-relational graph with per-node adjacency,
/// weighted degrees and an exact fact-membership structure.
///
/// Duplicate triples are kept: each occurrence is its own edge and raises
/// the effective weight of the connection through multiplicity.
#[derive(Clone, Debug)]
pub struct RelGraph {
    n_nodes: usize,
    n_relations: usize,
    triples: Vec<Triple>,
    weights: Vec<f64>,
    // Adjacency in compressed form: per-node slices of one flat entry
    // array, so a node's neighborhood is contiguous in memory.
    out_entries: Vec<AdjEntry>,
    out_offsets: Vec<usize>,
    in_entries: Vec<AdjEntry>,
    in_offsets: Vec<usize>,
    d_out: Vec<f64>,
    d_in: Vec<f64>,
    // Distinct (relation, tail) pairs per head, each run sorted: fact
    // membership is a binary search in a small contiguous slice instead
    // of a probe into one graph-sized hash table.
    fact_offsets: Vec<usize>,
    fact_entries: Vec<(u32, u32)>,
}

impl RelGraph {
    /// Builds the adjacency index over `triples`. `weights`, when given,
    /// must be aligned with `triples` and strictly positive; every edge
    /// defaults to ω = 1 otherwise.
    pub fn build(
        triples: Vec<Triple>,
        n_nodes: usize,
        n_relations: usize,
        weights: Option<Vec<f64>>,
    ) -> Result<RelGraph, GraphError> {
        let weights = match weights {
            Some(w) => {
                if w.len() != triples.len() {
                    return Err(GraphError::WeightCountMismatch {
                        n_weights: w.len(),
                        n_triples: triples.len(),
                    });
                }
                w
            }
            None => vec![1.0; triples.len()],
        };
        for (index, (t, &w)) in triples.iter().zip(&weights).enumerate() {
            if t.head >= n_nodes || t.tail >= n_nodes || t.relation >= n_relations {
                return Err(GraphError::IndexOutOfRange {
                    index,
                    head: t.head,
                    relation: t.relation,
                    tail: t.tail,
                    n_nodes,
                    n_relations,
                });
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(GraphError::NonPositiveWeight { index, weight: w });
            }
        }

        // Counting pass, then a placement pass into flat arrays. The
        // in-file edge order is preserved within every node's slice.
        let mut out_offsets = vec![0usize; n_nodes + 1];
        let mut in_offsets = vec![0usize; n_nodes + 1];
        for t in &triples {
            out_offsets[t.head + 1] += 1;
            in_offsets[t.tail + 1] += 1;
        }
        for v in 0..n_nodes {
            out_offsets[v + 1] += out_offsets[v];
            in_offsets[v + 1] += in_offsets[v];
        }
        let placeholder = AdjEntry { relation: 0, node: 0, weight: 0.0 };
        let mut out_entries = vec![placeholder; triples.len()];
        let mut in_entries = vec![placeholder; triples.len()];
        let mut out_cursor = out_offsets.clone();
        let mut in_cursor = in_offsets.clone();
        let mut d_out = vec![0.0; n_nodes];
        let mut d_in = vec![0.0; n_nodes];
        for (t, &w) in triples.iter().zip(&weights) {
            out_entries[out_cursor[t.head]] =
                AdjEntry { relation: t.relation, node: t.tail, weight: w };
            out_cursor[t.head] += 1;
            in_entries[in_cursor[t.tail]] =
                AdjEntry { relation: t.relation, node: t.head, weight: w };
            in_cursor[t.tail] += 1;
            d_out[t.head] += w;
            d_in[t.tail] += w;
        }

        let mut fact_offsets = Vec::with_capacity(n_nodes + 1);
        let mut fact_entries = Vec::with_capacity(triples.len());
        let mut run: Vec<(u32, u32)> = Vec::new();
        fact_offsets.push(0);
        for v in 0..n_nodes {
            run.clear();
            run.extend(
                out_entries[out_offsets[v]..out_offsets[v + 1]]
                    .iter()
                    .map(|e| (e.relation as u32, e.node as u32)),
            );
            run.sort_unstable();
            run.dedup();
            fact_entries.extend_from_slice(&run);
            fact_offsets.push(fact_entries.len());
        }

        Ok(RelGraph {
            n_nodes,
            n_relations,
            triples,
            weights,
            out_entries,
            out_offsets,
            in_entries,
            in_offsets,
            d_out,
            d_in,
            fact_offsets,
            fact_entries,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_relations(&self) -> usize {
        self.n_relations
    }

    pub fn n_edges(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn triple(&self, index: usize) -> Triple {
        self.triples[index]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn out_adj(&self, node: usize) -> &[AdjEntry] {
        &self.out_entries[self.out_offsets[node]..self.out_offsets[node + 1]]
    }

    pub fn in_adj(&self, node: usize) -> &[AdjEntry] {
        &self.in_entries[self.in_offsets[node]..self.in_offsets[node + 1]]
    }

    /// Weighted out-degree Σ ω over outgoing edges.
    pub fn d_out(&self, node: usize) -> f64 {
        self.d_out[node]
    }

    /// Weighted in-degree Σ ω over incoming edges.
    pub fn d_in(&self, node: usize) -> f64 {
        self.d_in[node]
    }

    /// Exact membership of `(head, relation, tail)` in the edge set.
    pub fn contains_fact(&self, head: usize, relation: usize, tail: usize) -> bool {
        if head >= self.n_nodes {
            return false;
        }
        let run = &self.fact_entries[self.fact_offsets[head]..self.fact_offsets[head + 1]];
        run.binary_search(&(relation as u32, tail as u32)).is_ok()
    }

    /// Number of distinct facts (duplicates collapse).
    pub fn n_facts(&self) -> usize {
        self.fact_entries.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Writes the graph as TSV lines `head TAB relation TAB tail`, with a
    /// fourth weight column appended when any edge has ω ≠ 1.
    pub fn dump<W: Write>(&self, vocab: &Vocabulary, out: &mut W) -> std::io::Result<()> {
        let weighted = self.weights.iter().any(|&w| w != 1.0);
        for (t, &w) in self.triples.iter().zip(&self.weights) {
            if weighted {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    vocab.entity_label(t.head),
                    vocab.relation_label(t.relation),
                    vocab.entity_label(t.tail),
                    w
                )?;
            } else {
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    vocab.entity_label(t.head),
                    vocab.relation_label(t.relation),
                    vocab.entity_label(t.tail)
                )?;
            }
        }
        Ok(())
    }

    pub fn dump_to_path(&self, vocab: &Vocabulary, path: &Path) -> Result<(), GraphError> {
        let file = File::create(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        self.dump(vocab, &mut w).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn resolve_line(
    vocab: &mut Vocabulary,
    fixed: bool,
    line_no: usize,
    head: &str,
    relation: &str,
    tail: &str,
) -> Result<Triple, GraphError> {
    let head = if fixed {
        vocab.entity_index(head).ok_or_else(|| GraphError::UnknownEntity {
            line: line_no,
            label: head.to_owned(),
        })?
    } else {
        vocab.intern_entity(head)
    };
    let relation = if fixed {
        vocab.relation_index(relation).ok_or_else(|| GraphError::UnknownRelation {
            line: line_no,
            label: relation.to_owned(),
        })?
    } else {
        vocab.intern_relation(relation)
    };
    let tail = if fixed {
        vocab.entity_index(tail).ok_or_else(|| GraphError::UnknownEntity {
            line: line_no,
            label: tail.to_owned(),
        })?
    } else {
        vocab.intern_entity(tail)
    };
    Ok(Triple { head, relation, tail })
}

fn parse_reader<R: Read>(
    reader: R,
    path: &str,
    vocab: Option<&Vocabulary>,
    allow_weights: bool,
) -> Result<(Vocabulary, Vec<Triple>, Vec<f64>), GraphError> {
    let fixed = vocab.is_some();
    let mut vocab = vocab.cloned().unwrap_or_default();
    let mut triples = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| GraphError::Io { path: path.to_owned(), source })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let expected: &'static str = if allow_weights { "3 or 4" } else { "3" };
        let (h, r, t, w) = match (fields.as_slice(), allow_weights) {
            ([h, r, t], _) => (*h, *r, *t, 1.0),
            ([h, r, t, w], true) => {
                let parsed: f64 = w.parse().map_err(|_| GraphError::BadWeight {
                    line: line_no,
                    text: (*w).to_owned(),
                })?;
                (*h, *r, *t, parsed)
            }
            _ => {
                return Err(GraphError::MalformedLine {
                    line: line_no,
                    expected,
                    found: fields.len(),
                })
            }
        };
        triples.push(resolve_line(&mut vocab, fixed, line_no, h, r, t)?);
        weights.push(w);
    }
    Ok((vocab, triples, weights))
}

/// Loads triples from a TSV file (`head TAB relation TAB tail`, LF or CRLF).
///
/// With `vocab = None` a fresh vocabulary is built in first-seen order;
/// with a fixed vocabulary every label must already resolve. Duplicate
/// lines are kept as duplicate triples.
pub fn load_triples(
    path: impl AsRef<Path>,
    vocab: Option<&Vocabulary>,
) -> Result<(Vocabulary, Vec<Triple>), GraphError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let (vocab, triples, _) = parse_reader(file, &path.display().to_string(), vocab, false)?;
    Ok((vocab, triples))
}

/// Like [`load_triples`] but accepts the graph-dump format with an optional
/// fourth TAB-separated weight column (missing weights default to 1).
pub fn load_weighted_triples(
    path: impl AsRef<Path>,
    vocab: Option<&Vocabulary>,
) -> Result<(Vocabulary, Vec<Triple>, Vec<f64>), GraphError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_reader(file, &path.display().to_string(), vocab, true)
}

/// Convenience: load a (possibly weighted) triple file and index it.
pub fn load_graph(
    path: impl AsRef<Path>,
    vocab: Option<&Vocabulary>,
) -> Result<(Vocabulary, RelGraph), GraphError> {
    let (vocab, triples, weights) = load_weighted_triples(path, vocab)?;
    let graph = RelGraph::build(triples, vocab.n_entities(), vocab.n_relations(), Some(weights))?;
    Ok((vocab, graph))
}
