//! Self-contained logistic-regression binary classifier trained by
//! shuffled per-example gradient steps on log-loss with L2 weight decay.
//! Feature rows are pulled through [`FeatureSet`] so callers can featurize
//! lazily instead of materializing large matrices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sigmoid::sigmoid_exact;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("empty training set")]
    Empty,
    #[error("labels ({labels}) do not match features ({examples})")]
    LabelMismatch { labels: usize, examples: usize },
    #[error("non-finite feature value in example {example}")]
    NonFiniteFeature { example: usize },
}

/// Row source for training and scoring: `fill` writes example `idx` into
/// a caller-provided buffer of length `dim`.
pub trait FeatureSet {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn fill(&self, idx: usize, out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense row-major feature matrix.
#[derive(Clone, Debug)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> FeatureMatrix {
        assert_eq!(data.len(), rows * cols);
        FeatureMatrix { data, rows, cols }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> FeatureMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged feature rows");
            data.extend_from_slice(row);
        }
        FeatureMatrix { data, rows: rows.len(), cols }
    }
}

impl FeatureSet for FeatureMatrix {
    fn len(&self) -> usize {
        self.rows
    }

    fn dim(&self) -> usize {
        self.cols
    }

    fn fill(&self, idx: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.data[idx * self.cols..(idx + 1) * self.cols]);
    }
}

#[derive(Clone, Debug)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Z-score features using training-set statistics.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { epochs: 50, learning_rate: 0.01, l2: 1e-4, standardize: false, seed: 0 }
    }
}

/// Linear scorer: class 1 iff w·x + b ≥ 0 (ties count as class 1).
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Per-feature (mean, inverse deviation) when standardization is on.
    scaling: Option<Vec<(f64, f64)>>,
}

impl BinaryClassifier {
    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.weights.len(), "score: dimension mismatch");
        match &self.scaling {
            None => self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias,
            Some(scaling) => {
                let mut acc = self.bias;
                for ((w, v), (mean, inv_dev)) in self.weights.iter().zip(x).zip(scaling) {
                    acc += w * (v - mean) * inv_dev;
                }
                acc
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) >= 0.0
    }

    /// One-line decimal dump (bias first) for audits.
    pub fn dump_line(&self) -> String {
        let mut s = format!("{}", self.bias);
        for w in &self.weights {
            s.push(' ');
            s.push_str(&format!("{w}"));
        }
        s
    }
}

fn validate(features: &impl FeatureSet, labels: &[bool]) -> Result<(), ClassifierError> {
    if features.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if labels.len() != features.len() {
        return Err(ClassifierError::LabelMismatch {
            labels: labels.len(),
            examples: features.len(),
        });
    }
    let mut buf = vec![0.0; features.dim()];
    for i in 0..features.len() {
        features.fill(i, &mut buf);
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFiniteFeature { example: i });
        }
    }
    Ok(())
}

/// Minimizes mean log-loss + l2·‖w‖²/2 by shuffled per-example gradient
/// steps; deterministic under the config seed.
pub fn fit(
    features: &impl FeatureSet,
    labels: &[bool],
    config: &ClassifierConfig,
) -> Result<BinaryClassifier, ClassifierError> {
    validate(features, labels)?;
    let dim = features.dim();
    let n = features.len();

    let scaling = if config.standardize {
        let mut mean = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for i in 0..n {
            features.fill(i, &mut buf);
            for (j, &v) in buf.iter().enumerate() {
                mean[j] += v;
                sq[j] += v * v;
            }
        }
        Some(
            (0..dim)
                .map(|j| {
                    let m = mean[j] / n as f64;
                    let var = (sq[j] / n as f64 - m * m).max(0.0);
                    let dev = var.sqrt();
                    (m, if dev > 1e-12 { 1.0 / dev } else { 1.0 })
                })
                .collect(),
        )
    } else {
        None
    };

    let mut model = BinaryClassifier { weights: vec![0.0; dim], bias: 0.0, scaling };
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut buf = vec![0.0; dim];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            features.fill(i, &mut buf);
            let p = sigmoid_exact(model.score(&buf));
            let err = p - labels[i] as u8 as f64;
            let lr = config.learning_rate;
            match &model.scaling {
                None => {
                    for (w, &v) in model.weights.iter_mut().zip(&buf) {
                        *w -= lr * (err * v + config.l2 * *w);
                    }
                }
                Some(scaling) => {
                    for ((w, &v), (mean, inv_dev)) in
                        model.weights.iter_mut().zip(&buf).zip(scaling)
                    {
                        *w -= lr * (err * (v - mean) * inv_dev + config.l2 * *w);
                    }
                }
            }
            model.bias -= lr * err;
        }
    }
    Ok(model)
}

/// Fraction of examples with (score ≥ 0) matching the positive label.
pub fn accuracy(model: &BinaryClassifier, features: &impl FeatureSet, labels: &[bool]) -> f64 {
    assert_eq!(labels.len(), features.len());
    if labels.is_empty() {
        return 0.0;
    }
    let mut buf = vec![0.0; features.dim()];
    let mut correct = 0usize;
    for (i, &label) in labels.iter().enumerate() {
        features.fill(i, &mut buf);
        if model.predict(&buf) == label {
            correct += 1;
        }
    }
    correct as f64 / labels.len() as f64
}

/// Mean log-loss of the model on a labeled set (no regularization term).
pub fn log_loss(model: &BinaryClassifier, features: &impl FeatureSet, labels: &[bool]) -> f64 {
    assert_eq!(labels.len(), features.len());
    let mut buf = vec![0.0; features.dim()];
    let mut acc = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        features.fill(i, &mut buf);
        let z = model.score(&buf);
        let signed = if label { z } else { -z };
        acc -= crate::sigmoid::log_sigmoid(signed);
    }
    acc / labels.len().max(1) as f64
}
