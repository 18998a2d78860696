//! L2-regularized logistic regression and binary relevance over speech-act labels.
//!
//! Each label gets its own binary classifier, trained on that label's
//! SMOTE-balanced view of the training set. Prediction thresholds each
//! label's probability independently.

mod persist;
mod tune;

pub use persist::{load_model, load_model_from_path, save_model, save_model_to_path, ModelIoError, FORMAT_VERSION};
pub use tune::{default_grid, tune, TuneError, TuneOutcome};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::balance::{derive_seed, smote_balance, BalanceError, DenseExample, Origin};
use crate::corpus::{LabelCatalog, SpeechActLabel};
use crate::featurize::{FeatureVector, Featurizer, SlenScope};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClassifierError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no training examples")]
    EmptyDataset,
    #[error("targets take a single value; both classes are required")]
    SingleClass,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Balance(#[from] BalanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub learning_rate: f64,
    pub fit_bias: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            c: 1.0,
            max_iterations: 1000,
            tolerance: 1e-6,
            learning_rate: 0.1,
            fit_bias: true,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.c) {
            return Err(ClassifierError::InvalidHyperparams(format!("c = {}", self.c)));
        }
        if self.max_iterations == 0 {
            return Err(ClassifierError::InvalidHyperparams("max_iterations = 0".into()));
        }
        if !positive(self.tolerance) {
            return Err(ClassifierError::InvalidHyperparams(format!("tolerance = {}", self.tolerance)));
        }
        if !positive(self.learning_rate) {
            return Err(ClassifierError::InvalidHyperparams(format!(
                "learning_rate = {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Logistic function, computed without overflow for any finite `z`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Training rows held as non-zero `(column, value)` pairs.
///
/// Bag-of-words rows (and SMOTE points between two of them) are mostly zeros,
/// so the optimizer only touches the non-zero entries.
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
    width: usize,
}

impl SparseRows {
    fn from_dense<R: AsRef<[f64]>>(examples: &[R], width: usize) -> Result<Self, ClassifierError> {
        let mut rows = Vec::with_capacity(examples.len());
        for e in examples {
            let e = e.as_ref();
            if e.len() != width {
                return Err(ClassifierError::DimensionMismatch {
                    expected: width,
                    found: e.len(),
                });
            }
            rows.push(
                e.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect(),
            );
        }
        Ok(SparseRows { rows, width })
    }

    fn n(&self) -> usize {
        self.rows.len()
    }

    fn margin(&self, i: usize, weights: &[f64], bias: f64) -> f64 {
        self.rows[i].iter().fold(bias, |acc, &(j, v)| acc + weights[j] * v)
    }
}

/// Loss value with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn objective(rows: &SparseRows, targets: &[f64], weights: &[f64], bias: f64, c: f64) -> LossGradient {
    let n = rows.n() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; rows.width];
    let mut bias_grad = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let z = rows.margin(i, weights, bias);
        loss += softplus(z) - y * z;
        let residual = sigmoid(z) - y;
        bias_grad += residual;
        for &(j, v) in &rows.rows[i] {
            grad[j] += residual * v;
        }
    }
    let penalty: f64 = weights.iter().map(|w| w * w).sum();
    let cn = c * n;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + w / cn;
    }
    LossGradient {
        loss: loss / n + penalty / (2.0 * cn),
        weights: grad,
        bias: bias_grad / n,
    }
}

/// Mean negative log-likelihood plus `‖w‖² / (2·C·n)`, and its gradient.
///
/// The bias is not regularized.
pub fn loss_and_gradient<R: AsRef<[f64]>>(
    weights: &[f64],
    bias: f64,
    examples: &[R],
    targets: &[f64],
    c: f64,
) -> Result<LossGradient, ClassifierError> {
    if examples.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if targets.len() != examples.len() {
        return Err(ClassifierError::DimensionMismatch {
            expected: examples.len(),
            found: targets.len(),
        });
    }
    let rows = SparseRows::from_dense(examples, weights.len())?;
    Ok(objective(&rows, targets, weights, bias, c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub label: SpeechActLabel,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyperparams: Hyperparams,
}

impl BinaryClassifier {
    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn decision_dense(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).fold(self.bias, |acc, (w, v)| acc + w * v)
    }

    /// Affine score of a sparse feature vector (caller checks the width).
    pub fn decision(&self, fv: &FeatureVector) -> f64 {
        let mut z = self.bias;
        for &i in &fv.word_indicators {
            z += self.weights[i];
        }
        for (j, v) in fv.shallow_scaled.iter().enumerate() {
            z += self.weights[fv.vocab_size + j] * v;
        }
        z
    }
}

/// Per-iteration training losses, starting with the loss at the zero initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub losses: Vec<f64>,
    pub iterations: usize,
}

const MAX_HALVINGS: usize = 20;

/// Full-batch gradient descent from zero weights.
///
/// Each iteration starts at the configured learning rate and halves the step
/// (at most 20 times) until the loss does not increase. Training stops after
/// `max_iterations` or once the loss improves by less than `tolerance`.
pub fn fit_binary<R: AsRef<[f64]>>(
    label: SpeechActLabel,
    examples: &[R],
    targets: &[bool],
    hyperparams: &Hyperparams,
) -> Result<BinaryClassifier, ClassifierError> {
    fit_binary_traced(label, examples, targets, hyperparams).map(|(clf, _)| clf)
}

pub fn fit_binary_traced<R: AsRef<[f64]>>(
    label: SpeechActLabel,
    examples: &[R],
    targets: &[bool],
    hyperparams: &Hyperparams,
) -> Result<(BinaryClassifier, FitTrace), ClassifierError> {
    hyperparams.validate()?;
    if examples.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if targets.len() != examples.len() {
        return Err(ClassifierError::DimensionMismatch {
            expected: examples.len(),
            found: targets.len(),
        });
    }
    if targets.iter().all(|&t| t) || targets.iter().all(|&t| !t) {
        return Err(ClassifierError::SingleClass);
    }
    let width = examples[0].as_ref().len();
    let rows = SparseRows::from_dense(examples, width)?;
    let y: Vec<f64> = targets.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    let c = hyperparams.c;

    let mut weights = vec![0.0; width];
    let mut bias = 0.0;
    let mut current = objective(&rows, &y, &weights, bias, c);
    let mut losses = vec![current.loss];
    let mut iterations = 0;

    while iterations < hyperparams.max_iterations {
        iterations += 1;
        let mut step = hyperparams.learning_rate;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand_w: Vec<f64> = weights
                .iter()
                .zip(&current.weights)
                .map(|(w, g)| w - step * g)
                .collect();
            let cand_b = if hyperparams.fit_bias { bias - step * current.bias } else { 0.0 };
            let next = objective(&rows, &y, &cand_w, cand_b, c);
            if next.loss <= current.loss {
                accepted = Some((cand_w, cand_b, next));
                break;
            }
            step *= 0.5;
        }
        let Some((w, b, next)) = accepted else {
            break;
        };
        let improvement = current.loss - next.loss;
        weights = w;
        bias = b;
        current = next;
        losses.push(current.loss);
        if improvement < hyperparams.tolerance {
            break;
        }
    }

    Ok((
        BinaryClassifier {
            label,
            weights,
            bias,
            hyperparams: *hyperparams,
        },
        FitTrace { losses, iterations },
    ))
}

/// Settings for fitting a multi-label model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub catalog: LabelCatalog,
    pub hyperparams: Hyperparams,
    pub smote_k: usize,
    pub seed: u64,
    pub threshold: f64,
    pub slen_scope: SlenScope,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            catalog: LabelCatalog::default(),
            hyperparams: Hyperparams::default(),
            smote_k: 5,
            seed: 42,
            threshold: 0.5,
            slen_scope: SlenScope::SameSpeaker,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoPositives,
    NoNegatives,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLabel {
    pub label: SpeechActLabel,
    pub reason: SkipReason,
}

/// What went into one label's classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTraining {
    pub label: SpeechActLabel,
    pub real_positives: usize,
    pub real_negatives: usize,
    pub synthetic: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelModel {
    pub format_version: u32,
    pub catalog: LabelCatalog,
    pub featurizer: Featurizer,
    pub slen_scope: SlenScope,
    pub threshold: f64,
    /// Trained classifiers in catalog order.
    pub classifiers: Vec<BinaryClassifier>,
    pub skipped: Vec<SkippedLabel>,
    pub training: Vec<LabelTraining>,
}

/// One label's balanced binary training set: positives first, then negatives.
pub struct LabelProblem {
    pub rows: Vec<DenseExample>,
    pub targets: Vec<bool>,
    pub training: LabelTraining,
}

/// Builds the SMOTE-balanced binary problem for `label`.
///
/// Returns `Ok(Err(reason))` when the label cannot be trained on this data.
pub fn label_problem(
    dense: &[DenseExample],
    label_sets: &[BTreeSet<SpeechActLabel>],
    label: &SpeechActLabel,
    smote_k: usize,
    base_seed: u64,
) -> Result<Result<LabelProblem, SkipReason>, ClassifierError> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (row, labels) in dense.iter().zip(label_sets) {
        if labels.contains(label) {
            positives.push(row.clone());
        } else {
            negatives.push(row.clone());
        }
    }
    if positives.is_empty() {
        return Ok(Err(SkipReason::NoPositives));
    }
    if negatives.is_empty() {
        return Ok(Err(SkipReason::NoNegatives));
    }
    let seed = derive_seed(base_seed, label.as_str());
    let (real_positives, real_negatives) = (positives.len(), negatives.len());
    let balanced = smote_balance(positives, negatives, smote_k, seed)?;
    let synthetic = balanced.syntheses.len();
    let mut targets = vec![true; balanced.positives.len()];
    targets.extend(std::iter::repeat_n(false, balanced.negatives.len()));
    let mut rows = balanced.positives;
    rows.extend(balanced.negatives);
    Ok(Ok(LabelProblem {
        rows,
        targets,
        training: LabelTraining {
            label: label.clone(),
            real_positives,
            real_negatives,
            synthetic,
            seed,
        },
    }))
}

/// Binary relevance: SMOTE then logistic regression, independently per catalog label.
pub fn fit_multilabel(
    featurizer: Featurizer,
    train: &[FeatureVector],
    label_sets: &[BTreeSet<SpeechActLabel>],
    config: &TrainConfig,
) -> Result<MultiLabelModel, ClassifierError> {
    if train.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    if label_sets.len() != train.len() {
        return Err(ClassifierError::DimensionMismatch {
            expected: train.len(),
            found: label_sets.len(),
        });
    }
    if !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(ClassifierError::InvalidThreshold(config.threshold));
    }
    config.hyperparams.validate()?;
    let width = featurizer.feature_width();
    if let Some(fv) = train.iter().find(|fv| fv.width() != width) {
        return Err(ClassifierError::DimensionMismatch {
            expected: width,
            found: fv.width(),
        });
    }
    let dense: Vec<DenseExample> = train.iter().map(DenseExample::from_vector).collect();

    let mut classifiers = Vec::new();
    let mut skipped = Vec::new();
    let mut training = Vec::new();
    for label in config.catalog.labels() {
        match label_problem(&dense, label_sets, label, config.smote_k, config.seed)? {
            Err(reason) => {
                log::warn!("skipping label {label}: {reason:?}");
                skipped.push(SkippedLabel {
                    label: label.clone(),
                    reason,
                });
            }
            Ok(problem) => {
                let rows: Vec<&[f64]> = problem.rows.iter().map(|r| r.values.as_slice()).collect();
                classifiers.push(fit_binary(label.clone(), &rows, &problem.targets, &config.hyperparams)?);
                training.push(problem.training);
            }
        }
    }

    Ok(MultiLabelModel {
        format_version: FORMAT_VERSION,
        catalog: config.catalog.clone(),
        featurizer,
        slen_scope: config.slen_scope,
        threshold: config.threshold,
        classifiers,
        skipped,
        training,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probabilities: BTreeMap<SpeechActLabel, f64>,
    pub labels: BTreeSet<SpeechActLabel>,
    pub low_confidence: bool,
}

/// Thresholds `probabilities` (given in catalog order).
///
/// When nothing clears the threshold the prediction is flagged low-confidence,
/// and with `fallback` on the most probable label (first on ties) is emitted.
pub fn decide(probabilities: &[(SpeechActLabel, f64)], threshold: f64, fallback: bool) -> Prediction {
    let labels: BTreeSet<_> = probabilities
        .iter()
        .filter(|(_, p)| *p >= threshold)
        .map(|(l, _)| l.clone())
        .collect();
    let mut low_confidence = false;
    let labels = if labels.is_empty() {
        low_confidence = true;
        let best = probabilities
            .iter()
            .fold(None::<&(SpeechActLabel, f64)>, |best, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        match best {
            Some((l, _)) if fallback => [l.clone()].into_iter().collect(),
            _ => BTreeSet::new(),
        }
    } else {
        labels
    };
    Prediction {
        probabilities: probabilities.iter().cloned().collect(),
        labels,
        low_confidence,
    }
}

impl MultiLabelModel {
    pub fn feature_width(&self) -> usize {
        self.featurizer.feature_width()
    }

    pub fn vocab_size(&self) -> usize {
        self.featurizer.vocabulary.len()
    }

    pub fn classifier(&self, label: &SpeechActLabel) -> Option<&BinaryClassifier> {
        self.classifiers.iter().find(|c| &c.label == label)
    }

    fn check_width(&self, found: usize) -> Result<(), ClassifierError> {
        if found != self.feature_width() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.feature_width(),
                found,
            });
        }
        Ok(())
    }

    fn probabilities_with(&self, score: impl Fn(&BinaryClassifier) -> f64) -> Vec<(SpeechActLabel, f64)> {
        self.catalog
            .labels()
            .iter()
            .map(|l| {
                let p = self.classifier(l).map(|c| sigmoid(score(c))).unwrap_or(0.0);
                (l.clone(), p)
            })
            .collect()
    }

    /// Per-label probabilities in catalog order; skipped labels score 0.
    pub fn predict_proba(&self, fv: &FeatureVector) -> Result<Vec<(SpeechActLabel, f64)>, ClassifierError> {
        self.check_width(fv.width())?;
        Ok(self.probabilities_with(|c| c.decision(fv)))
    }

    pub fn predict_proba_dense(&self, x: &[f64]) -> Result<Vec<(SpeechActLabel, f64)>, ClassifierError> {
        self.check_width(x.len())?;
        Ok(self.probabilities_with(|c| c.decision_dense(x)))
    }

    pub fn predict_labels(&self, fv: &FeatureVector, fallback: bool) -> Result<Prediction, ClassifierError> {
        Ok(decide(&self.predict_proba(fv)?, self.threshold, fallback))
    }

    pub fn predict_labels_dense(&self, x: &[f64], fallback: bool) -> Result<Prediction, ClassifierError> {
        Ok(decide(&self.predict_proba_dense(x)?, self.threshold, fallback))
    }

    /// Real-example check used by evaluation: only real rows may be scored.
    pub fn predict_example(&self, example: &DenseExample, fallback: bool) -> Result<Prediction, ClassifierError> {
        debug_assert_eq!(example.origin, Origin::Real);
        self.predict_labels_dense(&example.values, fallback)
    }
}
