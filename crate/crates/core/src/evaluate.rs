//! Stratified multi-label k-fold cross-validation, per-label metrics with a
//! support-weighted average, and Fisher-score feature ranking.
//!
//! Metrics are computed per fold, averaged per label across folds, and the
//! weighted average row is taken over the averaged rows. That is why supports
//! come out fractional and why an averaged row's f-measure need not equal the
//! harmonic mean of its averaged precision and recall.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balance::{DenseExample, Origin};
use crate::classifier::{
    fit_multilabel, tune, ClassifierError, Hyperparams, LabelTraining, SkippedLabel, TrainConfig, TuneError,
};
use crate::corpus::SpeechActLabel;
use crate::dataset::Dataset;
use crate::featurize::{FeatureError, FeatureVector, Featurizer, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("need at least {folds} examples for {folds} folds, found {examples}")]
    TooFewExamples { examples: usize, folds: usize },
    #[error("fold count must be at least 2, found {0}")]
    InvalidFoldCount(usize),
    #[error("length mismatch: {0} gold vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("fold rows are missing or do not cover the same labels")]
    MissingFoldRows,
    #[error("total support is zero")]
    ZeroSupport,
    #[error("label {0} has no positive examples")]
    NoPositives(SpeechActLabel),
    #[error("label {0} is not in the catalog")]
    UnknownLabel(SpeechActLabel),
    #[error("tuning failed: {0}")]
    Tuning(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// A fold's positive count for a label that strays more than one from its share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratificationGap {
    pub fold: usize,
    pub label: usize,
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    /// Fold id of every example, by example position.
    pub assignment: Vec<usize>,
    pub seed: u64,
    /// Cells left outside the ±1 band after assignment and repair.
    pub gaps: Vec<StratificationGap>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

struct Stratifier<'a> {
    labels: &'a [Vec<usize>],
    n_labels: usize,
    n_folds: usize,
    counts: Vec<Vec<usize>>,
    share: Vec<f64>,
}

impl Stratifier<'_> {
    fn cell_cost(&self, count: usize, label: usize) -> (f64, f64) {
        let dev = count as f64 - self.share[label];
        ((dev.abs() - 1.0).max(0.0), dev * dev)
    }

    /// Change in (excess, squared deviation) if examples `i` (fold `a`) and
    /// `j` (fold `b`) trade places.
    fn swap_delta(&self, i: usize, a: usize, j: usize, b: usize) -> (f64, f64) {
        let (li, lj) = (&self.labels[i], &self.labels[j]);
        let mut delta = (0.0, 0.0);
        for &l in li.iter().filter(|l| !lj.contains(l)) {
            for (fold, step) in [(a, -1isize), (b, 1)] {
                let before = self.cell_cost(self.counts[fold][l], l);
                let after = self.cell_cost((self.counts[fold][l] as isize + step) as usize, l);
                delta.0 += after.0 - before.0;
                delta.1 += after.1 - before.1;
            }
        }
        for &l in lj.iter().filter(|l| !li.contains(l)) {
            for (fold, step) in [(a, 1isize), (b, -1)] {
                let before = self.cell_cost(self.counts[fold][l], l);
                let after = self.cell_cost((self.counts[fold][l] as isize + step) as usize, l);
                delta.0 += after.0 - before.0;
                delta.1 += after.1 - before.1;
            }
        }
        delta
    }

    fn gaps(&self) -> Vec<StratificationGap> {
        let mut gaps = Vec::new();
        for f in 0..self.n_folds {
            for l in 0..self.n_labels {
                let count = self.counts[f][l];
                if (count as f64 - self.share[l]).abs() > 1.0 + 1e-9 {
                    gaps.push(StratificationGap { fold: f, label: l, count, share: self.share[l] });
                }
            }
        }
        gaps
    }
}

/// Iterative stratification of a multi-label dataset into `n_folds` folds.
///
/// `labels[i]` lists the label ids (`< n_labels`) of example `i`. The rarest
/// remaining label is placed first, each of its examples going to the fold
/// with the greatest remaining demand for it (then most remaining room, then
/// lowest id); unlabeled examples fill the remaining room. Cells still more
/// than one away from their proportional share are then repaired by
/// size-preserving swaps, and whatever cannot be fixed is listed in `gaps`.
pub fn stratified_kfold(
    labels: &[Vec<usize>],
    n_labels: usize,
    n_folds: usize,
    seed: u64,
) -> Result<FoldPlan, EvalError> {
    if n_folds < 2 {
        return Err(EvalError::InvalidFoldCount(n_folds));
    }
    let n = labels.len();
    if n < n_folds {
        return Err(EvalError::TooFewExamples { examples: n, folds: n_folds });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut label_totals = vec![0usize; n_labels];
    for ls in labels {
        for &l in ls {
            label_totals[l] += 1;
        }
    }
    let k = n_folds as f64;
    let mut capacity: Vec<f64> = (0..n_folds)
        .map(|f| (n / n_folds + usize::from(f < n % n_folds)) as f64)
        .collect();
    let mut demand: Vec<Vec<f64>> = vec![label_totals.iter().map(|&c| c as f64 / k).collect(); n_folds];
    let mut assignment = vec![usize::MAX; n];
    let mut remaining = label_totals.clone();

    while let Some(label) = (0..n_labels)
        .filter(|&l| remaining[l] > 0)
        .min_by_key(|&l| (remaining[l], l))
    {
        for &i in &order {
            if assignment[i] != usize::MAX || !labels[i].contains(&label) {
                continue;
            }
            let fold = (0..n_folds)
                .max_by(|&a, &b| {
                    demand[a][label]
                        .total_cmp(&demand[b][label])
                        .then(capacity[a].total_cmp(&capacity[b]))
                        .then(b.cmp(&a))
                })
                .expect("at least two folds");
            assignment[i] = fold;
            capacity[fold] -= 1.0;
            for &l in &labels[i] {
                demand[fold][l] -= 1.0;
                remaining[l] -= 1;
            }
        }
    }
    for &i in &order {
        if assignment[i] == usize::MAX {
            let fold = (0..n_folds)
                .max_by(|&a, &b| capacity[a].total_cmp(&capacity[b]).then(b.cmp(&a)))
                .expect("at least two folds");
            assignment[i] = fold;
            capacity[fold] -= 1.0;
        }
    }

    let mut counts = vec![vec![0usize; n_labels]; n_folds];
    for (i, ls) in labels.iter().enumerate() {
        for &l in ls {
            counts[assignment[i]][l] += 1;
        }
    }
    let mut strat = Stratifier {
        labels,
        n_labels,
        n_folds,
        counts,
        share: label_totals.iter().map(|&c| c as f64 / k).collect(),
    };
    repair(&mut strat, &mut assignment, &order);
    let gaps = strat.gaps();

    Ok(FoldPlan { n_folds, assignment, seed, gaps })
}

/// First-improvement swap search over examples in folds that hold an
/// out-of-band cell. Each accepted swap strictly lowers (excess, squared
/// deviation), so the loop terminates.
fn repair(strat: &mut Stratifier, assignment: &mut [usize], order: &[usize]) {
    const EPS: f64 = 1e-9;
    let max_rounds = 20 * order.len().max(1);
    for _ in 0..max_rounds {
        let bad_folds: BTreeSet<usize> = strat.gaps().iter().map(|g| g.fold).collect();
        if bad_folds.is_empty() {
            return;
        }
        let mut applied = false;
        'search: for &i in order {
            let a = assignment[i];
            if !bad_folds.contains(&a) {
                continue;
            }
            for &j in order {
                let b = assignment[j];
                if a == b || strat.labels[i] == strat.labels[j] {
                    continue;
                }
                let (d_excess, d_sq) = strat.swap_delta(i, a, j, b);
                if d_excess < -EPS || (d_excess.abs() <= EPS && d_sq < -EPS) {
                    for &l in &strat.labels[i] {
                        strat.counts[a][l] -= 1;
                        strat.counts[b][l] += 1;
                    }
                    for &l in &strat.labels[j] {
                        strat.counts[b][l] -= 1;
                        strat.counts[a][l] += 1;
                    }
                    assignment[i] = b;
                    assignment[j] = a;
                    applied = true;
                    break 'search;
                }
            }
        }
        if !applied {
            return;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub support: f64,
}

impl MetricsRow {
    pub fn from_counts(label: impl Into<String>, c: ConfusionCounts) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        MetricsRow {
            label: label.into(),
            precision,
            recall,
            f_measure: harmonic_mean(precision, recall),
            support: (c.tp + c.fn_) as f64,
        }
    }
}

/// `2pr / (p + r)`, or 0 when both are 0.
pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn confusion_counts(
    gold: &[BTreeSet<SpeechActLabel>],
    predicted: &[BTreeSet<SpeechActLabel>],
    label: &SpeechActLabel,
) -> Result<ConfusionCounts, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(gold.len(), predicted.len()));
    }
    let mut c = ConfusionCounts::default();
    for (g, p) in gold.iter().zip(predicted) {
        match (g.contains(label), p.contains(label)) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c)
}

/// Precision, recall, f-measure and support of each label within one fold.
pub fn per_label_metrics(
    gold: &[BTreeSet<SpeechActLabel>],
    predicted: &[BTreeSet<SpeechActLabel>],
    labels: &[SpeechActLabel],
) -> Result<Vec<MetricsRow>, EvalError> {
    labels
        .iter()
        .map(|l| Ok(MetricsRow::from_counts(l.as_str(), confusion_counts(gold, predicted, l)?)))
        .collect()
}

/// Unweighted mean of each label's per-fold rows.
pub fn average_rows_across_folds(folds: &[Vec<MetricsRow>]) -> Result<Vec<MetricsRow>, EvalError> {
    let first = folds.first().ok_or(EvalError::MissingFoldRows)?;
    if first.is_empty() {
        return Err(EvalError::MissingFoldRows);
    }
    for fold in folds {
        if fold.len() != first.len() || fold.iter().zip(first).any(|(a, b)| a.label != b.label) {
            return Err(EvalError::MissingFoldRows);
        }
    }
    let k = folds.len() as f64;
    Ok((0..first.len())
        .map(|i| {
            let mean = |get: fn(&MetricsRow) -> f64| folds.iter().map(|f| get(&f[i])).sum::<f64>() / k;
            MetricsRow {
                label: first[i].label.clone(),
                precision: mean(|r| r.precision),
                recall: mean(|r| r.recall),
                f_measure: mean(|r| r.f_measure),
                support: mean(|r| r.support),
            }
        })
        .collect())
}

pub const AVERAGE_LABEL: &str = "avg/total";

/// Support-weighted precision, recall and f-measure; the support column is
/// the plain mean of the row supports.
pub fn weighted_average(rows: &[MetricsRow]) -> Result<MetricsRow, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::MissingFoldRows);
    }
    let total: f64 = rows.iter().map(|r| r.support).sum();
    if total <= 0.0 {
        return Err(EvalError::ZeroSupport);
    }
    let weighted = |get: fn(&MetricsRow) -> f64| rows.iter().map(|r| get(r) * r.support).sum::<f64>() / total;
    Ok(MetricsRow {
        label: AVERAGE_LABEL.to_string(),
        precision: weighted(|r| r.precision),
        recall: weighted(|r| r.recall),
        f_measure: weighted(|r| r.f_measure),
        support: total / rows.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub average_row: MetricsRow,
}

impl MetricsReport {
    pub fn from_rows(rows: Vec<MetricsRow>) -> Result<Self, EvalError> {
        let average_row = weighted_average(&rows)?;
        Ok(MetricsReport { rows, average_row })
    }

    /// Fixed-width table, two decimals.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain([AVERAGE_LABEL.len(), 5])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>6}  {:>9}  {:>7}",
            "label", "precision", "recall", "f-measure", "support"
        );
        let row = |out: &mut String, r: &MetricsRow| {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.2}  {:>6.2}  {:>9.2}  {:>7.2}",
                r.label, r.precision, r.recall, r.f_measure, r.support
            );
        };
        for r in &self.rows {
            row(&mut out, r);
        }
        let _ = writeln!(out, "{}", "-".repeat(width + 41));
        row(&mut out, &self.average_row);
        out
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

/// Nested hyperparameter search run inside each outer training fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub grid: Vec<Hyperparams>,
    pub inner_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub train: TrainConfig,
    pub n_folds: usize,
    pub tuning: Option<Tuning>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { train: TrainConfig::default(), n_folds: 5, tuning: None }
    }
}

/// What one fold saw and produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub vocabulary: Vocabulary,
    /// Origin of every row that was scored; always `Real`.
    pub test_origins: Vec<Origin>,
    pub rows: Vec<MetricsRow>,
    pub training: Vec<LabelTraining>,
    pub skipped: Vec<SkippedLabel>,
    pub hyperparams: Hyperparams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub plan: FoldPlan,
    pub folds: Vec<FoldOutcome>,
    pub report: MetricsReport,
}

/// Fits the featurizer and the model on `train` only and scores `test`.
///
/// With `tuning` set, hyperparameters are first chosen by inner
/// cross-validation over the training indices alone.
pub fn run_fold(
    dataset: &Dataset,
    fold: usize,
    train: Vec<usize>,
    test: Vec<usize>,
    config: &TrainConfig,
    tuning: Option<&Tuning>,
) -> Result<FoldOutcome, EvalError> {
    let tuned;
    let config = match tuning {
        None => config,
        Some(t) => {
            let inner = dataset.select(&train);
            let outcome = tune(&inner, &t.grid, t.inner_folds, config, config.seed).map_err(|e| match e {
                TuneError::Eval(e) => e,
                other => EvalError::Tuning(other.to_string()),
            })?;
            tuned = TrainConfig { hyperparams: outcome.best, ..config.clone() };
            &tuned
        }
    };
    let train_examples = dataset.subset(&train);
    let featurizer = Featurizer::fit(train_examples.iter().map(|e| (e.text.as_str(), e.shallow)))?;
    let vectors: Vec<FeatureVector> = train_examples
        .iter()
        .map(|e| featurizer.vectorize(&e.text, e.shallow))
        .collect();
    let label_sets: Vec<_> = train_examples.iter().map(|e| e.labels.clone()).collect();
    let vocabulary = featurizer.vocabulary.clone();
    let model = fit_multilabel(featurizer, &vectors, &label_sets, config)?;

    let mut gold = Vec::with_capacity(test.len());
    let mut predicted = Vec::with_capacity(test.len());
    let mut test_origins = Vec::with_capacity(test.len());
    for &i in &test {
        let e = &dataset.examples[i];
        let row = DenseExample::from_vector(&model.featurizer.vectorize(&e.text, e.shallow));
        test_origins.push(row.origin);
        predicted.push(model.predict_example(&row, false)?.labels);
        gold.push(e.labels.clone());
    }
    let rows = per_label_metrics(&gold, &predicted, config.catalog.labels())?;

    Ok(FoldOutcome {
        fold,
        train,
        test,
        vocabulary,
        test_origins,
        rows,
        training: model.training,
        skipped: model.skipped,
        hyperparams: config.hyperparams,
    })
}

/// Stratified k-fold evaluation. Folds run on scoped threads and are merged by fold id.
///
/// Test rows are scored by plain thresholding; the low-confidence fallback is
/// a serving behaviour and plays no part here.
pub fn cross_validate(dataset: &Dataset, config: &CvConfig, seed: u64) -> Result<CvOutcome, EvalError> {
    let plan = stratified_kfold(
        &dataset.label_indices(),
        dataset.catalog.len(),
        config.n_folds,
        seed,
    )?;
    let results: Vec<Result<FoldOutcome, EvalError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..plan.n_folds)
            .map(|fold| {
                let (train, test) = (plan.train_indices(fold), plan.test_indices(fold));
                scope.spawn(move || run_fold(dataset, fold, train, test, &config.train, config.tuning.as_ref()))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fold thread panicked")).collect()
    });
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let per_fold: Vec<Vec<MetricsRow>> = folds.iter().map(|f| f.rows.clone()).collect();
    let report = MetricsReport::from_rows(average_rows_across_folds(&per_fold)?)?;
    Ok(CvOutcome { plan, folds, report })
}

/// Means and sample variances with summation in sorted order, so the result
/// does not depend on the order examples arrive in.
fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateSide;

/// Fisher score of one feature column against a binary membership, or
/// `Err(DegenerateSide)` when either side has fewer than two examples.
pub fn try_fisher_score(values: &[f64], membership: &[bool]) -> Result<f64, DegenerateSide> {
    let mut pos: Vec<f64> = values.iter().zip(membership).filter(|(_, m)| **m).map(|(v, _)| *v).collect();
    let mut neg: Vec<f64> = values.iter().zip(membership).filter(|(_, m)| !**m).map(|(v, _)| *v).collect();
    let (np, nn) = (pos.len(), neg.len());
    if np < 2 || nn < 2 {
        return Err(DegenerateSide);
    }
    let mut all: Vec<f64> = values[..membership.len().min(values.len())].to_vec();
    let mean_all = sorted_sum(&mut all) / all.len() as f64;
    let mean_pos = sorted_sum(&mut pos) / np as f64;
    let mean_neg = sorted_sum(&mut neg) / nn as f64;
    let mut sq_pos: Vec<f64> = pos.iter().map(|v| (v - mean_pos) * (v - mean_pos)).collect();
    let mut sq_neg: Vec<f64> = neg.iter().map(|v| (v - mean_neg) * (v - mean_neg)).collect();
    let numerator = (mean_pos - mean_all).powi(2) + (mean_neg - mean_all).powi(2);
    let denominator = sorted_sum(&mut sq_pos) / (np - 1) as f64 + sorted_sum(&mut sq_neg) / (nn - 1) as f64;
    Ok(if denominator == 0.0 {
        if numerator == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        numerator / denominator
    })
}

/// Fisher score of a feature column; a degenerate side scores 0 with a warning.
pub fn fisher_score(values: &[f64], membership: &[bool]) -> f64 {
    try_fisher_score(values, membership).unwrap_or_else(|_| {
        log::warn!("fisher score undefined: a side has fewer than two examples; reporting 0");
        0.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    /// `null` in JSON output when infinite (perfectly separating, zero variance).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub label: String,
    /// Most informative first.
    pub ranked: Vec<RankedFeature>,
}

/// Ranks every feature column by Fisher score against `label` membership.
///
/// Word columns are 0/1 presence, shallow columns use their scaled values.
/// Ties go to the lexicographically smaller name.
pub fn rank_features(
    vectors: &[FeatureVector],
    vocabulary: &Vocabulary,
    label_sets: &[BTreeSet<SpeechActLabel>],
    label: &SpeechActLabel,
    top_n: usize,
) -> Result<FeatureRanking, EvalError> {
    if vectors.len() != label_sets.len() {
        return Err(EvalError::LengthMismatch(label_sets.len(), vectors.len()));
    }
    let membership: Vec<bool> = label_sets.iter().map(|s| s.contains(label)).collect();
    if !membership.iter().any(|&m| m) {
        return Err(EvalError::NoPositives(label.clone()));
    }
    let n_pos = membership.iter().filter(|&&m| m).count();
    if n_pos < 2 || membership.len() - n_pos < 2 {
        log::warn!("label {label}: fewer than two examples on one side; all feature scores reported as 0");
    }

    let v = vocabulary.len();
    let mut column = vec![0.0; vectors.len()];
    let mut ranked = Vec::with_capacity(vocabulary.feature_width());
    for j in 0..vocabulary.feature_width() {
        for (slot, fv) in column.iter_mut().zip(vectors) {
            *slot = if j < v {
                if fv.word_indicators.binary_search(&j).is_ok() { 1.0 } else { 0.0 }
            } else {
                fv.shallow_scaled[j - v]
            };
        }
        let score = try_fisher_score(&column, &membership).unwrap_or(0.0);
        ranked.push(RankedFeature {
            name: vocabulary.feature_name(j).to_string(),
            score,
        });
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name)));
    ranked.truncate(top_n);
    Ok(FeatureRanking {
        label: label.to_string(),
        ranked,
    })
}

/// Fits a featurizer on the whole dataset and ranks features for `label`.
pub fn rank_dataset_features(dataset: &Dataset, label: &SpeechActLabel, top_n: usize) -> Result<FeatureRanking, EvalError> {
    if !dataset.catalog.contains(label) {
        return Err(EvalError::UnknownLabel(label.clone()));
    }
    let featurizer = Featurizer::fit(dataset.examples.iter().map(|e| (e.text.as_str(), e.shallow)))?;
    let vectors: Vec<FeatureVector> = dataset
        .examples
        .iter()
        .map(|e| featurizer.vectorize(&e.text, e.shallow))
        .collect();
    rank_features(&vectors, &featurizer.vocabulary, &dataset.label_sets(), label, top_n)
}

/// Rankings as a table: one row per label, columns 1..N, or N..1 when `mirrored`.
pub fn rankings_table(rankings: &[FeatureRanking], mirrored: bool) -> String {
    let n = rankings.iter().map(|r| r.ranked.len()).max().unwrap_or(0);
    let label_width = rankings.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let cell = rankings
        .iter()
        .flat_map(|r| r.ranked.iter().map(|f| f.name.len()))
        .max()
        .unwrap_or(2)
        .max(2);
    let positions: Vec<usize> = if mirrored { (1..=n).rev().collect() } else { (1..=n).collect() };
    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "label");
    for p in &positions {
        let _ = write!(out, "  {:<cell$}", p);
    }
    out.push('\n');
    for r in rankings {
        let _ = write!(out, "{:<label_width$}", r.label);
        for p in &positions {
            let name = r.ranked.get(p - 1).map(|f| f.name.as_str()).unwrap_or("");
            let _ = write!(out, "  {:<cell$}", name);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    out
}
