//! Grid search over logistic-regression hyperparameters by inner cross-validation.

use serde::Serialize;

use super::{Hyperparams, TrainConfig};
use crate::dataset::Dataset;
use crate::evaluate::{cross_validate, CvConfig, EvalError};

#[derive(Debug, thiserror::Error)]
pub enum TuneError {
    #[error("tuning grid is empty")]
    EmptyGrid,
    #[error("{examples} examples cannot form {folds} inner folds")]
    TooSmall { examples: usize, folds: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// C in {0.01, 0.1, 1, 10} x learning rate in {0.1, 0.5} x bias on/off.
pub fn default_grid() -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for c in [0.01, 0.1, 1.0, 10.0] {
        for learning_rate in [0.1, 0.5] {
            for fit_bias in [true, false] {
                grid.push(Hyperparams {
                    c,
                    learning_rate,
                    fit_bias,
                    ..Hyperparams::default()
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneOutcome {
    pub best: Hyperparams,
    /// Weighted f-measure of each grid point, in grid order. Empty when the
    /// grid had a single point and no search ran.
    pub scores: Vec<(Hyperparams, f64)>,
}

/// Picks the grid point with the best inner-CV weighted f-measure.
///
/// `training` must already exclude any evaluation data. Ties go to the
/// smaller C, then to the earlier grid point.
pub fn tune(
    training: &Dataset,
    grid: &[Hyperparams],
    inner_folds: usize,
    base: &TrainConfig,
    seed: u64,
) -> Result<TuneOutcome, TuneError> {
    match grid {
        [] => return Err(TuneError::EmptyGrid),
        [only] => {
            return Ok(TuneOutcome {
                best: *only,
                scores: Vec::new(),
            })
        }
        _ => {}
    }
    if training.len() < inner_folds {
        return Err(TuneError::TooSmall {
            examples: training.len(),
            folds: inner_folds,
        });
    }

    let mut scores = Vec::with_capacity(grid.len());
    for point in grid {
        let config = CvConfig {
            train: TrainConfig {
                hyperparams: *point,
                ..base.clone()
            },
            n_folds: inner_folds,
            tuning: None,
        };
        let outcome = cross_validate(training, &config, seed)?;
        scores.push((*point, outcome.report.average_row.f_measure));
    }

    let mut best = 0;
    for (i, (hp, score)) in scores.iter().enumerate().skip(1) {
        let (best_hp, best_score) = &scores[best];
        if *score > *best_score || (*score == *best_score && hp.c < best_hp.c) {
            best = i;
        }
    }
    Ok(TuneOutcome {
        best: scores[best].0,
        scores,
    })
}
