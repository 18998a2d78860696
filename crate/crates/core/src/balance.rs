//! SMOTE oversampling for one binary problem.
//!
//! The smaller side of a positive/negative split is grown with synthetic points
//! placed on segments between a minority example and one of its nearest
//! minority neighbours, until both sides have the same size. Run it on training
//! data only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::featurize::FeatureVector;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BalanceError {
    #[error("no candidates to search for neighbours")]
    NoCandidates,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("interpolation factor {0} outside [0, 1)")]
    BadFactor(f64),
    #[error("the {0} side of the binary problem is empty")]
    EmptySide(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Positive => "positive",
            Side::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Synthetic,
}

/// Dense feature row: word columns, then the scaled shallow columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseExample {
    pub values: Vec<f64>,
    pub origin: Origin,
}

impl DenseExample {
    pub fn real(values: Vec<f64>) -> Self {
        DenseExample {
            values,
            origin: Origin::Real,
        }
    }

    pub fn from_vector(fv: &FeatureVector) -> Self {
        DenseExample::real(fv.to_dense())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` candidates closest to `point` (Euclidean), nearest first.
///
/// Equal distances go to the lower index. With fewer than `k` candidates all
/// of them are returned.
pub fn nearest_neighbors<C: AsRef<[f64]>>(
    point: &[f64],
    candidates: &[C],
    k: usize,
) -> Result<Vec<usize>, BalanceError> {
    if k == 0 {
        return Err(BalanceError::ZeroK);
    }
    if candidates.is_empty() {
        return Err(BalanceError::NoCandidates);
    }
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        let c = c.as_ref();
        if c.len() != point.len() {
            return Err(BalanceError::LengthMismatch(point.len(), c.len()));
        }
        dist.push((squared_distance(point, c), i));
    }
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(dist.into_iter().take(k).map(|(_, i)| i).collect())
}

/// `x + r * (neighbor - x)`, tagged synthetic.
pub fn synthesize(x: &[f64], neighbor: &[f64], r: f64) -> Result<DenseExample, BalanceError> {
    if x.len() != neighbor.len() {
        return Err(BalanceError::LengthMismatch(x.len(), neighbor.len()));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(BalanceError::BadFactor(r));
    }
    Ok(DenseExample {
        values: x.iter().zip(neighbor).map(|(a, b)| a + r * (b - a)).collect(),
        origin: Origin::Synthetic,
    })
}

/// Record of how one synthetic point was made, for auditing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synthesis {
    pub base: usize,
    pub neighbor: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balanced {
    pub positives: Vec<DenseExample>,
    pub negatives: Vec<DenseExample>,
    /// One entry per synthetic point, indices into the original minority side.
    pub syntheses: Vec<Synthesis>,
    pub oversampled: Option<Side>,
}

/// Balances a binary training set with SMOTE.
///
/// The larger side comes back unchanged. Effective neighbour count is
/// `min(k, minority - 1)`; a single-example minority is duplicated.
pub fn smote_balance(
    positives: Vec<DenseExample>,
    negatives: Vec<DenseExample>,
    k: usize,
    seed: u64,
) -> Result<Balanced, BalanceError> {
    if k == 0 {
        return Err(BalanceError::ZeroK);
    }
    if positives.is_empty() {
        return Err(BalanceError::EmptySide(Side::Positive));
    }
    if negatives.is_empty() {
        return Err(BalanceError::EmptySide(Side::Negative));
    }
    if positives.len() == negatives.len() {
        return Ok(Balanced {
            positives,
            negatives,
            syntheses: Vec::new(),
            oversampled: None,
        });
    }

    let (mut minority, majority, side) = if positives.len() < negatives.len() {
        (positives, negatives, Side::Positive)
    } else {
        (negatives, positives, Side::Negative)
    };
    let width = minority[0].len();
    if let Some(bad) = minority.iter().chain(&majority).find(|e| e.len() != width) {
        return Err(BalanceError::LengthMismatch(width, bad.len()));
    }

    let m = minority.len();
    let needed = majority.len() - m;
    let effective_k = k.min(m - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut neighbor_cache: Vec<Option<Vec<usize>>> = vec![None; m];
    let mut syntheses = Vec::with_capacity(needed);

    for _ in 0..needed {
        let base = rng.gen_range(0..m);
        let synthesis = if effective_k == 0 {
            Synthesis { base, neighbor: base, r: 0.0 }
        } else {
            let neighbors = neighbor_cache[base].get_or_insert_with(|| {
                let others: Vec<&[f64]> = (0..m)
                    .filter(|&j| j != base)
                    .map(|j| minority[j].values.as_slice())
                    .collect();
                nearest_neighbors(&minority[base].values, &others, effective_k)
                    .expect("non-empty candidate set")
                    .into_iter()
                    .map(|j| if j >= base { j + 1 } else { j })
                    .collect()
            });
            let neighbor = neighbors[rng.gen_range(0..neighbors.len())];
            let r: f64 = rng.gen();
            Synthesis { base, neighbor, r }
        };
        syntheses.push(synthesis);
    }

    for s in &syntheses {
        let point = synthesize(&minority[s.base].values, &minority[s.neighbor].values, s.r)?;
        minority.push(point);
    }

    let (positives, negatives) = match side {
        Side::Positive => (minority, majority),
        Side::Negative => (majority, minority),
    };
    Ok(Balanced {
        positives,
        negatives,
        syntheses,
        oversampled: Some(side),
    })
}

/// Stable FNV-1a hash of a label name.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-label seed, independent of the order labels are processed in.
pub fn derive_seed(base_seed: u64, label: &str) -> u64 {
    base_seed ^ label_hash(label)
}
