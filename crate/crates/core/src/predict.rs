//! Batch prediction over transcripts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierError, MultiLabelModel, Prediction};
use crate::corpus::{Conversation, Speaker};
use crate::featurize::{shallow_features, FeatureError};

/// The label decision for one participant turn, as written to output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub labels: Vec<String>,
    pub probabilities: BTreeMap<String, f64>,
    pub low_confidence: bool,
}

impl Classification {
    /// What non-participant turns get: nothing predicted.
    pub fn empty() -> Self {
        Classification {
            labels: Vec::new(),
            probabilities: BTreeMap::new(),
            low_confidence: false,
        }
    }
}

impl From<Prediction> for Classification {
    fn from(p: Prediction) -> Self {
        Classification {
            labels: p.labels.iter().map(|l| l.to_string()).collect(),
            probabilities: p.probabilities.iter().map(|(l, v)| (l.to_string(), *v)).collect(),
            low_confidence: p.low_confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub conversation_id: String,
    pub turn_index: usize,
    pub speaker: Speaker,
    #[serde(flatten)]
    pub classification: Classification,
}

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// One record per participant turn, each classified using only earlier turns.
///
/// Other speakers' turns produce no record but still count as context.
pub fn predict_conversations(
    model: &MultiLabelModel,
    conversations: &[Conversation],
    fallback: bool,
) -> Result<Vec<PredictionRecord>, PredictError> {
    let mut out = Vec::new();
    for conv in conversations {
        for (pos, turn) in conv.turns.iter().enumerate() {
            if turn.speaker != Speaker::Participant {
                continue;
            }
            let shallow = shallow_features(conv, pos, model.slen_scope)?;
            let fv = model.featurizer.vectorize(&turn.text, shallow);
            out.push(PredictionRecord {
                conversation_id: turn.conversation_id.clone(),
                turn_index: turn.turn_index,
                speaker: turn.speaker,
                classification: model.predict_labels(&fv, fallback)?.into(),
            });
        }
    }
    Ok(out)
}
