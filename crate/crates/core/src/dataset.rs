//! Labeled modeling examples drawn from a parsed corpus.

use std::collections::BTreeSet;

use crate::corpus::{select_examples, Conversation, LabelCatalog, SpeechActLabel, TurnId};
use crate::featurize::{shallow_features, FeatureError, ShallowFeatures, SlenScope};

/// One participant turn ready for featurization.
///
/// `shallow` is computed from the turn's own conversation, which is fixed
/// before any train/test split, so it carries no information across folds.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: TurnId,
    pub text: String,
    /// Modeled labels only; excluded labels are dropped.
    pub labels: BTreeSet<SpeechActLabel>,
    pub shallow: ShallowFeatures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub catalog: LabelCatalog,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn from_conversations(
        conversations: &[Conversation],
        catalog: &LabelCatalog,
        scope: SlenScope,
    ) -> Result<Self, FeatureError> {
        let selected: BTreeSet<TurnId> = select_examples(conversations, catalog).into_iter().collect();
        let mut examples = Vec::with_capacity(selected.len());
        for conv in conversations {
            for (pos, turn) in conv.turns.iter().enumerate() {
                if !selected.contains(&turn.id()) {
                    continue;
                }
                examples.push(Example {
                    id: turn.id(),
                    text: turn.text.clone(),
                    labels: catalog.modeled(&turn.labels),
                    shallow: shallow_features(conv, pos, scope)?,
                });
            }
        }
        Ok(Dataset {
            catalog: catalog.clone(),
            examples,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Catalog positions of each example's labels.
    pub fn label_indices(&self) -> Vec<Vec<usize>> {
        self.examples
            .iter()
            .map(|e| e.labels.iter().filter_map(|l| self.catalog.position(l)).collect())
            .collect()
    }

    pub fn label_sets(&self) -> Vec<BTreeSet<SpeechActLabel>> {
        self.examples.iter().map(|e| e.labels.clone()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Vec<&Example> {
        indices.iter().map(|&i| &self.examples[i]).collect()
    }

    /// A new dataset holding only `indices`, e.g. one training fold.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            catalog: self.catalog.clone(),
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Speaker, Turn};

    #[test]
    fn keeps_labeled_participant_turns_with_context() {
        let catalog = LabelCatalog::default();
        let conv = Conversation::new(
            "c1",
            vec![
                Turn::new("c1", 0, Speaker::Participant, 0.0, "hi I am ready").with_labels(["introduction", "setup"]),
                Turn::new("c1", 1, Speaker::Assistant, 2.0, "hello").with_labels(["introduction"]),
                Turn::new("c1", 2, Speaker::Participant, 6.0, "ok").with_labels(["setup"]),
                Turn::new("c1", 3, Speaker::Participant, 7.5, "thanks a lot").with_labels(["confirmation"]),
            ],
        );
        let ds = Dataset::from_conversations(&[conv], &catalog, SlenScope::SameSpeaker).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.examples[0].labels.len(), 1);
        assert_eq!(ds.examples[1].id.turn_index, 3);
        assert_eq!(ds.examples[1].shallow.ppau, 1.5);
        // previous participant turns had 4 and 1 words
        assert_eq!(ds.examples[1].shallow.slen, 3.0 / 2.5);
        assert_eq!(ds.label_indices(), vec![vec![8], vec![4]]);
    }
}
