//! Binary bag-of-words plus three shallow turn features.
//!
//! A turn becomes a set of vocabulary columns (word presence) followed by three
//! dense columns: `slen` (word count relative to earlier turns), `wc` (raw word
//! count) and `ppau` (seconds since the previous turn). Shallow values are
//! z-scored with statistics taken from training turns only.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Conversation, Speaker};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("turn index {index} out of range for conversation {conversation_id} with {len} turns")]
    TurnOutOfRange {
        conversation_id: String,
        index: usize,
        len: usize,
    },
    #[error("cannot fit scaling on an empty training set")]
    EmptyTrainingSet,
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
}

/// Number of shallow columns appended after the word columns.
pub const SHALLOW_WIDTH: usize = 3;

/// Column names used for the shallow features in rankings and reports.
pub const SHALLOW_NAMES: [&str; SHALLOW_WIDTH] = ["slen_sf", "wc_sf", "ppau_sf"];

/// Lowercases `text` and splits it on every character outside `[a-z0-9]`.
///
/// No stemming and no stop-word removal; repeated tokens are kept in order.
pub fn tokenize(text: &str) -> Vec<String> {
    let folded = text.to_lowercase();
    folded
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Token to column map. Columns are dense, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// One column per distinct token across `texts`.
    pub fn build<'a, I>(texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut vocab = Vocabulary::default();
        for text in texts {
            for token in tokenize(text) {
                if !vocab.index.contains_key(&token) {
                    vocab.index.insert(token.clone(), vocab.tokens.len());
                    vocab.tokens.push(token);
                }
            }
        }
        vocab
    }

    /// Rebuilds a vocabulary from its column-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, FeatureError> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || !t.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()) {
                return Err(FeatureError::InvalidVocabulary(format!("bad token {t:?}")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(FeatureError::InvalidVocabulary(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Width of a full feature row: word columns plus shallow columns.
    pub fn feature_width(&self) -> usize {
        self.tokens.len() + SHALLOW_WIDTH
    }

    /// Name of a feature column; shallow columns use the `_sf` names.
    pub fn feature_name(&self, column: usize) -> &str {
        if column < self.tokens.len() {
            &self.tokens[column]
        } else {
            SHALLOW_NAMES[column - self.tokens.len()]
        }
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.tokens.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(deserializer)?;
        Vocabulary::from_tokens(tokens).map_err(serde::de::Error::custom)
    }
}

/// Which earlier turns `slen` normalizes against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlenScope {
    #[default]
    SameSpeaker,
    AllSpeakers,
}

impl std::str::FromStr for SlenScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "same_speaker" => Ok(SlenScope::SameSpeaker),
            "all_speakers" => Ok(SlenScope::AllSpeakers),
            _ => Err(format!("unknown slen scope {s:?} (expected same_speaker or all_speakers)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShallowFeatures {
    pub slen: f64,
    pub wc: usize,
    pub ppau: f64,
}

impl ShallowFeatures {
    pub fn as_array(&self) -> [f64; SHALLOW_WIDTH] {
        [self.slen, self.wc as f64, self.ppau]
    }
}

/// What a later turn needs to know about an earlier one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub speaker: Speaker,
    pub timestamp_s: f64,
    pub wc: usize,
}

/// Shallow features of a turn given only the turns before it.
///
/// Batch featurization and the streaming session both go through here, so the
/// two paths agree bit for bit.
pub fn shallow_from_history(
    history: &[HistoryEntry],
    speaker: Speaker,
    timestamp_s: f64,
    wc: usize,
    scope: SlenScope,
) -> ShallowFeatures {
    let ppau = history
        .last()
        .map(|prev| (timestamp_s - prev.timestamp_s).max(0.0))
        .unwrap_or(0.0);

    let (sum, count) = history
        .iter()
        .filter(|h| scope == SlenScope::AllSpeakers || h.speaker == speaker)
        .fold((0usize, 0usize), |(s, n), h| (s + h.wc, n + 1));
    let slen = if count == 0 {
        1.0
    } else {
        let mean = sum as f64 / count as f64;
        if mean == 0.0 {
            wc as f64
        } else {
            wc as f64 / mean
        }
    };

    ShallowFeatures { slen, wc, ppau }
}

/// Shallow features of `conversation.turns[turn_index]`, looking only backwards.
pub fn shallow_features(
    conversation: &Conversation,
    turn_index: usize,
    scope: SlenScope,
) -> Result<ShallowFeatures, FeatureError> {
    let turn = conversation
        .turns
        .get(turn_index)
        .ok_or_else(|| FeatureError::TurnOutOfRange {
            conversation_id: conversation.conversation_id.clone(),
            index: turn_index,
            len: conversation.turns.len(),
        })?;
    let history: Vec<HistoryEntry> = conversation.turns[..turn_index]
        .iter()
        .map(|t| HistoryEntry {
            speaker: t.speaker,
            timestamp_s: t.timestamp_s,
            wc: tokenize(&t.text).len(),
        })
        .collect();
    Ok(shallow_from_history(
        &history,
        turn.speaker,
        turn.timestamp_s,
        tokenize(&turn.text).len(),
        scope,
    ))
}

/// Training-set mean and population standard deviation of each shallow feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub mean: [f64; SHALLOW_WIDTH],
    pub std: [f64; SHALLOW_WIDTH],
}

impl ScalingParams {
    /// z-scores `shallow`; a zero-variance feature maps to 0.
    pub fn scale(&self, shallow: &ShallowFeatures) -> [f64; SHALLOW_WIDTH] {
        let raw = shallow.as_array();
        let mut out = [0.0; SHALLOW_WIDTH];
        for j in 0..SHALLOW_WIDTH {
            out[j] = if self.std[j] > 0.0 {
                (raw[j] - self.mean[j]) / self.std[j]
            } else {
                0.0
            };
        }
        out
    }
}

pub fn fit_scaling(training: &[ShallowFeatures]) -> Result<ScalingParams, FeatureError> {
    if training.is_empty() {
        return Err(FeatureError::EmptyTrainingSet);
    }
    let n = training.len() as f64;
    let mut mean = [0.0; SHALLOW_WIDTH];
    for s in training {
        for (m, v) in mean.iter_mut().zip(s.as_array()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut std = [0.0; SHALLOW_WIDTH];
    for s in training {
        for j in 0..SHALLOW_WIDTH {
            let d = s.as_array()[j] - mean[j];
            std[j] += d * d;
        }
    }
    std.iter_mut().for_each(|v| *v = (*v / n).sqrt());
    Ok(ScalingParams { mean, std })
}

/// A featurized turn: sorted word columns present plus shallow values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub word_indicators: Vec<usize>,
    pub shallow: ShallowFeatures,
    pub shallow_scaled: [f64; SHALLOW_WIDTH],
    /// Number of word columns in the vocabulary this vector was built against.
    pub vocab_size: usize,
}

impl FeatureVector {
    pub fn width(&self) -> usize {
        self.vocab_size + SHALLOW_WIDTH
    }

    /// Dense row: word indicators (0/1) then the scaled shallow values.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut row = vec![0.0; self.width()];
        for &i in &self.word_indicators {
            row[i] = 1.0;
        }
        row[self.vocab_size..].copy_from_slice(&self.shallow_scaled);
        row
    }
}

/// Builds a feature vector from a turn's text and its already-computed shallow features.
pub fn vectorize_text(
    text: &str,
    shallow: ShallowFeatures,
    vocabulary: &Vocabulary,
    scaling: &ScalingParams,
) -> FeatureVector {
    let mut word_indicators: Vec<usize> = tokenize(text)
        .iter()
        .filter_map(|t| vocabulary.get(t))
        .collect();
    word_indicators.sort_unstable();
    word_indicators.dedup();
    FeatureVector {
        word_indicators,
        shallow,
        shallow_scaled: scaling.scale(&shallow),
        vocab_size: vocabulary.len(),
    }
}

pub fn vectorize(
    conversation: &Conversation,
    turn_index: usize,
    vocabulary: &Vocabulary,
    scaling: &ScalingParams,
    scope: SlenScope,
) -> Result<FeatureVector, FeatureError> {
    let shallow = shallow_features(conversation, turn_index, scope)?;
    Ok(vectorize_text(
        &conversation.turns[turn_index].text,
        shallow,
        vocabulary,
        scaling,
    ))
}

/// Vocabulary and scaling fit together on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub vocabulary: Vocabulary,
    pub scaling: ScalingParams,
}

impl Featurizer {
    /// Fits on training `(text, shallow)` pairs only.
    pub fn fit<'a, I>(training: I) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = (&'a str, ShallowFeatures)>,
    {
        let (texts, shallow): (Vec<&str>, Vec<ShallowFeatures>) = training.into_iter().unzip();
        Ok(Featurizer {
            vocabulary: Vocabulary::build(texts),
            scaling: fit_scaling(&shallow)?,
        })
    }

    pub fn vectorize(&self, text: &str, shallow: ShallowFeatures) -> FeatureVector {
        vectorize_text(text, shallow, &self.vocabulary, &self.scaling)
    }

    pub fn feature_width(&self) -> usize {
        self.vocabulary.feature_width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Turn;
    use proptest::prelude::*;

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("I am unsure"), ["i", "am", "unsure"]);
        assert_eq!(
            tokenize("What methods are in eventyhandler(?)"),
            ["what", "methods", "are", "in", "eventyhandler"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("line 42, x2 -- ok!"), ["line", "42", "x2", "ok"]);
        assert_eq!(tokenize("ok ok OK"), ["ok", "ok", "ok"]);
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let v = Vocabulary::build(["a b", "b c"]);
        assert_eq!(v.tokens(), ["a", "b", "c"]);
        assert_eq!(v.get("c"), Some(2));
        assert!(Vocabulary::build(Vec::<&str>::new()).is_empty());
        let v = Vocabulary::build(["Fix fix FIX"]);
        assert_eq!(v.tokens(), ["fix"]);
        assert_eq!(v.feature_name(1), "slen_sf");
        assert_eq!(v.feature_name(3), "ppau_sf");
    }

    #[test]
    fn vocabulary_rejects_bad_tokens() {
        assert!(Vocabulary::from_tokens(vec!["a".into(), "a".into()]).is_err());
        assert!(Vocabulary::from_tokens(vec!["A".into()]).is_err());
        assert!(Vocabulary::from_tokens(vec!["".into()]).is_err());
    }

    fn conv(turns: &[(Speaker, f64, &str)]) -> Conversation {
        Conversation::new(
            "c",
            turns
                .iter()
                .enumerate()
                .map(|(i, (s, ts, text))| Turn::new("c", i, *s, *ts, *text))
                .collect(),
        )
    }

    #[test]
    fn pause_is_gap_to_previous_turn_of_any_speaker() {
        let c = conv(&[(Speaker::Assistant, 10.0, "hello there"), (Speaker::Participant, 14.5, "hi")]);
        assert_eq!(shallow_features(&c, 1, SlenScope::SameSpeaker).unwrap().ppau, 4.5);
    }

    #[test]
    fn first_turn_boundary() {
        let c = conv(&[(Speaker::Participant, 3.0, "one two three four five six")]);
        let s = shallow_features(&c, 0, SlenScope::SameSpeaker).unwrap();
        assert_eq!(s, ShallowFeatures { slen: 1.0, wc: 6, ppau: 0.0 });
        assert!(shallow_features(&c, 1, SlenScope::SameSpeaker).is_err());
    }

    #[test]
    fn slen_against_same_speaker_mean() {
        let c = conv(&[
            (Speaker::Participant, 0.0, "a a a a"),
            (Speaker::Assistant, 1.0, "b b b b b b b b b b b b b b b b b b b b"),
            (Speaker::Participant, 2.0, "a a a a a a"),
            (Speaker::Participant, 3.0, "a a a a a a a a a a"),
        ]);
        let s = shallow_features(&c, 3, SlenScope::SameSpeaker).unwrap();
        assert_eq!(s.slen, 2.0);
        assert_eq!(s.wc, 10);
        // all speakers: mean of [4, 20, 6] = 10
        assert_eq!(shallow_features(&c, 3, SlenScope::AllSpeakers).unwrap().slen, 1.0);
    }

    #[test]
    fn slen_with_zero_mean_history() {
        let history = [HistoryEntry { speaker: Speaker::Participant, timestamp_s: 0.0, wc: 0 }];
        let s = shallow_from_history(&history, Speaker::Participant, 1.0, 3, SlenScope::SameSpeaker);
        assert_eq!(s.slen, 3.0);
    }

    #[test]
    fn vectorize_uses_presence_and_ignores_unknown_tokens() {
        let vocab = Vocabulary::build(["a b c"]);
        let scaling = ScalingParams { mean: [0.0; 3], std: [1.0; 3] };
        let shallow = ShallowFeatures { slen: 1.0, wc: 3, ppau: 0.0 };
        let fv = vectorize_text("b a b", shallow, &vocab, &scaling);
        assert_eq!(fv.word_indicators, [0, 1]);
        let fv = vectorize_text("zzz", ShallowFeatures { slen: 1.0, wc: 1, ppau: 2.0 }, &vocab, &scaling);
        assert!(fv.word_indicators.is_empty());
        assert_eq!(fv.shallow_scaled, [1.0, 1.0, 2.0]);
        assert_eq!(fv.to_dense(), [0.0, 0.0, 0.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn z_score_arithmetic() {
        let scaling = ScalingParams { mean: [0.0, 5.0, 0.0], std: [0.0, 2.5, 1.0] };
        let scaled = scaling.scale(&ShallowFeatures { slen: 7.0, wc: 10, ppau: 0.0 });
        assert_eq!(scaled, [0.0, 2.0, 0.0]);
    }

    #[test]
    fn fit_scaling_examples() {
        let f = |wc| ShallowFeatures { slen: 1.0, wc, ppau: 0.0 };
        let p = fit_scaling(&[f(2), f(4)]).unwrap();
        assert_eq!((p.mean[1], p.std[1]), (3.0, 1.0));
        let p = fit_scaling(&[f(5), f(5), f(5)]).unwrap();
        assert_eq!(p.std[1], 0.0);
        assert_eq!(p.scale(&f(9))[1], 0.0);
        assert_eq!(fit_scaling(&[f(7)]).unwrap().std, [0.0; 3]);
        assert!(matches!(fit_scaling(&[]), Err(FeatureError::EmptyTrainingSet)));
    }

    proptest! {
        #[test]
        fn tokens_are_lowercase_alphanumeric(text in "\\PC{0,40}") {
            for t in tokenize(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(t.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()));
            }
        }

        #[test]
        fn shallow_features_ignore_later_turns(
            wcs in proptest::collection::vec(0usize..12, 2..10),
            gaps in proptest::collection::vec(0.0f64..30.0, 10),
            participant in proptest::collection::vec(any::<bool>(), 10),
            cut in 0usize..10,
            extra_words in 1usize..5,
        ) {
            let mut ts = 0.0;
            let turns: Vec<Turn> = wcs.iter().enumerate().map(|(i, &wc)| {
                ts += gaps[i];
                let speaker = if participant[i] { Speaker::Participant } else { Speaker::Assistant };
                Turn::new("c", i, speaker, ts, vec!["w"; wc.max(1)].join(" "))
            }).collect();
            let i = cut % turns.len();
            let original = Conversation::new("c", turns.clone());
            let before = shallow_features(&original, i, SlenScope::SameSpeaker).unwrap();
            let mut altered = turns;
            for t in altered.iter_mut().skip(i + 1) {
                t.text = vec!["z"; extra_words].join(" ");
                t.timestamp_s += 100.0;
            }
            let after = shallow_features(&Conversation::new("c", altered), i, SlenScope::SameSpeaker).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
