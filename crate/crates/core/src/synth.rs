//! Deterministic synthetic transcripts for desk-scale runs and tests.
//!
//! Every label owns a small keyword pool. A participant turn mixes shared
//! filler words with two keywords per label it carries; with probability
//! `signal` those keywords come from the label's own pool, otherwise from a
//! randomly chosen label's pool. At `signal = 1` labels are separable by
//! construction, at `signal = 0` the text says nothing about the labels.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balance::label_hash;
use crate::corpus::{Conversation, LabelCatalog, Speaker, SpeechActLabel, Turn, DEFAULT_LABELS};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("need at least two labels, found {0}")]
    TooFewLabels(usize),
    #[error("{name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("turns_per_label and turns_per_conversation must be positive")]
    ZeroSize,
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub labels: Vec<SpeechActLabel>,
    pub turns_per_label: usize,
    pub signal: f64,
    /// Chance that a turn carries a second label.
    pub multi_label_rate: f64,
    /// Participant turns per conversation; each is followed by an assistant reply.
    pub turns_per_conversation: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            labels: DEFAULT_LABELS[..6]
                .iter()
                .map(|l| SpeechActLabel::new(l).expect("default label"))
                .collect(),
            turns_per_label: 50,
            signal: 1.0,
            multi_label_rate: 0.1,
            turns_per_conversation: 20,
            seed: 42,
        }
    }
}

const FILLER: &[&str] = &[
    "the", "a", "to", "this", "it", "is", "in", "code", "so", "and", "i", "you", "that", "now", "just",
    "file", "line", "project", "on", "with", "we", "can", "there", "be", "for", "of", "then", "here",
];

const REPLIES: &[&str] = &[
    "let me look into that",
    "one moment please",
    "i can answer that",
    "here is what i found",
    "could you say more",
    "give me a second to check",
];

fn builtin_pool(label: &str) -> Option<&'static [&'static str]> {
    Some(match label {
        "apianswer" => &["keyframe", "keyvalue", "timeline", "constructor", "onfinished", "keyframes", "node", "values"],
        "apiquestion" => &["method", "class", "object", "pane", "does", "size", "parameter", "returns"],
        "clarificationanswer" => &["bottom", "clicking", "box", "appear", "green", "trigger", "supply", "compilation"],
        "clarificationquestion" => &["mean", "clarify", "understand", "prime", "bug", "supposed", "exactly", "repeat"],
        "confirmation" => &["ok", "thanks", "thank", "yes", "fixed", "works", "great", "perfect"],
        "documentationanswer" => &["stream", "audio", "input", "external", "joptionpane", "bytes", "reading", "marks"],
        "implementationquestion" => &["clicked", "button", "reason", "arraycopy", "why", "occurs", "eratosthenes", "gets"],
        "implementationstatement" => &["jcomponent", "timeout", "paint", "throwing", "waitfor", "drawing", "hidden", "signature"],
        "introduction" => &["ready", "study", "hi", "start", "hello", "am", "today", "programmers"],
        "statement" => &["think", "seems", "looks", "probably", "guess", "maybe", "believe", "noticed"],
        "systemquestion" => &["eclipse", "kill", "programs", "running", "permitted", "lang", "password", "terminal"],
        _ => return None,
    })
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    (0..3)
        .flat_map(|_| {
            [
                CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char,
                VOWELS[rng.gen_range(0..VOWELS.len())] as char,
            ]
        })
        .collect()
}

/// Keyword pools for `labels`, pairwise disjoint and disjoint from the filler words.
pub fn keyword_pools(labels: &[SpeechActLabel]) -> Vec<Vec<String>> {
    let mut taken: HashSet<String> = FILLER.iter().map(|s| s.to_string()).collect();
    for l in labels {
        if let Some(pool) = builtin_pool(l.as_str()) {
            taken.extend(pool.iter().map(|s| s.to_string()));
        }
    }
    labels
        .iter()
        .map(|l| match builtin_pool(l.as_str()) {
            Some(pool) => pool.iter().map(|s| s.to_string()).collect(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(label_hash(l.as_str()));
                let mut pool = Vec::with_capacity(8);
                while pool.len() < 8 {
                    let w = pseudo_word(&mut rng);
                    if taken.insert(w.clone()) {
                        pool.push(w);
                    }
                }
                pool
            }
        })
        .collect()
}

/// The catalog a generated corpus is labeled against.
pub fn synth_catalog(spec: &SynthSpec) -> LabelCatalog {
    LabelCatalog::new(spec.labels.clone(), [SpeechActLabel::new("setup").expect("valid")])
        .expect("validated spec labels")
}

fn check(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.labels.len() < 2 {
        return Err(SynthError::TooFewLabels(spec.labels.len()));
    }
    let mut seen = BTreeSet::new();
    for l in &spec.labels {
        if !seen.insert(l) || l.as_str() == "setup" {
            return Err(SynthError::DuplicateLabel(l.to_string()));
        }
    }
    for (name, value) in [("signal", spec.signal), ("multi_label_rate", spec.multi_label_rate)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(SynthError::OutOfRange { name, value });
        }
    }
    if spec.turns_per_label == 0 || spec.turns_per_conversation == 0 {
        return Err(SynthError::ZeroSize);
    }
    Ok(())
}

pub fn synth_corpus(spec: &SynthSpec) -> Result<Vec<Conversation>, SynthError> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pools = keyword_pools(&spec.labels);
    let n_labels = spec.labels.len();

    let mut primaries: Vec<usize> = (0..n_labels)
        .flat_map(|l| std::iter::repeat_n(l, spec.turns_per_label))
        .collect();
    primaries.shuffle(&mut rng);

    let mut conversations = Vec::new();
    for (c, chunk) in primaries.chunks(spec.turns_per_conversation).enumerate() {
        let id = format!("synth{c:03}");
        let mut turns = Vec::with_capacity(chunk.len() * 2);
        let mut clock = 0.0f64;
        for &primary in chunk {
            let mut label_ids = vec![primary];
            if rng.gen::<f64>() < spec.multi_label_rate {
                let other = (primary + rng.gen_range(1..n_labels)) % n_labels;
                label_ids.push(other);
            }

            let mut words: Vec<&str> = (0..rng.gen_range(3..9))
                .map(|_| *FILLER.choose(&mut rng).expect("filler"))
                .collect();
            for &l in &label_ids {
                let source = if rng.gen::<f64>() < spec.signal { l } else { rng.gen_range(0..n_labels) };
                words.extend(pools[source].choose_multiple(&mut rng, 2).map(String::as_str));
            }
            words.shuffle(&mut rng);

            clock += (rng.gen_range(20..300) as f64) / 10.0;
            if turns.is_empty() {
                clock = 0.0;
            }
            let labels: BTreeSet<SpeechActLabel> = label_ids.iter().map(|&l| spec.labels[l].clone()).collect();
            let mut turn = Turn::new(&id, turns.len(), Speaker::Participant, clock, words.join(" "));
            turn.labels = labels;
            turns.push(turn);

            clock += (rng.gen_range(30..200) as f64) / 10.0;
            let reply = REPLIES.choose(&mut rng).expect("reply");
            turns.push(Turn::new(&id, turns.len(), Speaker::Assistant, clock, *reply));
        }
        conversations.push(Conversation::new(id, turns));
    }
    Ok(conversations)
}
