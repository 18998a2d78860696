//! Transcript data model, the line-delimited transcript format, validation,
//! corpus statistics and selection of the participant turns used for modeling.
//!
//! A transcript file holds one JSON object per line:
//!
//! ```text
//! {"conversation_id":"c1","turn_index":0,"speaker":"participant","timestamp_s":0.0,"text":"hi, I am ready","labels":["introduction"]}
//! ```
//!
//! Files may interleave conversations. Turns are ordered by `turn_index`, not by
//! file position, and keys outside the six required ones are carried through a
//! parse/serialize round trip untouched.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate turn ({conversation_id}, {turn_index})")]
    DuplicateTurn {
        line: usize,
        conversation_id: String,
        turn_index: usize,
    },
    #[error("line {line}: unknown speaker {value:?}")]
    UnknownSpeaker { line: usize, value: String },
    #[error("line {line}: label {label:?} is not in the catalog")]
    UnknownLabel { line: usize, label: String },
    #[error("invalid label name {0:?}: expected [a-z][a-z0-9]*")]
    InvalidLabel(String),
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
    #[error("line {line}: {message}")]
    ChatLog { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A speech-act type name. Always lowercase and matching `[a-z][a-z0-9]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SpeechActLabel(String);

impl SpeechActLabel {
    /// Builds a label, case-folding the input first ("clarificationQuestion" is accepted).
    pub fn new(name: &str) -> Result<Self, CorpusError> {
        let folded = name.trim().to_lowercase();
        let mut chars = folded.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit());
        if valid {
            Ok(SpeechActLabel(folded))
        } else {
            Err(CorpusError::InvalidLabel(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpeechActLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SpeechActLabel {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpeechActLabel::new(s)
    }
}

impl TryFrom<String> for SpeechActLabel {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        SpeechActLabel::new(&s)
    }
}

impl From<SpeechActLabel> for String {
    fn from(l: SpeechActLabel) -> String {
        l.0
    }
}

/// The eleven participant-side speech-act types used by default.
pub const DEFAULT_LABELS: [&str; 11] = [
    "apianswer",
    "apiquestion",
    "clarificationanswer",
    "clarificationquestion",
    "confirmation",
    "documentationanswer",
    "implementationquestion",
    "implementationstatement",
    "introduction",
    "statement",
    "systemquestion",
];

/// Labels that may appear in transcripts but are dropped from modeling.
pub const DEFAULT_EXCLUDED: [&str; 1] = ["setup"];

/// The closed set of speech-act types in force for a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCatalog", into = "RawCatalog")]
pub struct LabelCatalog {
    labels: Vec<SpeechActLabel>,
    excluded: BTreeSet<SpeechActLabel>,
}

#[derive(Serialize, Deserialize)]
struct RawCatalog {
    labels: Vec<String>,
    #[serde(default)]
    excluded: Vec<String>,
}

impl TryFrom<RawCatalog> for LabelCatalog {
    type Error = CorpusError;
    fn try_from(raw: RawCatalog) -> Result<Self, Self::Error> {
        let labels = raw
            .labels
            .iter()
            .map(|s| SpeechActLabel::new(s))
            .collect::<Result<Vec<_>, _>>()?;
        let excluded = raw
            .excluded
            .iter()
            .map(|s| SpeechActLabel::new(s))
            .collect::<Result<Vec<_>, _>>()?;
        LabelCatalog::new(labels, excluded)
    }
}

impl From<LabelCatalog> for RawCatalog {
    fn from(c: LabelCatalog) -> Self {
        RawCatalog {
            labels: c.labels.into_iter().map(String::from).collect(),
            excluded: c.excluded.into_iter().map(String::from).collect(),
        }
    }
}

impl Default for LabelCatalog {
    fn default() -> Self {
        let labels = DEFAULT_LABELS.iter().map(|s| SpeechActLabel(s.to_string())).collect();
        let excluded = DEFAULT_EXCLUDED.iter().map(|s| SpeechActLabel(s.to_string())).collect();
        LabelCatalog { labels, excluded }
    }
}

impl LabelCatalog {
    pub fn new(
        labels: Vec<SpeechActLabel>,
        excluded: impl IntoIterator<Item = SpeechActLabel>,
    ) -> Result<Self, CorpusError> {
        if labels.is_empty() {
            return Err(CorpusError::InvalidCatalog("label list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(CorpusError::InvalidCatalog(format!("duplicate label {l}")));
            }
        }
        let excluded: BTreeSet<_> = excluded.into_iter().collect();
        if let Some(both) = excluded.iter().find(|l| seen.contains(*l)) {
            return Err(CorpusError::InvalidCatalog(format!(
                "label {both} is both modeled and excluded"
            )));
        }
        Ok(LabelCatalog { labels, excluded })
    }

    /// Convenience constructor from plain strings.
    pub fn from_names<S: AsRef<str>>(labels: &[S], excluded: &[S]) -> Result<Self, CorpusError> {
        let labels = labels
            .iter()
            .map(|s| SpeechActLabel::new(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let excluded = excluded
            .iter()
            .map(|s| SpeechActLabel::new(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        LabelCatalog::new(labels, excluded)
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn labels(&self) -> &[SpeechActLabel] {
        &self.labels
    }

    pub fn excluded(&self) -> &BTreeSet<SpeechActLabel> {
        &self.excluded
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &SpeechActLabel) -> bool {
        self.labels.contains(label)
    }

    pub fn is_excluded(&self, label: &SpeechActLabel) -> bool {
        self.excluded.contains(label)
    }

    pub fn position(&self, label: &SpeechActLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Restricts a label set to the modeled labels, dropping excluded ones.
    pub fn modeled(&self, labels: &BTreeSet<SpeechActLabel>) -> BTreeSet<SpeechActLabel> {
        labels.iter().filter(|l| self.contains(l)).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Participant,
    Assistant,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Participant => "participant",
            Speaker::Assistant => "assistant",
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Speaker {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "participant" => Ok(Speaker::Participant),
            "assistant" => Ok(Speaker::Assistant),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub conversation_id: String,
    pub turn_index: usize,
    pub speaker: Speaker,
    pub timestamp_s: f64,
    pub text: String,
    pub labels: BTreeSet<SpeechActLabel>,
    /// Keys outside the transcript schema, preserved verbatim.
    pub extra: Map<String, Value>,
}

impl Turn {
    pub fn new(
        conversation_id: impl Into<String>,
        turn_index: usize,
        speaker: Speaker,
        timestamp_s: f64,
        text: impl Into<String>,
    ) -> Self {
        Turn {
            conversation_id: conversation_id.into(),
            turn_index,
            speaker,
            timestamp_s,
            text: text.into(),
            labels: BTreeSet::new(),
            extra: Map::new(),
        }
    }

    pub fn with_labels<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.labels = labels
            .into_iter()
            .map(|s| SpeechActLabel::new(s.as_ref()).expect("valid label name"))
            .collect();
        self
    }

    pub fn id(&self) -> TurnId {
        TurnId {
            conversation_id: self.conversation_id.clone(),
            turn_index: self.turn_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conversation {
    pub conversation_id: String,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(conversation_id: impl Into<String>, turns: Vec<Turn>) -> Self {
        Conversation {
            conversation_id: conversation_id.into(),
            turns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TurnId {
    pub conversation_id: String,
    pub turn_index: usize,
}

impl fmt::Display for TurnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.conversation_id, self.turn_index)
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    conversation_id: String,
    turn_index: usize,
    speaker: String,
    timestamp_s: f64,
    text: String,
    labels: Vec<String>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

/// Reads line-delimited transcript records and groups them into conversations.
///
/// Conversations come back in order of first appearance; turns are sorted by
/// `turn_index`. Blank lines are skipped. Label names are case-folded and must
/// be either modeled or excluded by `catalog`.
pub fn parse_transcripts<R: BufRead>(
    reader: R,
    catalog: &LabelCatalog,
) -> Result<Vec<Conversation>, CorpusError> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<Turn>> = HashMap::new();
    let mut seen: HashMap<(String, usize), usize> = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let speaker = record
            .speaker
            .parse::<Speaker>()
            .map_err(|value| CorpusError::UnknownSpeaker { line: lineno, value })?;
        let mut labels = BTreeSet::new();
        for raw in &record.labels {
            let label = SpeechActLabel::new(raw).map_err(|_| CorpusError::UnknownLabel {
                line: lineno,
                label: raw.clone(),
            })?;
            if !catalog.contains(&label) && !catalog.is_excluded(&label) {
                return Err(CorpusError::UnknownLabel {
                    line: lineno,
                    label: raw.clone(),
                });
            }
            labels.insert(label);
        }
        let key = (record.conversation_id.clone(), record.turn_index);
        if seen.insert(key, lineno).is_some() {
            return Err(CorpusError::DuplicateTurn {
                line: lineno,
                conversation_id: record.conversation_id,
                turn_index: record.turn_index,
            });
        }
        if !groups.contains_key(&record.conversation_id) {
            order.push(record.conversation_id.clone());
        }
        groups
            .entry(record.conversation_id.clone())
            .or_default()
            .push(Turn {
                conversation_id: record.conversation_id,
                turn_index: record.turn_index,
                speaker,
                timestamp_s: record.timestamp_s,
                text: record.text,
                labels,
                extra: record.extra,
            });
    }

    Ok(order
        .into_iter()
        .map(|id| {
            let mut turns = groups.remove(&id).unwrap_or_default();
            turns.sort_by_key(|t| t.turn_index);
            Conversation::new(id, turns)
        })
        .collect())
}

pub fn parse_transcript_str(text: &str, catalog: &LabelCatalog) -> Result<Vec<Conversation>, CorpusError> {
    parse_transcripts(text.as_bytes(), catalog)
}

/// Writes conversations in the transcript format, one record per line.
pub fn write_transcripts<W: Write>(mut writer: W, conversations: &[Conversation]) -> Result<(), CorpusError> {
    for conv in conversations {
        for turn in &conv.turns {
            let record = Record {
                conversation_id: turn.conversation_id.clone(),
                turn_index: turn.turn_index,
                speaker: turn.speaker.as_str().to_string(),
                timestamp_s: turn.timestamp_s,
                text: turn.text.clone(),
                labels: turn.labels.iter().map(|l| l.to_string()).collect(),
                extra: turn.extra.clone(),
            };
            serde_json::to_writer(&mut writer, &record)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn transcripts_to_string(conversations: &[Conversation]) -> String {
    let mut buf = Vec::new();
    write_transcripts(&mut buf, conversations).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    /// `turn_index` does not continue the 0, 1, 2, ... sequence.
    IndexGap { expected: usize, found: usize },
    NonMonotoneTimestamp { previous: f64, current: f64 },
    NegativeTimestamp { value: f64 },
    EmptyText,
    ForeignTurn { found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub conversation_id: String,
    pub turn_index: usize,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}: ", self.conversation_id, self.turn_index)?;
        match &self.kind {
            ViolationKind::IndexGap { expected, found } => {
                write!(f, "turn index {found} where {expected} was expected")
            }
            ViolationKind::NonMonotoneTimestamp { previous, current } => {
                write!(f, "non-monotone timestamp {current} after {previous}")
            }
            ViolationKind::NegativeTimestamp { value } => write!(f, "negative timestamp {value}"),
            ViolationKind::EmptyText => write!(f, "empty text"),
            ViolationKind::ForeignTurn { found } => {
                write!(f, "turn belongs to conversation {found}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        write!(f, "{} violations", self.violations.len())
    }
}

/// Checks the turn and conversation invariants. Violations are data, never errors.
pub fn validate(conversations: &[Conversation]) -> ValidationReport {
    let mut violations = Vec::new();
    for conv in conversations {
        let mut previous_ts: Option<f64> = None;
        for (expected, turn) in conv.turns.iter().enumerate() {
            let mut push = |kind| {
                violations.push(Violation {
                    conversation_id: conv.conversation_id.clone(),
                    turn_index: turn.turn_index,
                    kind,
                })
            };
            if turn.conversation_id != conv.conversation_id {
                push(ViolationKind::ForeignTurn {
                    found: turn.conversation_id.clone(),
                });
            }
            if turn.turn_index != expected {
                push(ViolationKind::IndexGap {
                    expected,
                    found: turn.turn_index,
                });
            }
            if turn.timestamp_s.is_nan() || turn.timestamp_s < 0.0 {
                push(ViolationKind::NegativeTimestamp {
                    value: turn.timestamp_s,
                });
            }
            if let Some(prev) = previous_ts {
                if turn.timestamp_s < prev {
                    push(ViolationKind::NonMonotoneTimestamp {
                        previous: prev,
                        current: turn.timestamp_s,
                    });
                }
            }
            if turn.text.trim().is_empty() {
                push(ViolationKind::EmptyText);
            }
            previous_ts = Some(turn.timestamp_s);
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub conversation_count: usize,
    pub turn_count: usize,
    /// Occurrences of each catalog label, one per (turn, label) pair. Every
    /// catalog label is present, possibly with count 0.
    pub label_counts: BTreeMap<SpeechActLabel, usize>,
    /// Occurrences of excluded labels, reported apart from `label_counts`.
    pub excluded_counts: BTreeMap<SpeechActLabel, usize>,
    pub per_speaker_turn_counts: BTreeMap<Speaker, usize>,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "conversations  {}", self.conversation_count)?;
        writeln!(f, "turns          {}", self.turn_count)?;
        for (speaker, n) in &self.per_speaker_turn_counts {
            writeln!(f, "  {:<12} {}", speaker.as_str(), n)?;
        }
        writeln!(f, "label counts")?;
        for (label, n) in &self.label_counts {
            writeln!(f, "  {:<26} {}", label.as_str(), n)?;
        }
        if !self.excluded_counts.is_empty() {
            writeln!(f, "excluded labels")?;
            for (label, n) in &self.excluded_counts {
                writeln!(f, "  {:<26} {}", label.as_str(), n)?;
            }
        }
        Ok(())
    }
}

pub fn corpus_stats(conversations: &[Conversation], catalog: &LabelCatalog) -> CorpusStats {
    let mut label_counts: BTreeMap<_, _> = catalog.labels().iter().map(|l| (l.clone(), 0)).collect();
    let mut excluded_counts: BTreeMap<_, _> = catalog.excluded().iter().map(|l| (l.clone(), 0)).collect();
    let mut per_speaker_turn_counts: BTreeMap<_, _> =
        [(Speaker::Participant, 0), (Speaker::Assistant, 0)].into_iter().collect();
    let mut turn_count = 0;

    for turn in conversations.iter().flat_map(|c| &c.turns) {
        turn_count += 1;
        *per_speaker_turn_counts.entry(turn.speaker).or_insert(0) += 1;
        for label in &turn.labels {
            if let Some(n) = label_counts.get_mut(label) {
                *n += 1;
            } else if let Some(n) = excluded_counts.get_mut(label) {
                *n += 1;
            }
        }
    }

    CorpusStats {
        conversation_count: conversations.len(),
        turn_count,
        label_counts,
        excluded_counts,
        per_speaker_turn_counts,
    }
}

/// Participant turns carrying at least one modeled label, in corpus order.
pub fn select_examples(conversations: &[Conversation], catalog: &LabelCatalog) -> Vec<TurnId> {
    conversations
        .iter()
        .flat_map(|c| &c.turns)
        .filter(|t| t.speaker == Speaker::Participant && t.labels.iter().any(|l| catalog.contains(l)))
        .map(Turn::id)
        .collect()
}

/// Converts a plain chat log into conversation turns.
///
/// Each non-blank line reads `HH:MM:SS <speaker>: <text>`, where `<speaker>` is
/// looked up in `speakers` (e.g. `"madeline" -> Assistant`). Wall-clock times are
/// mapped to offsets from the first message; a clock that wraps past midnight
/// continues counting upward. Turns come out unlabeled.
pub fn convert_chat_log<R: BufRead>(
    reader: R,
    conversation_id: &str,
    speakers: &HashMap<String, Speaker>,
) -> Result<Conversation, CorpusError> {
    let mut turns = Vec::new();
    let mut start: Option<f64> = None;
    let mut last_clock = 0.0;
    let mut day_offset = 0.0;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| CorpusError::ChatLog {
            line: lineno,
            message: message.to_string(),
        };
        let (clock, rest) = line.split_once(' ').ok_or_else(|| err("expected `HH:MM:SS speaker: text`"))?;
        let parts: Vec<&str> = clock.split(':').collect();
        if parts.len() != 3 {
            return Err(err("timestamp must be HH:MM:SS"));
        }
        let mut seconds = 0.0;
        for p in &parts {
            let v: f64 = p.parse().map_err(|_| err("timestamp must be HH:MM:SS"))?;
            seconds = seconds * 60.0 + v;
        }
        let (name, text) = rest.split_once(':').ok_or_else(|| err("missing `speaker:` prefix"))?;
        let speaker = *speakers
            .get(&name.trim().to_lowercase())
            .ok_or_else(|| err(&format!("unmapped speaker {:?}", name.trim())))?;

        if seconds < last_clock {
            day_offset += 86_400.0;
        }
        last_clock = seconds;
        let absolute = seconds + day_offset;
        let origin = *start.get_or_insert(absolute);
        turns.push(Turn::new(
            conversation_id,
            turns.len(),
            speaker,
            absolute - origin,
            text.trim(),
        ));
    }
    Ok(Conversation::new(conversation_id, turns))
}
