//! Line-protocol classification service with per-conversation context.
//!
//! Each request line is a JSON object
//! `{"conversation_id": "...", "speaker": "participant", "timestamp_s": 12.5, "text": "..."}`
//! and gets exactly one response line: either
//! `{"conversation_id": "...", "labels": [...], "probabilities": {...}, "low_confidence": false}`
//! or `{"error": "..."}`. Assistant lines extend the session history and come
//! back with an empty classification. A malformed or out-of-order line leaves
//! its session untouched.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::classifier::MultiLabelModel;
use crate::corpus::Speaker;
use crate::featurize::{shallow_from_history, tokenize, HistoryEntry};
use crate::predict::Classification;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeRequest {
    pub conversation_id: String,
    pub speaker: Speaker,
    pub timestamp_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServeResponse {
    Classified {
        conversation_id: String,
        #[serde(flatten)]
        classification: Classification,
    },
    Error {
        error: String,
    },
}

/// Causal context of one conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct ServeSession {
    pub conversation_id: String,
    pub history: Vec<HistoryEntry>,
    last_seen: Instant,
}

impl ServeSession {
    pub fn new(conversation_id: impl Into<String>) -> Self {
        ServeSession {
            conversation_id: conversation_id.into(),
            history: Vec::new(),
            last_seen: Instant::now(),
        }
    }
}

/// Shared state of a running service: the immutable model plus sessions.
///
/// Requests for different conversations may run concurrently; each session
/// is locked for the duration of its request, so one conversation is handled
/// in arrival order.
pub struct ServeEngine {
    model: Arc<MultiLabelModel>,
    fallback: bool,
    ttl: Option<Duration>,
    sessions: Mutex<HashMap<String, Arc<Mutex<ServeSession>>>>,
}

impl ServeEngine {
    pub fn new(model: Arc<MultiLabelModel>, fallback: bool) -> Self {
        ServeEngine {
            model,
            fallback,
            ttl: None,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    /// Sessions idle for longer than `ttl` are dropped on the next request.
    pub fn with_ttl(mut self, ttl: Option<Duration>) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    pub fn session_history(&self, conversation_id: &str) -> Option<Vec<HistoryEntry>> {
        let map = self.sessions.lock().expect("session map poisoned");
        map.get(conversation_id)
            .map(|s| s.lock().expect("session poisoned").history.clone())
    }

    fn session(&self, conversation_id: &str) -> Arc<Mutex<ServeSession>> {
        let mut map = self.sessions.lock().expect("session map poisoned");
        if let Some(ttl) = self.ttl {
            let now = Instant::now();
            map.retain(|id, s| {
                id == conversation_id
                    || s.try_lock().map(|s| now.duration_since(s.last_seen) <= ttl).unwrap_or(true)
            });
        }
        map.entry(conversation_id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(ServeSession::new(conversation_id))))
            .clone()
    }

    pub fn handle(&self, request: &ServeRequest) -> Result<Classification, String> {
        if !request.timestamp_s.is_finite() || request.timestamp_s < 0.0 {
            return Err(format!("timestamp_s must be a non-negative number, got {}", request.timestamp_s));
        }
        if request.text.trim().is_empty() {
            return Err("text is empty".to_string());
        }
        let session = self.session(&request.conversation_id);
        let mut session = session.lock().expect("session poisoned");
        if let Some(last) = session.history.last() {
            if request.timestamp_s < last.timestamp_s {
                return Err(format!(
                    "timestamp {} precedes the previous turn at {}",
                    request.timestamp_s, last.timestamp_s
                ));
            }
        }

        let wc = tokenize(&request.text).len();
        let classification = if request.speaker == Speaker::Participant {
            let shallow = shallow_from_history(
                &session.history,
                request.speaker,
                request.timestamp_s,
                wc,
                self.model.slen_scope,
            );
            let fv = self.model.featurizer.vectorize(&request.text, shallow);
            self.model
                .predict_labels(&fv, self.fallback)
                .map_err(|e| e.to_string())?
                .into()
        } else {
            Classification::empty()
        };

        session.history.push(HistoryEntry {
            speaker: request.speaker,
            timestamp_s: request.timestamp_s,
            wc,
        });
        session.last_seen = Instant::now();
        Ok(classification)
    }

    pub fn handle_line(&self, line: &str) -> ServeResponse {
        let request: ServeRequest = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return ServeResponse::Error { error: format!("malformed request: {e}") },
        };
        match self.handle(&request) {
            Ok(classification) => ServeResponse::Classified {
                conversation_id: request.conversation_id,
                classification,
            },
            Err(error) => ServeResponse::Error { error },
        }
    }

    /// Answers each non-blank input line with one response line.
    pub fn serve_lines<R: BufRead, W: Write>(&self, reader: R, mut writer: W) -> std::io::Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let response = self.handle_line(&line);
            serde_json::to_writer(&mut writer, &response)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        Ok(())
    }
}

/// Accepts connections forever, one thread per connection, sessions shared.
pub fn serve_tcp(engine: Arc<ServeEngine>, listener: TcpListener) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let engine = Arc::clone(&engine);
        std::thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            let result = stream
                .try_clone()
                .and_then(|read_half| engine.serve_lines(BufReader::new(read_half), BufWriter::new(stream)));
            if let Err(e) = result {
                log::warn!("connection {peer:?} ended: {e}");
            }
        });
    }
    Ok(())
}
