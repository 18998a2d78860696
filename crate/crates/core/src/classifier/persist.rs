//! Model files.
//!
//! A model file is one JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "checksum": "<sha-256 hex of the body text>",
//!   "body": { ...catalog, featurizer, threshold, classifiers, skipped... }
//! }
//! ```
//!
//! The checksum covers the exact bytes of `body` as written. Floats are
//! written in shortest round-trip form, so a reloaded model scores inputs
//! bit-for-bit like the original, and a fixed model always writes the same bytes.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use super::MultiLabelModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("model checksum mismatch: file says {expected}, body hashes to {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct Envelope<'a> {
    format_version: u32,
    checksum: String,
    #[serde(borrow)]
    body: &'a RawValue,
}

fn digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

pub fn save_model<W: Write>(model: &MultiLabelModel, mut sink: W) -> Result<(), ModelIoError> {
    let body = serde_json::to_string_pretty(model).map_err(|e| ModelIoError::Corrupt(e.to_string()))?;
    write!(
        sink,
        "{{\n  \"format_version\": {},\n  \"checksum\": \"{}\",\n  \"body\": {}\n}}\n",
        model.format_version,
        digest(&body),
        body
    )?;
    sink.flush()?;
    Ok(())
}

/// Writes through a sibling temporary file so a failed save leaves nothing behind.
pub fn save_model_to_path(model: &MultiLabelModel, path: &Path) -> Result<(), ModelIoError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    let result = fs::File::create(&tmp)
        .map_err(ModelIoError::from)
        .and_then(|f| save_model(model, std::io::BufWriter::new(f)))
        .and_then(|_| fs::rename(&tmp, path).map_err(ModelIoError::from));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn load_model<R: Read>(mut source: R) -> Result<MultiLabelModel, ModelIoError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| ModelIoError::Corrupt(e.to_string()))?;
    let envelope: Envelope = serde_json::from_str(&text).map_err(|e| ModelIoError::Corrupt(e.to_string()))?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch {
            found: envelope.format_version,
        });
    }
    let actual = digest(envelope.body.get());
    if actual != envelope.checksum {
        return Err(ModelIoError::ChecksumMismatch {
            expected: envelope.checksum,
            actual,
        });
    }
    let model: MultiLabelModel =
        serde_json::from_str(envelope.body.get()).map_err(|e| ModelIoError::Corrupt(e.to_string()))?;
    check_consistency(&model)?;
    Ok(model)
}

pub fn load_model_from_path(path: &Path) -> Result<MultiLabelModel, ModelIoError> {
    load_model(std::io::BufReader::new(fs::File::open(path)?))
}

fn check_consistency(model: &MultiLabelModel) -> Result<(), ModelIoError> {
    if model.format_version != FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch {
            found: model.format_version,
        });
    }
    if !(model.threshold > 0.0 && model.threshold < 1.0) {
        return Err(ModelIoError::Corrupt(format!("threshold {}", model.threshold)));
    }
    let width = model.feature_width();
    for c in &model.classifiers {
        if c.weights.len() != width {
            return Err(ModelIoError::Corrupt(format!(
                "classifier {} has {} weights, model width is {width}",
                c.label,
                c.weights.len()
            )));
        }
        if !model.catalog.contains(&c.label) {
            return Err(ModelIoError::Corrupt(format!("classifier {} not in catalog", c.label)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{BinaryClassifier, Hyperparams};
    use crate::corpus::{LabelCatalog, SpeechActLabel};
    use crate::featurize::{Featurizer, ScalingParams, SlenScope, Vocabulary};

    fn model() -> MultiLabelModel {
        MultiLabelModel {
            format_version: FORMAT_VERSION,
            catalog: LabelCatalog::from_names(&["a"], &["setup"]).unwrap(),
            featurizer: Featurizer {
                vocabulary: Vocabulary::build(["ok thanks"]),
                scaling: ScalingParams { mean: [1.0, 4.5, 3.25], std: [0.1, 2.0, 0.0] },
            },
            slen_scope: SlenScope::SameSpeaker,
            threshold: 0.5,
            classifiers: vec![BinaryClassifier {
                label: SpeechActLabel::new("a").unwrap(),
                weights: vec![0.1, -1.0 / 3.0, 1e-300, 2.5e10, -0.0],
                bias: std::f64::consts::PI,
                hyperparams: Hyperparams::default(),
            }],
            skipped: vec![],
            training: vec![],
        }
    }

    fn bytes(m: &MultiLabelModel) -> Vec<u8> {
        let mut buf = Vec::new();
        save_model(m, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_exact_and_byte_stable() {
        let m = model();
        let first = bytes(&m);
        let loaded = load_model(first.as_slice()).unwrap();
        assert_eq!(loaded, m);
        assert_eq!(bytes(&loaded), first);
    }

    #[test]
    fn rejects_other_versions() {
        let text = String::from_utf8(bytes(&model())).unwrap();
        let bumped = text.replacen("\"format_version\": 1", "\"format_version\": 999", 1);
        assert!(matches!(
            load_model(bumped.as_bytes()),
            Err(ModelIoError::VersionMismatch { found: 999 })
        ));
    }

    #[test]
    fn rejects_truncation_and_tampering() {
        let data = bytes(&model());
        for cut in [0, 10, data.len() / 2, data.len() - 3] {
            assert!(matches!(load_model(&data[..cut]), Err(ModelIoError::Corrupt(_))));
        }
        let text = String::from_utf8(data).unwrap();
        let tampered = text.replacen("0.1", "0.2", 1);
        assert!(matches!(
            load_model(tampered.as_bytes()),
            Err(ModelIoError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn path_save_leaves_no_partial_file_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("missing").join("model.json");
        assert!(save_model_to_path(&model(), &target).is_err());
        assert!(!dir.path().join("missing").exists());

        let good = dir.path().join("model.json");
        save_model_to_path(&model(), &good).unwrap();
        assert_eq!(load_model_from_path(&good).unwrap(), model());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
