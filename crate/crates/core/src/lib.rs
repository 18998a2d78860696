//! Speech-act detection for developer question/answer conversations.
//!
//! The pipeline reads annotated transcripts ([`corpus`]), turns each
//! participant turn into a binary bag-of-words plus three shallow features
//! ([`featurize`]), balances every label's binary training set with SMOTE
//! ([`balance`]), trains one logistic-regression classifier per label
//! ([`classifier`]), and evaluates the result with stratified k-fold
//! cross-validation and Fisher-score feature rankings ([`evaluate`]).
//! [`serve`] classifies live turns with per-conversation context.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod balance;
pub mod classifier;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod evaluate;
pub mod featurize;
pub mod predict;
pub mod serve;
pub mod synth;

pub use classifier::{Hyperparams, MultiLabelModel, Prediction, TrainConfig};
pub use corpus::{Conversation, LabelCatalog, Speaker, SpeechActLabel, Turn};
pub use dataset::{Dataset, Example};
pub use evaluate::{CvConfig, MetricsReport, MetricsRow};
pub use featurize::{FeatureVector, Featurizer, SlenScope};
