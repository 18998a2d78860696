//! The end-to-end commands behind the `speechact` binary.
//!
//! Every command writes its result to `out`, diagnostics to `err`, and returns
//! an exit status: 0 success, 1 validation or quality failure, 2 usage or I/O
//! error. Keeping them here lets tests drive the exact CLI behaviour in-process.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use serde_json::json;

use crate::classifier::{fit_multilabel, load_model_from_path, save_model_to_path, tune};
use crate::config::RunConfig;
use crate::corpus::{corpus_stats, parse_transcripts, validate, write_transcripts, Conversation, LabelCatalog, SpeechActLabel};
use crate::dataset::Dataset;
use crate::evaluate::{cross_validate, rank_dataset_features, rankings_table, EvalError};
use crate::featurize::{FeatureVector, Featurizer};
use crate::predict::predict_conversations;
use crate::serve::{serve_tcp, ServeEngine};
use crate::synth::{synth_catalog, synth_corpus, SynthSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Table,
    Machine,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "machine" => Ok(Format::Machine),
            other => Err(format!("unknown format {other:?} (expected table or machine)")),
        }
    }
}

/// Where a command writes.
pub struct Streams<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Quality(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Quality(_) => EXIT_FAILURE,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn finish(result: Result<u8, Failure>, io: &mut Streams) -> u8 {
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.err, "error: {f}");
            f.code()
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_corpus(paths: &[PathBuf], catalog: &LabelCatalog) -> Result<Vec<Conversation>, Failure> {
    let mut all = Vec::new();
    for path in paths {
        let convs = parse_transcripts(open(path)?, catalog).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        all.extend(convs);
    }
    Ok(all)
}

/// Parses and validates; violations make a quality failure.
fn read_valid_dataset(paths: &[PathBuf], config: &RunConfig, catalog: &LabelCatalog) -> Result<Dataset, Failure> {
    let convs = read_corpus(paths, catalog)?;
    let report = validate(&convs);
    if !report.is_empty() {
        return Err(Failure::Quality(format!("corpus has violations:\n{report}")));
    }
    Dataset::from_conversations(&convs, catalog, config.slen_scope).map_err(usage)
}

fn config_line(config: &RunConfig) -> String {
    format!("# config: {}", serde_json::to_string(config).expect("config serializes"))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(usage)?;
    writeln!(out).map_err(usage)
}

pub fn cmd_validate(paths: &[PathBuf], config: &RunConfig, format: Format, io: &mut Streams) -> u8 {
    let result = (|| {
        let catalog = config.load_catalog().map_err(usage)?;
        let convs = read_corpus(paths, &catalog)?;
        let report = validate(&convs);
        match format {
            Format::Table => writeln!(io.out, "{report}").map_err(usage)?,
            Format::Machine => write_json(io.out, &json!({ "violations": report.violations, "count": report.len() }))?,
        }
        Ok(if report.is_empty() { EXIT_OK } else { EXIT_FAILURE })
    })();
    finish(result, io)
}

pub fn cmd_stats(paths: &[PathBuf], config: &RunConfig, format: Format, io: &mut Streams) -> u8 {
    let result = (|| {
        let catalog = config.load_catalog().map_err(usage)?;
        let stats = corpus_stats(&read_corpus(paths, &catalog)?, &catalog);
        match format {
            Format::Table => write!(io.out, "{stats}").map_err(usage)?,
            Format::Machine => write_json(io.out, &stats)?,
        }
        Ok(EXIT_OK)
    })();
    finish(result, io)
}

/// Writes a synthetic corpus to `output` (or `out` when absent) and, if asked,
/// the matching catalog.
pub fn cmd_synth_corpus(spec: &SynthSpec, output: Option<&Path>, catalog_out: Option<&Path>, io: &mut Streams) -> u8 {
    let result = (|| {
        let convs = synth_corpus(spec).map_err(usage)?;
        match output {
            Some(path) => {
                let file = File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                let mut w = io::BufWriter::new(file);
                write_transcripts(&mut w, &convs).map_err(usage)?;
                w.flush().map_err(usage)?;
            }
            None => write_transcripts(&mut *io.out, &convs).map_err(usage)?,
        }
        if let Some(path) = catalog_out {
            std::fs::write(path, synth_catalog(spec).to_json() + "\n")
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        Ok(EXIT_OK)
    })();
    finish(result, io)
}

pub fn cmd_train(paths: &[PathBuf], config: &RunConfig, model_out: &Path, io: &mut Streams) -> u8 {
    let result = (|| {
        let catalog = config.load_catalog().map_err(usage)?;
        let dataset = read_valid_dataset(paths, config, &catalog)?;
        if dataset.is_empty() {
            return Err(Failure::Quality("no labeled participant turns to train on".into()));
        }
        let mut train_config = config.train_config(catalog);
        if let Some(tuning) = config.tuning() {
            let outcome = tune(&dataset, &tuning.grid, tuning.inner_folds, &train_config, config.seed).map_err(usage)?;
            writeln!(io.err, "tuned hyperparameters: {}", serde_json::to_string(&outcome.best).unwrap_or_default())
                .map_err(usage)?;
            train_config.hyperparams = outcome.best;
        }
        let featurizer = Featurizer::fit(dataset.examples.iter().map(|e| (e.text.as_str(), e.shallow))).map_err(usage)?;
        let vectors: Vec<FeatureVector> = dataset
            .examples
            .iter()
            .map(|e| featurizer.vectorize(&e.text, e.shallow))
            .collect();
        let model = fit_multilabel(featurizer, &vectors, &dataset.label_sets(), &train_config).map_err(usage)?;
        for s in &model.skipped {
            writeln!(io.err, "warning: label {} skipped ({:?})", s.label, s.reason).map_err(usage)?;
        }
        save_model_to_path(&model, model_out).map_err(|e| Failure::Usage(format!("{}: {e}", model_out.display())))?;
        writeln!(io.err, "{}", config_line(config)).map_err(usage)?;
        writeln!(
            io.out,
            "trained {} classifiers on {} examples ({} features) -> {}",
            model.classifiers.len(),
            dataset.len(),
            model.feature_width(),
            model_out.display()
        )
        .map_err(usage)?;
        Ok(EXIT_OK)
    })();
    finish(result, io)
}

/// One JSON record (machine) or line (table) per participant turn.
pub fn cmd_predict(model_path: &Path, paths: &[PathBuf], config: &RunConfig, format: Format, io: &mut Streams) -> u8 {
    let result = (|| {
        let model = load_model_from_path(model_path).map_err(|e| Failure::Usage(format!("{}: {e}", model_path.display())))?;
        let convs = read_corpus(paths, &model.catalog)?;
        let report = validate(&convs);
        if !report.is_empty() {
            return Err(Failure::Quality(format!("corpus has violations:\n{report}")));
        }
        let records = predict_conversations(&model, &convs, config.fallback).map_err(usage)?;
        match format {
            Format::Machine => {
                writeln!(io.err, "{}", config_line(config)).map_err(usage)?;
                for r in &records {
                    serde_json::to_writer(&mut *io.out, r).map_err(usage)?;
                    writeln!(io.out).map_err(usage)?;
                }
            }
            Format::Table => {
                writeln!(io.out, "{}", config_line(config)).map_err(usage)?;
                for r in &records {
                    let labels = r.classification.labels.join(",");
                    let flag = if r.classification.low_confidence { " (low confidence)" } else { "" };
                    writeln!(io.out, "{}#{}\t{}{}", r.conversation_id, r.turn_index, labels, flag)
                        .map_err(usage)?;
                }
            }
        }
        Ok(EXIT_OK)
    })();
    finish(result, io)
}

pub fn cmd_evaluate(paths: &[PathBuf], config: &RunConfig, format: Format, report_out: Option<&Path>, io: &mut Streams) -> u8 {
    let result = (|| {
        let catalog = config.load_catalog().map_err(usage)?;
        let dataset = read_valid_dataset(paths, config, &catalog)?;
        let outcome = cross_validate(&dataset, &config.cv_config(catalog), config.seed).map_err(|e| match e {
            EvalError::TooFewExamples { .. } | EvalError::ZeroSupport => Failure::Quality(e.to_string()),
            other => usage(other),
        })?;
        for gap in &outcome.plan.gaps {
            writeln!(
                io.err,
                "warning: fold {} holds {} positives of label {} (share {:.2})",
                gap.fold,
                gap.count,
                dataset.catalog.labels()[gap.label],
                gap.share
            )
            .map_err(usage)?;
        }
        let machine = json!({
            "config": config,
            "n_examples": dataset.len(),
            "report": outcome.report,
        });
        match format {
            Format::Table => {
                writeln!(io.out, "{}", config_line(config)).map_err(usage)?;
                write!(io.out, "{}", outcome.report.to_table()).map_err(usage)?;
            }
            Format::Machine => write_json(io.out, &machine)?,
        }
        if let Some(path) = report_out {
            let text = serde_json::to_string_pretty(&machine).map_err(usage)? + "\n";
            std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        Ok(EXIT_OK)
    })();
    finish(result, io)
}

/// Fisher-score rankings for one label, or every label with positives.
pub fn cmd_rank_features(
    paths: &[PathBuf],
    config: &RunConfig,
    label: Option<&str>,
    top_n: usize,
    mirrored: bool,
    format: Format,
    io: &mut Streams,
) -> u8 {
    let result = (|| {
        let catalog = config.load_catalog().map_err(usage)?;
        let dataset = read_valid_dataset(paths, config, &catalog)?;
        let labels: Vec<SpeechActLabel> = match label {
            Some(name) => vec![SpeechActLabel::new(name).map_err(usage)?],
            None => catalog
                .labels()
                .iter()
                .filter(|l| dataset.examples.iter().any(|e| e.labels.contains(*l)))
                .cloned()
                .collect(),
        };
        let rankings = labels
            .iter()
            .map(|l| rank_dataset_features(&dataset, l, top_n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        match format {
            Format::Table => {
                writeln!(io.out, "{}", config_line(config)).map_err(usage)?;
                write!(io.out, "{}", rankings_table(&rankings, mirrored)).map_err(usage)?;
            }
            Format::Machine => write_json(io.out, &json!({ "config": config, "rankings": rankings }))?,
        }
        Ok(EXIT_OK)
    })();
    finish(result, io)
}

/// Serves on `listen` (host:port) or, when absent, on the given line streams.
pub fn cmd_serve<R: io::BufRead>(model_path: &Path, config: &RunConfig, listen: Option<&str>, input: R, io: &mut Streams) -> u8 {
    let result = (|| {
        let model = load_model_from_path(model_path).map_err(|e| Failure::Usage(format!("{}: {e}", model_path.display())))?;
        let engine = ServeEngine::new(Arc::new(model), config.fallback)
            .with_ttl(config.session_ttl_s.map(Duration::from_secs_f64));
        writeln!(io.err, "{}", config_line(config)).map_err(usage)?;
        match listen {
            Some(addr) => {
                let listener = std::net::TcpListener::bind(addr).map_err(|e| Failure::Usage(format!("{addr}: {e}")))?;
                writeln!(io.err, "listening on {}", listener.local_addr().map_err(usage)?).map_err(usage)?;
                serve_tcp(Arc::new(engine), listener).map_err(usage)?;
            }
            None => engine.serve_lines(input, &mut *io.out).map_err(usage)?,
        }
        Ok(EXIT_OK)
    })();
    finish(result, io)
}
