//! Feed turns to the serving engine one JSON line at a time.
//!
//!     cargo run --example serve_session
//!
//! The same engine backs `speechact serve`, over stdin/stdout or TCP.

use std::sync::Arc;

use speechact::classifier::fit_multilabel;
use speechact::serve::ServeEngine;
use speechact::synth::{synth_catalog, synth_corpus, SynthSpec};
use speechact::{Dataset, FeatureVector, Featurizer, SlenScope, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec::default();
    let catalog = synth_catalog(&spec);
    let dataset = Dataset::from_conversations(&synth_corpus(&spec)?, &catalog, SlenScope::SameSpeaker)?;
    let featurizer = Featurizer::fit(dataset.examples.iter().map(|e| (e.text.as_str(), e.shallow)))?;
    let vectors: Vec<FeatureVector> = dataset.examples.iter().map(|e| featurizer.vectorize(&e.text, e.shallow)).collect();
    let model = fit_multilabel(featurizer, &vectors, &dataset.label_sets(), &TrainConfig { catalog, ..TrainConfig::default() })?;

    let engine = ServeEngine::new(Arc::new(model), true);
    let requests = r#"{"conversation_id":"s1","speaker":"participant","timestamp_s":0.0,"text":"what does the size method return?"}
{"conversation_id":"s1","speaker":"assistant","timestamp_s":5.0,"text":"it returns the pane size"}
{"conversation_id":"s1","speaker":"participant","timestamp_s":21.0,"text":"ok thanks, works great"}
{"conversation_id":"s1","speaker":"participant","timestamp_s":3.0,"text":"out of order"}
not json"#;
    let mut out = Vec::new();
    engine.serve_lines(requests.as_bytes(), &mut out)?;
    for (req, resp) in requests.lines().zip(String::from_utf8(out)?.lines()) {
        println!("> {req}\n< {resp}");
    }
    println!("\nsession s1 holds {} turns", engine.session_history("s1").map_or(0, |h| h.len()));
    Ok(())
}
