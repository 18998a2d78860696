//! Train on a synthetic corpus, save the model, load it back and classify new turns.
//!
//!     cargo run --example train_and_predict

use speechact::classifier::{fit_multilabel, load_model_from_path, save_model_to_path};
use speechact::featurize::ShallowFeatures;
use speechact::synth::{synth_catalog, synth_corpus, SynthSpec};
use speechact::{Dataset, FeatureVector, Featurizer, SlenScope, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec::default();
    let catalog = synth_catalog(&spec);
    let dataset = Dataset::from_conversations(&synth_corpus(&spec)?, &catalog, SlenScope::SameSpeaker)?;

    let featurizer = Featurizer::fit(dataset.examples.iter().map(|e| (e.text.as_str(), e.shallow)))?;
    let vectors: Vec<FeatureVector> = dataset.examples.iter().map(|e| featurizer.vectorize(&e.text, e.shallow)).collect();
    let config = TrainConfig { catalog, ..TrainConfig::default() };
    let model = fit_multilabel(featurizer, &vectors, &dataset.label_sets(), &config)?;
    for t in &model.training {
        println!("{:<22} {} real positives, {} synthetic", t.label.as_str(), t.real_positives, t.synthetic);
    }

    let path = std::env::temp_dir().join("speechact-example-model.json");
    save_model_to_path(&model, &path)?;
    let model = load_model_from_path(&path)?;
    println!("\nmodel saved to and reloaded from {}", path.display());

    let neutral = ShallowFeatures { slen: 1.0, wc: 5, ppau: 10.0 };
    for text in ["thank you, that fixed it", "what does this method return?", "qwerty zxcv"] {
        let fv = model.featurizer.vectorize(text, ShallowFeatures { wc: text.split_whitespace().count(), ..neutral });
        let p = model.predict_labels(&fv, true)?;
        let labels: Vec<&str> = p.labels.iter().map(|l| l.as_str()).collect();
        println!("{text:?} -> {labels:?}{}", if p.low_confidence { " (low confidence)" } else { "" });
    }
    Ok(())
}
