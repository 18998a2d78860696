//! Stratified 5-fold cross-validation on synthetic corpora of varying difficulty.
//!
//!     cargo run --release --example cross_validate [SIGNAL]

use speechact::evaluate::cross_validate;
use speechact::synth::{synth_catalog, synth_corpus, SynthSpec};
use speechact::{CvConfig, Dataset, SlenScope, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let signals: Vec<f64> = match std::env::args().nth(1) {
        Some(s) => vec![s.parse()?],
        None => vec![1.0, 0.5, 0.0],
    };
    for signal in signals {
        let spec = SynthSpec { signal, ..SynthSpec::default() };
        let catalog = synth_catalog(&spec);
        let dataset = Dataset::from_conversations(&synth_corpus(&spec)?, &catalog, SlenScope::SameSpeaker)?;
        let config = CvConfig {
            train: TrainConfig { catalog, ..TrainConfig::default() },
            n_folds: 5,
            tuning: None,
        };
        let outcome = cross_validate(&dataset, &config, 42)?;
        println!("signal {signal}: fold sizes {:?}", outcome.plan.fold_sizes());
        println!("{}", outcome.report);
    }
    Ok(())
}
