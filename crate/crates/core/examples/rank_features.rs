//! Fisher-score ranking of the most informative features per label.
//!
//!     cargo run --example rank_features

use speechact::evaluate::{fisher_score, rank_dataset_features, rankings_table};
use speechact::synth::{synth_catalog, synth_corpus, SynthSpec};
use speechact::{Dataset, SlenScope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a hand-checkable case: positives {1, 1, 0}, negatives {0, 0}
    let values = [1.0, 1.0, 0.0, 0.0, 0.0];
    let members = [true, true, true, false, false];
    println!("fisher score of the toy column: {:.5}\n", fisher_score(&values, &members));

    let spec = SynthSpec { signal: 0.8, ..SynthSpec::default() };
    let catalog = synth_catalog(&spec);
    let dataset = Dataset::from_conversations(&synth_corpus(&spec)?, &catalog, SlenScope::SameSpeaker)?;
    let rankings = catalog
        .labels()
        .iter()
        .map(|l| rank_dataset_features(&dataset, l, 8))
        .collect::<Result<Vec<_>, _>>()?;
    print!("{}", rankings_table(&rankings, false));
    Ok(())
}
