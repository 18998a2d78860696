//! Tokenize turns and build the feature vectors the classifiers see.
//!
//!     cargo run --example featurize

use speechact::corpus::{Conversation, Speaker, Turn};
use speechact::featurize::{shallow_features, tokenize, Featurizer};
use speechact::SlenScope;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let conv = Conversation::new(
        "demo",
        vec![
            Turn::new("demo", 0, Speaker::Participant, 0.0, "How do I add a KeyFrame?"),
            Turn::new("demo", 1, Speaker::Assistant, 6.0, "Use the Timeline constructor."),
            Turn::new("demo", 2, Speaker::Participant, 40.0, "ok, thanks! that works now"),
        ],
    );

    println!("tokens of turn 2: {:?}", tokenize(&conv.turns[2].text));

    let participant = [0, 2];
    let shallow: Vec<_> = participant
        .iter()
        .map(|&i| shallow_features(&conv, i, SlenScope::SameSpeaker))
        .collect::<Result<_, _>>()?;
    for (i, s) in participant.iter().zip(&shallow) {
        println!("turn {i}: slen={:.3} wc={} ppau={:.1}", s.slen, s.wc, s.ppau);
    }

    let featurizer = Featurizer::fit(participant.iter().zip(&shallow).map(|(&i, s)| (conv.turns[i].text.as_str(), *s)))?;
    println!("\nvocabulary ({} words): {:?}", featurizer.vocabulary.len(), featurizer.vocabulary.tokens());
    println!("feature width: {}", featurizer.feature_width());

    // words outside the training vocabulary are dropped
    let fv = featurizer.vectorize("thanks, the KeyFrame works great", shallow[1]);
    let names: Vec<&str> = fv.word_indicators.iter().map(|&c| featurizer.vocabulary.feature_name(c)).collect();
    println!("active words: {names:?}");
    println!("scaled shallow features: {:?}", fv.shallow_scaled);
    Ok(())
}
