//! Parse a JSON-lines transcript, check it, and print corpus counts.
//!
//!     cargo run --example transcripts [FILE]
//!
//! Without a file, a small built-in transcript with one deliberate problem is used.

use speechact::corpus::{corpus_stats, parse_transcript_str, parse_transcripts, select_examples, validate};
use speechact::LabelCatalog;

const SAMPLE: &str = r#"
{"conversation_id":"c1","turn_index":0,"speaker":"participant","timestamp_s":0.0,"text":"hi, ready to start","labels":["introduction"]}
{"conversation_id":"c1","turn_index":1,"speaker":"assistant","timestamp_s":4.5,"text":"hello! what are you working on?","labels":[]}
{"conversation_id":"c1","turn_index":2,"speaker":"participant","timestamp_s":20.0,"text":"what does the KeyFrame constructor take?","labels":["apiQuestion"]}
{"conversation_id":"c1","turn_index":3,"speaker":"assistant","timestamp_s":31.0,"text":"a Duration and some KeyValues","labels":["apiAnswer"]}
{"conversation_id":"c1","turn_index":4,"speaker":"participant","timestamp_s":29.0,"text":"ok thanks, that works","labels":["confirmation"]}
{"conversation_id":"c2","turn_index":0,"speaker":"participant","timestamp_s":0.0,"text":"let me set up eclipse first","labels":["setup"]}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = LabelCatalog::default();
    let conversations = match std::env::args().nth(1) {
        Some(path) => parse_transcripts(std::io::BufReader::new(std::fs::File::open(path)?), &catalog)?,
        None => parse_transcript_str(SAMPLE, &catalog)?,
    };

    let report = validate(&conversations);
    println!("{report}\n");
    print!("{}", corpus_stats(&conversations, &catalog));

    // only labeled participant turns outside the excluded labels are modeled
    let selected = select_examples(&conversations, &catalog);
    println!("\n{} turns selected for modeling:", selected.len());
    for id in selected {
        println!("  {}#{}", id.conversation_id, id.turn_index);
    }
    Ok(())
}
