//! Convert a plain "HH:MM:SS name: text" chat log into transcript JSON lines.
//!
//!     cargo run --example convert_chat_log [LOG] [ID]

use std::collections::HashMap;
use std::io::BufRead;

use speechact::corpus::{convert_chat_log, transcripts_to_string, validate};
use speechact::Speaker;

const SAMPLE: &str = "\
23:59:40 dev: hi, ready when you are
23:59:52 maddy: hello! what are you working on?
00:00:30 dev: why does the button not repaint?
00:01:02 maddy: call repaint after the paint method
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let id = args.next().unwrap_or_else(|| "chat01".into());
    let speakers = HashMap::from([
        ("dev".to_string(), Speaker::Participant),
        ("maddy".to_string(), Speaker::Assistant),
    ]);
    let reader: Box<dyn BufRead> = Box::new(std::io::Cursor::new(text));
    let conversation = convert_chat_log(reader, &id, &speakers)?;
    print!("{}", transcripts_to_string(std::slice::from_ref(&conversation)));
    eprintln!("{}", validate(&[conversation]));
    Ok(())
}
