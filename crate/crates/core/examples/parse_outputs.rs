//! Extract structured fields from agent replies.

use popsci::mdextract::{parse_article, parse_feedback, parse_notes, parse_revision};

const NOTES: &str = "Here are my notes.\n\n### Extraction\n1. kinetics\n2. heat stress\n\
### Explanation\n1. kinetics: how fast a reaction runs\n2. heat stress: damage from high temperature\n";

const FEEDBACK: &str = "## Evaluation for reader's notes\n- The reader caught the key terms.\n\n\
## Advice\n1. Define kinetics in the first paragraph.\n2. Cut the second sentence in half.\n";

const REVISION: &str = "## Improvement\nI added a definition.\n\n## Revised Article\n\
Enzymes are the cell's helpers. Heat makes them slower.\n";

fn main() {
    println!("article: {:?}", parse_article("## Article\nHot yeast is slow yeast.\n").unwrap());

    let notes = parse_notes(NOTES).unwrap();
    println!("extractions: {:?}", notes.extractions);
    println!("explanations: {:?}", notes.explanations);

    let fb = parse_feedback(FEEDBACK).unwrap();
    println!("evaluation: {:?}", fb.evaluation);
    println!("advice: {:?}", fb.advice);

    let rev = parse_revision(REVISION).unwrap();
    println!("revised article: {:?}", rev.article);

    match parse_notes("I have no notes, sorry.") {
        Ok(n) => println!("unexpected notes {n:?}"),
        Err(e) => println!("malformed reply rejected: {e}"),
    }
}
