//! Ingest a HotpotQA-distractor-format snippet: duplicate titles get ordinal
//! suffixes, yes/no answers map to answer kinds, and entries with dangling
//! support annotations are rejected without aborting the batch.
//!
//! ```bash
//! cargo run --example ingest_hotpotqa
//! ```

use dire::ingest::{ingest_source_dataset, write_source_jsonl, SourceFormat};

const SNIPPET: &str = r#"[
  {
    "_id": "5a7a1",
    "question": "Were Scott Derrickson and Ed Wood of the same nationality?",
    "answer": "yes",
    "context": [
      ["Scott Derrickson", ["Scott Derrickson is an American director.", "He lives in Los Angeles."]],
      ["Ed Wood", ["Edward Wood Jr. was an American filmmaker."]],
      ["Ed Wood", ["Ed Wood is a 1994 biographical film."]],
      ["Doctor Strange", ["Doctor Strange is a 2016 film."]]
    ],
    "supporting_facts": [["Scott Derrickson", 0], ["Ed Wood", 0]]
  },
  {
    "_id": "5a7b2",
    "question": "What government position was held by the woman who portrayed Corliss Archer?",
    "answer": "Chief of Protocol",
    "context": [
      ["Shirley Temple", ["Shirley Temple was an American actress.", "She served as Chief of Protocol of the United States."]],
      ["Kiss and Tell", ["Kiss and Tell stars Shirley Temple as Corliss Archer."]],
      ["Meet Corliss Archer", ["Meet Corliss Archer is a radio series."]]
    ],
    "supporting_facts": [["Shirley Temple", 1], ["Kiss and Tell", 0]]
  },
  {
    "_id": "5a7c3",
    "question": "A question with a broken annotation?",
    "answer": "unknown",
    "context": [
      ["Only Article", ["The only context paragraph."]]
    ],
    "supporting_facts": [["Missing Article", 0]]
  }
]"#;

fn main() -> anyhow::Result<()> {
    let outcome = ingest_source_dataset(
        std::io::Cursor::new(SNIPPET.as_bytes()),
        SourceFormat::HotpotqaDistractor,
    )?;
    println!(
        "accepted {} entries, rejected {}:",
        outcome.report.accepted,
        outcome.report.rejected.len()
    );
    for rejected in &outcome.report.rejected {
        println!("  {} ({})", rejected.qid, rejected.reason);
    }

    let first = &outcome.dataset.questions[0];
    println!();
    println!("duplicate titles were disambiguated:");
    for fact in &first.context {
        println!("  {}", fact.fact_id);
    }
    println!("answer kind for {:?}: {:?}", first.qid, first.answer);

    println!();
    println!("dire JSONL output:");
    let mut bytes = Vec::new();
    write_source_jsonl(&mut bytes, &outcome.dataset)?;
    print!("{}", String::from_utf8(bytes)?);
    Ok(())
}
