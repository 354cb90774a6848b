//! Build the probe dataset for a tiny hand-written question and walk through
//! the groups it produces.
//!
//! ```bash
//! cargo run --example build_probe
//! ```

use std::collections::BTreeSet;

use dire::model::{AnswerValue, Fact, SentenceRef, SourceDataset, SourceQuestion};
use dire::probe::probe_dataset;

fn fact(id: &str, text: &str) -> Fact {
    Fact::new(id, vec![text.to_string()])
}

fn main() -> anyhow::Result<()> {
    // a 2-hop question with two supporting paragraphs and three distractors
    let question = SourceQuestion {
        qid: "demo-1".into(),
        question: "which country gained independence when the cold war started?".into(),
        answer: AnswerValue::span("India"),
        context: vec![
            fact("Cold War", "The cold war started in 1947."),
            fact("Korean War", "The korean war started in 1950."),
            fact("India", "India gained independence in 1947."),
            fact("Pakistan", "Pakistan was created during the partition."),
            fact("Berlin", "Berlin was divided after the war."),
        ],
        supporting_fact_ids: ["Cold War", "India"]
            .into_iter()
            .map(String::from)
            .collect(),
        supporting_sentence_refs: [
            SentenceRef::new("Cold War", 0),
            SentenceRef::new("India", 0),
        ]
        .into_iter()
        .collect::<BTreeSet<_>>(),
    };
    let dataset = SourceDataset::new(vec![question], "example", "");

    let (probe, report) = probe_dataset(&dataset);
    println!(
        "{} question -> {} probe groups, {} instances",
        dataset.len(),
        report.groups,
        report.instances
    );
    println!();
    for inst in &probe.instances {
        println!("instance {}", inst.instance_id);
        println!("  context: {:?}", inst.context_ids());
        println!(
            "  support label: {:?}   answer label: {}",
            inst.labels.supp.as_ref().unwrap(),
            match &inst.labels.ans {
                // the answer label is omitted when the span is no longer in
                // any retained supporting fact
                Some(AnswerValue::Span { text }) => format!("\"{text}\""),
                Some(other) => format!("{other:?}"),
                None => "(absent: answer not in retained support)".into(),
            }
        );
    }
    println!();
    println!("serialized form (derived-instance JSONL):");
    let mut bytes = Vec::new();
    dire::derived::write_derived_jsonl(&mut bytes, &probe)?;
    print!("{}", String::from_utf8(bytes)?);
    Ok(())
}
