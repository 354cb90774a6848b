//! Ingestion of the two reference input formats: HotpotQA distractor files
//! (one JSON array) and dire JSONL (one question object per line).
//!
//! Malformed syntax is fatal; entries with bad annotations (dangling support
//! titles, out-of-range sentence refs, duplicate qids) are routed to the
//! validation report instead of aborting the batch.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    AnswerValue, Fact, SentenceRef, SourceDataset, SourceQuestion, ValidationReport,
    REASON_DANGLING_SUPPORT, REASON_DUPLICATE_QID, REASON_EMPTY_ANSWER, REASON_INVALID_SENTENCE_REF,
    REASON_MALFORMED_FACT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceFormat {
    HotpotqaDistractor,
    DireJsonl,
}

impl SourceFormat {
    pub fn tag(&self) -> &'static str {
        match self {
            SourceFormat::HotpotqaDistractor => "hotpotqa_distractor",
            SourceFormat::DireJsonl => "dire_jsonl",
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error at byte {offset} (line {line}): {message}")]
    Parse {
        offset: u64,
        line: u64,
        message: String,
    },
    #[error("failed reading input: {0}")]
    Io(#[from] std::io::Error),
}

/// An ingested dataset plus the per-entry validation report.
#[derive(Clone, Debug)]
pub struct IngestOutcome {
    pub dataset: SourceDataset,
    pub report: ValidationReport,
}

/// Parse a stream in the declared format.
pub fn ingest_source_dataset(
    reader: impl BufRead,
    format: SourceFormat,
) -> Result<IngestOutcome, IngestError> {
    match format {
        SourceFormat::HotpotqaDistractor => ingest_hotpotqa(reader),
        SourceFormat::DireJsonl => ingest_dire_jsonl(reader),
    }
}

#[derive(Deserialize)]
struct HotpotEntry {
    #[serde(rename = "_id")]
    id: String,
    question: String,
    answer: String,
    context: Vec<(String, Vec<String>)>,
    supporting_facts: Vec<(String, usize)>,
}

fn ingest_hotpotqa(mut reader: impl BufRead) -> Result<IngestOutcome, IngestError> {
    let mut raw = String::new();
    reader.read_to_string(&mut raw)?;
    let entries: Vec<HotpotEntry> = serde_json::from_str(&raw).map_err(|e| {
        IngestError::Parse {
            offset: offset_of(&raw, e.line(), e.column()),
            line: e.line() as u64,
            message: e.to_string(),
        }
    })?;

    let mut report = ValidationReport::default();
    let mut questions = Vec::with_capacity(entries.len());
    let mut seen_qids = BTreeSet::new();
    for entry in entries {
        match hotpot_entry_to_question(entry, &mut seen_qids) {
            Ok(q) => {
                report.accepted += 1;
                questions.push(q);
            }
            Err((qid, reason)) => report.reject(qid, reason),
        }
    }
    Ok(IngestOutcome {
        dataset: SourceDataset::new(questions, SourceFormat::HotpotqaDistractor.tag(), ""),
        report,
    })
}

fn hotpot_entry_to_question(
    entry: HotpotEntry,
    seen_qids: &mut BTreeSet<String>,
) -> Result<SourceQuestion, (String, &'static str)> {
    let qid = entry.id;
    if !seen_qids.insert(qid.clone()) {
        return Err((qid, REASON_DUPLICATE_QID));
    }
    // duplicate titles get ordinal suffixes in input order; the suffix is
    // bumped until free so a literal "Foo#2" title cannot collide
    let mut used_ids = BTreeSet::new();
    let mut first_id_for_title: BTreeMap<String, String> = BTreeMap::new();
    let mut context = Vec::with_capacity(entry.context.len());
    for (title, sentences) in entry.context {
        if title.is_empty() || sentences.is_empty() {
            return Err((qid, REASON_MALFORMED_FACT));
        }
        let mut fact_id = title.clone();
        let mut ordinal = 1usize;
        while !used_ids.insert(fact_id.clone()) {
            ordinal += 1;
            fact_id = format!("{title}#{ordinal}");
        }
        first_id_for_title
            .entry(title)
            .or_insert_with(|| fact_id.clone());
        context.push(Fact::new(fact_id, sentences));
    }

    let mut supporting_fact_ids = BTreeSet::new();
    let mut supporting_sentence_refs = BTreeSet::new();
    for (title, sentence_index) in entry.supporting_facts {
        let Some(fact_id) = first_id_for_title.get(&title) else {
            return Err((qid, REASON_DANGLING_SUPPORT));
        };
        let fact = context
            .iter()
            .find(|f| &f.fact_id == fact_id)
            .expect("mapped id exists");
        if sentence_index >= fact.sentences.len() {
            return Err((qid, REASON_INVALID_SENTENCE_REF));
        }
        supporting_fact_ids.insert(fact_id.clone());
        supporting_sentence_refs.insert(SentenceRef::new(fact_id.clone(), sentence_index));
    }

    let answer = match entry.answer.as_str() {
        "yes" => AnswerValue::Yes,
        "no" => AnswerValue::No,
        "" => return Err((qid, REASON_EMPTY_ANSWER)),
        text => AnswerValue::span(text),
    };
    Ok(SourceQuestion {
        qid,
        question: entry.question,
        answer,
        context,
        supporting_fact_ids,
        supporting_sentence_refs,
    })
}

/// One streamed dire JSONL entry: either a valid question or a rejection.
pub enum SourceEntry {
    Accepted(SourceQuestion),
    Rejected { qid: String, reason: &'static str },
}

/// Stream dire JSONL entry by entry in bounded memory. Entry-level checks run
/// inline; syntax errors abort with a byte offset.
pub fn stream_dire_jsonl<E: From<IngestError>>(
    reader: impl BufRead,
    mut on_entry: impl FnMut(SourceEntry) -> Result<(), E>,
) -> Result<(), E> {
    let mut seen_qids = BTreeSet::new();
    let mut offset = 0u64;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index as u64 + 1;
        let line = line.map_err(IngestError::from)?;
        let line_bytes = line.len() as u64 + 1;
        if line.trim().is_empty() {
            offset += line_bytes;
            continue;
        }
        let q: SourceQuestion = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            offset: offset + e.column().saturating_sub(1) as u64,
            line: line_no,
            message: e.to_string(),
        })?;
        offset += line_bytes;
        match check_question(&q, &mut seen_qids) {
            None => on_entry(SourceEntry::Accepted(q))?,
            Some(reason) => on_entry(SourceEntry::Rejected { qid: q.qid, reason })?,
        }
    }
    Ok(())
}

fn ingest_dire_jsonl(reader: impl BufRead) -> Result<IngestOutcome, IngestError> {
    let mut report = ValidationReport::default();
    let mut questions = Vec::new();
    stream_dire_jsonl::<IngestError>(reader, |entry| {
        match entry {
            SourceEntry::Accepted(q) => {
                report.accepted += 1;
                questions.push(q);
            }
            SourceEntry::Rejected { qid, reason } => report.reject(qid, reason),
        }
        Ok(())
    })?;
    Ok(IngestOutcome {
        dataset: SourceDataset::new(questions, SourceFormat::DireJsonl.tag(), ""),
        report,
    })
}

/// Entry-level invariants shared by ingestion paths. Returns a reason code if
/// the entry must be rejected.
fn check_question(q: &SourceQuestion, seen_qids: &mut BTreeSet<String>) -> Option<&'static str> {
    if !seen_qids.insert(q.qid.clone()) {
        return Some(REASON_DUPLICATE_QID);
    }
    let mut context_ids = BTreeSet::new();
    for fact in &q.context {
        if fact.fact_id.is_empty() || fact.sentences.is_empty() {
            return Some(REASON_MALFORMED_FACT);
        }
        if !context_ids.insert(fact.fact_id.as_str()) {
            return Some(REASON_MALFORMED_FACT);
        }
    }
    if let AnswerValue::Span { text } = &q.answer {
        if text.is_empty() {
            return Some(REASON_EMPTY_ANSWER);
        }
    }
    for id in &q.supporting_fact_ids {
        if !context_ids.contains(id.as_str()) {
            return Some(REASON_DANGLING_SUPPORT);
        }
    }
    for sref in &q.supporting_sentence_refs {
        if !q.supporting_fact_ids.contains(&sref.fact_id) {
            return Some(REASON_DANGLING_SUPPORT);
        }
        let fact = q.fact(&sref.fact_id).expect("checked above");
        if sref.sentence_index >= fact.sentences.len() {
            return Some(REASON_INVALID_SENTENCE_REF);
        }
    }
    None
}

/// Serialize a dataset as dire JSONL, one question per line, input order.
pub fn write_source_jsonl(
    writer: &mut impl Write,
    dataset: &SourceDataset,
) -> std::io::Result<()> {
    for q in &dataset.questions {
        serde_json::to_writer(&mut *writer, q)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

fn offset_of(text: &str, line: usize, column: usize) -> u64 {
    let mut remaining = line.saturating_sub(1);
    let mut offset = 0u64;
    for l in text.split_inclusive('\n') {
        if remaining == 0 {
            return offset + column.saturating_sub(1) as u64;
        }
        offset += l.len() as u64;
        remaining -= 1;
    }
    offset
}
