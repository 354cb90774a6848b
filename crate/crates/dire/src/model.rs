//! Domain model for support-annotated multi-hop reading-comprehension
//! datasets, plus dataset validation and answer normalization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Rejection reason: fewer than two supporting facts.
pub const REASON_NOT_MULTIHOP: &str = "not-multihop";
/// Rejection reason: context too small for the requested generator.
pub const REASON_CONTEXT_TOO_SMALL: &str = "context-too-small";
/// Rejection reason: a support annotation names a fact absent from the context.
pub const REASON_DANGLING_SUPPORT: &str = "dangling-support";
/// Rejection reason: a sentence-level support ref points outside its fact.
pub const REASON_INVALID_SENTENCE_REF: &str = "invalid-sentence-ref";
/// Rejection reason: qid already seen earlier in the input.
pub const REASON_DUPLICATE_QID: &str = "duplicate-qid";
/// Rejection reason: a fact has an empty id, an empty sentence list, or a
/// duplicate id within one context.
pub const REASON_MALFORMED_FACT: &str = "malformed-fact";
/// Rejection reason: a span answer with empty text.
pub const REASON_EMPTY_ANSWER: &str = "empty-answer";

/// One context fact. At HotpotQA granularity this is a paragraph, identified
/// by its title.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub fact_id: String,
    pub sentences: Vec<String>,
}

impl Fact {
    pub fn new(fact_id: impl Into<String>, sentences: Vec<String>) -> Self {
        Self {
            fact_id: fact_id.into(),
            sentences,
        }
    }

    /// All sentences joined into one string, for span-presence checks.
    pub fn full_text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Gold answer: a text span or a yes/no verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnswerValue {
    Span { text: String },
    Yes,
    No,
}

impl AnswerValue {
    pub fn span(text: impl Into<String>) -> Self {
        AnswerValue::Span { text: text.into() }
    }
}

/// Sentence-level support annotation: a fact id plus a sentence index into
/// that fact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceRef {
    pub fact_id: String,
    pub sentence_index: usize,
}

impl SentenceRef {
    pub fn new(fact_id: impl Into<String>, sentence_index: usize) -> Self {
        Self {
            fact_id: fact_id.into(),
            sentence_index,
        }
    }

    pub fn as_pair(&self) -> (String, usize) {
        (self.fact_id.clone(), self.sentence_index)
    }
}

/// One original dataset entry: question, answer, context facts, and the
/// supporting-fact annotations at paragraph and sentence level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceQuestion {
    pub qid: String,
    pub question: String,
    pub answer: AnswerValue,
    pub context: Vec<Fact>,
    pub supporting_fact_ids: BTreeSet<String>,
    pub supporting_sentence_refs: BTreeSet<SentenceRef>,
}

impl SourceQuestion {
    pub fn context_ids(&self) -> BTreeSet<String> {
        self.context.iter().map(|f| f.fact_id.clone()).collect()
    }

    /// Fact ids in the context that are not annotated as supporting, sorted.
    pub fn non_supporting_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .context
            .iter()
            .map(|f| f.fact_id.clone())
            .filter(|id| !self.supporting_fact_ids.contains(id))
            .collect();
        ids.sort();
        ids
    }

    pub fn fact(&self, fact_id: &str) -> Option<&Fact> {
        self.context.iter().find(|f| f.fact_id == fact_id)
    }

    /// The context with the given facts removed, input order preserved.
    pub fn context_without(&self, removed: &BTreeSet<String>) -> Vec<Fact> {
        self.context
            .iter()
            .filter(|f| !removed.contains(&f.fact_id))
            .cloned()
            .collect()
    }

    /// Why this question cannot feed the given generator, if anything.
    pub fn rejection_for(&self, mode: GeneratorMode) -> Option<&'static str> {
        if self.supporting_fact_ids.len() < 2 {
            return Some(REASON_NOT_MULTIHOP);
        }
        let context_ids = self.context_ids();
        if !self.supporting_fact_ids.is_subset(&context_ids) {
            return Some(REASON_DANGLING_SUPPORT);
        }
        let k = self.supporting_fact_ids.len();
        let needed = match mode {
            GeneratorMode::Probe => k + 1,
            GeneratorMode::Transform => 2 * k - 1,
            GeneratorMode::ProbeTransform => 2 * k,
        };
        if self.context.len() < needed {
            return Some(REASON_CONTEXT_TOO_SMALL);
        }
        None
    }
}

/// The downstream use a dataset is being validated for. Each generator has a
/// different minimum context size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorMode {
    Probe,
    Transform,
    ProbeTransform,
}

/// Provenance carried by an ingested dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub format_tag: String,
    pub ingestion_options: String,
}

/// An ordered collection of questions with distinct qids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDataset {
    pub questions: Vec<SourceQuestion>,
    pub provenance: Provenance,
}

impl SourceDataset {
    pub fn new(questions: Vec<SourceQuestion>, format_tag: &str, ingestion_options: &str) -> Self {
        Self {
            questions,
            provenance: Provenance {
                format_tag: format_tag.to_string(),
                ingestion_options: ingestion_options.to_string(),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

/// One rejected entry and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedEntry {
    pub qid: String,
    pub reason: String,
}

/// Outcome of validating (or ingesting) a dataset: how many entries were
/// accepted and which were rejected, with reason codes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub accepted: u64,
    pub rejected: Vec<RejectedEntry>,
}

impl ValidationReport {
    pub fn reject(&mut self, qid: impl Into<String>, reason: &str) {
        self.rejected.push(RejectedEntry {
            qid: qid.into(),
            reason: reason.to_string(),
        });
    }
}

/// Flag every question that cannot feed the requested generator.
///
/// All findings are report entries; nothing here is fatal.
pub fn validate_dataset(dataset: &SourceDataset, mode: GeneratorMode) -> ValidationReport {
    let mut report = ValidationReport::default();
    for q in &dataset.questions {
        match q.rejection_for(mode) {
            Some(reason) => report.reject(q.qid.clone(), reason),
            None => report.accepted += 1,
        }
    }
    report
}

/// Normalize an answer string to a token list: lowercase, strip ASCII
/// punctuation, drop the articles "a"/"an"/"the" as whole tokens, split on
/// whitespace.
pub fn normalize_answer(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let stripped: String = lowered
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    stripped
        .split_whitespace()
        .filter(|tok| !matches!(*tok, "a" | "an" | "the"))
        .map(str::to_owned)
        .collect()
}
