//! Synthetic k-hop chain questions with machine-checkable structure.
//!
//! Each question owns a key namespace. Supporting facts form the unique chain
//! `x0 -> x1 -> ... -> zend`; near-miss decoys share a hop's source key but
//! lead to a dead-end key, so they look locally plausible while breaking the
//! chain; fillers link unrelated keys. This gives the reference reasoners in
//! [`crate::oracles`] ground truth to act on without any training.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::DeterministicStream;
use crate::model::{AnswerValue, Fact, SentenceRef, SourceDataset, SourceQuestion};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyntheticError {
    #[error("inconsistent spec: {0}")]
    InconsistentSpec(String),
}

/// Parameters for the chain-question generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub questions: usize,
    /// Chain length k; every question gets k supporting facts.
    pub hops: usize,
    /// Total context size |C|.
    pub context_size: usize,
    /// Near-miss decoys per hop.
    pub near_miss_per_hop: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    fn check(&self) -> Result<(), SyntheticError> {
        if self.hops < 2 {
            return Err(SyntheticError::InconsistentSpec(format!(
                "hops must be >= 2, got {}",
                self.hops
            )));
        }
        if self.near_miss_per_hop < 1 {
            return Err(SyntheticError::InconsistentSpec(
                "near_miss_per_hop must be >= 1".to_string(),
            ));
        }
        if self.context_size < 2 * self.hops {
            return Err(SyntheticError::InconsistentSpec(format!(
                "context_size must be >= 2*hops = {} so every generator applies, got {}",
                2 * self.hops,
                self.context_size
            )));
        }
        let occupied = self.hops * (1 + self.near_miss_per_hop);
        if self.context_size < occupied {
            return Err(SyntheticError::InconsistentSpec(format!(
                "context_size must fit {} chain and near-miss facts, got {}",
                occupied, self.context_size
            )));
        }
        Ok(())
    }
}

const LINK_PREFIX: &str = "link from ";
const QUESTION_PREFIX: &str = "which key does the chain starting at ";

fn chain_key(ns: &str, hop: usize) -> String {
    format!("{ns}x{hop}")
}

fn answer_key(ns: &str) -> String {
    format!("{ns}zend")
}

fn link_fact(fact_id: String, source: &str, target: &str) -> Fact {
    Fact::new(
        fact_id,
        vec![
            format!("entry {source} is recorded in this fact ."),
            format!("link from {source} leads to {target} ."),
        ],
    )
}

fn build_question(spec: &SyntheticSpec, index: usize) -> SourceQuestion {
    let ns = format!("q{index:05}");
    let k = spec.hops;
    let mut facts = Vec::with_capacity(spec.context_size);
    let mut supporting = BTreeSet::new();
    let mut sentence_refs = BTreeSet::new();
    for hop in 0..k {
        let source = chain_key(&ns, hop);
        let target = if hop == k - 1 {
            answer_key(&ns)
        } else {
            chain_key(&ns, hop + 1)
        };
        let fact_id = format!("{ns}-sup{hop}");
        supporting.insert(fact_id.clone());
        sentence_refs.insert(SentenceRef::new(fact_id.clone(), 1));
        facts.push(link_fact(fact_id, &source, &target));
    }
    for hop in 0..k {
        for copy in 0..spec.near_miss_per_hop {
            let source = chain_key(&ns, hop);
            let target = format!("{ns}y{hop}n{copy}");
            facts.push(link_fact(format!("{ns}-nm{hop}n{copy}"), &source, &target));
        }
    }
    let fillers = spec.context_size - facts.len();
    for n in 0..fillers {
        facts.push(link_fact(
            format!("{ns}-fil{n}"),
            &format!("{ns}w{n}a"),
            &format!("{ns}w{n}b"),
        ));
    }
    // deterministic shuffle so support position carries no signal
    let mut stream =
        DeterministicStream::from_parts(&[&spec.seed.to_string(), &ns, "synth"]);
    for i in (1..facts.len()).rev() {
        let j = stream.next_bounded(i as u64 + 1) as usize;
        facts.swap(i, j);
    }
    SourceQuestion {
        qid: ns.clone(),
        question: format!("{QUESTION_PREFIX}{} finally reach ?", chain_key(&ns, 0)),
        answer: AnswerValue::span(answer_key(&ns)),
        context: facts,
        supporting_fact_ids: supporting,
        supporting_sentence_refs: sentence_refs,
    }
}

/// Generate a synthetic dataset; deterministic per seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SourceDataset, SyntheticError> {
    spec.check()?;
    let questions: Vec<SourceQuestion> = (0..spec.questions)
        .into_par_iter()
        .map(|i| build_question(spec, i))
        .collect();
    Ok(SourceDataset::new(
        questions,
        "synthetic",
        &format!(
            "hops={} context_size={} near_miss={} seed={}",
            spec.hops, spec.context_size, spec.near_miss_per_hop, spec.seed
        ),
    ))
}

/// The question-level structure the oracles recover from text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainView {
    pub namespace: String,
    pub start_key: String,
}

/// Recover namespace and start key from a synthetic question text.
pub fn parse_question(question: &str) -> Option<ChainView> {
    let rest = question.strip_prefix(QUESTION_PREFIX)?;
    let start_key = rest.split_whitespace().next()?;
    let ns_end = start_key.rfind('x')?;
    let namespace = &start_key[..ns_end];
    if namespace.is_empty() || !start_key.ends_with("x0") {
        return None;
    }
    Some(ChainView {
        namespace: namespace.to_string(),
        start_key: start_key.to_string(),
    })
}

/// The link a synthetic fact encodes, and which sentence carries it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactLink {
    pub source: String,
    pub target: String,
    pub sentence_index: usize,
}

/// Recover the `source -> target` link from a synthetic fact.
pub fn parse_fact_link(fact: &Fact) -> Option<FactLink> {
    for (sentence_index, sentence) in fact.sentences.iter().enumerate() {
        if let Some(rest) = sentence.strip_prefix(LINK_PREFIX) {
            let mut tokens = rest.split_whitespace();
            let source = tokens.next()?;
            if tokens.next()? != "leads" || tokens.next()? != "to" {
                return None;
            }
            let target = tokens.next()?;
            return Some(FactLink {
                source: source.to_string(),
                target: target.to_string(),
                sentence_index,
            });
        }
    }
    None
}

/// Namespace-relative role of a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyClass {
    /// A key on the true chain (`x...`).
    Chain,
    /// The terminal answer key (`z...`).
    Answer,
    /// A near-miss dead end (`y...`).
    Decoy,
    /// A filler key (`w...`).
    Filler,
    /// Anything outside the question's namespace.
    Foreign,
}

pub fn classify_key(namespace: &str, key: &str) -> KeyClass {
    let Some(rest) = key.strip_prefix(namespace) else {
        return KeyClass::Foreign;
    };
    match rest.chars().next() {
        Some('x') => KeyClass::Chain,
        Some('z') => KeyClass::Answer,
        Some('y') => KeyClass::Decoy,
        Some('w') => KeyClass::Filler,
        _ => KeyClass::Foreign,
    }
}
