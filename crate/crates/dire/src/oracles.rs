//! Reference reasoners over synthetic chain datasets.
//!
//! The disconnected oracle inspects each fact in isolation: it recognizes
//! chain facts by their key shapes, extracts the answer from the one fact
//! whose target is the answer key, and judges sufficiency by counting facts
//! that merely look relevant, near-miss decoys included. The connected oracle
//! follows links across facts, answers only when a complete chain exists, and
//! rejects decoys because their targets lead nowhere. The random oracle is a
//! seeded sanity floor.
//!
//! Together they bound the pipeline: the disconnected oracle should max out
//! every probe metric and fail the transformed metric; the connected oracle
//! the reverse.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::combinatorics::{sample_subset, DeterministicStream};
use crate::derived::{DerivedDataset, SuffSemantics, Variant};
use crate::model::{Fact, SourceDataset};
use crate::predictions::{AnswerPrediction, Prediction, PredictionSet};
use crate::synthetic::{classify_key, parse_fact_link, parse_question, FactLink, KeyClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleModel {
    Disconnected,
    Connected,
    Random,
}

impl OracleModel {
    pub fn tag(&self) -> &'static str {
        match self {
            OracleModel::Disconnected => "disconnected",
            OracleModel::Connected => "connected",
            OracleModel::Random => "random",
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle-requires-synthetic: instance {instance_id} does not carry chain structure")]
    RequiresSynthetic { instance_id: String },
}

/// Which sufficiency convention the prediction should follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SuffRule {
    /// Direct and transform inputs: labels in {0, 1}.
    DirectTransform,
    /// Probe-of-transform inputs: labels in {-1, 0}.
    ProbeOfTransform,
    /// No sufficiency output.
    None,
}

fn rule_for(variant: Variant) -> SuffRule {
    match variant {
        Variant::Transform => SuffRule::DirectTransform,
        Variant::ProbeOfTransform => SuffRule::ProbeOfTransform,
        Variant::Probe | Variant::Trivial => SuffRule::None,
    }
}

/// Run a reference model over a source dataset; predictions are keyed by qid.
pub fn run_oracle_source(
    model: OracleModel,
    dataset: &SourceDataset,
    seed: u64,
) -> Result<PredictionSet, OracleError> {
    let predictions: Result<Vec<Prediction>, OracleError> = dataset
        .questions
        .par_iter()
        .map(|q| {
            predict_instance(
                model,
                &q.qid,
                &q.question,
                &q.context,
                SuffRule::DirectTransform,
                seed,
            )
        })
        .collect();
    collect_set(model, predictions?)
}

/// Run a reference model over a derived dataset; predictions are keyed by
/// instance id and follow each instance's sufficiency semantics.
pub fn run_oracle_derived(
    model: OracleModel,
    dataset: &DerivedDataset,
    seed: u64,
) -> Result<PredictionSet, OracleError> {
    let predictions: Result<Vec<Prediction>, OracleError> = dataset
        .instances
        .par_iter()
        .map(|inst| {
            debug_assert!(matches!(
                (inst.variant, inst.labels.suff_semantics),
                (Variant::Transform, SuffSemantics::Transform)
                    | (Variant::ProbeOfTransform, SuffSemantics::ProbeOfTransform)
                    | (Variant::Probe | Variant::Trivial, SuffSemantics::None)
            ));
            predict_instance(
                model,
                &inst.instance_id,
                &inst.question,
                &inst.context,
                rule_for(inst.variant),
                seed,
            )
        })
        .collect();
    collect_set(model, predictions?)
}

fn collect_set(
    model: OracleModel,
    predictions: Vec<Prediction>,
) -> Result<PredictionSet, OracleError> {
    let mut set = PredictionSet {
        provenance: format!("oracle:{}", model.tag()),
        ..PredictionSet::default()
    };
    for p in predictions {
        set.insert(p);
    }
    Ok(set)
}

struct ParsedFact<'a> {
    fact: &'a Fact,
    link: FactLink,
}

fn parse_context<'a>(
    instance_id: &str,
    question: &str,
    context: &'a [Fact],
) -> Result<(String, String, Vec<ParsedFact<'a>>), OracleError> {
    let view = parse_question(question).ok_or_else(|| OracleError::RequiresSynthetic {
        instance_id: instance_id.to_string(),
    })?;
    let mut parsed = Vec::with_capacity(context.len());
    for fact in context {
        let link = parse_fact_link(fact).ok_or_else(|| OracleError::RequiresSynthetic {
            instance_id: instance_id.to_string(),
        })?;
        parsed.push(ParsedFact { fact, link });
    }
    Ok((view.namespace, view.start_key, parsed))
}

fn predict_instance(
    model: OracleModel,
    instance_id: &str,
    question: &str,
    context: &[Fact],
    rule: SuffRule,
    seed: u64,
) -> Result<Prediction, OracleError> {
    let (namespace, start_key, facts) = parse_context(instance_id, question, context)?;
    Ok(match model {
        OracleModel::Disconnected => disconnected(instance_id, &namespace, &facts, rule),
        OracleModel::Connected => connected(instance_id, &namespace, &start_key, &facts, rule),
        OracleModel::Random => random(instance_id, context, rule, seed),
    })
}

/// Per-fact reasoning only. A fact is a weak match when its source key fits
/// the question's chain pattern (true facts and decoys alike); it is a strong
/// match when its target also stays on the chain (true facts only).
fn disconnected(
    instance_id: &str,
    namespace: &str,
    facts: &[ParsedFact<'_>],
    rule: SuffRule,
) -> Prediction {
    let mut weak = 0u64;
    let mut support_p = BTreeSet::new();
    let mut support_s = BTreeSet::new();
    let mut answer: Option<String> = None;
    for pf in facts {
        if classify_key(namespace, &pf.link.source) != KeyClass::Chain {
            continue;
        }
        weak += 1;
        match classify_key(namespace, &pf.link.target) {
            KeyClass::Answer => {
                support_p.insert(pf.fact.fact_id.clone());
                support_s.insert((pf.fact.fact_id.clone(), pf.link.sentence_index));
                answer.get_or_insert_with(|| pf.link.target.clone());
            }
            KeyClass::Chain => {
                support_p.insert(pf.fact.fact_id.clone());
                support_s.insert((pf.fact.fact_id.clone(), pf.link.sentence_index));
            }
            _ => {}
        }
    }
    let suff = match rule {
        // locally-matching count, decoys included: sufficiency by headcount
        SuffRule::DirectTransform => Some(if weak > 1 { 1 } else { 0 }),
        // identified-support count: any support present reads as partial
        SuffRule::ProbeOfTransform => Some(if support_p.is_empty() { -1 } else { 0 }),
        SuffRule::None => None,
    };
    Prediction {
        instance_id: instance_id.to_string(),
        answer: answer.map(|text| AnswerPrediction {
            text,
            score: weak as f64,
        }),
        support_p: Some(support_p),
        support_s: Some(support_s),
        suff,
    }
}

/// Cross-fact reasoning: walk links from the start key, rejecting targets
/// that neither terminate nor continue (the decoys). Answers only on a
/// complete chain.
fn connected(
    instance_id: &str,
    namespace: &str,
    start_key: &str,
    facts: &[ParsedFact<'_>],
    rule: SuffRule,
) -> Prediction {
    let mut by_source: BTreeMap<&str, Vec<&ParsedFact<'_>>> = BTreeMap::new();
    for pf in facts {
        by_source.entry(pf.link.source.as_str()).or_default().push(pf);
    }
    for candidates in by_source.values_mut() {
        candidates.sort_by_key(|pf| pf.fact.fact_id.as_str());
    }
    let mut visited = BTreeSet::new();
    let (path, complete) = best_path(namespace, &by_source, start_key, &mut visited);

    let support_p: BTreeSet<String> = path.iter().map(|pf| pf.fact.fact_id.clone()).collect();
    let support_s: BTreeSet<(String, usize)> = path
        .iter()
        .map(|pf| (pf.fact.fact_id.clone(), pf.link.sentence_index))
        .collect();
    let answer = if complete {
        path.last().map(|pf| AnswerPrediction {
            text: pf.link.target.clone(),
            score: path.len() as f64,
        })
    } else {
        None
    };
    let chain_facts_present = facts
        .iter()
        .filter(|pf| {
            classify_key(namespace, &pf.link.source) == KeyClass::Chain
                && matches!(
                    classify_key(namespace, &pf.link.target),
                    KeyClass::Chain | KeyClass::Answer
                )
        })
        .count();
    let suff = match rule {
        SuffRule::None => None,
        _ => Some(if complete {
            1
        } else if chain_facts_present > 0 {
            0
        } else {
            -1
        }),
    };
    Prediction {
        instance_id: instance_id.to_string(),
        answer,
        support_p: Some(support_p),
        support_s: Some(support_s),
        suff,
    }
}

/// Longest link path from `key`; prefers a path that reaches the answer key.
/// A candidate fact only counts when its target terminates or has onward
/// links, which is exactly the cross-fact check decoys fail.
fn best_path<'a, 'b>(
    namespace: &str,
    by_source: &'b BTreeMap<&str, Vec<&'b ParsedFact<'a>>>,
    key: &str,
    visited: &mut BTreeSet<String>,
) -> (Vec<&'b ParsedFact<'a>>, bool) {
    if !visited.insert(key.to_string()) {
        return (Vec::new(), false);
    }
    let mut longest: Vec<&ParsedFact<'_>> = Vec::new();
    for candidate in by_source.get(key).into_iter().flatten() {
        if classify_key(namespace, &candidate.link.target) == KeyClass::Answer {
            visited.remove(key);
            return (vec![candidate], true);
        }
        if !by_source.contains_key(candidate.link.target.as_str()) {
            continue;
        }
        let (sub, complete) = best_path(namespace, by_source, &candidate.link.target, visited);
        let mut path = vec![*candidate];
        path.extend(sub);
        if complete {
            visited.remove(key);
            return (path, true);
        }
        if path.len() > longest.len() {
            longest = path;
        }
    }
    visited.remove(key);
    (longest, false)
}

/// Uniform draws from a stream keyed by instance id: two support facts, one
/// answer token, and a sufficiency label in the rule's range.
fn random(instance_id: &str, context: &[Fact], rule: SuffRule, seed: u64) -> Prediction {
    let mut stream =
        DeterministicStream::from_parts(&[&seed.to_string(), instance_id, "oracle-random"]);
    let fact_ids: Vec<String> = context.iter().map(|f| f.fact_id.clone()).collect();
    let support_size = fact_ids.len().min(2);
    let support_p = sample_subset(&mut stream, &fact_ids, support_size).expect("size <= pool");
    let tokens: Vec<&str> = context
        .iter()
        .flat_map(|f| f.sentences.iter())
        .flat_map(|s| s.split_whitespace())
        .collect();
    let answer = if tokens.is_empty() {
        None
    } else {
        let token = tokens[stream.next_bounded(tokens.len() as u64) as usize];
        Some(AnswerPrediction {
            text: token.to_string(),
            score: stream.next_bounded(1000) as f64 / 1000.0,
        })
    };
    let suff = match rule {
        SuffRule::DirectTransform => Some(stream.next_bounded(2) as i8),
        SuffRule::ProbeOfTransform => Some(stream.next_bounded(2) as i8 - 1),
        SuffRule::None => None,
    };
    Prediction {
        instance_id: instance_id.to_string(),
        answer,
        support_p: Some(support_p),
        support_s: None,
        suff,
    }
}
