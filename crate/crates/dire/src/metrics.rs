//! Scoring: base answer/support/joint metrics, the grouped probe metric, the
//! conditional transformed and probe-of-transform metrics, the conditional
//! disconnected-reasoning score, and deterministic report aggregation.
//!
//! Grouped metrics never let a model combine information across instances:
//! each instance is predicted independently and the scorer applies the
//! trivial combination operators (argmax by confidence for answers, set
//! union for supports) before comparing against the original question's gold.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derived::{group_by, DerivedDataset, DerivedInstance, Variant};
use crate::model::{normalize_answer, AnswerValue, SourceDataset};
use crate::predictions::{Prediction, PredictionSet};

/// What is being tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Ans,
    SuppP,
    SuppS,
    AnsAndSuppP,
    AnsAndSuppS,
}

impl Task {
    pub fn needs_answer(self) -> bool {
        matches!(self, Task::Ans | Task::AnsAndSuppP | Task::AnsAndSuppS)
    }

    pub fn needs_sentence_support(self) -> bool {
        matches!(self, Task::SuppS | Task::AnsAndSuppS)
    }
}

/// Exact match or bag-of-tokens F1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Em,
    F1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricKind {
    pub task: Task,
    pub flavor: Flavor,
}

/// Which evaluation produced a score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    Probe,
    Transform,
    ProbeTransform,
    ConditionalDire,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("variant-mismatch: expected a {expected} dataset, found {found} instance {instance_id}")]
    VariantMismatch {
        expected: &'static str,
        found: String,
        instance_id: String,
    },
    #[error("balanced-dataset-unscorable: group {group_id} has {found} members, expected {expected}")]
    BalancedDataset {
        group_id: String,
        found: usize,
        expected: usize,
    },
    #[error("sentence-gold-unavailable: {0:?} needs sentence-level gold, which derived datasets do not carry; score it in direct mode")]
    SentenceGoldUnavailable(Task),
    #[error("malformed group {group_id}: {message}")]
    MalformedGroup { group_id: String, message: String },
}

/// Exact match plus precision/recall/F1 for one comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreComponents {
    pub em: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreComponents {
    pub const ZERO: Self = Self {
        em: 0.0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    pub const ONE: Self = Self {
        em: 1.0,
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };

    pub fn pick(&self, flavor: Flavor) -> f64 {
        match flavor {
            Flavor::Em => self.em,
            Flavor::F1 => self.f1,
        }
    }
}

fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Bag-of-tokens overlap between two token lists (multiset semantics).
fn token_components(pred: &[String], gold: &[String]) -> ScoreComponents {
    if pred.is_empty() && gold.is_empty() {
        return ScoreComponents::ONE;
    }
    if pred.is_empty() || gold.is_empty() {
        return ScoreComponents::ZERO;
    }
    let mut gold_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in gold {
        *gold_counts.entry(tok.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for tok in pred {
        if let Some(count) = gold_counts.get_mut(tok.as_str()) {
            if *count > 0 {
                *count -= 1;
                overlap += 1;
            }
        }
    }
    let em = if pred == gold { 1.0 } else { 0.0 };
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    ScoreComponents {
        em,
        precision,
        recall,
        f1: f1_from(precision, recall),
    }
}

/// Score a predicted answer string against the gold answer. Yes/no golds are
/// compared literally; spans are compared over normalized token bags, and a
/// missing prediction counts as an empty answer.
pub fn answer_components(pred: Option<&str>, gold: &AnswerValue) -> ScoreComponents {
    let pred = pred.unwrap_or("");
    match gold {
        AnswerValue::Yes => {
            if pred == "yes" {
                ScoreComponents::ONE
            } else {
                ScoreComponents::ZERO
            }
        }
        AnswerValue::No => {
            if pred == "no" {
                ScoreComponents::ONE
            } else {
                ScoreComponents::ZERO
            }
        }
        AnswerValue::Span { text } => {
            token_components(&normalize_answer(pred), &normalize_answer(text))
        }
    }
}

pub fn answer_score(pred: &str, gold: &AnswerValue, flavor: Flavor) -> f64 {
    answer_components(Some(pred), gold).pick(flavor)
}

/// Set precision/recall between predicted and gold support sets. Works for
/// paragraph-level (fact ids) and sentence-level (fact id, index) refs alike.
pub fn set_components<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> ScoreComponents {
    if pred.is_empty() && gold.is_empty() {
        return ScoreComponents::ONE;
    }
    if pred.is_empty() || gold.is_empty() {
        return ScoreComponents::ZERO;
    }
    let overlap = pred.intersection(gold).count() as f64;
    let precision = overlap / pred.len() as f64;
    let recall = overlap / gold.len() as f64;
    ScoreComponents {
        em: if pred == gold { 1.0 } else { 0.0 },
        precision,
        recall,
        f1: f1_from(precision, recall),
    }
}

pub fn support_score<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>, flavor: Flavor) -> f64 {
    set_components(pred, gold).pick(flavor)
}

/// Joint metric: EM is the product of the two EMs; F1 is computed from the
/// products of the precisions and of the recalls.
pub fn joint_components(ans: &ScoreComponents, supp: &ScoreComponents) -> ScoreComponents {
    let precision = ans.precision * supp.precision;
    let recall = ans.recall * supp.recall;
    ScoreComponents {
        em: ans.em * supp.em,
        precision,
        recall,
        f1: f1_from(precision, recall),
    }
}

/// The trivial combination operator for answers: argmax by confidence, ties
/// broken by the earlier member. Members without an answer prediction do not
/// participate.
pub fn combine_answer<'a>(members: &[(&'a str, f64)]) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for (answer, score) in members {
        match best {
            Some((_, best_score)) if *score <= best_score => {}
            _ => best = Some((answer, *score)),
        }
    }
    best.map(|(answer, _)| answer)
}

/// The trivial combination operator for supports: set union.
pub fn combine_support<'a, T: Ord + Clone + 'a>(
    sets: impl IntoIterator<Item = &'a BTreeSet<T>>,
) -> BTreeSet<T> {
    let mut union = BTreeSet::new();
    for set in sets {
        union.extend(set.iter().cloned());
    }
    union
}

/// One question's score under one evaluation mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub qid: String,
    pub value: f64,
    pub mode: Mode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub questions: u64,
    pub groups: u64,
    pub instances: u64,
    pub unmatched_predictions: u64,
    pub missing_predictions: u64,
}

/// Per-question values plus bookkeeping, before aggregation.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreOutcome {
    pub mode: Mode,
    pub per_question: Vec<QuestionScore>,
    pub counts: Counts,
    pub warnings: Vec<String>,
}

/// Aggregate report serialized for external consumers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mode: Mode,
    pub metric: MetricKind,
    pub aggregate: Option<f64>,
    pub no_questions_scored: bool,
    pub per_question: Vec<QuestionScore>,
    pub counts: Counts,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    pub inputs: BTreeMap<String, String>,
}

/// Pairwise summation: bit-stable regardless of how work was parallelized
/// upstream, since the reduction tree depends only on the sorted order.
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Sort per-question scores by qid and take the arithmetic mean.
pub fn aggregate_report(
    kind: MetricKind,
    outcome: ScoreOutcome,
    inputs: BTreeMap<String, String>,
) -> ScoreReport {
    let mut per_question = outcome.per_question;
    per_question.sort_by(|a, b| a.qid.cmp(&b.qid));
    let aggregate = if per_question.is_empty() {
        None
    } else {
        let values: Vec<f64> = per_question.iter().map(|q| q.value).collect();
        Some(pairwise_sum(&values) / values.len() as f64)
    };
    ScoreReport {
        mode: outcome.mode,
        metric: kind,
        aggregate,
        no_questions_scored: per_question.is_empty(),
        per_question,
        counts: outcome.counts,
        warnings: outcome.warnings,
        inputs,
    }
}

/// Expected score drop from sufficiency-label noise: with proxy probability
/// `p` per distractor and `n` distractors, sums the binomial weights of
/// seeing k proxies times the 1/(k+1) chance of picking the annotated
/// support.
pub fn expected_sufficiency_noise_drop(p: f64, n: u32) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p out of range");
    (1..=n)
        .map(|k| {
            binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
                / f64::from(k + 1)
        })
        .sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * f64::from(n - i) / f64::from(i + 1);
    }
    c
}

fn answer_of(prediction: Option<&Prediction>) -> Option<(&str, f64)> {
    prediction
        .and_then(|p| p.answer.as_ref())
        .map(|a| (a.text.as_str(), a.score))
}

fn support_p_of(prediction: Option<&Prediction>) -> BTreeSet<String> {
    prediction
        .and_then(|p| p.support_p.clone())
        .unwrap_or_default()
}

fn value_for(
    kind: MetricKind,
    ans: &ScoreComponents,
    supp: &ScoreComponents,
) -> f64 {
    match kind.task {
        Task::Ans => ans.pick(kind.flavor),
        Task::SuppP | Task::SuppS => supp.pick(kind.flavor),
        Task::AnsAndSuppP | Task::AnsAndSuppS => joint_components(ans, supp).pick(kind.flavor),
    }
}

fn reject_sentence_tasks(kind: MetricKind) -> Result<(), ScoreError> {
    if kind.task.needs_sentence_support() {
        return Err(ScoreError::SentenceGoldUnavailable(kind.task));
    }
    Ok(())
}

fn check_variant(dataset: &DerivedDataset, expected: Variant) -> Result<(), ScoreError> {
    for inst in &dataset.instances {
        if inst.variant != expected {
            return Err(ScoreError::VariantMismatch {
                expected: expected.tag(),
                found: inst.variant.tag().to_string(),
                instance_id: inst.instance_id.clone(),
            });
        }
    }
    Ok(())
}

fn count_unmatched(predictions: &PredictionSet, ids: &BTreeSet<&str>) -> u64 {
    predictions
        .by_instance
        .keys()
        .filter(|id| !ids.contains(id.as_str()))
        .count() as u64
}

/// Groups of one question, in generation order.
struct QuestionGroups<'a> {
    qid: String,
    groups: Vec<Vec<&'a DerivedInstance>>,
}

fn questions_in_order(dataset: &DerivedDataset) -> Vec<QuestionGroups<'_>> {
    let mut by_qid: Vec<QuestionGroups> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (_, members) in group_by(dataset) {
        let qid = members[0].qid.clone();
        let slot = *index.entry(qid.clone()).or_insert_with(|| {
            by_qid.push(QuestionGroups {
                qid,
                groups: Vec::new(),
            });
            by_qid.len() - 1
        });
        by_qid[slot].groups.push(members);
    }
    by_qid
}

/// First answer label in member order across a question's groups.
fn answer_gold<'a>(groups: &[Vec<&'a DerivedInstance>]) -> Option<&'a AnswerValue> {
    groups
        .iter()
        .flat_map(|g| g.iter())
        .find_map(|m| m.labels.ans.as_ref())
}

/// Direct evaluation of predictions against a source dataset. Predictions are
/// keyed by qid; a missing prediction scores 0 and is counted.
pub fn score_direct(
    dataset: &SourceDataset,
    predictions: &PredictionSet,
    kind: MetricKind,
) -> ScoreOutcome {
    let mut counts = Counts {
        questions: 0,
        groups: dataset.questions.len() as u64,
        instances: dataset.questions.len() as u64,
        unmatched_predictions: 0,
        missing_predictions: 0,
    };
    let ids: BTreeSet<&str> = dataset.questions.iter().map(|q| q.qid.as_str()).collect();
    counts.unmatched_predictions = count_unmatched(predictions, &ids);
    let mut per_question = Vec::with_capacity(dataset.questions.len());
    for q in &dataset.questions {
        let prediction = predictions.get(&q.qid);
        if prediction.is_none() {
            counts.missing_predictions += 1;
        }
        let ans = answer_components(answer_of(prediction).map(|(text, _)| text), &q.answer);
        let supp = match kind.task {
            Task::Ans => ScoreComponents::ZERO,
            Task::SuppP | Task::AnsAndSuppP => {
                set_components(&support_p_of(prediction), &q.supporting_fact_ids)
            }
            Task::SuppS | Task::AnsAndSuppS => {
                let pred: BTreeSet<(String, usize)> = prediction
                    .and_then(|p| p.support_s.clone())
                    .unwrap_or_default();
                let gold: BTreeSet<(String, usize)> = q
                    .supporting_sentence_refs
                    .iter()
                    .map(|r| r.as_pair())
                    .collect();
                set_components(&pred, &gold)
            }
        };
        counts.questions += 1;
        per_question.push(QuestionScore {
            qid: q.qid.clone(),
            value: value_for(kind, &ans, &supp),
            mode: Mode::Direct,
        });
    }
    ScoreOutcome {
        mode: Mode::Direct,
        per_question,
        counts,
        warnings: Vec::new(),
    }
}

/// Value of one probe group under the trivial combination operators. Any
/// member without a prediction zeroes the group.
fn probe_group_value(
    members: &[&DerivedInstance],
    gold_ans: Option<&AnswerValue>,
    predictions: &PredictionSet,
    kind: MetricKind,
    counts: &mut Counts,
) -> f64 {
    let preds: Vec<Option<&Prediction>> = members
        .iter()
        .map(|m| predictions.get(&m.instance_id))
        .collect();
    let missing = preds.iter().filter(|p| p.is_none()).count() as u64;
    if missing > 0 {
        counts.missing_predictions += missing;
        return 0.0;
    }
    let gold_supp: BTreeSet<String> = members
        .iter()
        .filter_map(|m| m.labels.supp.as_ref())
        .flat_map(|s| s.iter().cloned())
        .collect();
    let answers: Vec<(&str, f64)> = preds.iter().filter_map(|p| answer_of(*p)).collect();
    let combined_answer = combine_answer(&answers);
    let ans = match gold_ans {
        Some(gold) => answer_components(combined_answer, gold),
        None => ScoreComponents::ZERO,
    };
    let union: BTreeSet<String> = preds
        .iter()
        .map(|p| support_p_of(*p))
        .fold(BTreeSet::new(), |mut acc, s| {
            acc.extend(s);
            acc
        });
    let supp = set_components(&union, &gold_supp);
    value_for(kind, &ans, &supp)
}

/// Grouped probe metric over a whole probe dataset: within each group apply
/// the trivial combination, score against the question's gold, and take the
/// max over that question's groups.
pub fn score_probe(
    dataset: &DerivedDataset,
    predictions: &PredictionSet,
    kind: MetricKind,
) -> Result<ScoreOutcome, ScoreError> {
    reject_sentence_tasks(kind)?;
    check_variant(dataset, Variant::Probe)?;
    let questions = questions_in_order(dataset);
    let ids: BTreeSet<&str> = dataset
        .instances
        .iter()
        .map(|i| i.instance_id.as_str())
        .collect();
    let mut counts = Counts {
        instances: dataset.instances.len() as u64,
        unmatched_predictions: count_unmatched(predictions, &ids),
        ..Counts::default()
    };
    let mut warnings = Vec::new();
    let mut per_question = Vec::with_capacity(questions.len());
    for question in &questions {
        for group in &question.groups {
            if group.len() != 2 {
                return Err(ScoreError::MalformedGroup {
                    group_id: group[0].group_id.clone(),
                    message: format!("probe group must have 2 members, found {}", group.len()),
                });
            }
        }
        counts.groups += question.groups.len() as u64;
        let gold_ans = answer_gold(&question.groups);
        if kind.task.needs_answer() && gold_ans.is_none() {
            warnings.push(format!(
                "question {} skipped: no answer label in any probe member",
                question.qid
            ));
            continue;
        }
        let mut best = 0.0f64;
        for group in &question.groups {
            let value = probe_group_value(group, gold_ans, predictions, kind, &mut counts);
            best = best.max(value);
        }
        counts.questions += 1;
        per_question.push(QuestionScore {
            qid: question.qid.clone(),
            value: best,
            mode: Mode::Probe,
        });
    }
    Ok(ScoreOutcome {
        mode: Mode::Probe,
        per_question,
        counts,
        warnings,
    })
}

/// Check that every member's sufficiency label was predicted; returns false
/// (and counts missing) on any gap or mistake.
fn suff_all_correct(
    members: &[&DerivedInstance],
    predictions: &PredictionSet,
    counts: &mut Counts,
) -> bool {
    let mut ok = true;
    for member in members {
        let expected = member.labels.suff.expect("sufficiency-labeled member");
        match predictions.get(&member.instance_id).and_then(|p| p.suff) {
            None => {
                counts.missing_predictions += 1;
                ok = false;
            }
            Some(predicted) => {
                if predicted != expected {
                    ok = false;
                }
            }
        }
    }
    ok
}

/// Conditional transformed metric: 0 on any sufficiency mistake, otherwise
/// the base metric on the unique sufficient member's own predictions.
pub fn score_transform(
    dataset: &DerivedDataset,
    predictions: &PredictionSet,
    kind: MetricKind,
) -> Result<ScoreOutcome, ScoreError> {
    reject_sentence_tasks(kind)?;
    check_variant(dataset, Variant::Transform)?;
    let questions = questions_in_order(dataset);
    let ids: BTreeSet<&str> = dataset
        .instances
        .iter()
        .map(|i| i.instance_id.as_str())
        .collect();
    let mut counts = Counts {
        instances: dataset.instances.len() as u64,
        unmatched_predictions: count_unmatched(predictions, &ids),
        ..Counts::default()
    };
    let mut per_question = Vec::with_capacity(questions.len());
    for question in &questions {
        if question.groups.len() != 1 {
            return Err(ScoreError::MalformedGroup {
                group_id: format!("{}#transform#-", question.qid),
                message: format!(
                    "transform question must have 1 group, found {}",
                    question.groups.len()
                ),
            });
        }
        let members = &question.groups[0];
        let sufficient: Vec<&&DerivedInstance> = members
            .iter()
            .filter(|m| m.labels.suff == Some(1))
            .collect();
        if sufficient.len() != 1 {
            return Err(ScoreError::MalformedGroup {
                group_id: members[0].group_id.clone(),
                message: format!("expected exactly 1 sufficient member, found {}", sufficient.len()),
            });
        }
        let sufficient = *sufficient[0];
        let gold_supp = sufficient
            .labels
            .supp
            .as_ref()
            .expect("sufficient member carries support");
        // a balanced (training-only) export has dropped insufficient members
        let expected_members = (1usize << gold_supp.len()) - 1;
        if members.len() != expected_members {
            return Err(ScoreError::BalancedDataset {
                group_id: members[0].group_id.clone(),
                found: members.len(),
                expected: expected_members,
            });
        }
        counts.groups += 1;
        let value = if suff_all_correct(members, predictions, &mut counts) {
            let prediction = predictions.get(&sufficient.instance_id);
            let gold_ans = sufficient
                .labels
                .ans
                .as_ref()
                .expect("sufficient member carries answer");
            let ans = answer_components(answer_of(prediction).map(|(t, _)| t), gold_ans);
            let supp = set_components(&support_p_of(prediction), gold_supp);
            value_for(kind, &ans, &supp)
        } else {
            0.0
        };
        counts.questions += 1;
        per_question.push(QuestionScore {
            qid: question.qid.clone(),
            value,
            mode: Mode::Transform,
        });
    }
    Ok(ScoreOutcome {
        mode: Mode::Transform,
        per_question,
        counts,
        warnings: Vec::new(),
    })
}

/// Probe-of-transform metric: per group, 0 if any of the three sufficiency
/// labels is predicted wrongly, else the grouped probe combination over the
/// two partial-support members; max over the question's groups.
pub fn score_probe_transform(
    dataset: &DerivedDataset,
    predictions: &PredictionSet,
    kind: MetricKind,
) -> Result<ScoreOutcome, ScoreError> {
    reject_sentence_tasks(kind)?;
    check_variant(dataset, Variant::ProbeOfTransform)?;
    let questions = questions_in_order(dataset);
    let ids: BTreeSet<&str> = dataset
        .instances
        .iter()
        .map(|i| i.instance_id.as_str())
        .collect();
    let mut counts = Counts {
        instances: dataset.instances.len() as u64,
        unmatched_predictions: count_unmatched(predictions, &ids),
        ..Counts::default()
    };
    let mut warnings = Vec::new();
    let mut per_question = Vec::with_capacity(questions.len());
    for question in &questions {
        for group in &question.groups {
            if group.len() != 3 {
                return Err(ScoreError::MalformedGroup {
                    group_id: group[0].group_id.clone(),
                    message: format!(
                        "probe-of-transform group must have 3 members, found {}",
                        group.len()
                    ),
                });
            }
        }
        counts.groups += question.groups.len() as u64;
        let gold_ans = answer_gold(&question.groups);
        if kind.task.needs_answer() && gold_ans.is_none() {
            warnings.push(format!(
                "question {} skipped: no answer label in any probe-of-transform member",
                question.qid
            ));
            continue;
        }
        let mut best = 0.0f64;
        for group in &question.groups {
            let value = if suff_all_correct(group, predictions, &mut counts) {
                // member 2's answer/support outputs are ignored by design
                probe_group_value(&group[..2], gold_ans, predictions, kind, &mut counts)
            } else {
                0.0
            };
            best = best.max(value);
        }
        counts.questions += 1;
        per_question.push(QuestionScore {
            qid: question.qid.clone(),
            value: best,
            mode: Mode::ProbeTransform,
        });
    }
    Ok(ScoreOutcome {
        mode: Mode::ProbeTransform,
        per_question,
        counts,
        warnings,
    })
}

/// Conditional disconnected-reasoning score: the question-wise minimum of a
/// model's direct score and its grouped probe score. Only qids present in
/// both inputs are scored.
pub fn conditional_dire_score(direct: &ScoreOutcome, probe: &ScoreOutcome) -> ScoreOutcome {
    let direct_map: BTreeMap<&str, f64> = direct
        .per_question
        .iter()
        .map(|q| (q.qid.as_str(), q.value))
        .collect();
    let probe_map: BTreeMap<&str, f64> = probe
        .per_question
        .iter()
        .map(|q| (q.qid.as_str(), q.value))
        .collect();
    let mut per_question = Vec::new();
    for (qid, direct_value) in &direct_map {
        if let Some(probe_value) = probe_map.get(qid) {
            per_question.push(QuestionScore {
                qid: qid.to_string(),
                value: direct_value.min(*probe_value),
                mode: Mode::ConditionalDire,
            });
        }
    }
    let only_direct = direct_map.len() - per_question.len();
    let only_probe = probe_map.len() - per_question.len();
    let mut warnings = Vec::new();
    if per_question.is_empty() && (!direct_map.is_empty() || !probe_map.is_empty()) {
        warnings.push("direct and probe scores share no qid; nothing scored".to_string());
    } else if only_direct + only_probe > 0 {
        warnings.push(format!(
            "{only_direct} qid(s) only in direct scores, {only_probe} only in probe scores"
        ));
    }
    let counts = Counts {
        questions: per_question.len() as u64,
        groups: direct.counts.groups + probe.counts.groups,
        instances: direct.counts.instances + probe.counts.instances,
        unmatched_predictions: direct.counts.unmatched_predictions
            + probe.counts.unmatched_predictions,
        missing_predictions: direct.counts.missing_predictions
            + probe.counts.missing_predictions
            + (only_direct + only_probe) as u64,
    };
    ScoreOutcome {
        mode: Mode::ConditionalDire,
        per_question,
        counts,
        warnings,
    }
}
