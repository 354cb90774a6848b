//! An independent naive scorer used as the metric oracle in acceptance
//! testing. It shares nothing with the main metrics path except the type
//! definitions: bi-partitions are re-enumerated recursively, every label is
//! re-derived from instance contexts and the source question, and the
//! EM/F1 arithmetic is re-implemented with different data structures.

use std::collections::{BTreeMap, BTreeSet};

use dire::combinatorics::DeterministicStream;
use dire::derived::{DerivedDataset, DerivedInstance};
use dire::metrics::{Flavor, MetricKind, Task};
use dire::model::{AnswerValue, SourceDataset, SourceQuestion};
use dire::predictions::{AnswerPrediction, Prediction, PredictionSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Probe,
    Transform,
    ProbeTransform,
}

// --- independent token / set arithmetic ---

fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else if !ch.is_ascii_punctuation() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out.retain(|t| t != "a" && t != "an" && t != "the");
    out
}

struct Parts {
    em: f64,
    precision: f64,
    recall: f64,
}

impl Parts {
    fn f1(&self) -> f64 {
        if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        }
    }
}

fn overlap_sorted(mut a: Vec<String>, mut b: Vec<String>) -> usize {
    a.sort();
    b.sort();
    let (mut i, mut j, mut shared) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared
}

fn answer_parts(pred: Option<&str>, gold: &AnswerValue) -> Parts {
    let pred = pred.unwrap_or("");
    match gold {
        AnswerValue::Yes | AnswerValue::No => {
            let expected = if matches!(gold, AnswerValue::Yes) { "yes" } else { "no" };
            let hit = if pred == expected { 1.0 } else { 0.0 };
            Parts {
                em: hit,
                precision: hit,
                recall: hit,
            }
        }
        AnswerValue::Span { text } => {
            let p = tokens(pred);
            let g = tokens(text);
            if p.is_empty() && g.is_empty() {
                return Parts {
                    em: 1.0,
                    precision: 1.0,
                    recall: 1.0,
                };
            }
            if p.is_empty() || g.is_empty() {
                return Parts {
                    em: 0.0,
                    precision: 0.0,
                    recall: 0.0,
                };
            }
            let em = if p == g { 1.0 } else { 0.0 };
            let shared = overlap_sorted(p.clone(), g.clone());
            Parts {
                em,
                precision: shared as f64 / p.len() as f64,
                recall: shared as f64 / g.len() as f64,
            }
        }
    }
}

fn set_parts(pred: &[String], gold: &BTreeSet<String>) -> Parts {
    let pred_set: BTreeSet<&String> = pred.iter().collect();
    if pred_set.is_empty() && gold.is_empty() {
        return Parts {
            em: 1.0,
            precision: 1.0,
            recall: 1.0,
        };
    }
    if pred_set.is_empty() || gold.is_empty() {
        return Parts {
            em: 0.0,
            precision: 0.0,
            recall: 0.0,
        };
    }
    let shared = pred_set.iter().filter(|id| gold.contains(**id)).count();
    let em = if pred_set.len() == gold.len() && shared == gold.len() {
        1.0
    } else {
        0.0
    };
    Parts {
        em,
        precision: shared as f64 / pred_set.len() as f64,
        recall: shared as f64 / gold.len() as f64,
    }
}

fn kind_value(kind: MetricKind, ans: &Parts, supp: &Parts) -> f64 {
    let pick = |p: &Parts| match kind.flavor {
        Flavor::Em => p.em,
        Flavor::F1 => p.f1(),
    };
    match kind.task {
        Task::Ans => pick(ans),
        Task::SuppP | Task::SuppS => pick(supp),
        Task::AnsAndSuppP | Task::AnsAndSuppS => match kind.flavor {
            Flavor::Em => ans.em * supp.em,
            Flavor::F1 => {
                let joint = Parts {
                    em: ans.em * supp.em,
                    precision: ans.precision * supp.precision,
                    recall: ans.recall * supp.recall,
                };
                joint.f1()
            }
        },
    }
}

// --- independent bi-partition / subset enumeration (recursive) ---

fn bipartitions(f_s: &BTreeSet<String>) -> Vec<(BTreeSet<String>, BTreeSet<String>)> {
    let items: Vec<&String> = f_s.iter().collect();
    let mut out = Vec::new();
    fn recurse(
        items: &[&String],
        index: usize,
        a: &mut Vec<String>,
        b: &mut Vec<String>,
        out: &mut Vec<(BTreeSet<String>, BTreeSet<String>)>,
    ) {
        if index == items.len() {
            if !b.is_empty() {
                out.push((
                    a.iter().cloned().collect(),
                    b.iter().cloned().collect(),
                ));
            }
            return;
        }
        a.push(items[index].clone());
        recurse(items, index + 1, a, b, out);
        a.pop();
        b.push(items[index].clone());
        recurse(items, index + 1, a, b, out);
        b.pop();
    }
    // the smallest element always goes to side a, so no partition repeats
    let mut a = vec![items[0].clone()];
    let mut b = Vec::new();
    recurse(&items, 1, &mut a, &mut b, &mut out);
    out
}

fn proper_subsets(f_s: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
    let items: Vec<&String> = f_s.iter().collect();
    let mut out = Vec::new();
    fn recurse(
        items: &[&String],
        index: usize,
        chosen: &mut Vec<String>,
        out: &mut Vec<BTreeSet<String>>,
    ) {
        if index == items.len() {
            if !chosen.is_empty() && chosen.len() < items.len() {
                out.push(chosen.iter().cloned().collect());
            }
            return;
        }
        chosen.push(items[index].clone());
        recurse(items, index + 1, chosen, out);
        chosen.pop();
        recurse(items, index + 1, chosen, out);
    }
    recurse(&items, 0, &mut Vec::new(), &mut out);
    out
}

// --- label re-derivation from contexts ---

fn retained_support(q: &SourceQuestion, inst: &DerivedInstance) -> BTreeSet<String> {
    inst.context
        .iter()
        .map(|f| f.fact_id.clone())
        .filter(|id| q.supporting_fact_ids.contains(id))
        .collect()
}

fn question_groups<'a>(
    qid: &str,
    derived: &'a DerivedDataset,
) -> Vec<Vec<&'a DerivedInstance>> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&DerivedInstance>> = BTreeMap::new();
    for inst in derived.instances.iter().filter(|i| i.qid == qid) {
        if !groups.contains_key(inst.group_id.as_str()) {
            order.push(inst.group_id.as_str());
        }
        groups.entry(inst.group_id.as_str()).or_default().push(inst);
    }
    order
        .into_iter()
        .map(|gid| {
            let mut members = groups.remove(gid).unwrap();
            members.sort_by_key(|m| m.member_index);
            members
        })
        .collect()
}

fn predicted_answer<'a>(preds: &'a PredictionSet, inst: &DerivedInstance) -> Option<(&'a str, f64)> {
    preds
        .get(&inst.instance_id)
        .and_then(|p| p.answer.as_ref())
        .map(|a| (a.text.as_str(), a.score))
}

fn predicted_support(preds: &PredictionSet, inst: &DerivedInstance) -> Vec<String> {
    preds
        .get(&inst.instance_id)
        .and_then(|p| p.support_p.as_ref())
        .map(|s| s.iter().cloned().collect())
        .unwrap_or_default()
}

/// Argmax with strict improvement, members already in index order.
fn argmax_answer<'a>(answers: &[(&'a str, f64)]) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for (text, score) in answers {
        if best.map(|(_, s)| *score > s).unwrap_or(true) {
            best = Some((text, *score));
        }
    }
    best.map(|(text, _)| text)
}

/// Trivially combine a slice of members and score against the source gold.
fn combined_value(
    q: &SourceQuestion,
    members: &[&DerivedInstance],
    preds: &PredictionSet,
    kind: MetricKind,
) -> f64 {
    if members
        .iter()
        .any(|m| preds.get(&m.instance_id).is_none())
    {
        return 0.0;
    }
    let answers: Vec<(&str, f64)> = members
        .iter()
        .filter_map(|m| predicted_answer(preds, m))
        .collect();
    let ans = answer_parts(argmax_answer(&answers), &q.answer);
    let mut union: Vec<String> = members
        .iter()
        .flat_map(|m| predicted_support(preds, m))
        .collect();
    union.sort();
    union.dedup();
    let supp = set_parts(&union, &q.supporting_fact_ids);
    kind_value(kind, &ans, &supp)
}

fn probe_value(
    q: &SourceQuestion,
    groups: &[Vec<&DerivedInstance>],
    preds: &PredictionSet,
    kind: MetricKind,
) -> f64 {
    let expected = bipartitions(&q.supporting_fact_ids);
    let mut seen: Vec<(BTreeSet<String>, BTreeSet<String>)> = Vec::new();
    let mut best = 0.0f64;
    for members in groups {
        assert_eq!(members.len(), 2, "probe group size");
        let retained0 = retained_support(q, members[0]);
        let retained1 = retained_support(q, members[1]);
        let removed0: BTreeSet<String> = q
            .supporting_fact_ids
            .difference(&retained0)
            .cloned()
            .collect();
        assert_eq!(retained1, removed0, "members are complementary sides");
        seen.push((removed0.clone(), retained0.clone()));
        best = best.max(combined_value(q, members, preds, kind));
    }
    assert_partition_collection(&expected, &seen);
    best
}

fn transform_value(
    q: &SourceQuestion,
    groups: &[Vec<&DerivedInstance>],
    preds: &PredictionSet,
    kind: MetricKind,
) -> f64 {
    assert_eq!(groups.len(), 1, "one transform group per question");
    let members = &groups[0];
    let mut sufficient: Option<&DerivedInstance> = None;
    let mut removed_subsets: Vec<BTreeSet<String>> = Vec::new();
    let mut all_correct = true;
    for member in members {
        let retained = retained_support(q, member);
        let expected_suff: i8 = if retained == q.supporting_fact_ids {
            assert!(sufficient.is_none(), "one sufficient member");
            sufficient = Some(member);
            1
        } else {
            let removed: BTreeSet<String> = q
                .supporting_fact_ids
                .difference(&retained)
                .cloned()
                .collect();
            assert!(!removed.is_empty() && removed.len() < q.supporting_fact_ids.len());
            removed_subsets.push(removed);
            0
        };
        match preds.get(&member.instance_id).and_then(|p| p.suff) {
            Some(predicted) if predicted == expected_suff => {}
            _ => all_correct = false,
        }
    }
    let sufficient = sufficient.expect("sufficient member exists");
    let mut expected_subsets = proper_subsets(&q.supporting_fact_ids);
    expected_subsets.sort();
    removed_subsets.sort();
    assert_eq!(removed_subsets, expected_subsets, "all proper subsets appear");
    if !all_correct {
        return 0.0;
    }
    let prediction = preds.get(&sufficient.instance_id);
    let ans = answer_parts(
        prediction
            .and_then(|p| p.answer.as_ref())
            .map(|a| a.text.as_str()),
        &q.answer,
    );
    let supp_pred = predicted_support(preds, sufficient);
    let supp = set_parts(&supp_pred, &q.supporting_fact_ids);
    kind_value(kind, &ans, &supp)
}

fn probe_transform_value(
    q: &SourceQuestion,
    groups: &[Vec<&DerivedInstance>],
    preds: &PredictionSet,
    kind: MetricKind,
) -> f64 {
    let expected = bipartitions(&q.supporting_fact_ids);
    let mut seen: Vec<(BTreeSet<String>, BTreeSet<String>)> = Vec::new();
    let mut best = 0.0f64;
    for members in groups {
        assert_eq!(members.len(), 3, "probe-of-transform group size");
        let mut all_correct = true;
        for member in members {
            let retained = retained_support(q, member);
            let expected_suff: i8 = if retained.is_empty() { -1 } else { 0 };
            match preds.get(&member.instance_id).and_then(|p| p.suff) {
                Some(predicted) if predicted == expected_suff => {}
                _ => all_correct = false,
            }
        }
        let retained0 = retained_support(q, members[0]);
        let retained1 = retained_support(q, members[1]);
        assert!(retained_support(q, members[2]).is_empty());
        assert_eq!(
            retained1,
            q.supporting_fact_ids
                .difference(&retained0)
                .cloned()
                .collect::<BTreeSet<String>>(),
        );
        seen.push((retained1.clone(), retained0.clone()));
        let value = if all_correct {
            combined_value(q, &members[..2], preds, kind)
        } else {
            0.0
        };
        best = best.max(value);
    }
    assert_partition_collection(&expected, &seen);
    best
}

fn assert_partition_collection(
    expected: &[(BTreeSet<String>, BTreeSet<String>)],
    seen: &[(BTreeSet<String>, BTreeSet<String>)],
) {
    let canon = |(a, b): &(BTreeSet<String>, BTreeSet<String>)| {
        if a.iter().next() < b.iter().next() {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        }
    };
    let mut expected: Vec<_> = expected.iter().map(canon).collect();
    let mut seen: Vec<_> = seen.iter().map(canon).collect();
    expected.sort();
    seen.sort();
    assert_eq!(expected, seen, "groups cover every bi-partition exactly once");
}

/// Naive per-question metric value, label-free.
pub fn question_value(
    q: &SourceQuestion,
    derived: &DerivedDataset,
    preds: &PredictionSet,
    mode: Mode,
    kind: MetricKind,
) -> f64 {
    let groups = question_groups(&q.qid, derived);
    match mode {
        Mode::Probe => probe_value(q, &groups, preds, kind),
        Mode::Transform => transform_value(q, &groups, preds, kind),
        Mode::ProbeTransform => probe_transform_value(q, &groups, preds, kind),
    }
}

/// Seeded, messy predictions: a mix of correct, wrong, partial, and missing
/// outputs so both scorer paths see every branch.
pub fn random_predictions(
    source: &SourceDataset,
    derived: &DerivedDataset,
    seed: u64,
) -> PredictionSet {
    let by_qid: BTreeMap<&str, &SourceQuestion> = source
        .questions
        .iter()
        .map(|q| (q.qid.as_str(), q))
        .collect();
    let mut set = PredictionSet {
        provenance: "random-test-predictions".to_string(),
        ..PredictionSet::default()
    };
    for inst in &derived.instances {
        let mut stream = DeterministicStream::from_parts(&[
            &seed.to_string(),
            &inst.instance_id,
            "randpred",
        ]);
        // 1 in 12 instances gets no prediction at all
        if stream.next_bounded(12) == 0 {
            continue;
        }
        let q = by_qid[inst.qid.as_str()];
        let context_ids: Vec<String> = inst.context.iter().map(|f| f.fact_id.clone()).collect();

        let answer = match stream.next_bounded(10) {
            0..=3 => {
                let text = match &q.answer {
                    AnswerValue::Span { text } => text.clone(),
                    AnswerValue::Yes => "yes".to_string(),
                    AnswerValue::No => "no".to_string(),
                };
                Some(text)
            }
            4..=6 => {
                let pick = stream.next_bounded(context_ids.len() as u64) as usize;
                Some(context_ids[pick].clone())
            }
            _ => None,
        };
        // coarse confidences so score ties actually occur
        let answer = answer.map(|text| AnswerPrediction {
            text,
            score: stream.next_bounded(4) as f64 / 4.0,
        });

        let support_p = match stream.next_bounded(10) {
            0..=3 => inst.labels.supp.clone(),
            4..=7 => {
                let size = stream.next_bounded(3) as usize;
                let mut picked = BTreeSet::new();
                for _ in 0..size {
                    let idx = stream.next_bounded(context_ids.len() as u64) as usize;
                    picked.insert(context_ids[idx].clone());
                }
                Some(picked)
            }
            _ => None,
        };

        let suff = inst.labels.suff.map(|label| {
            if stream.next_bounded(10) < 7 {
                label
            } else {
                match label {
                    1 => 0,
                    0 => 1,
                    _ => 0,
                }
            }
        });

        let prediction = Prediction {
            instance_id: inst.instance_id.clone(),
            answer,
            support_p,
            support_s: None,
            suff,
        };
        // a prediction with no content at all is not representable
        if prediction.answer.is_none() && prediction.support_p.is_none() && prediction.suff.is_none()
        {
            continue;
        }
        set.insert(prediction);
    }
    set
}
