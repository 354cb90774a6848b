//! Probe-dataset generation: for each proper bi-partition of a question's
//! supporting facts, a two-member group whose contexts each omit one side.
//! A model that scores well on these groups under the grouped metric can
//! reach the test output without ever seeing all supporting facts at once.

use serde::{Deserialize, Serialize};

use crate::combinatorics::proper_bipartitions;
use crate::derived::{DerivedDataset, DerivedGroup, DerivedInstance, LabelSet, Origin, Variant};
use crate::model::{
    normalize_answer, AnswerValue, Fact, GeneratorMode, SourceDataset, SourceQuestion,
};

/// A question a generator could not process, and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedQuestion {
    pub qid: String,
    pub reason: String,
}

/// Per-run bookkeeping emitted next to every generated dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub skipped: Vec<SkippedQuestion>,
    pub groups: u64,
    pub instances: u64,
}

/// Whether the answer can still be produced from the retained supporting
/// facts. Yes/no answers are always answerable; a span answer must occur as a
/// contiguous token subsequence of some single retained supporting fact.
pub fn answer_present(answer: &AnswerValue, retained_support: &[&Fact]) -> bool {
    let text = match answer {
        AnswerValue::Yes | AnswerValue::No => return true,
        AnswerValue::Span { text } => text,
    };
    let needle = normalize_answer(text);
    if needle.is_empty() {
        return true;
    }
    retained_support.iter().any(|fact| {
        let haystack = normalize_answer(&fact.full_text());
        haystack
            .windows(needle.len())
            .any(|window| window == needle.as_slice())
    })
}

/// Build the probe groups for one question: one group per canonical
/// bi-partition, each with two members whose contexts omit one side and whose
/// support label is the other side.
pub fn probe_question(q: &SourceQuestion) -> Result<Vec<DerivedGroup>, &'static str> {
    if let Some(reason) = q.rejection_for(GeneratorMode::Probe) {
        return Err(reason);
    }
    let partitions = proper_bipartitions(&q.supporting_fact_ids).expect("|F_s| >= 2");
    let mut groups = Vec::with_capacity(partitions.len());
    for partition in partitions {
        let key = partition.key();
        let mut members = Vec::with_capacity(2);
        for (member_index, (removed, labeled)) in [
            (partition.side1(), partition.side2()),
            (partition.side2(), partition.side1()),
        ]
        .into_iter()
        .enumerate()
        {
            let retained: Vec<&Fact> = labeled
                .iter()
                .filter_map(|id| q.fact(id))
                .collect();
            let ans = answer_present(&q.answer, &retained).then(|| q.answer.clone());
            members.push(DerivedInstance::new(
                &q.qid,
                Variant::Probe,
                Some(&key),
                member_index,
                &q.question,
                q.context_without(removed),
                LabelSet::probe(ans, labeled.clone()),
            ));
        }
        groups.push(DerivedGroup { members });
    }
    Ok(groups)
}

/// Probe a whole dataset, preserving question order and reporting skips.
pub fn probe_dataset(dataset: &SourceDataset) -> (DerivedDataset, GenerationReport) {
    let mut groups = Vec::new();
    let mut report = GenerationReport::default();
    for q in &dataset.questions {
        match probe_question(q) {
            Ok(question_groups) => {
                report.groups += question_groups.len() as u64;
                report.instances += question_groups.iter().map(|g| g.members.len() as u64).sum::<u64>();
                groups.extend(question_groups);
            }
            Err(reason) => report.skipped.push(SkippedQuestion {
                qid: q.qid.clone(),
                reason: reason.to_string(),
            }),
        }
    }
    let origin = Origin::new(
        crate::manifest::dataset_content_checksum(dataset),
        Variant::Probe,
        0,
    );
    (DerivedDataset::from_groups(groups, origin), report)
}
