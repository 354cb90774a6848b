//! The probe of the transformed dataset: tests whether sufficiency labels can
//! be predicted from each side of a bi-partition independently, without any
//! cross-fact interaction.
//!
//! Every instance context has exactly `|C| - |F_s|` facts, one fewer than the
//! transform's contexts, because each partial-support member removes one side
//! of the partition plus its enlarged normalization set.

use std::collections::BTreeSet;

use crate::combinatorics::{
    derive_stream, proper_bipartitions, sample_subset, Purpose, SeedContext,
};
use crate::derived::{DerivedDataset, DerivedGroup, DerivedInstance, LabelSet, Origin, Variant};
use crate::model::{Fact, GeneratorMode, SourceDataset, SourceQuestion};
use crate::probe::{answer_present, GenerationReport, SkippedQuestion};
use crate::transform::{NormalizationPlan, PlanSet};

/// Skip reason: the question has no recorded normalization plan (it was
/// skipped by the transform).
pub const REASON_NO_PLAN: &str = "no-plan";

/// Build the probe-of-transform groups for one question. The plan must be the
/// one recorded by the transform so both datasets share the same F_r.
pub fn probe_transform_question(
    q: &SourceQuestion,
    plan: &NormalizationPlan,
    global_seed: u64,
) -> Result<Vec<DerivedGroup>, &'static str> {
    if let Some(reason) = q.rejection_for(GeneratorMode::ProbeTransform) {
        return Err(reason);
    }
    let f_r_pool: Vec<String> = plan.f_r_set.iter().cloned().collect();
    let partitions = proper_bipartitions(&q.supporting_fact_ids).expect("|F_s| >= 2");
    let mut groups = Vec::with_capacity(partitions.len());
    for partition in partitions {
        let key = partition.key();
        let mut members = Vec::with_capacity(3);
        for (member_index, (own_side, other_side)) in [
            (partition.side1(), partition.side2()),
            (partition.side2(), partition.side1()),
        ]
        .into_iter()
        .enumerate()
        {
            let f_r1 = &plan.per_subset[&crate::combinatorics::subset_key(own_side)];
            let spare_pool: Vec<String> = f_r_pool
                .iter()
                .filter(|id| !f_r1.contains(*id))
                .cloned()
                .collect();
            assert!(
                !spare_pool.is_empty(),
                "internal invariant: F_r \\ F_r1 empty for {} / {}",
                q.qid,
                key
            );
            let mut stream = derive_stream(&SeedContext::new(
                global_seed,
                &q.qid,
                Purpose::ProbeNormalization {
                    partition_key: key.clone(),
                    side: member_index as u8 + 1,
                },
            ));
            let extra = sample_subset(&mut stream, &spare_pool, 1).expect("pool non-empty");
            let mut removed: BTreeSet<String> = own_side.clone();
            removed.extend(f_r1.iter().cloned());
            removed.extend(extra);
            let retained: Vec<&Fact> = other_side.iter().filter_map(|id| q.fact(id)).collect();
            let ans = answer_present(&q.answer, &retained).then(|| q.answer.clone());
            members.push(DerivedInstance::new(
                &q.qid,
                Variant::ProbeOfTransform,
                Some(&key),
                member_index,
                &q.question,
                q.context_without(&removed),
                LabelSet::partial_support(ans, other_side.clone()),
            ));
        }
        members.push(DerivedInstance::new(
            &q.qid,
            Variant::ProbeOfTransform,
            Some(&key),
            2,
            &q.question,
            q.context_without(&q.supporting_fact_ids),
            LabelSet::no_support(),
        ));
        groups.push(DerivedGroup { members });
    }
    Ok(groups)
}

/// Probe the transform over a whole dataset, reusing the transform's plans.
/// Questions without a plan are skipped with `no-plan`.
pub fn probe_transform_dataset(
    dataset: &SourceDataset,
    plans: &PlanSet,
    global_seed: u64,
) -> (DerivedDataset, GenerationReport) {
    let mut groups = Vec::new();
    let mut report = GenerationReport::default();
    for q in &dataset.questions {
        let outcome = match plans.plans.get(&q.qid) {
            None => Err(REASON_NO_PLAN),
            Some(plan) => probe_transform_question(q, plan, global_seed),
        };
        match outcome {
            Ok(question_groups) => {
                report.groups += question_groups.len() as u64;
                report.instances += question_groups
                    .iter()
                    .map(|g| g.members.len() as u64)
                    .sum::<u64>();
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
        Variant::ProbeOfTransform,
        global_seed,
    );
    (DerivedDataset::from_groups(groups, origin), report)
}
