//! The contrastive support-sufficiency transform and the trivial transform.
//!
//! Each question becomes one group holding a single sufficient-context
//! instance and one insufficient-context instance per non-empty proper subset
//! of the supporting facts. Contexts are length-normalized: every instance in
//! a group has exactly `|C| - |F_s| + 1` facts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    derive_stream, proper_nonempty_subsets, sample_subset, subset_key, Purpose, SeedContext,
};
use crate::derived::{
    DerivedDataset, DerivedGroup, DerivedInstance, LabelSet, Origin, Variant,
};
use crate::model::{GeneratorMode, SourceDataset, SourceQuestion, REASON_CONTEXT_TOO_SMALL};
use crate::probe::{GenerationReport, SkippedQuestion};

/// The fixed fact removals that keep all contexts of one transformed group
/// the same length: `f_r_set` (F_r) is removed from the sufficient instance,
/// and each insufficient instance for subset `F_s1` additionally removes the
/// recorded `per_subset` set (F_r1) of size `|F_s| - |F_s1| - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPlan {
    pub qid: String,
    pub f_r_set: BTreeSet<String>,
    pub per_subset: BTreeMap<String, BTreeSet<String>>,
}

/// All plans for one transform run, persisted so the probe of the transform
/// can reuse the identical F_r sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSet {
    pub global_seed: u64,
    pub source_checksum: String,
    pub plans: BTreeMap<String, NormalizationPlan>,
}

impl PlanSet {
    pub fn read(reader: impl std::io::Read) -> Result<Self, serde_json::Error> {
        serde_json::from_reader(reader)
    }

    pub fn write(&self, writer: &mut impl std::io::Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *writer, self)?;
        writer.write_all(b"\n")
    }
}

/// Draw the normalization sets for one question.
///
/// F_r has size `|F_s| - 1`, drawn from the non-supporting facts; each
/// non-empty proper subset F_s1 gets an independently drawn F_r1 from F_r.
pub fn plan_normalization(
    q: &SourceQuestion,
    global_seed: u64,
) -> Result<NormalizationPlan, &'static str> {
    if let Some(reason) = q.rejection_for(GeneratorMode::Transform) {
        return Err(reason);
    }
    let k = q.supporting_fact_ids.len();
    let pool = q.non_supporting_ids();
    let mut stream = derive_stream(&SeedContext::new(
        global_seed,
        &q.qid,
        Purpose::LengthNormalization,
    ));
    let f_r_set = sample_subset(&mut stream, &pool, k - 1)
        .map_err(|_| REASON_CONTEXT_TOO_SMALL)?;
    let f_r_pool: Vec<String> = f_r_set.iter().cloned().collect();

    let mut per_subset = BTreeMap::new();
    for subset in proper_nonempty_subsets(&q.supporting_fact_ids).expect("|F_s| >= 2") {
        let key = subset_key(&subset);
        let size = k - subset.len() - 1;
        let mut stream = derive_stream(&SeedContext::new(
            global_seed,
            &q.qid,
            Purpose::SubsetNormalization {
                subset_key: key.clone(),
            },
        ));
        let f_r1 = sample_subset(&mut stream, &f_r_pool, size).expect("|F_r1| < |F_r|");
        per_subset.insert(key, f_r1);
    }
    Ok(NormalizationPlan {
        qid: q.qid.clone(),
        f_r_set,
        per_subset,
    })
}

/// Build the transformed group for one question: member 0 is the sufficient
/// instance, members 1.. are the insufficient instances in subset order.
pub fn transform_question(q: &SourceQuestion, plan: &NormalizationPlan) -> DerivedGroup {
    let mut members = Vec::new();
    members.push(DerivedInstance::new(
        &q.qid,
        Variant::Transform,
        None,
        0,
        &q.question,
        q.context_without(&plan.f_r_set),
        LabelSet::sufficient(q.answer.clone(), q.supporting_fact_ids.clone()),
    ));
    for (i, subset) in proper_nonempty_subsets(&q.supporting_fact_ids)
        .expect("|F_s| >= 2")
        .into_iter()
        .enumerate()
    {
        let f_r1 = &plan.per_subset[&subset_key(&subset)];
        let removed: BTreeSet<String> = subset.union(f_r1).cloned().collect();
        members.push(DerivedInstance::new(
            &q.qid,
            Variant::Transform,
            None,
            i + 1,
            &q.question,
            q.context_without(&removed),
            LabelSet::insufficient(),
        ));
    }
    DerivedGroup { members }
}

/// Build the trivial-transform group: three fully labeled copies, each
/// dropping one independently drawn non-supporting fact (the three drops need
/// not be distinct).
pub fn trivial_transform_question(
    q: &SourceQuestion,
    global_seed: u64,
) -> Result<DerivedGroup, &'static str> {
    let pool = q.non_supporting_ids();
    if pool.is_empty() {
        return Err(REASON_CONTEXT_TOO_SMALL);
    }
    let mut members = Vec::new();
    for copy in 0..3 {
        let mut stream = derive_stream(&SeedContext::new(
            global_seed,
            &q.qid,
            Purpose::TrivialCopy { index: copy },
        ));
        let dropped = sample_subset(&mut stream, &pool, 1).expect("pool non-empty");
        members.push(DerivedInstance::new(
            &q.qid,
            Variant::Trivial,
            None,
            copy,
            &q.question,
            q.context_without(&dropped),
            LabelSet::full(q.answer.clone(), q.supporting_fact_ids.clone()),
        ));
    }
    Ok(DerivedGroup { members })
}

/// Transform a whole dataset. With `balance_insufficient`, each question
/// keeps the sufficient member plus one seeded-sampled insufficient member,
/// giving a 1:1 insufficient-to-sufficient ratio for training exports;
/// balanced files are not scorable under the grouped transform metric.
pub fn transform_dataset(
    dataset: &SourceDataset,
    global_seed: u64,
    balance_insufficient: bool,
) -> (DerivedDataset, PlanSet, GenerationReport) {
    let mut groups = Vec::new();
    let mut plans = BTreeMap::new();
    let mut report = GenerationReport::default();
    for q in &dataset.questions {
        match plan_normalization(q, global_seed) {
            Ok(plan) => {
                let mut group = transform_question(q, &plan);
                if balance_insufficient {
                    balance_group(&mut group, &plan, global_seed, &q.qid);
                }
                report.groups += 1;
                report.instances += group.members.len() as u64;
                plans.insert(q.qid.clone(), plan);
                groups.push(group);
            }
            Err(reason) => report.skipped.push(SkippedQuestion {
                qid: q.qid.clone(),
                reason: reason.to_string(),
            }),
        }
    }
    let source_checksum = crate::manifest::dataset_content_checksum(dataset);
    let mut origin = Origin::new(source_checksum.clone(), Variant::Transform, global_seed);
    origin.balance_insufficient = balance_insufficient;
    origin.plans = Some(plans.clone());
    let derived = DerivedDataset::from_groups(groups, origin);
    let plan_set = PlanSet {
        global_seed,
        source_checksum,
        plans,
    };
    (derived, plan_set, report)
}

/// Keep member 0 plus the insufficient member for one seeded-sampled subset;
/// member indices are preserved so instance ids stay stable.
pub(crate) fn balance_group(
    group: &mut DerivedGroup,
    plan: &NormalizationPlan,
    global_seed: u64,
    qid: &str,
) {
    let keys: Vec<String> = plan.per_subset.keys().cloned().collect();
    let mut stream = derive_stream(&SeedContext::new(global_seed, qid, Purpose::Split));
    let chosen = sample_subset(&mut stream, &keys, 1).expect("at least two subsets");
    let chosen_key = chosen.into_iter().next().unwrap();
    let keep_index = keys.iter().position(|k| k == &chosen_key).unwrap() + 1;
    group
        .members
        .retain(|m| m.member_index == 0 || m.member_index == keep_index);
}

/// Trivial transform over a whole dataset.
pub fn trivial_transform_dataset(
    dataset: &SourceDataset,
    global_seed: u64,
) -> (DerivedDataset, GenerationReport) {
    let mut groups = Vec::new();
    let mut report = GenerationReport::default();
    for q in &dataset.questions {
        match trivial_transform_question(q, global_seed) {
            Ok(group) => {
                report.groups += 1;
                report.instances += group.members.len() as u64;
                groups.push(group);
            }
            Err(reason) => report.skipped.push(SkippedQuestion {
                qid: q.qid.clone(),
                reason: reason.to_string(),
            }),
        }
    }
    let origin = Origin::new(
        crate::manifest::dataset_content_checksum(dataset),
        Variant::Trivial,
        global_seed,
    );
    (DerivedDataset::from_groups(groups, origin), report)
}
