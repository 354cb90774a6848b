//! Shared representation for generated datasets: probe, transform,
//! probe-of-transform, and trivial-transform instances with stable
//! identifiers and label records.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{derive_stream, sample_subset, Purpose, SeedContext};
use crate::model::{AnswerValue, Fact};
use crate::transform::NormalizationPlan;

/// Which generator produced an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Probe,
    Transform,
    ProbeOfTransform,
    Trivial,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Probe => "probe",
            Variant::Transform => "transform",
            Variant::ProbeOfTransform => "probe_of_transform",
            Variant::Trivial => "trivial",
        }
    }
}

/// How a sufficiency label is to be read. Transform labels live in {0, 1};
/// probe-of-transform labels live in {-1, 0}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuffSemantics {
    Transform,
    ProbeOfTransform,
    None,
}

/// Labels attached to a derived instance. Answer and support are optional by
/// design: insufficient contexts carry neither.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ans: Option<AnswerValue>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub supp: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub suff: Option<i8>,
    pub suff_semantics: SuffSemantics,
}

impl LabelSet {
    /// Probe member: partial support plus an answer when it is present.
    pub fn probe(ans: Option<AnswerValue>, supp: BTreeSet<String>) -> Self {
        Self {
            ans,
            supp: Some(supp),
            suff: None,
            suff_semantics: SuffSemantics::None,
        }
    }

    /// The sufficient member of a transform group.
    pub fn sufficient(ans: AnswerValue, supp: BTreeSet<String>) -> Self {
        Self {
            ans: Some(ans),
            supp: Some(supp),
            suff: Some(1),
            suff_semantics: SuffSemantics::Transform,
        }
    }

    /// An insufficient member of a transform group; no answer or support.
    pub fn insufficient() -> Self {
        Self {
            ans: None,
            supp: None,
            suff: Some(0),
            suff_semantics: SuffSemantics::Transform,
        }
    }

    /// A partial-support member of a probe-of-transform group.
    pub fn partial_support(ans: Option<AnswerValue>, supp: BTreeSet<String>) -> Self {
        Self {
            ans,
            supp: Some(supp),
            suff: Some(0),
            suff_semantics: SuffSemantics::ProbeOfTransform,
        }
    }

    /// The no-support member of a probe-of-transform group.
    pub fn no_support() -> Self {
        Self {
            ans: None,
            supp: None,
            suff: Some(-1),
            suff_semantics: SuffSemantics::ProbeOfTransform,
        }
    }

    /// A fully labeled trivial-transform member.
    pub fn full(ans: AnswerValue, supp: BTreeSet<String>) -> Self {
        Self {
            ans: Some(ans),
            supp: Some(supp),
            suff: None,
            suff_semantics: SuffSemantics::None,
        }
    }
}

/// Partition key used in group ids for variants without a bi-partition.
pub const NO_PARTITION_KEY: &str = "-";

/// Group id: `<qid>#<variant-tag>#<partition-key>`.
pub fn group_id(qid: &str, variant: Variant, partition_key: Option<&str>) -> String {
    format!(
        "{qid}#{}#{}",
        variant.tag(),
        partition_key.unwrap_or(NO_PARTITION_KEY)
    )
}

/// One generated instance, tied to its question, variant, and bi-partition
/// through its identifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedInstance {
    pub instance_id: String,
    pub group_id: String,
    pub qid: String,
    pub variant: Variant,
    pub member_index: usize,
    pub question: String,
    pub context: Vec<Fact>,
    pub labels: LabelSet,
}

impl DerivedInstance {
    pub fn new(
        qid: &str,
        variant: Variant,
        partition_key: Option<&str>,
        member_index: usize,
        question: &str,
        context: Vec<Fact>,
        labels: LabelSet,
    ) -> Self {
        let group_id = group_id(qid, variant, partition_key);
        Self {
            instance_id: format!("{group_id}#{member_index}"),
            group_id,
            qid: qid.to_string(),
            variant,
            member_index,
            question: question.to_string(),
            context,
            labels,
        }
    }

    pub fn context_ids(&self) -> BTreeSet<String> {
        self.context.iter().map(|f| f.fact_id.clone()).collect()
    }
}

/// A group of instances sharing one group id, in member order.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedGroup {
    pub members: Vec<DerivedInstance>,
}

impl DerivedGroup {
    pub fn group_id(&self) -> &str {
        &self.members[0].group_id
    }
}

/// Where a derived dataset came from and how it was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub source_checksum: String,
    pub variant: Variant,
    pub global_seed: u64,
    pub tool_version: String,
    #[serde(default)]
    pub balance_insufficient: bool,
    /// Normalization plans per qid, kept so the probe of the transform can
    /// reuse the identical F_r sets.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plans: Option<BTreeMap<String, NormalizationPlan>>,
}

impl Origin {
    pub fn new(source_checksum: String, variant: Variant, global_seed: u64) -> Self {
        Self {
            source_checksum,
            variant,
            global_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            balance_insufficient: false,
            plans: None,
        }
    }
}

/// An ordered list of derived instances with provenance. Groups are
/// serialized contiguously so streaming scorers can reassemble them in one
/// pass.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedDataset {
    pub instances: Vec<DerivedInstance>,
    pub origin: Origin,
}

impl DerivedDataset {
    pub fn from_groups(groups: Vec<DerivedGroup>, origin: Origin) -> Self {
        Self {
            instances: groups.into_iter().flat_map(|g| g.members).collect(),
            origin,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Distinct qids in first-appearance order.
    pub fn qids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for inst in &self.instances {
            if seen.insert(inst.qid.clone()) {
                out.push(inst.qid.clone());
            }
        }
        out
    }
}

/// Reassemble groups in first-appearance order, members sorted by
/// member index. Handles interleaved input lines.
pub fn group_by(dataset: &DerivedDataset) -> Vec<(String, Vec<&DerivedInstance>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&DerivedInstance>> = BTreeMap::new();
    for inst in &dataset.instances {
        let entry = groups.entry(inst.group_id.clone()).or_insert_with(|| {
            order.push(inst.group_id.clone());
            Vec::new()
        });
        entry.push(inst);
    }
    order
        .into_iter()
        .map(|gid| {
            let mut members = groups.remove(&gid).unwrap();
            members.sort_by_key(|m| m.member_index);
            (gid, members)
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum DerivedIoError {
    #[error("line {line}: malformed instance: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: instance_id {instance_id} does not match group_id#member_index")]
    BadIdentifier { line: u64, instance_id: String },
    #[error("line {line}: duplicate instance_id {instance_id}")]
    DuplicateId { line: u64, instance_id: String },
    #[error("line {line}: label set violates {semantics:?} semantics")]
    BadLabels {
        line: u64,
        semantics: SuffSemantics,
    },
    #[error("failed reading instances: {0}")]
    Io(#[from] std::io::Error),
}

fn labels_consistent(labels: &LabelSet) -> bool {
    match labels.suff_semantics {
        SuffSemantics::None => labels.suff.is_none(),
        SuffSemantics::Transform => matches!(labels.suff, Some(0) | Some(1)),
        SuffSemantics::ProbeOfTransform => matches!(labels.suff, Some(-1) | Some(0)),
    }
}

/// Parse derived-instance JSONL, checking identifier and label invariants.
pub fn read_derived_jsonl(reader: impl BufRead) -> Result<Vec<DerivedInstance>, DerivedIoError> {
    let mut instances = Vec::new();
    let mut seen = BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: DerivedInstance =
            serde_json::from_str(&line).map_err(|e| DerivedIoError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if inst.instance_id != format!("{}#{}", inst.group_id, inst.member_index) {
            return Err(DerivedIoError::BadIdentifier {
                line: line_no,
                instance_id: inst.instance_id,
            });
        }
        if !labels_consistent(&inst.labels) {
            return Err(DerivedIoError::BadLabels {
                line: line_no,
                semantics: inst.labels.suff_semantics,
            });
        }
        if !seen.insert(inst.instance_id.clone()) {
            return Err(DerivedIoError::DuplicateId {
                line: line_no,
                instance_id: inst.instance_id,
            });
        }
        instances.push(inst);
    }
    Ok(instances)
}

/// Serialize instances as JSONL, one per line, in order.
pub fn write_derived_jsonl(
    writer: &mut impl Write,
    dataset: &DerivedDataset,
) -> std::io::Result<()> {
    for inst in &dataset.instances {
        serde_json::to_writer(&mut *writer, inst)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Split a derived dataset at whole-question granularity: every group sharing
/// a qid stays on the same side. The first output holds
/// `floor(fraction * Nq)` questions, selected by seeded sampling over sorted
/// qids.
pub fn sample_split(
    dataset: &DerivedDataset,
    fraction: f64,
    seed: u64,
) -> (DerivedDataset, DerivedDataset) {
    assert!((0.0..=1.0).contains(&fraction), "fraction out of range");
    let mut qids: Vec<String> = dataset.qids();
    qids.sort();
    let take = (fraction * qids.len() as f64).floor() as usize;
    let mut stream = derive_stream(&SeedContext::new(seed, "", Purpose::Split));
    let chosen = sample_subset(&mut stream, &qids, take).expect("take <= qid count");
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for inst in &dataset.instances {
        if chosen.contains(&inst.qid) {
            first.push(inst.clone());
        } else {
            second.push(inst.clone());
        }
    }
    (
        DerivedDataset {
            instances: first,
            origin: dataset.origin.clone(),
        },
        DerivedDataset {
            instances: second,
            origin: dataset.origin.clone(),
        },
    )
}
