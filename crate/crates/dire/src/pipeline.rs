//! Streaming generation driver: reads a dire JSONL source line by line,
//! generates derived instances per question, and writes them out as they are
//! produced, so dataset size never dictates memory. Questions are processed
//! in parallel batches with ordered emission, which keeps the output
//! byte-identical regardless of thread count.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::derived::{DerivedGroup, Origin, Variant};
use crate::ingest::{stream_dire_jsonl, IngestError, SourceEntry};
use crate::model::SourceQuestion;
use crate::probe::{probe_question, GenerationReport, SkippedQuestion};
use crate::probe_transform::{probe_transform_question, REASON_NO_PLAN};
use crate::transform::{
    balance_group, plan_normalization, transform_question, trivial_transform_question,
    NormalizationPlan, PlanSet,
};

const BATCH_SIZE: usize = 512;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("failed writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("plans-mismatch: plans were built from a dataset with checksum {expected}, input has {found}")]
    PlansMismatch { expected: String, found: String },
}

/// What to generate for each question.
pub enum GenerateKind {
    Probe,
    Transform { balance_insufficient: bool },
    TrivialTransform,
    ProbeTransform { plans: PlanSet },
}

impl GenerateKind {
    fn variant(&self) -> Variant {
        match self {
            GenerateKind::Probe => Variant::Probe,
            GenerateKind::Transform { .. } => Variant::Transform,
            GenerateKind::TrivialTransform => Variant::Trivial,
            GenerateKind::ProbeTransform { .. } => Variant::ProbeOfTransform,
        }
    }
}

/// Everything a run produces besides the instance stream itself.
#[derive(Debug)]
pub struct StreamOutcome {
    pub report: GenerationReport,
    pub origin: Origin,
    /// Plans recorded by a transform run, for the probe of the transform.
    pub plans: Option<PlanSet>,
}

type QuestionResult = Result<(Vec<DerivedGroup>, Option<NormalizationPlan>), &'static str>;

fn generate_one(q: &SourceQuestion, kind: &GenerateKind, global_seed: u64) -> QuestionResult {
    match kind {
        GenerateKind::Probe => probe_question(q).map(|groups| (groups, None)),
        GenerateKind::Transform {
            balance_insufficient,
        } => plan_normalization(q, global_seed).map(|plan| {
            let mut group = transform_question(q, &plan);
            if *balance_insufficient {
                balance_group(&mut group, &plan, global_seed, &q.qid);
            }
            (vec![group], Some(plan))
        }),
        GenerateKind::TrivialTransform => {
            trivial_transform_question(q, global_seed).map(|group| (vec![group], None))
        }
        GenerateKind::ProbeTransform { plans } => match plans.plans.get(&q.qid) {
            None => Err(REASON_NO_PLAN),
            Some(plan) => {
                probe_transform_question(q, plan, global_seed).map(|groups| (groups, None))
            }
        },
    }
}

fn flush_batch(
    batch: &mut Vec<SourceQuestion>,
    kind: &GenerateKind,
    global_seed: u64,
    writer: &mut impl Write,
    report: &mut GenerationReport,
    plans: &mut BTreeMap<String, NormalizationPlan>,
) -> Result<(), PipelineError> {
    let results: Vec<(String, QuestionResult)> = batch
        .par_iter()
        .map(|q| (q.qid.clone(), generate_one(q, kind, global_seed)))
        .collect();
    for (qid, result) in results {
        match result {
            Ok((groups, plan)) => {
                if let Some(plan) = plan {
                    plans.insert(qid, plan);
                }
                for group in groups {
                    report.groups += 1;
                    report.instances += group.members.len() as u64;
                    for inst in &group.members {
                        serde_json::to_writer(&mut *writer, inst)
                            .map_err(std::io::Error::from)?;
                        writer.write_all(b"\n")?;
                    }
                }
            }
            Err(reason) => report.skipped.push(SkippedQuestion {
                qid,
                reason: reason.to_string(),
            }),
        }
    }
    batch.clear();
    Ok(())
}

/// Stream a source file through one generator. Entry-level ingest rejections
/// become skips in the generation report. For probe-of-transform runs the
/// plans' source checksum is verified against the streamed input.
pub fn generate_streaming(
    reader: impl BufRead,
    writer: &mut impl Write,
    kind: &GenerateKind,
    global_seed: u64,
) -> Result<StreamOutcome, PipelineError> {
    let mut report = GenerationReport::default();
    let mut plans = BTreeMap::new();
    let mut hasher = Sha256::new();
    let mut batch: Vec<SourceQuestion> = Vec::with_capacity(BATCH_SIZE);

    stream_dire_jsonl::<PipelineError>(reader, |entry| {
        match entry {
            SourceEntry::Accepted(q) => {
                // canonical content hash over accepted questions only
                hasher.update(serde_json::to_string(&q).expect("serializable question"));
                hasher.update(b"\n");
                batch.push(q);
                if batch.len() >= BATCH_SIZE {
                    flush_batch(&mut batch, kind, global_seed, writer, &mut report, &mut plans)?;
                }
            }
            SourceEntry::Rejected { qid, reason } => {
                report.skipped.push(SkippedQuestion {
                    qid,
                    reason: reason.to_string(),
                });
            }
        }
        Ok(())
    })?;
    flush_batch(&mut batch, kind, global_seed, writer, &mut report, &mut plans)?;

    let source_checksum = format!("sha256:{:x}", hasher.finalize());
    if let GenerateKind::ProbeTransform { plans } = kind {
        if plans.source_checksum != source_checksum {
            return Err(PipelineError::PlansMismatch {
                expected: plans.source_checksum.clone(),
                found: source_checksum,
            });
        }
    }
    let mut origin = Origin::new(source_checksum.clone(), kind.variant(), global_seed);
    let plan_set = match kind {
        GenerateKind::Transform {
            balance_insufficient,
        } => {
            origin.balance_insufficient = *balance_insufficient;
            origin.plans = Some(plans.clone());
            Some(PlanSet {
                global_seed,
                source_checksum,
                plans,
            })
        }
        _ => None,
    };
    Ok(StreamOutcome {
        report,
        origin,
        plans: plan_set,
    })
}
