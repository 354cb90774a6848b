//! External model predictions: parsing, validation, and coverage checks
//! against source and derived datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derived::DerivedDataset;
use crate::model::SourceDataset;

#[derive(Debug, Error)]
pub enum PredictionsError {
    #[error("line {line}: malformed prediction: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: empty-prediction: no field besides instance_id")]
    EmptyPrediction { line: u64 },
    #[error("line {line}: suff must be -1, 0, or 1, got {value}")]
    SuffOutOfRange { line: u64, value: i64 },
    #[error("failed reading predictions: {0}")]
    Io(#[from] std::io::Error),
}

/// An answer prediction with its confidence score. Scores are arbitrary
/// reals; argmax combination only needs a total order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerPrediction {
    pub text: String,
    pub score: f64,
}

/// One model output, keyed by instance id. For direct-mode predictions on a
/// source dataset, the instance id is the qid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answer: Option<AnswerPrediction>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support_p: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support_s: Option<BTreeSet<(String, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub suff: Option<i8>,
}

impl Prediction {
    pub fn empty(instance_id: impl Into<String>) -> Self {
        Self {
            instance_id: instance_id.into(),
            answer: None,
            support_p: None,
            support_s: None,
            suff: None,
        }
    }

    fn has_content(&self) -> bool {
        self.answer.is_some()
            || self.support_p.is_some()
            || self.support_s.is_some()
            || self.suff.is_some()
    }
}

/// All predictions from one model run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionSet {
    pub by_instance: BTreeMap<String, Prediction>,
    pub provenance: String,
    /// How many lines were overwritten by a later line with the same id.
    pub duplicate_count: u64,
}

impl PredictionSet {
    pub fn get(&self, instance_id: &str) -> Option<&Prediction> {
        self.by_instance.get(instance_id)
    }

    pub fn insert(&mut self, prediction: Prediction) {
        if self
            .by_instance
            .insert(prediction.instance_id.clone(), prediction)
            .is_some()
        {
            self.duplicate_count += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.by_instance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_instance.is_empty()
    }
}

/// Parse prediction JSONL. Malformed lines are fatal; duplicate ids resolve
/// last-line-wins with a warning count.
pub fn parse_predictions(
    reader: impl BufRead,
    provenance: &str,
) -> Result<PredictionSet, PredictionsError> {
    let mut set = PredictionSet {
        provenance: provenance.to_string(),
        ..Default::default()
    };
    for (index, line) in reader.lines().enumerate() {
        let line_no = index as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let prediction: Prediction =
            serde_json::from_str(&line).map_err(|e| PredictionsError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if !prediction.has_content() {
            return Err(PredictionsError::EmptyPrediction { line: line_no });
        }
        if let Some(suff) = prediction.suff {
            if !(-1..=1).contains(&suff) {
                return Err(PredictionsError::SuffOutOfRange {
                    line: line_no,
                    value: i64::from(suff),
                });
            }
        }
        set.insert(prediction);
    }
    Ok(set)
}

/// Serialize a prediction set as JSONL, one object per line, in id order.
pub fn write_predictions(
    writer: &mut impl std::io::Write,
    set: &PredictionSet,
) -> std::io::Result<()> {
    for prediction in set.by_instance.values() {
        serde_json::to_writer(&mut *writer, prediction)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// How completely a prediction set covers a dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub total_instances: u64,
    pub matched: u64,
    /// Dataset instance ids with no prediction.
    pub missing: Vec<String>,
    /// Prediction ids absent from the dataset.
    pub unmatched: Vec<String>,
    /// Groups with at least one unpredicted member.
    pub incomplete_groups: Vec<String>,
}

fn coverage_over_ids(
    predictions: &PredictionSet,
    ids: impl Iterator<Item = String>,
) -> Coverage {
    let mut coverage = Coverage::default();
    let mut dataset_ids = BTreeSet::new();
    for id in ids {
        coverage.total_instances += 1;
        if predictions.by_instance.contains_key(&id) {
            coverage.matched += 1;
        } else {
            coverage.missing.push(id.clone());
        }
        dataset_ids.insert(id);
    }
    for id in predictions.by_instance.keys() {
        if !dataset_ids.contains(id) {
            coverage.unmatched.push(id.clone());
        }
    }
    coverage
}

/// Coverage of a derived dataset, including per-group completeness.
pub fn coverage_check(predictions: &PredictionSet, dataset: &DerivedDataset) -> Coverage {
    let mut coverage = coverage_over_ids(
        predictions,
        dataset.instances.iter().map(|i| i.instance_id.clone()),
    );
    let missing: BTreeSet<&String> = coverage.missing.iter().collect();
    let mut flagged = BTreeSet::new();
    for inst in &dataset.instances {
        if missing.contains(&inst.instance_id) {
            flagged.insert(inst.group_id.clone());
        }
    }
    coverage.incomplete_groups = flagged.into_iter().collect();
    coverage
}

/// Coverage of a source dataset; instance ids are qids.
pub fn coverage_check_source(predictions: &PredictionSet, dataset: &SourceDataset) -> Coverage {
    coverage_over_ids(predictions, dataset.questions.iter().map(|q| q.qid.clone()))
}
