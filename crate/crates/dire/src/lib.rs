//! Probe, transform, and score multi-hop reading-comprehension datasets for
//! disconnected reasoning.
//!
//! The toolkit turns any support-annotated multi-hop dataset into three
//! derived evaluations:
//!
//! - a **probe dataset**, whose grouped metric measures how much of a model's
//!   score is reachable by combining outputs from reduced contexts that never
//!   contain all supporting facts at once;
//! - a **support-sufficiency transform**, which adds length-normalized
//!   insufficient-context instances and conditions every score on correct
//!   sufficiency labels;
//! - the **probe of the transform**, which measures how much of the
//!   sufficiency test itself is predictable one partition side at a time.
//!
//! It also scores external prediction files under the matching grouped,
//! conditional, and direct metrics, and ships a synthetic chain-question
//! generator with reference reasoners (a by-construction disconnected model
//! and a by-construction connected model) that exercise the entire pipeline
//! without any training.
//!
//! Start with the runnable examples (`cargo run --example end_to_end`) or the
//! `dire` binary, which exposes every stage as a subcommand.

pub mod combinatorics;
pub mod derived;
pub mod ingest;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod pipeline;
pub mod predictions;
pub mod probe;
pub mod probe_transform;
pub mod synthetic;
pub mod transform;

pub use derived::{DerivedDataset, DerivedGroup, DerivedInstance, LabelSet, Variant};
pub use ingest::{ingest_source_dataset, IngestOutcome, SourceFormat};
pub use metrics::{Flavor, MetricKind, Mode, ScoreReport, Task};
pub use model::{
    normalize_answer, validate_dataset, AnswerValue, Fact, GeneratorMode, SourceDataset,
    SourceQuestion, ValidationReport,
};
pub use oracles::{run_oracle_derived, run_oracle_source, OracleModel};
pub use predictions::{parse_predictions, Prediction, PredictionSet};
pub use probe::{probe_dataset, GenerationReport};
pub use probe_transform::probe_transform_dataset;
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use transform::{transform_dataset, trivial_transform_dataset, PlanSet};
