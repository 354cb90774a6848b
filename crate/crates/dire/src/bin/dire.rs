//! Command-line front end: wires ingestion, generation, oracles, splitting,
//! and scoring into reproducible batch runs. Every output artifact gets a
//! sidecar manifest with input and output checksums.
//!
//! Exit codes: 0 success, 1 usage, 2 input validation, 3 internal invariant
//! violation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dire::derived::{
    read_derived_jsonl, sample_split, write_derived_jsonl, DerivedDataset, Origin, Variant,
};
use dire::ingest::{ingest_source_dataset, write_source_jsonl, SourceFormat};
use dire::manifest::RunManifest;
use dire::metrics::{
    aggregate_report, conditional_dire_score, expected_sufficiency_noise_drop, score_direct,
    score_probe, score_probe_transform, score_transform, Flavor, MetricKind, ScoreOutcome,
    ScoreReport, Task,
};
use dire::model::SourceDataset;
use dire::oracles::{run_oracle_derived, run_oracle_source, OracleModel};
use dire::pipeline::{generate_streaming, GenerateKind, PipelineError};
use dire::predictions::{parse_predictions, write_predictions, PredictionSet};
use dire::synthetic::{generate_synthetic, SyntheticSpec};
use dire::transform::PlanSet;

#[derive(Parser)]
#[command(
    name = "dire",
    version,
    about = "Probe, transform, and score multi-hop QA datasets for disconnected reasoning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for generation and scoring; 0 picks a default.
    /// Outputs and aggregates do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Hotpotqa,
    Dire,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Disconnected,
    Connected,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    Probe,
    Transform,
    ProbeTransform,
    ConditionalDire,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    #[value(name = "ans")]
    Ans,
    #[value(name = "supp_p")]
    SuppP,
    #[value(name = "supp_s")]
    SuppS,
    #[value(name = "ans+supp_p")]
    AnsAndSuppP,
    #[value(name = "ans+supp_s")]
    AnsAndSuppS,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Em,
    F1,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a dataset file and emit dire JSONL plus a validation report.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the probe dataset from a dire JSONL file.
    Probe {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Build the support-sufficiency transform and record its plans.
    Transform {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep one insufficient member per question (training exports only;
        /// the result is not scorable under the grouped transform metric).
        #[arg(long)]
        balance_insufficient: bool,
        #[arg(long)]
        plans: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the probe of the transform, reusing recorded plans.
    ProbeTransform {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plans: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the trivial transform (three fully labeled copies per question).
    TrivialTransform {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic chain dataset.
    Synth {
        #[arg(long)]
        questions: usize,
        #[arg(long)]
        hops: usize,
        #[arg(long)]
        context_size: usize,
        #[arg(long)]
        near_miss: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a reference oracle over a source or derived dataset.
    Oracle {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a derived dataset at question granularity (inoculation splits).
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_a: PathBuf,
        #[arg(long)]
        out_b: PathBuf,
    },
    /// Score a prediction file against a dataset.
    Score {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        preds: Option<PathBuf>,
        /// Probe dataset (conditional-dire mode).
        #[arg(long)]
        probe_dataset: Option<PathBuf>,
        /// Predictions on the original dataset (conditional-dire mode).
        #[arg(long)]
        preds_direct: Option<PathBuf>,
        /// Predictions on the probe dataset (conditional-dire mode).
        #[arg(long)]
        preds_probe: Option<PathBuf>,
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Acknowledge sufficiency conditioning; only meaningful (and always
        /// applied) in transform and probe-transform modes.
        #[arg(long)]
        suff: bool,
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the expected human-score drop for a sufficiency-noise rate.
    NoiseDrop {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
    },
}

enum CliError {
    Usage(String),
    Input(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    // panics escaping the run are internal invariant violations: exit 3
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        pool.install(|| run(cli.command))
    }));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
        Err(_) => {
            eprintln!("error: internal invariant violation");
            ExitCode::from(3)
        }
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn new_manifest(seed: u64, inputs: &[&Path]) -> Result<RunManifest, CliError> {
    let mut manifest = RunManifest::new(std::env::args().collect(), seed);
    for path in inputs {
        manifest.record_input(path).map_err(input_err)?;
    }
    Ok(manifest)
}

fn finish_manifest(
    mut manifest: RunManifest,
    origin: Option<Origin>,
    outputs: &[&Path],
) -> Result<(), CliError> {
    manifest.origin = origin;
    for path in outputs {
        manifest.record_output(path).map_err(input_err)?;
    }
    for path in outputs {
        manifest.write_beside(path).map_err(input_err)?;
    }
    Ok(())
}

fn load_source(path: &Path) -> Result<(SourceDataset, u64), CliError> {
    let outcome =
        ingest_source_dataset(open_input(path)?, SourceFormat::DireJsonl).map_err(input_err)?;
    Ok((outcome.dataset, outcome.report.rejected.len() as u64))
}

fn load_derived(path: &Path) -> Result<DerivedDataset, CliError> {
    let instances = read_derived_jsonl(open_input(path)?).map_err(input_err)?;
    let variant = instances
        .first()
        .map(|i| i.variant)
        .unwrap_or(Variant::Probe);
    let checksum = dire::manifest::sha256_file(path).map_err(input_err)?;
    Ok(DerivedDataset {
        instances,
        origin: Origin::new(checksum, variant, 0),
    })
}

fn load_predictions(path: &Path) -> Result<PredictionSet, CliError> {
    let set =
        parse_predictions(open_input(path)?, &path.display().to_string()).map_err(input_err)?;
    if set.duplicate_count > 0 {
        eprintln!(
            "warning: {} duplicate prediction id(s) in {}, later lines kept",
            set.duplicate_count,
            path.display()
        );
    }
    Ok(set)
}

/// Detect whether a JSONL file holds derived instances or source questions.
fn is_derived_file(path: &Path) -> Result<bool, CliError> {
    use std::io::BufRead;
    let reader = open_input(path)?;
    for line in reader.lines() {
        let line = line.map_err(input_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        return Ok(value.get("instance_id").is_some());
    }
    Ok(false)
}

fn write_report_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut writer = create_output(path)?;
    serde_json::to_writer_pretty(&mut writer, value).map_err(input_err)?;
    writer.write_all(b"\n").map_err(input_err)?;
    writer.flush().map_err(input_err)
}

fn run_generation(
    input: &Path,
    out: &Path,
    report_path: Option<&Path>,
    kind: GenerateKind,
    seed: u64,
    extra_inputs: &[&Path],
) -> Result<(), CliError> {
    let mut inputs = vec![input];
    inputs.extend_from_slice(extra_inputs);
    let manifest = new_manifest(seed, &inputs)?;
    let reader = open_input(input)?;
    let mut writer = create_output(out)?;
    let result = generate_streaming(reader, &mut writer, &kind, seed);
    writer.flush().map_err(input_err)?;
    drop(writer);
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(e) => {
            // don't leave a partially generated dataset behind
            let _ = std::fs::remove_file(out);
            return Err(match e {
                PipelineError::Io(e) => CliError::Input(e.to_string()),
                other => CliError::Input(other.to_string()),
            });
        }
    };
    let mut outputs: Vec<&Path> = vec![out];
    if let Some(path) = report_path {
        write_report_json(path, &outcome.report)?;
        outputs.push(path);
    }
    finish_manifest(manifest, Some(outcome.origin.clone()), &outputs)?;
    eprintln!(
        "groups={} instances={} skipped={}",
        outcome.report.groups,
        outcome.report.instances,
        outcome.report.skipped.len()
    );
    Ok(())
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { input, format, out } => {
            let format = match format {
                FormatArg::Hotpotqa => SourceFormat::HotpotqaDistractor,
                FormatArg::Dire => SourceFormat::DireJsonl,
            };
            let manifest = new_manifest(0, &[&input])?;
            let outcome = ingest_source_dataset(open_input(&input)?, format).map_err(input_err)?;
            let mut writer = create_output(&out)?;
            write_source_jsonl(&mut writer, &outcome.dataset).map_err(input_err)?;
            writer.flush().map_err(input_err)?;
            finish_manifest(manifest, None, &[&out])?;
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.report).map_err(input_err)?
            );
            Ok(())
        }
        Command::Probe { input, out, report } => {
            run_generation(&input, &out, Some(&report), GenerateKind::Probe, 0, &[])
        }
        Command::Transform {
            input,
            out,
            seed,
            balance_insufficient,
            plans,
            report,
        } => {
            let manifest = new_manifest(seed, &[&input])?;
            let reader = open_input(&input)?;
            let mut writer = create_output(&out)?;
            let outcome = generate_streaming(
                reader,
                &mut writer,
                &GenerateKind::Transform {
                    balance_insufficient,
                },
                seed,
            )
            .map_err(input_err)?;
            writer.flush().map_err(input_err)?;
            drop(writer);
            let plan_set = outcome.plans.as_ref().expect("transform records plans");
            let mut plans_writer = create_output(&plans)?;
            plan_set.write(&mut plans_writer).map_err(input_err)?;
            plans_writer.flush().map_err(input_err)?;
            drop(plans_writer);
            let mut outputs: Vec<&Path> = vec![&out, &plans];
            if let Some(path) = report.as_deref() {
                write_report_json(path, &outcome.report)?;
                outputs.push(path);
            }
            finish_manifest(manifest, Some(outcome.origin.clone()), &outputs)?;
            eprintln!(
                "groups={} instances={} skipped={}",
                outcome.report.groups,
                outcome.report.instances,
                outcome.report.skipped.len()
            );
            Ok(())
        }
        Command::ProbeTransform {
            input,
            plans,
            out,
            seed,
            report,
        } => {
            let plan_set = PlanSet::read(open_input(&plans)?).map_err(input_err)?;
            run_generation(
                &input,
                &out,
                report.as_deref(),
                GenerateKind::ProbeTransform { plans: plan_set },
                seed,
                &[&plans],
            )
        }
        Command::TrivialTransform {
            input,
            out,
            seed,
            report,
        } => run_generation(
            &input,
            &out,
            report.as_deref(),
            GenerateKind::TrivialTransform,
            seed,
            &[],
        ),
        Command::Synth {
            questions,
            hops,
            context_size,
            near_miss,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                questions,
                hops,
                context_size,
                near_miss_per_hop: near_miss,
                seed,
            };
            let dataset = generate_synthetic(&spec).map_err(input_err)?;
            let manifest = new_manifest(seed, &[])?;
            let mut writer = create_output(&out)?;
            write_source_jsonl(&mut writer, &dataset).map_err(input_err)?;
            writer.flush().map_err(input_err)?;
            finish_manifest(manifest, None, &[&out])?;
            eprintln!("questions={}", dataset.len());
            Ok(())
        }
        Command::Oracle {
            model,
            input,
            seed,
            out,
        } => {
            let model = match model {
                ModelArg::Disconnected => OracleModel::Disconnected,
                ModelArg::Connected => OracleModel::Connected,
                ModelArg::Random => OracleModel::Random,
            };
            let manifest = new_manifest(seed, &[&input])?;
            let predictions = if is_derived_file(&input)? {
                let dataset = load_derived(&input)?;
                run_oracle_derived(model, &dataset, seed).map_err(input_err)?
            } else {
                let (dataset, rejected) = load_source(&input)?;
                if rejected > 0 {
                    eprintln!("warning: {rejected} entr(ies) rejected during ingest");
                }
                run_oracle_source(model, &dataset, seed).map_err(input_err)?
            };
            let mut writer = create_output(&out)?;
            write_predictions(&mut writer, &predictions).map_err(input_err)?;
            writer.flush().map_err(input_err)?;
            finish_manifest(manifest, None, &[&out])?;
            eprintln!("predictions={}", predictions.len());
            Ok(())
        }
        Command::Split {
            input,
            fraction,
            seed,
            out_a,
            out_b,
        } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(CliError::Usage(format!(
                    "--fraction must be in [0, 1], got {fraction}"
                )));
            }
            let manifest = new_manifest(seed, &[&input])?;
            let dataset = load_derived(&input)?;
            let (a, b) = sample_split(&dataset, fraction, seed);
            for (path, part) in [(&out_a, &a), (&out_b, &b)] {
                let mut writer = create_output(path)?;
                write_derived_jsonl(&mut writer, part).map_err(input_err)?;
                writer.flush().map_err(input_err)?;
            }
            finish_manifest(manifest, None, &[&out_a, &out_b])?;
            eprintln!(
                "questions_a={} questions_b={}",
                a.qids().len(),
                b.qids().len()
            );
            Ok(())
        }
        Command::Score {
            mode,
            dataset,
            preds,
            probe_dataset,
            preds_direct,
            preds_probe,
            task,
            suff,
            flavor,
            out,
        } => {
            let kind = MetricKind {
                task: match task {
                    TaskArg::Ans => Task::Ans,
                    TaskArg::SuppP => Task::SuppP,
                    TaskArg::SuppS => Task::SuppS,
                    TaskArg::AnsAndSuppP => Task::AnsAndSuppP,
                    TaskArg::AnsAndSuppS => Task::AnsAndSuppS,
                },
                flavor: match flavor {
                    FlavorArg::Em => Flavor::Em,
                    FlavorArg::F1 => Flavor::F1,
                },
            };
            if suff && !matches!(mode, ModeArg::Transform | ModeArg::ProbeTransform) {
                return Err(CliError::Usage(
                    "--suff applies only to transform / probe-transform modes".to_string(),
                ));
            }
            let mut inputs: Vec<&Path> = vec![&dataset];
            for path in [&preds, &probe_dataset, &preds_direct, &preds_probe]
                .into_iter()
                .flatten()
            {
                inputs.push(path);
            }
            let manifest = new_manifest(0, &inputs)?;
            let report = score_command(
                mode,
                &dataset,
                preds.as_deref(),
                probe_dataset.as_deref(),
                preds_direct.as_deref(),
                preds_probe.as_deref(),
                kind,
            )?;
            write_report_json(&out, &report)?;
            finish_manifest(manifest, None, &[&out])?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "mode={} task={} flavor={} questions={} aggregate={}",
                json_name(report.mode),
                json_name(report.metric.task),
                json_name(report.metric.flavor),
                report.counts.questions,
                report
                    .aggregate
                    .map(|a| format!("{a:.6}"))
                    .unwrap_or_else(|| "n/a".to_string()),
            );
            Ok(())
        }
        Command::NoiseDrop { p, n } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Usage(format!("--p must be in [0, 1], got {p}")));
            }
            println!("{:.4}", expected_sufficiency_noise_drop(p, n));
            Ok(())
        }
    }
}

fn json_name<T: serde::Serialize>(value: T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn checksum_map(paths: &[(&str, &Path)]) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (label, path) in paths {
        map.insert(
            label.to_string(),
            dire::manifest::sha256_file(path).map_err(input_err)?,
        );
    }
    Ok(map)
}

fn score_command(
    mode: ModeArg,
    dataset: &Path,
    preds: Option<&Path>,
    probe_dataset: Option<&Path>,
    preds_direct: Option<&Path>,
    preds_probe: Option<&Path>,
    kind: MetricKind,
) -> Result<ScoreReport, CliError> {
    let require = |opt: Option<&Path>, name: &str| {
        opt.map(Path::to_path_buf)
            .ok_or_else(|| CliError::Usage(format!("--{name} is required for this mode")))
    };
    match mode {
        ModeArg::Direct => {
            let preds_path = require(preds, "preds")?;
            let (source, rejected) = load_source(dataset)?;
            if rejected > 0 {
                eprintln!("warning: {rejected} entr(ies) rejected during ingest");
            }
            let predictions = load_predictions(&preds_path)?;
            let outcome = score_direct(&source, &predictions, kind);
            let inputs = checksum_map(&[
                ("dataset_checksum", dataset),
                ("prediction_checksum", &preds_path),
            ])?;
            Ok(aggregate_report(kind, outcome, inputs))
        }
        ModeArg::Probe | ModeArg::Transform | ModeArg::ProbeTransform => {
            let preds_path = require(preds, "preds")?;
            let derived = load_derived(dataset)?;
            let predictions = load_predictions(&preds_path)?;
            let outcome = match mode {
                ModeArg::Probe => score_probe(&derived, &predictions, kind),
                ModeArg::Transform => score_transform(&derived, &predictions, kind),
                ModeArg::ProbeTransform => score_probe_transform(&derived, &predictions, kind),
                _ => unreachable!(),
            }
            .map_err(input_err)?;
            let inputs = checksum_map(&[
                ("dataset_checksum", dataset),
                ("prediction_checksum", &preds_path),
            ])?;
            Ok(aggregate_report(kind, outcome, inputs))
        }
        ModeArg::ConditionalDire => {
            let probe_path = require(probe_dataset, "probe-dataset")?;
            let direct_path = require(preds_direct, "preds-direct")?;
            let probe_preds_path = require(preds_probe, "preds-probe")?;
            let (source, rejected) = load_source(dataset)?;
            if rejected > 0 {
                eprintln!("warning: {rejected} entr(ies) rejected during ingest");
            }
            let probe_set = load_derived(&probe_path)?;
            let direct_preds = load_predictions(&direct_path)?;
            let probe_preds = load_predictions(&probe_preds_path)?;
            let direct_outcome = score_direct(&source, &direct_preds, kind);
            let probe_outcome = score_probe(&probe_set, &probe_preds, kind).map_err(input_err)?;
            let combined: ScoreOutcome = conditional_dire_score(&direct_outcome, &probe_outcome);
            let inputs = checksum_map(&[
                ("dataset_checksum", dataset),
                ("probe_dataset_checksum", &probe_path),
                ("prediction_checksum", &direct_path),
                ("probe_prediction_checksum", &probe_preds_path),
            ])?;
            Ok(aggregate_report(kind, combined, inputs))
        }
    }
}
