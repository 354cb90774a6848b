//! Score hand-written predictions under the grouped probe metric, the
//! conditional transformed metric, and the conditional disconnected-reasoning
//! score, then print the noise-drop estimate for sufficiency labels.
//!
//! ```bash
//! cargo run --example score_predictions
//! ```

use std::collections::BTreeMap;

use dire::metrics::{
    aggregate_report, conditional_dire_score, expected_sufficiency_noise_drop, score_direct,
    score_probe, score_transform, Flavor, MetricKind, Task,
};
use dire::predictions::{AnswerPrediction, Prediction, PredictionSet};
use dire::probe::probe_dataset;
use dire::synthetic::{generate_synthetic, SyntheticSpec};
use dire::transform::transform_dataset;

fn pred(
    id: &str,
    answer: Option<(&str, f64)>,
    support: &[&str],
    suff: Option<i8>,
) -> Prediction {
    Prediction {
        instance_id: id.to_string(),
        answer: answer.map(|(text, score)| AnswerPrediction {
            text: text.to_string(),
            score,
        }),
        support_p: Some(support.iter().map(|s| s.to_string()).collect()),
        support_s: None,
        suff,
    }
}

fn main() -> anyhow::Result<()> {
    let dataset = generate_synthetic(&SyntheticSpec {
        questions: 1,
        hops: 2,
        context_size: 10,
        near_miss_per_hop: 1,
        seed: 1,
    })?;
    let q = &dataset.questions[0];
    let answer = match &q.answer {
        dire::model::AnswerValue::Span { text } => text.clone(),
        _ => unreachable!("chain questions have span answers"),
    };
    let supports: Vec<String> = q.supporting_fact_ids.iter().cloned().collect();
    println!("question {} answer {:?} supports {:?}", q.qid, answer, supports);

    let (probe, _) = probe_dataset(&dataset);
    let ans_em = MetricKind { task: Task::Ans, flavor: Flavor::Em };
    let supp_f1 = MetricKind { task: Task::SuppP, flavor: Flavor::F1 };

    // a model that answers each reduced context independently: the member
    // retaining the terminal fact answers correctly with high confidence,
    // the other guesses; each identifies its retained support
    let mut probe_preds = PredictionSet::default();
    probe_preds.insert(pred(
        &probe.instances[0].instance_id,
        Some((&answer, 0.9)),
        &[supports[1].as_str()],
        None,
    ));
    probe_preds.insert(pred(
        &probe.instances[1].instance_id,
        Some(("a wrong guess", 0.4)),
        &[supports[0].as_str()],
        None,
    ));
    let probe_outcome = score_probe(&probe, &probe_preds, ans_em)?;
    println!();
    println!(
        "grouped probe Ans EM (argmax over members): {:.2}",
        probe_outcome.per_question[0].value
    );
    let probe_supp = score_probe(&probe, &probe_preds, supp_f1)?;
    println!(
        "grouped probe Supp_p F1 (union over members): {:.2}",
        probe_supp.per_question[0].value
    );

    // the transformed metric conditions everything on sufficiency labels
    let (transform, _, _) = transform_dataset(&dataset, 1, false);
    let ids: Vec<&str> = transform
        .instances
        .iter()
        .map(|i| i.instance_id.as_str())
        .collect();
    let mut right = PredictionSet::default();
    right.insert(pred(ids[0], Some((&answer, 1.0)), &[&supports[0], &supports[1]], Some(1)));
    right.insert(pred(ids[1], None, &[], Some(0)));
    right.insert(pred(ids[2], None, &[], Some(0)));
    let mut sloppy = PredictionSet::default();
    sloppy.insert(pred(ids[0], Some((&answer, 1.0)), &[&supports[0], &supports[1]], Some(1)));
    sloppy.insert(pred(ids[1], None, &[], Some(1))); // one wrong sufficiency label
    sloppy.insert(pred(ids[2], None, &[], Some(0)));
    println!();
    println!(
        "transformed Ans EM with correct sufficiency labels: {:.2}",
        score_transform(&transform, &right, ans_em)?.per_question[0].value
    );
    println!(
        "transformed Ans EM with one wrong sufficiency label: {:.2}",
        score_transform(&transform, &sloppy, ans_em)?.per_question[0].value
    );

    // conditional score: probe credit only counts when the original question
    // is also answered correctly
    let mut direct_preds = PredictionSet::default();
    direct_preds.insert(pred(&q.qid, Some(("something else", 1.0)), &[], None));
    let direct_outcome = score_direct(&dataset, &direct_preds, ans_em);
    let conditional = conditional_dire_score(&direct_outcome, &probe_outcome);
    println!();
    println!(
        "direct Ans EM {:.2}, probe Ans EM {:.2} -> conditional score {:.2}",
        direct_outcome.per_question[0].value,
        probe_outcome.per_question[0].value,
        conditional.per_question[0].value
    );

    let report = aggregate_report(ans_em, conditional, BTreeMap::new());
    println!();
    println!(
        "score report JSON:\n{}",
        serde_json::to_string_pretty(&report)?
    );

    println!();
    println!(
        "expected human-score drop at 1.7% proxy rate over 8 distractors: {:.4}",
        expected_sufficiency_noise_drop(0.017, 8)
    );
    Ok(())
}
