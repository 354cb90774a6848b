//! Property tests for the invariants that hold over the whole input space:
//! normalization idempotence, enumeration counts and canonical forms, seeded
//! sampling containment, argmax scale invariance, and serialization
//! round-trips.

use std::collections::BTreeSet;

use proptest::prelude::*;

use dire::combinatorics::{
    derive_stream, proper_bipartitions, proper_nonempty_subsets, sample_subset, Purpose,
    SeedContext,
};
use dire::ingest::{ingest_source_dataset, write_source_jsonl, SourceFormat};
use dire::metrics::combine_answer;
use dire::model::{normalize_answer, AnswerValue, Fact, SentenceRef, SourceDataset, SourceQuestion};
use dire::probe::probe_dataset;
use dire::synthetic::{generate_synthetic, SyntheticSpec};
use dire::transform::transform_dataset;

fn id_set() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set("[a-z]{1,6}", 2..=8)
}

fn question_strategy() -> impl Strategy<Value = SourceQuestion> {
    let answer = prop_oneof![
        "[a-zA-Z0-9 ]{1,20}".prop_map(AnswerValue::span),
        Just(AnswerValue::Yes),
        Just(AnswerValue::No),
    ];
    (
        "[a-z0-9]{1,10}",
        "[a-zA-Z0-9 ?]{1,40}",
        answer,
        prop::collection::vec(prop::collection::vec("[a-zA-Z0-9 .,]{1,30}", 1..3), 3..8),
        any::<u64>(),
    )
        .prop_map(|(qid, question, answer, sentence_lists, pick)| {
            let context: Vec<Fact> = sentence_lists
                .into_iter()
                .enumerate()
                .map(|(i, sentences)| Fact::new(format!("fact-{i}"), sentences))
                .collect();
            let a = (pick % context.len() as u64) as usize;
            let b = (a + 1 + (pick / 7 % (context.len() as u64 - 1)) as usize) % context.len();
            let b = if b == a { (a + 1) % context.len() } else { b };
            let supporting: BTreeSet<String> =
                [context[a].fact_id.clone(), context[b].fact_id.clone()]
                    .into_iter()
                    .collect();
            let refs: BTreeSet<SentenceRef> = supporting
                .iter()
                .map(|id| SentenceRef::new(id.clone(), 0))
                .collect();
            SourceQuestion {
                qid,
                question,
                answer,
                context,
                supporting_fact_ids: supporting,
                supporting_sentence_refs: refs,
            }
        })
}

proptest! {
    #[test]
    fn normalize_answer_is_idempotent(text in ".{0,80}") {
        let once = normalize_answer(&text);
        let again = normalize_answer(&once.join(" "));
        prop_assert_eq!(once, again);
    }

    #[test]
    fn normalized_tokens_carry_no_punctuation_or_articles(text in ".{0,80}") {
        for token in normalize_answer(&text) {
            prop_assert!(!token.is_empty());
            prop_assert!(!token.chars().any(|c| c.is_ascii_punctuation()));
            prop_assert!(token != "a" && token != "an" && token != "the");
        }
    }

    #[test]
    fn bipartitions_are_proper_canonical_and_counted(f_s in id_set()) {
        let parts = proper_bipartitions(&f_s).unwrap();
        prop_assert_eq!(parts.len(), (1usize << (f_s.len() - 1)) - 1);
        let smallest = f_s.iter().next().unwrap();
        let mut seen = BTreeSet::new();
        for p in &parts {
            prop_assert!(!p.side1().is_empty() && !p.side2().is_empty());
            prop_assert!(p.side1().is_disjoint(p.side2()));
            let union: BTreeSet<String> = p.side1().union(p.side2()).cloned().collect();
            prop_assert_eq!(&union, &f_s);
            prop_assert!(p.side1().contains(smallest));
            prop_assert!(seen.insert(p.key()), "duplicate partition {}", p.key());
        }
    }

    #[test]
    fn subsets_are_proper_nonempty_and_counted(f_s in id_set()) {
        let subs = proper_nonempty_subsets(&f_s).unwrap();
        prop_assert_eq!(subs.len(), (1usize << f_s.len()) - 2);
        for s in &subs {
            prop_assert!(!s.is_empty() && s.len() < f_s.len());
            prop_assert!(s.is_subset(&f_s));
        }
    }

    #[test]
    fn sampled_subsets_come_from_the_pool(
        pool in prop::collection::btree_set("[a-z]{1,5}", 1..12),
        size_pick in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let pool: Vec<String> = pool.into_iter().collect();
        let size = (size_pick % (pool.len() as u64 + 1)) as usize;
        let mut stream = derive_stream(&SeedContext::new(seed, "prop", Purpose::Split));
        let got = sample_subset(&mut stream, &pool, size).unwrap();
        prop_assert_eq!(got.len(), size);
        for item in &got {
            prop_assert!(pool.contains(item));
        }
    }

    #[test]
    fn argmax_is_invariant_under_monotone_rescaling(
        scores in prop::collection::vec(-100.0f64..100.0, 1..6),
        scale in 0.001f64..50.0,
        shift in -100.0f64..100.0,
    ) {
        let answers: Vec<String> = (0..scores.len()).map(|i| format!("ans{i}")).collect();
        let original: Vec<(&str, f64)> = answers
            .iter()
            .map(String::as_str)
            .zip(scores.iter().copied())
            .collect();
        let rescaled: Vec<(&str, f64)> = original
            .iter()
            .map(|(a, s)| (*a, s * scale + shift))
            .collect();
        prop_assert_eq!(combine_answer(&original), combine_answer(&rescaled));
    }

    #[test]
    fn dire_jsonl_round_trips_structured_questions(q in question_strategy()) {
        let dataset = SourceDataset::new(vec![q], "prop", "");
        let mut bytes = Vec::new();
        write_source_jsonl(&mut bytes, &dataset).unwrap();
        let outcome =
            ingest_source_dataset(std::io::Cursor::new(&bytes), SourceFormat::DireJsonl).unwrap();
        prop_assert_eq!(outcome.report.accepted, 1);
        prop_assert_eq!(outcome.dataset.questions, dataset.questions);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_datasets_respect_group_invariants(
        hops in 2usize..=4,
        extra in 0usize..=3,
        seed in any::<u64>(),
    ) {
        let context_size = 2 * hops + extra;
        let dataset = generate_synthetic(&SyntheticSpec {
            questions: 8,
            hops,
            context_size,
            near_miss_per_hop: 1,
            seed,
        })
        .unwrap();

        let (probe, _) = probe_dataset(&dataset);
        for q in &dataset.questions {
            let members: Vec<_> = probe.instances.iter().filter(|i| i.qid == q.qid).collect();
            for m in &members {
                let supp = m.labels.supp.as_ref().unwrap();
                prop_assert!(supp.iter().all(|id| m.context_ids().contains(id)),
                    "labeled support missing from context");
            }
        }

        let (transform, _, _) = transform_dataset(&dataset, seed, false);
        for inst in &transform.instances {
            prop_assert_eq!(inst.context.len(), context_size - hops + 1);
        }
        let sufficient = transform
            .instances
            .iter()
            .filter(|i| i.labels.suff == Some(1))
            .count();
        prop_assert_eq!(sufficient, dataset.len());
    }
}
