//! Apply the support-sufficiency transform and its probe to a 3-hop question,
//! showing how length normalization and the recorded plans tie the two
//! datasets together.
//!
//! ```bash
//! cargo run --example transform_dataset
//! ```

use dire::probe_transform::probe_transform_dataset;
use dire::synthetic::{generate_synthetic, SyntheticSpec};
use dire::transform::{transform_dataset, trivial_transform_dataset};

fn main() -> anyhow::Result<()> {
    let seed = 5;
    let dataset = generate_synthetic(&SyntheticSpec {
        questions: 1,
        hops: 3,
        context_size: 12,
        near_miss_per_hop: 1,
        seed,
    })?;
    let q = &dataset.questions[0];
    println!(
        "question {}: |C| = {}, |F_s| = {}",
        q.qid,
        q.context.len(),
        q.supporting_fact_ids.len()
    );

    let (transform, plans, _) = transform_dataset(&dataset, seed, false);
    let plan = &plans.plans[&q.qid];
    println!();
    println!("transform group: {} instances", transform.len());
    println!("  length-normalization set F_r = {:?}", plan.f_r_set);
    for inst in &transform.instances {
        println!(
            "  member {} suff={:+} context={} facts",
            inst.member_index,
            inst.labels.suff.unwrap(),
            inst.context.len(),
        );
    }
    println!("  every context has |C| - |F_s| + 1 = 10 facts");

    let (pt, _) = probe_transform_dataset(&dataset, &plans, seed);
    println!();
    println!(
        "probe of the transform: {} groups of 3 (one per bi-partition)",
        pt.len() / 3
    );
    for inst in &pt.instances {
        println!(
            "  {} suff={:+} context={} facts retained_support={:?}",
            inst.instance_id,
            inst.labels.suff.unwrap(),
            inst.context.len(),
            inst
                .labels
                .supp
                .as_ref()
                .map(|s| s.iter().cloned().collect::<Vec<_>>())
                .unwrap_or_default(),
        );
    }
    println!("  every context has |C| - |F_s| = 9 facts; F_r is reused from the plans");

    // balancing is for training exports; it breaks group completeness
    let (balanced, _, _) = transform_dataset(&dataset, seed, true);
    println!();
    println!(
        "balanced training export keeps {} of {} transform instances",
        balanced.len(),
        transform.len()
    );

    let (trivial, _) = trivial_transform_dataset(&dataset, seed);
    println!(
        "trivial transform: {} fully labeled copies, each dropping one random distractor",
        trivial.len()
    );
    Ok(())
}
