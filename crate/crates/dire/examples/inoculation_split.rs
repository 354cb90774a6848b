//! Split a probe dataset into a small fine-tuning fraction and a held-out
//! evaluation set. Splits happen at question granularity: all groups of a
//! question stay on one side, so grouped metrics on the held-out side stay
//! uncontaminated.
//!
//! ```bash
//! cargo run --example inoculation_split
//! ```

use std::collections::BTreeSet;

use dire::derived::sample_split;
use dire::probe::probe_dataset;
use dire::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let dataset = generate_synthetic(&SyntheticSpec {
        questions: 100,
        hops: 3,
        context_size: 12,
        near_miss_per_hop: 1,
        seed: 2,
    })?;
    let (probe, _) = probe_dataset(&dataset);
    println!(
        "probe dataset: {} questions, {} instances",
        probe.qids().len(),
        probe.len()
    );

    for fraction in [0.01, 0.05] {
        let (tune, eval) = sample_split(&probe, fraction, 42);
        println!();
        println!(
            "fraction {fraction}: {} tuning questions ({} instances), {} held out",
            tune.qids().len(),
            tune.len(),
            eval.qids().len()
        );
        // no question leaks across the split
        let tune_qids: BTreeSet<String> = tune.qids().into_iter().collect();
        let eval_qids: BTreeSet<String> = eval.qids().into_iter().collect();
        assert!(tune_qids.is_disjoint(&eval_qids));
        println!("  tuning qids: {:?}", tune.qids());

        // the same seed reproduces the same split
        let (tune_again, _) = sample_split(&probe, fraction, 42);
        assert_eq!(tune.instances, tune_again.instances);
    }
    Ok(())
}
