//! Train the sequential partition policy with the score-function estimator
//! and watch it close the gap between random cutting and a tuned heuristic.
//!
//! The policy objective below is measured on its own sampled cuts, so it
//! carries exploration noise; label propagation is near-optimal on a corpus
//! this regular. What the policy buys is that it is trained end-to-end from
//! the compression objective instead of being hand-designed.
//!
//! Run with `cargo run --example policy_partitioner`.

use pnc::graph::{Corpus, Graph};
use pnc::partition::FixedPartitioner;
use pnc::train::{self, PartitionerKind, TrainConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Chains of triangles joined by one random seam edge per joint — the
/// boundaries are unambiguous, the policy has to find them.
fn seamed_triangles() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut graphs = Vec::new();
    for _ in 0..20 {
        let mut edges = Vec::new();
        for t in 0..4u32 {
            let b = 3 * t;
            edges.extend([(b, b + 1), (b + 1, b + 2), (b, b + 2)]);
        }
        for t in 1..4u32 {
            let u = rng.random_range(3 * (t - 1)..3 * t);
            let v = 3 * t + rng.random_range(0..3);
            edges.push((u, v));
        }
        graphs.push(Graph::new(12, edges).unwrap());
    }
    Corpus::new("seams", graphs)
}

fn main() {
    let mut fixed_cfg = TrainConfig::fixed(FixedPartitioner::LabelProp);
    fixed_cfg.kmax = 3;
    fixed_cfg.epochs = 60;
    let fixed = train::train(&mut seamed_triangles(), &fixed_cfg).unwrap();

    let mut policy_cfg = TrainConfig::policy();
    policy_cfg.kmax = 3;
    policy_cfg.epochs = 120;
    let mut corpus = seamed_triangles();
    let learned = train::train(&mut corpus, &policy_cfg).unwrap();

    let random = learned.objectives[0];
    let trained = learned.objectives[learned.best_epoch];
    let heuristic = *fixed.objectives.last().unwrap();
    println!("random policy:      {random:.0} bits");
    println!(
        "trained policy:     {trained:.0} bits (best epoch {})",
        learned.best_epoch
    );
    println!("label propagation:  {heuristic:.0} bits");
    println!(
        "policy recovered {:.0}% of the random-to-heuristic spread",
        100.0 * (random - trained) / (random - heuristic)
    );

    // The trained policy is a deterministic artifact: same seed, same cut.
    let g = &corpus.graphs[0];
    let part = train::partition_with(
        g,
        PartitionerKind::Policy,
        learned.policy.as_ref(),
        Some(&learned.model),
        policy_cfg.kmax,
        0,
    )
    .unwrap();
    println!(
        "\nfirst graph (n={}) under the trained policy: blocks={:?} cut={}",
        g.n(),
        part.block_sizes(),
        part.m_cut()
    );
}
