//! Recover a planted motif: every graph in the corpus is a set of disjoint
//! triangles, and training should end with a one-entry dictionary that
//! absorbs (almost) the whole corpus.
//!
//! Run with `cargo run --example train_dictionary`.

use pnc::graph::{Corpus, Graph};
use pnc::partition::FixedPartitioner;
use pnc::train::{self, TrainConfig};

fn triangles(count: u32) -> Graph {
    let mut edges = Vec::new();
    for t in 0..count {
        let b = 3 * t;
        edges.extend([(b, b + 1), (b + 1, b + 2), (b, b + 2)]);
    }
    Graph::new(3 * count, edges).unwrap()
}

fn main() {
    let mut corpus = Corpus::new("triangles", (0..20).map(|_| triangles(4)).collect());

    let mut cfg = TrainConfig::fixed(FixedPartitioner::LabelProp);
    cfg.kmax = 3;
    cfg.epochs = 60;
    cfg.seed = 4;
    let report = train::train(&mut corpus, &cfg).unwrap();

    let first = report.objectives.first().unwrap();
    let last = report.objectives.last().unwrap();
    println!(
        "objective: {first:.1} -> {last:.1} bits (best at epoch {})",
        report.best_epoch
    );

    let model = &report.model;
    let q = model.q_relaxed();
    println!(
        "dictionary: {} of {} seen shapes, null-block rate delta={:.4}",
        model.dict_indices().len(),
        model.atoms.len(),
        model.delta()
    );
    for i in model.dict_indices() {
        let g = model.atoms[i].code.to_graph();
        println!(
            "  atom {i}: k={} m={} q={:.4} storage={:.2} bits",
            g.n(),
            g.m(),
            q[i],
            model.atoms[i].l_null
        );
    }
}
