//! Full pipeline: train a model, freeze it into a bundle, write an archive,
//! decode it back, and verify the decoded graphs against the permutation
//! witnesses.
//!
//! Run with `cargo run --example compress_roundtrip`.

use pnc::coder;
use pnc::graph::{Corpus, Graph};
use pnc::partition::{FixedPartitioner, Partition};
use pnc::train::{self, TrainConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn motif_graph(rng: &mut ChaCha8Rng) -> Graph {
    // Chains of triangles and 4-cliques with one random seam edge per joint.
    let blocks: u32 = rng.random_range(3..=5);
    let mut edges = Vec::new();
    let mut base = 0u32;
    let mut prev: Option<u32> = None;
    for _ in 0..blocks {
        let k: u32 = if rng.random_bool(0.5) { 3 } else { 4 };
        for u in 0..k {
            for v in u + 1..k {
                edges.push((base + u, base + v));
            }
        }
        if let Some(p) = prev {
            edges.push((rng.random_range(p..base), base + rng.random_range(0..k)));
        }
        prev = Some(base);
        base += k;
    }
    Graph::new(base, edges).unwrap()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut corpus = Corpus::new("motifs", (0..100).map(|_| motif_graph(&mut rng)).collect());

    let mut cfg = TrainConfig::fixed(FixedPartitioner::LabelProp);
    cfg.kmax = 4;
    cfg.epochs = 20;
    let report = train::train(&mut corpus, &cfg).unwrap();

    // Freeze and reload: archives must be priced against the quantized
    // parameters a decoder will actually see.
    let bundle = coder::write_model_bundle(&report.model, None, corpus.n_max());
    let (model, _, n_max) = coder::read_model_bundle(&bundle).unwrap();

    let parts: Vec<Partition> = corpus
        .graphs
        .iter()
        .map(|g| FixedPartitioner::LabelProp.partition(g, cfg.kmax, 0).unwrap())
        .collect();
    let c = coder::compress(&corpus.graphs, &parts, &model, n_max).unwrap();

    let ideal: f64 = c.ideal_bits.iter().sum();
    let realized: f64 = c.realized_bits.iter().sum();
    println!(
        "{} graphs, {} edges -> {} archive bytes",
        corpus.len(),
        corpus.total_edges(),
        c.bytes.len()
    );
    println!("ideal {ideal:.0} bits, realized {realized:.0} bits (+header, +footer)");

    let (_, decoded) = coder::decompress(&c.bytes).unwrap();
    let exact = corpus
        .graphs
        .iter()
        .zip(&decoded)
        .zip(&c.witnesses)
        .filter(|((g, d), w)| &coder::relabel(g, w).unwrap() == *d)
        .count();
    println!("decoded {exact}/{} graphs match through their witnesses", decoded.len());
}
