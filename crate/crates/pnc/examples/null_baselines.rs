//! Price a corpus under the three structure-only baselines.
//!
//! Run with `cargo run --example null_baselines`.

use pnc::codelen;
use pnc::graph::{Corpus, Graph};
use pnc::stats;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut graphs = Vec::new();
    for _ in 0..200 {
        let n: u32 = rng.random_range(8..=24);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.18) {
                    edges.push((u, v));
                }
            }
        }
        graphs.push(Graph::new(n, edges).unwrap());
    }
    let corpus = Corpus::new("er-demo", graphs);

    println!("{} graphs, {} edges\n", corpus.len(), corpus.total_edges());
    for row in stats::null_rows(&corpus) {
        println!(
            "{:<12} {:>7.4} bits/edge   ({:.0} data bits)",
            row.method,
            row.data_bpe(),
            row.data_bits
        );
    }

    // The binomial null for a single graph, from the parts it is built of:
    // the vertex count, the edge count, then which of the C(n,2) slots
    // carry the m edges.
    let g = &corpus.graphs[0];
    let (n, m) = (g.n() as u64, g.m() as u64);
    println!(
        "\nfirst graph: n={n} m={m}, binomial null = {:.3} bits",
        codelen::l_null(n, m, corpus.n_max() as u64)
    );
}
