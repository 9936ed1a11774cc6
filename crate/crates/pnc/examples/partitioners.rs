//! Cut one graph with each bundled partitioner and compare the block-model
//! baseline each cut yields.
//!
//! Run with `cargo run --example partitioners`.

use pnc::graph::Graph;
use pnc::partition::FixedPartitioner;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Three dense 8-vertex communities joined by a handful of bridge edges.
fn community_graph() -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut edges = Vec::new();
    for c in 0..3u32 {
        let base = 8 * c;
        for u in 0..8 {
            for v in u + 1..8 {
                if rng.random_bool(0.75) {
                    edges.push((base + u, base + v));
                }
            }
        }
    }
    edges.push((0, 8));
    edges.push((9, 16));
    edges.push((3, 20));
    Graph::new(24, edges).unwrap()
}

fn main() {
    let g = community_graph();
    println!("n={} m={}\n", g.n(), g.m());

    for p in [
        FixedPartitioner::LabelProp,
        FixedPartitioner::Louvain,
        FixedPartitioner::MdlMerge,
    ] {
        let part = p.partition(&g, 8, 0).unwrap();
        println!(
            "{:<10} blocks={:?}  cut edges={}  two-part baseline={:.1} bits",
            format!("{p:?}"),
            part.block_sizes(),
            part.m_cut(),
            part.l_sbm(g.n() as u64)
        );
    }
}
