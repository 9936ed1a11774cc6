//! Write a corpus in the TU benchmark directory layout, parse it back, and
//! show what the parser recovered.
//!
//! Run with `cargo run --example tu_files`.

use pnc::graph::{self, Corpus, Graph};

fn main() {
    let g1 = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)])
        .unwrap()
        .with_vertex_attrs(vec![0, 1, 0, 1])
        .unwrap()
        .with_edge_attrs(vec![2, 0, 1, 0])
        .unwrap();
    let g2 = Graph::new(3, vec![(0, 1), (1, 2)])
        .unwrap()
        .with_vertex_attrs(vec![1, 1, 0])
        .unwrap()
        .with_edge_attrs(vec![0, 2])
        .unwrap();
    let corpus = Corpus::new("DEMO", vec![g1, g2]);

    let dir = std::env::temp_dir().join("pnc_tu_demo");
    let written = graph::write_tu_dataset(&corpus, &dir).unwrap();
    println!("wrote {}", written.display());
    for entry in std::fs::read_dir(&written).unwrap() {
        let entry = entry.unwrap();
        println!(
            "  {} ({} bytes)",
            entry.file_name().to_string_lossy(),
            entry.metadata().unwrap().len()
        );
    }

    let back = graph::parse_tu_dataset(&written).unwrap();
    println!(
        "\nparsed {} graphs, {} edges, vertex domain {:?}, edge domain {:?}",
        back.len(),
        back.total_edges(),
        back.vertex_attr_domain(),
        back.edge_attr_domain()
    );
    for (i, g) in back.graphs.iter().enumerate() {
        println!("  graph {i}: n={} m={} attrs={:?}", g.n(), g.m(), g.vertex_attrs());
    }
}
