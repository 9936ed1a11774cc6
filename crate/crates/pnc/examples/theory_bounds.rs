//! Measure the directed-graph code-length bounds on sampled ensembles and
//! print the resulting tables.
//!
//! Run with `cargo run --example theory_bounds [preset...]`; with no
//! arguments it runs a fast subset.

use pnc::theory::{self, PresetCheck};

fn run(name: &str) {
    let Some((spec, k, check)) = theory::preset(name) else {
        eprintln!("unknown preset {name}; known: {:?}", theory::preset_names());
        return;
    };
    match check {
        PresetCheck::Lemma1 => {
            println!("{}", theory::verify_lemma1(&spec).to_markdown());
        }
        PresetCheck::Theorem1 => {
            println!("{}", theory::verify_theorem1(&spec, k).to_markdown());
        }
        PresetCheck::Theorem2 => {
            println!("{}", theory::verify_theorem2(&spec, k).to_markdown());
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        for name in ["er-tiny", "er-sparse", "rigid-k6"] {
            println!("== {name} ==");
            run(name);
        }
    } else {
        for name in &args {
            println!("== {name} ==");
            run(name);
        }
    }
}
