//! Compare the analytic gradient of the relaxed objective against central
//! finite differences at random parameter points.
//!
//! Run with `cargo run --example gradient_check`.

use pnc::dict::DictModel;
use pnc::graph::{Corpus, Graph};
use pnc::partition::FixedPartitioner;
use pnc::train::{corpus_grad, corpus_objective, flatten_grad, flatten_params, set_params};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() {
    let graphs = vec![
        Graph::new(5, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap(),
        Graph::new(6, vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]).unwrap(),
        Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap(),
    ];
    let corpus = Corpus::new("toy", graphs);

    // Observe every graph once so the atom universe is populated.
    let mut model = DictModel::new(4, None, None);
    let codes: Vec<_> = corpus
        .graphs
        .iter()
        .map(|g| {
            let p = FixedPartitioner::LabelProp.partition(g, 4, 0).unwrap();
            model.observe_graph(g, &p)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dim = flatten_params(&model).len();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        set_params(&mut model, &x);
        let analytic = flatten_grad(&corpus_grad(&model, &codes));
        for i in 0..dim {
            let mut xp = x.clone();
            xp[i] += h;
            set_params(&mut model, &xp);
            let up = corpus_objective(&model, &codes);
            xp[i] = x[i] - h;
            set_params(&mut model, &xp);
            let down = corpus_objective(&model, &codes);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / analytic[i].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    println!("{dim} parameters, 50 random points");
    println!("max relative error analytic vs finite difference: {worst:.3e}");
}
