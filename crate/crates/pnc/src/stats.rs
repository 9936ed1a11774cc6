//! Corpus-level code-length reports: the per-method bits-per-edge table
//! and its CSV form.

use crate::codelen;
use crate::dict::DictModel;
use crate::graph::{Corpus, Graph};
use crate::partition::Partition;

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub dataset: String,
    pub method: String,
    /// Bits spent on the graphs themselves.
    pub data_bits: f64,
    /// Bits spent transmitting the dictionary (atom structures).
    pub dict_bits: f64,
    /// Bits spent on quantized model parameters.
    pub param_bits: f64,
    /// Raw parameter count (the bits are 16× this).
    pub param_count: u64,
    pub graphs: usize,
    pub edges: u64,
}

impl ReportRow {
    pub fn total_bits(&self) -> f64 {
        self.data_bits + self.dict_bits + self.param_bits
    }

    pub fn data_bpe(&self) -> f64 {
        self.data_bits / self.edges.max(1) as f64
    }

    /// Data plus dictionary plus parameters, amortized over every edge.
    pub fn total_bpe(&self) -> f64 {
        self.total_bits() / self.edges.max(1) as f64
    }
}

#[derive(Debug, Clone, Default)]
pub struct CodeLenReport {
    pub rows: Vec<ReportRow>,
}

impl CodeLenReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<12} {:<14} {:>7} {:>9} {:>10} {:>10} {:>12} {:>7}\n",
            "dataset", "method", "graphs", "edges", "data_bpe", "total_bpe", "params_bits", "params"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<12} {:<14} {:>7} {:>9} {:>10.4} {:>10.4} {:>12.0} {:>7}\n",
                r.dataset,
                r.method,
                r.graphs,
                r.edges,
                r.data_bpe(),
                r.total_bpe(),
                r.param_bits,
                r.param_count
            ));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("dataset,method,data_bpe,total_bpe,params_bits\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.6},{:.6},{:.0}\n",
                r.dataset,
                r.method,
                r.data_bpe(),
                r.total_bpe(),
                r.param_bits
            ));
        }
        s
    }
}

/// Structure-only copy: the published per-edge tables measure topology,
/// so attributed corpora are stripped before comparison.
pub fn strip_attrs(corpus: &Corpus) -> Corpus {
    let graphs = corpus
        .graphs
        .iter()
        .map(|g| Graph::new(g.n(), g.edges().to_vec()).expect("valid edges"))
        .collect();
    let mut out = Corpus::new(corpus.name.clone(), graphs);
    out.split = corpus.split.clone();
    out
}

/// The three whole-graph null models, evaluated with the corpus-wide
/// vertex bound.
pub fn null_rows(corpus: &Corpus) -> Vec<ReportRow> {
    let n_max = corpus.n_max() as u64;
    let edges = corpus.total_edges();
    let graphs = corpus.len();
    let sum = |f: &dyn Fn(&Graph) -> f64| corpus.graphs.iter().map(|g| f(g)).sum::<f64>();
    let row = |method: &str, data_bits: f64| ReportRow {
        dataset: corpus.name.clone(),
        method: method.into(),
        data_bits,
        dict_bits: 0.0,
        param_bits: 0.0,
        param_count: 0,
        graphs,
        edges,
    };
    vec![
        row(
            "uniform",
            sum(&|g| codelen::l_uniform(g.n() as u64, n_max)),
        ),
        row(
            "edge-list",
            sum(&|g| codelen::l_edge_list(g.n() as u64, g.m() as u64, n_max)),
        ),
        row(
            "erdos-renyi",
            sum(&|g| codelen::l_null(g.n() as u64, g.m() as u64, n_max)),
        ),
    ]
}

/// Hardened-model row: per-graph data bits under the fitted model plus
/// the dictionary and 16-bit parameter costs, for the given partitions.
pub fn model_row(
    corpus: &Corpus,
    partitions: &[Partition],
    model: &DictModel,
    method: &str,
) -> ReportRow {
    assert_eq!(corpus.len(), partitions.len());
    let data_bits = corpus
        .graphs
        .iter()
        .zip(partitions)
        .map(|(g, p)| model.l_graph_hard(&model.code_graph(g, p)))
        .sum();
    let param_bits = model.l_param_bits();
    ReportRow {
        dataset: corpus.name.clone(),
        method: method.into(),
        data_bits,
        dict_bits: model.l_dict_hard(),
        param_bits,
        param_count: (param_bits / 16.0).round() as u64,
        graphs: corpus.len(),
        edges: corpus.total_edges(),
    }
}
