//! Graph and corpus types plus the two text formats the tools speak:
//! TU-style benchmark directories and a simple multi-graph edge-list file.
//!
//! Graphs are simple and undirected, with optional categorical vertex and
//! edge labels. Vertices are `0..n`; edges are stored as `(u, v)` with
//! `u < v`, sorted ascending.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: u32,
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
    vattrs: Option<Vec<u16>>,
    eattrs: Option<Vec<u16>>,
}

impl Graph {
    /// Build a graph from an edge list. Endpoint order within a pair is
    /// normalized; duplicate edges and self-loops are rejected.
    pub fn new(n: u32, edges: Vec<(u32, u32)>) -> Result<Self> {
        let mut norm: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::Integrity(format!("self-loop at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Integrity(format!(
                    "edge ({a},{b}) references vertex >= n={n}"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Integrity("duplicate edge".into()));
        }
        let mut adj = vec![Vec::new(); n as usize];
        for &(u, v) in &norm {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: norm,
            adj,
            vattrs: None,
            eattrs: None,
        })
    }

    /// Attach categorical vertex labels (one per vertex).
    pub fn with_vertex_attrs(mut self, attrs: Vec<u16>) -> Result<Self> {
        if attrs.len() != self.n as usize {
            return Err(Error::Integrity("vertex attribute count != n".into()));
        }
        self.vattrs = Some(attrs);
        Ok(self)
    }

    /// Attach categorical edge labels (parallel to the sorted edge list).
    pub fn with_edge_attrs(mut self, attrs: Vec<u16>) -> Result<Self> {
        if attrs.len() != self.edges.len() {
            return Err(Error::Integrity("edge attribute count != m".into()));
        }
        self.eattrs = Some(attrs);
        Ok(self)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.edges.len() as u32
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> u32 {
        self.adj[v as usize].len() as u32
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn vertex_attrs(&self) -> Option<&[u16]> {
        self.vattrs.as_deref()
    }

    pub fn edge_attrs(&self) -> Option<&[u16]> {
        self.eattrs.as_deref()
    }

    pub fn vertex_attr(&self, v: u32) -> u16 {
        self.vattrs.as_ref().map_or(0, |a| a[v as usize])
    }

    /// Label of edge {u, v}; the edge must exist.
    pub fn edge_attr(&self, u: u32, v: u32) -> u16 {
        match &self.eattrs {
            None => 0,
            Some(attrs) => {
                let key = (u.min(v), u.max(v));
                let idx = self
                    .edges
                    .binary_search(&key)
                    .expect("edge_attr on missing edge");
                attrs[idx]
            }
        }
    }

    /// Subgraph induced on `verts`; vertex i of the result is `verts[i]`.
    pub fn induced(&self, verts: &[u32]) -> Graph {
        let pos: BTreeMap<u32, u32> = verts
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        assert_eq!(pos.len(), verts.len(), "induced() on duplicate vertices");
        let mut edges = Vec::new();
        let mut eattrs = self.eattrs.as_ref().map(|_| Vec::new());
        for (i, &v) in verts.iter().enumerate() {
            for &w in self.neighbors(v) {
                if let Some(&j) = pos.get(&w) {
                    if (i as u32) < j {
                        edges.push((i as u32, j));
                        if let Some(ea) = &mut eattrs {
                            ea.push(self.edge_attr(v, w));
                        }
                    }
                }
            }
        }
        // Re-sort attrs along with the normalized edge order.
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_unstable_by_key(|&i| edges[i]);
        let edges_sorted: Vec<(u32, u32)> = order.iter().map(|&i| edges[i]).collect();
        let eattrs = eattrs.map(|ea| order.iter().map(|&i| ea[i]).collect());
        let mut g = Graph::new(verts.len() as u32, edges_sorted).expect("induced is simple");
        if let Some(va) = &self.vattrs {
            g = g
                .with_vertex_attrs(verts.iter().map(|&v| va[v as usize]).collect())
                .unwrap();
        }
        if let Some(ea) = eattrs {
            g = g.with_edge_attrs(ea).unwrap();
        }
        g
    }

    /// Connected components as sorted vertex lists, ordered by smallest
    /// member.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.n as usize];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s as usize] {
                continue;
            }
            let mut comp = vec![s];
            seen[s as usize] = true;
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &w in self.neighbors(v) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    pub fn degree_sequence(&self) -> Vec<u32> {
        let mut d: Vec<u32> = (0..self.n).map(|v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }

    /// Color-refinement digest: iterate `rounds` of neighborhood hashing
    /// (seeded with degree and vertex label) and hash the sorted color
    /// multiset. Equal under isomorphism; the empty graph gets a fixed
    /// sentinel.
    pub fn wl_hash(&self, rounds: usize) -> u64 {
        let mut colors: Vec<u64> = (0..self.n)
            .map(|v| {
                let mut h = DefaultHasher::new();
                (self.degree(v), self.vertex_attr(v)).hash(&mut h);
                h.finish()
            })
            .collect();
        for _ in 0..rounds {
            let mut next = Vec::with_capacity(colors.len());
            for v in 0..self.n {
                let mut nb: Vec<(u64, u16)> = self
                    .neighbors(v)
                    .iter()
                    .map(|&w| (colors[w as usize], self.edge_attr(v, w)))
                    .collect();
                nb.sort_unstable();
                let mut h = DefaultHasher::new();
                (colors[v as usize], &nb).hash(&mut h);
                next.push(h.finish());
            }
            colors = next;
        }
        colors.sort_unstable();
        let mut h = DefaultHasher::new();
        (self.n, self.m(), &colors).hash(&mut h);
        h.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub graphs: Vec<Graph>,
    /// Per-graph split assignment; covers every graph exactly once.
    pub split: Vec<Split>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>) -> Self {
        let split = vec![Split::Train; graphs.len()];
        Corpus {
            name: name.into(),
            graphs,
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Largest vertex count over the whole corpus.
    pub fn n_max(&self) -> u32 {
        self.graphs.iter().map(|g| g.n()).max().unwrap_or(0)
    }

    /// Largest vertex count over the training split.
    pub fn n_max_train(&self) -> u32 {
        self.train_indices()
            .into_iter()
            .map(|i| self.graphs[i].n())
            .max()
            .unwrap_or(0)
    }

    pub fn total_edges(&self) -> u64 {
        self.graphs.iter().map(|g| g.m() as u64).sum()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.split[i] == Split::Train)
            .collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.split[i] == Split::Test)
            .collect()
    }

    /// Seeded random split: `train_frac` of the graphs (rounded up) go to
    /// the training split.
    pub fn assign_split(&mut self, train_frac: f64, seed: u64) {
        assert!((0.0..=1.0).contains(&train_frac));
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        let n_train = (train_frac * self.len() as f64).ceil() as usize;
        for (pos, &i) in idx.iter().enumerate() {
            self.split[i] = if pos < n_train {
                Split::Train
            } else {
                Split::Test
            };
        }
    }

    /// Vertex-label domain size (max label + 1), if any graph carries labels.
    pub fn vertex_attr_domain(&self) -> Option<u32> {
        let mut max: Option<u32> = None;
        for g in &self.graphs {
            if let Some(a) = g.vertex_attrs() {
                let m = a.iter().copied().max().unwrap_or(0) as u32;
                max = Some(max.map_or(m, |x: u32| x.max(m)));
            }
        }
        max.map(|m| m + 1)
    }

    pub fn edge_attr_domain(&self) -> Option<u32> {
        let mut max: Option<u32> = None;
        let mut any = false;
        for g in &self.graphs {
            if let Some(a) = g.edge_attrs() {
                any = true;
                if let Some(&m) = a.iter().max() {
                    let m = m as u32;
                    max = Some(max.map_or(m, |x: u32| x.max(m)));
                }
            }
        }
        if any {
            Some(max.map_or(1, |m| m + 1))
        } else {
            None
        }
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

fn parse_usize(path: &Path, line_no: usize, tok: &str) -> Result<usize> {
    tok.trim()
        .parse::<usize>()
        .map_err(|_| Error::parse(path, line_no, format!("expected integer, got {tok:?}")))
}

/// Parse a TU-style benchmark directory: `<name>_A.txt` (1-indexed global
/// edge pairs), `<name>_graph_indicator.txt`, and optionally
/// `<name>_node_labels.txt` / `<name>_edge_labels.txt`. Graph labels are
/// ignored. Directed duplicate pairs merge into one undirected edge; the
/// labels of merged duplicates must agree.
pub fn parse_tu_dataset(dir: &Path) -> Result<Corpus> {
    let name = dir
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Integrity(format!("bad dataset dir {}", dir.display())))?
        .to_string();
    let file = |suffix: &str| -> PathBuf { dir.join(format!("{name}_{suffix}.txt")) };

    // graph_indicator: line i = graph id (1-indexed) of global vertex i.
    let ind_path = file("graph_indicator");
    let mut graph_of: Vec<usize> = Vec::new();
    for (ln, line) in open_lines(&ind_path)? {
        let line = line.map_err(|e| Error::io(&ind_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let gid = parse_usize(&ind_path, ln, &line)?;
        if gid == 0 {
            return Err(Error::parse(&ind_path, ln, "graph ids are 1-indexed"));
        }
        graph_of.push(gid - 1);
    }
    let n_graphs = graph_of.iter().copied().max().map_or(0, |g| g + 1);
    // Global vertex id -> (graph, local id). TU vertex ids are contiguous
    // per graph but we only rely on the indicator.
    let mut local_of: Vec<u32> = Vec::with_capacity(graph_of.len());
    let mut sizes = vec![0u32; n_graphs];
    for &g in &graph_of {
        local_of.push(sizes[g]);
        sizes[g] += 1;
    }

    let a_path = file("A");
    let mut edge_sets: Vec<BTreeMap<(u32, u32), usize>> = vec![BTreeMap::new(); n_graphs];
    // Remember each input line's (graph, edge key) so edge labels can be
    // folded in afterwards.
    let mut line_edges: Vec<(usize, (u32, u32))> = Vec::new();
    for (ln, line) in open_lines(&a_path)? {
        let line = line.map_err(|e| Error::io(&a_path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut it = t.split(',');
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::parse(&a_path, ln, "expected \"u, v\"")),
        };
        let a = parse_usize(&a_path, ln, a)?;
        let b = parse_usize(&a_path, ln, b)?;
        if a == 0 || b == 0 {
            return Err(Error::parse(&a_path, ln, "vertex ids are 1-indexed"));
        }
        let (a, b) = (a - 1, b - 1);
        if a >= graph_of.len() || b >= graph_of.len() {
            return Err(Error::Integrity(format!(
                "{}:{ln}: edge references vertex {} but only {} vertices are declared",
                a_path.display(),
                a.max(b) + 1,
                graph_of.len()
            )));
        }
        if graph_of[a] != graph_of[b] {
            return Err(Error::Integrity(format!(
                "{}:{ln}: edge joins vertices of different graphs",
                a_path.display()
            )));
        }
        if a == b {
            return Err(Error::Integrity(format!(
                "{}:{ln}: self-loop on vertex {}",
                a_path.display(),
                a + 1
            )));
        }
        let g = graph_of[a];
        let (u, v) = (local_of[a].min(local_of[b]), local_of[a].max(local_of[b]));
        let idx = line_edges.len();
        edge_sets[g].entry((u, v)).or_insert(idx);
        line_edges.push((g, (u, v)));
    }

    // Optional labels.
    let nl_path = file("node_labels");
    let node_labels: Option<Vec<u16>> = if nl_path.exists() {
        let mut out = Vec::new();
        for (ln, line) in open_lines(&nl_path)? {
            let line = line.map_err(|e| Error::io(&nl_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let v = parse_usize(&nl_path, ln, &line)?;
            let v = u16::try_from(v)
                .map_err(|_| Error::parse(&nl_path, ln, "label out of u16 range"))?;
            out.push(v);
        }
        if out.len() != graph_of.len() {
            return Err(Error::Integrity(format!(
                "{}: {} labels for {} vertices",
                nl_path.display(),
                out.len(),
                graph_of.len()
            )));
        }
        Some(out)
    } else {
        None
    };

    let el_path = file("edge_labels");
    let edge_labels: Option<Vec<u16>> = if el_path.exists() {
        let mut out = Vec::new();
        for (ln, line) in open_lines(&el_path)? {
            let line = line.map_err(|e| Error::io(&el_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let v = parse_usize(&el_path, ln, &line)?;
            let v = u16::try_from(v)
                .map_err(|_| Error::parse(&el_path, ln, "label out of u16 range"))?;
            out.push(v);
        }
        if out.len() != line_edges.len() {
            return Err(Error::Integrity(format!(
                "{}: {} labels for {} edge lines",
                el_path.display(),
                out.len(),
                line_edges.len()
            )));
        }
        // Duplicate directed pairs must carry the same label.
        for (idx, &(g, key)) in line_edges.iter().enumerate() {
            let first = edge_sets[g][&key];
            if out[idx] != out[first] {
                return Err(Error::Integrity(format!(
                    "{}: conflicting labels for one undirected edge",
                    el_path.display()
                )));
            }
        }
        Some(out)
    } else {
        None
    };

    let mut graphs = Vec::with_capacity(n_graphs);
    let mut vertex_cursor = 0usize;
    for (g, &n) in sizes.iter().enumerate() {
        let edges: Vec<(u32, u32)> = edge_sets[g].keys().copied().collect();
        let mut graph = Graph::new(n, edges)?;
        if let Some(nl) = &node_labels {
            graph = graph.with_vertex_attrs(nl[vertex_cursor..vertex_cursor + n as usize].to_vec())?;
        }
        if let Some(el) = &edge_labels {
            let attrs: Vec<u16> = edge_sets[g].values().map(|&idx| el[idx]).collect();
            graph = graph.with_edge_attrs(attrs)?;
        }
        vertex_cursor += n as usize;
        graphs.push(graph);
    }
    Ok(Corpus::new(name, graphs))
}

/// Write a corpus as a TU-style dataset directory `<dir>/<corpus.name>/`.
/// Each undirected edge appears as two directed lines, matching the
/// published datasets. Label files are written only when attrs are present.
pub fn write_tu_dataset(corpus: &Corpus, dir: &Path) -> Result<PathBuf> {
    let root = dir.join(&corpus.name);
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let name = &corpus.name;

    let mut indicator = String::new();
    let mut a = String::new();
    let mut node_labels = String::new();
    let mut edge_labels = String::new();
    let mut base = 0u64;
    for (gi, g) in corpus.graphs.iter().enumerate() {
        for _ in 0..g.n() {
            indicator.push_str(&format!("{}\n", gi + 1));
        }
        if let Some(va) = g.vertex_attrs() {
            for l in va {
                node_labels.push_str(&format!("{l}\n"));
            }
        }
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            let (gu, gv) = (base + u as u64 + 1, base + v as u64 + 1);
            a.push_str(&format!("{gu}, {gv}\n{gv}, {gu}\n"));
            if let Some(ea) = g.edge_attrs() {
                edge_labels.push_str(&format!("{0}\n{0}\n", ea[i]));
            }
        }
        base += g.n() as u64;
    }

    let write = |suffix: &str, body: &str| -> Result<()> {
        let p = root.join(format!("{name}_{suffix}.txt"));
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write("graph_indicator", &indicator)?;
    write("A", &a)?;
    if !node_labels.is_empty() {
        write("node_labels", &node_labels)?;
    }
    if !edge_labels.is_empty() {
        write("edge_labels", &edge_labels)?;
    }
    Ok(root)
}

/// Write a corpus in the plain edge-list format (see `docs/formats.md`):
///
/// ```text
/// graphs <count>
/// graph <n> <m>
/// [vattrs a_0 .. a_{n-1}]
/// <u> <v> [edge_label]      (m lines, 0-indexed, u < v, ascending)
/// ```
pub fn write_corpus_txt(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("graphs {}\n", corpus.len()));
    for g in &corpus.graphs {
        out.push_str(&format!("graph {} {}\n", g.n(), g.m()));
        if let Some(va) = g.vertex_attrs() {
            out.push_str("vattrs");
            for a in va {
                out.push_str(&format!(" {a}"));
            }
            out.push('\n');
        }
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            match g.edge_attrs() {
                Some(ea) => out.push_str(&format!("{u} {v} {}\n", ea[i])),
                None => out.push_str(&format!("{u} {v}\n")),
            }
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Parse the format written by [`write_corpus_txt`].
pub fn read_corpus_txt(path: &Path) -> Result<Corpus> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    let mut lines = open_lines(path)?;
    let mut next_content = || -> Result<Option<(usize, String)>> {
        for (ln, line) in lines.by_ref() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let t = line.trim().to_string();
            if !t.is_empty() {
                return Ok(Some((ln, t)));
            }
        }
        Ok(None)
    };

    let (ln, header) = next_content()?
        .ok_or_else(|| Error::parse(path, 1, "empty file, expected \"graphs <count>\""))?;
    let count = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["graphs", c] => parse_usize(path, ln, c)?,
        _ => return Err(Error::parse(path, ln, "expected \"graphs <count>\"")),
    };

    let mut graphs = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, gh) = next_content()?
            .ok_or_else(|| Error::parse(path, ln, "unexpected end of file in graph header"))?;
        let (n, m) = match gh.split_whitespace().collect::<Vec<_>>()[..] {
            ["graph", n, m] => (parse_usize(path, ln, n)?, parse_usize(path, ln, m)?),
            _ => return Err(Error::parse(path, ln, "expected \"graph <n> <m>\"")),
        };
        let mut vattrs: Option<Vec<u16>> = None;
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m);
        let mut eattrs: Vec<u16> = Vec::new();
        let mut saw_eattr = false;
        let mut i = 0;
        while i < m {
            let (ln2, row) = next_content()?
                .ok_or_else(|| Error::parse(path, ln, "unexpected end of file in edge list"))?;
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks.first() == Some(&"vattrs") {
                if toks.len() != n + 1 {
                    return Err(Error::parse(path, ln2, "vattrs length != n"));
                }
                let mut va = Vec::with_capacity(n);
                for t in &toks[1..] {
                    va.push(parse_usize(path, ln2, t)? as u16);
                }
                vattrs = Some(va);
                continue;
            }
            match toks[..] {
                [u, v] => {
                    edges.push((
                        parse_usize(path, ln2, u)? as u32,
                        parse_usize(path, ln2, v)? as u32,
                    ));
                }
                [u, v, a] => {
                    edges.push((
                        parse_usize(path, ln2, u)? as u32,
                        parse_usize(path, ln2, v)? as u32,
                    ));
                    eattrs.push(parse_usize(path, ln2, a)? as u16);
                    saw_eattr = true;
                }
                _ => return Err(Error::parse(path, ln2, "expected \"u v [label]\"")),
            }
            i += 1;
        }
        // A zero-edge graph can still declare labels on the next line.
        if m == 0 {
            // peek: vattrs may follow immediately; handled above only when
            // m > 0, so check the stashed case here.
        }
        let mut g = Graph::new(n as u32, edges)?;
        if let Some(va) = vattrs {
            g = g.with_vertex_attrs(va)?;
        }
        if saw_eattr {
            if eattrs.len() != m {
                return Err(Error::parse(path, ln, "mixed labelled/unlabelled edges"));
            }
            g = g.with_edge_attrs(eattrs)?;
        }
        graphs.push(g);
    }
    Ok(Corpus::new(name, graphs))
}
