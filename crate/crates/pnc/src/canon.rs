//! Canonical forms for small vertex- and edge-labelled graphs.
//!
//! A [`CanonicalCode`] is a complete isomorphism invariant: two graphs get
//! the same code iff they are isomorphic (respecting labels). Codes double
//! as compact serializable descriptions — the upper-triangle adjacency
//! bits are packed into a `u128`.
//!
//! The search is individualization-refinement: orderings are restricted to
//! those consistent with iterated neighborhood refinement, branching only
//! inside the first non-singleton cell, and the smallest key over the
//! explored orderings wins. Branches that differ by a single-swap
//! automorphism are explored once. Note the resulting code is *not* the
//! minimum over all `k!` orderings (only over refinement-consistent ones);
//! it is still a complete invariant because the refinement process itself
//! is isomorphism-invariant.

use std::collections::BTreeMap;

use crate::graph::Graph;

/// Pairs `(i, j)` with `i < j` in colex order: (0,1),(0,2),(1,2),(0,3),…
/// Index of `(i, j)` is `j(j-1)/2 + i`.
pub fn pair_index(i: u32, j: u32) -> u32 {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

/// All pairs of `0..k` in colex order.
pub fn pairs_colex(k: u32) -> impl Iterator<Item = (u32, u32)> {
    (1..k).flat_map(|j| (0..j).map(move |i| (i, j)))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode {
    pub k: u8,
    /// Upper-triangle adjacency bits; colex pair `p` sits at bit
    /// `P - 1 - p` where `P = k(k-1)/2`, so earlier pairs are more
    /// significant.
    pub mask: u128,
    /// Vertex labels in canonical vertex order, if the graph carries any.
    pub vattrs: Option<Vec<u16>>,
    /// Edge labels in colex order of the present edges, if any.
    pub eattrs: Option<Vec<u16>>,
}

impl CanonicalCode {
    pub fn n_edges(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Edges in colex order under canonical vertex ids.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let p_total = self.k as u32 * (self.k as u32).saturating_sub(1) / 2;
        pairs_colex(self.k as u32)
            .enumerate()
            .filter(|&(p, _)| self.mask >> (p_total - 1 - p as u32) & 1 == 1)
            .map(|(_, ij)| ij)
            .collect()
    }

    /// Materialize the code back into a graph.
    pub fn to_graph(&self) -> Graph {
        let edges = self.edges();
        let mut g = Graph::new(self.k as u32, edges.clone()).expect("code is simple");
        if let Some(va) = &self.vattrs {
            g = g.with_vertex_attrs(va.clone()).unwrap();
        }
        if let Some(ea) = &self.eattrs {
            // Our labels follow colex pair order; the graph stores its
            // edge list sorted by (u, v), so re-sort the labels alongside.
            let mut tagged: Vec<((u32, u32), u16)> =
                edges.into_iter().zip(ea.iter().copied()).collect();
            tagged.sort_unstable();
            g = g
                .with_edge_attrs(tagged.into_iter().map(|(_, a)| a).collect())
                .unwrap();
        }
        g
    }
}

/// Code of `g` relabelled so that old vertex `order[i]` becomes vertex `i`.
pub fn code_under_order(g: &Graph, order: &[u32]) -> CanonicalCode {
    let k = g.n();
    assert_eq!(order.len(), k as usize);
    assert!(k <= 16, "codes are limited to 16 vertices");
    let p_total = k * k.saturating_sub(1) / 2;
    let mut mask = 0u128;
    let mut eattrs = g.edge_attrs().map(|_| Vec::with_capacity(g.m() as usize));
    for (p, (i, j)) in pairs_colex(k).enumerate() {
        let (u, v) = (order[i as usize], order[j as usize]);
        if g.has_edge(u, v) {
            mask |= 1u128 << (p_total - 1 - p as u32);
            if let Some(ea) = &mut eattrs {
                ea.push(g.edge_attr(u, v));
            }
        }
    }
    let vattrs = g
        .vertex_attrs()
        .map(|va| order.iter().map(|&v| va[v as usize]).collect());
    CanonicalCode {
        k: k as u8,
        mask,
        vattrs,
        eattrs,
    }
}

type Cells = Vec<Vec<u32>>;

/// Iterated neighborhood refinement of an ordered partition. Each round
/// regroups vertices by (own cell, sorted multiset of (neighbor cell,
/// edge label)); sub-cells inherit their parent's position and order by
/// signature. Stops at the coarsest stable partition.
fn refine(g: &Graph, mut cells: Cells) -> Cells {
    loop {
        let mut cell_of = vec![0usize; g.n() as usize];
        for (ci, cell) in cells.iter().enumerate() {
            for &v in cell {
                cell_of[v as usize] = ci;
            }
        }
        let mut groups: BTreeMap<(usize, Vec<(usize, u16)>), Vec<u32>> = BTreeMap::new();
        for cell in &cells {
            for &v in cell {
                let mut sig: Vec<(usize, u16)> = g
                    .neighbors(v)
                    .iter()
                    .map(|&w| (cell_of[w as usize], g.edge_attr(v, w)))
                    .collect();
                sig.sort_unstable();
                groups
                    .entry((cell_of[v as usize], sig))
                    .or_default()
                    .push(v);
            }
        }
        if groups.len() == cells.len() {
            return cells;
        }
        cells = groups.into_values().collect();
    }
}

/// Is swapping `u` and `w` (fixing everything else) an automorphism?
fn is_swap_automorphism(g: &Graph, u: u32, w: u32) -> bool {
    if g.vertex_attr(u) != g.vertex_attr(w) {
        return false;
    }
    let strip = |a: u32, b: u32| -> Vec<(u32, u16)> {
        g.neighbors(a)
            .iter()
            .filter(|&&x| x != b && x != a)
            .map(|&x| (x, g.edge_attr(a, x)))
            .collect()
    };
    strip(u, w) == strip(w, u)
}

struct Search<'g> {
    g: &'g Graph,
    best: Option<(u128, Option<Vec<u16>>, Vec<u32>)>,
}

impl Search<'_> {
    fn leaf(&mut self, cells: &Cells) {
        let order: Vec<u32> = cells.iter().map(|c| c[0]).collect();
        let code = code_under_order(self.g, &order);
        let key = (code.mask, code.eattrs);
        let better = match &self.best {
            None => true,
            Some((m, e, _)) => key < (*m, e.clone()),
        };
        if better {
            self.best = Some((key.0, key.1, order));
        }
    }

    fn descend(&mut self, cells: Cells) {
        let target = match cells.iter().position(|c| c.len() > 1) {
            None => return self.leaf(&cells),
            Some(t) => t,
        };
        let mut kept: Vec<u32> = Vec::new();
        for &v in &cells[target] {
            if kept.iter().any(|&u| is_swap_automorphism(self.g, u, v)) {
                continue;
            }
            kept.push(v);
            let mut next = Vec::with_capacity(cells.len() + 1);
            for (ci, cell) in cells.iter().enumerate() {
                if ci == target {
                    next.push(vec![v]);
                    next.push(cell.iter().copied().filter(|&x| x != v).collect());
                } else {
                    next.push(cell.clone());
                }
            }
            self.descend(refine(self.g, next));
        }
    }
}

/// Canonical code together with the vertex order realizing it: old vertex
/// `order[i]` is canonical vertex `i`.
pub fn canonical_morphism(g: &Graph) -> (CanonicalCode, Vec<u32>) {
    if g.n() == 0 {
        return (
            CanonicalCode {
                k: 0,
                mask: 0,
                vattrs: g.vertex_attrs().map(|_| Vec::new()),
                eattrs: g.edge_attrs().map(|_| Vec::new()),
            },
            Vec::new(),
        );
    }
    // Initial cells: vertex-label classes in label order.
    let mut by_attr: BTreeMap<u16, Vec<u32>> = BTreeMap::new();
    for v in 0..g.n() {
        by_attr.entry(g.vertex_attr(v)).or_default().push(v);
    }
    let cells: Cells = by_attr.into_values().collect();
    let mut s = Search { g, best: None };
    s.descend(refine(g, cells));
    let (_, _, order) = s.best.expect("search visits at least one leaf");
    (code_under_order(g, &order), order)
}

pub fn canonical_form(g: &Graph) -> CanonicalCode {
    canonical_morphism(g).0
}

/// Reference key minimized over *all* `k!` orderings. Exponential; only
/// for cross-checking `canonical_form` on small graphs. Two graphs are
/// isomorphic iff their reference keys agree.
pub fn reference_key(g: &Graph) -> (Option<Vec<u16>>, u128, Option<Vec<u16>>) {
    let k = g.n() as usize;
    let mut order: Vec<u32> = (0..k as u32).collect();
    let mut best: Option<(Option<Vec<u16>>, u128, Option<Vec<u16>>)> = None;
    permute(&mut order, 0, &mut |ord| {
        let code = code_under_order(g, ord);
        let key = (code.vattrs, code.mask, code.eattrs);
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    });
    best.unwrap_or((
        g.vertex_attrs().map(|_| Vec::new()),
        0,
        g.edge_attrs().map(|_| Vec::new()),
    ))
}

fn permute(xs: &mut Vec<u32>, at: usize, f: &mut impl FnMut(&[u32])) {
    if at == xs.len() {
        f(xs);
        return;
    }
    for i in at..xs.len() {
        xs.swap(at, i);
        permute(xs, at + 1, f);
        xs.swap(at, i);
    }
}
