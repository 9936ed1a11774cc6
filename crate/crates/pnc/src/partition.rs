//! Graph partitions into small connected blocks, and the fixed (non-learned)
//! partitioners: synchronous label propagation, Louvain modularity, and a
//! greedy merger driven directly by the SBM-style code length.
//!
//! Every partitioner feeds [`split_to_valid`], which enforces the two
//! invariants all downstream code relies on: blocks are connected induced
//! subgraphs, and no block exceeds the size limit.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codelen;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// A validated partition: `blocks[i]` are sorted vertex ids, blocks ordered
/// by smallest member; `intra_edges[i]` counts edges inside block `i`;
/// `cut_counts` holds the nonzero inter-block edge counts keyed by block
/// index pairs `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<u32>>,
    pub intra_edges: Vec<u64>,
    pub cut_counts: BTreeMap<(u32, u32), u64>,
}

impl Partition {
    /// Validate `blocks` against `g` and compute the edge statistics.
    /// Requirements: blocks exactly cover the vertices, each block induces
    /// a connected subgraph, and no block has more than `kmax` vertices.
    pub fn new(g: &Graph, mut blocks: Vec<Vec<u32>>, kmax: usize) -> Result<Self> {
        blocks.retain(|b| !b.is_empty());
        for b in &mut blocks {
            b.sort_unstable();
            b.dedup();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut owner = vec![u32::MAX; g.n() as usize];
        let mut covered = 0usize;
        for (i, b) in blocks.iter().enumerate() {
            if b.len() > kmax {
                return Err(Error::Partition(format!(
                    "block of {} vertices exceeds limit {kmax}",
                    b.len()
                )));
            }
            for &v in b {
                if v >= g.n() {
                    return Err(Error::Partition(format!("unknown vertex {v}")));
                }
                if owner[v as usize] != u32::MAX {
                    return Err(Error::Partition(format!("vertex {v} in two blocks")));
                }
                owner[v as usize] = i as u32;
                covered += 1;
            }
            if !g.induced(b).is_connected() {
                return Err(Error::Partition(format!(
                    "block {:?} is not connected",
                    b
                )));
            }
        }
        if covered != g.n() as usize {
            return Err(Error::Partition(format!(
                "blocks cover {covered} of {} vertices",
                g.n()
            )));
        }
        let mut intra_edges = vec![0u64; blocks.len()];
        let mut cut_counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for &(u, v) in g.edges() {
            let (a, b) = (owner[u as usize], owner[v as usize]);
            if a == b {
                intra_edges[a as usize] += 1;
            } else {
                *cut_counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        Ok(Partition {
            blocks,
            intra_edges,
            cut_counts,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<u64> {
        self.blocks.iter().map(|b| b.len() as u64).collect()
    }

    pub fn m_cut(&self) -> u64 {
        self.cut_counts.values().sum()
    }

    pub fn cuts_vec(&self) -> Vec<((usize, usize), u64)> {
        self.cut_counts
            .iter()
            .map(|(&(i, j), &m)| ((i as usize, j as usize), m))
            .collect()
    }

    /// Bits to encode the cut edges given the blocks.
    pub fn l_cuts(&self) -> f64 {
        codelen::l_cuts(&self.block_sizes(), &self.cuts_vec())
    }

    /// SBM-style whole-graph baseline under this partition.
    pub fn l_sbm(&self, n_max: u64) -> f64 {
        codelen::l_sbm(n_max, &self.block_sizes(), &self.intra_edges, &self.cuts_vec())
    }
}

/// Break arbitrary vertex groups into valid blocks: each group is split
/// into its connected components, and any component larger than `kmax` is
/// carved into connected chunks by repeated size-capped breadth-first
/// growth from its smallest remaining vertex.
pub fn split_to_valid(g: &Graph, groups: Vec<Vec<u32>>, kmax: usize) -> Vec<Vec<u32>> {
    assert!(kmax >= 1);
    let mut out = Vec::new();
    for group in groups {
        if group.is_empty() {
            continue;
        }
        for comp in g.induced(&group).components() {
            let verts: Vec<u32> = comp.iter().map(|&i| group[i as usize]).collect();
            if verts.len() <= kmax {
                out.push(verts);
                continue;
            }
            let mut remaining: Vec<u32> = verts;
            while !remaining.is_empty() {
                let sub = g.induced(&remaining);
                // BFS from the smallest remaining vertex, capped at kmax.
                let mut chunk_local = vec![0u32];
                let mut seen = vec![false; remaining.len()];
                seen[0] = true;
                let mut head = 0;
                while head < chunk_local.len() && chunk_local.len() < kmax {
                    let v = chunk_local[head];
                    head += 1;
                    for &w in sub.neighbors(v) {
                        if !seen[w as usize] && chunk_local.len() < kmax {
                            seen[w as usize] = true;
                            chunk_local.push(w);
                        }
                    }
                }
                let chunk: Vec<u32> = chunk_local
                    .iter()
                    .map(|&i| remaining[i as usize])
                    .collect();
                remaining.retain(|v| !chunk.contains(v));
                out.push(chunk);
            }
        }
    }
    out
}

/// Synchronous label propagation. Every vertex votes for the most common
/// label in its closed neighborhood (itself plus neighbors); ties pick the
/// smallest label. Deterministic; converges or is cut off after a fixed
/// number of rounds.
pub fn label_propagation(g: &Graph) -> Vec<Vec<u32>> {
    let n = g.n() as usize;
    let mut labels: Vec<u32> = (0..g.n()).collect();
    for _ in 0..100 {
        let mut next = Vec::with_capacity(n);
        for v in 0..g.n() {
            let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
            *votes.entry(labels[v as usize]).or_insert(0) += 1;
            for &w in g.neighbors(v) {
                *votes.entry(labels[w as usize]).or_insert(0) += 1;
            }
            // Most votes; ties break to the smallest label (first key wins
            // on strict improvement only).
            let mut best = (0usize, u32::MAX);
            for (&lab, &cnt) in &votes {
                if cnt > best.0 {
                    best = (cnt, lab);
                }
            }
            next.push(best.1);
        }
        if next == labels {
            break;
        }
        labels = next;
    }
    let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for v in 0..g.n() {
        groups.entry(labels[v as usize]).or_default().push(v);
    }
    groups.into_values().collect()
}

/// Greedy modularity (Louvain): local moving with seeded visit order and
/// lowest-community tie-breaks, then graph aggregation, repeated until no
/// level improves.
pub fn louvain(g: &Graph, seed: u64) -> Vec<Vec<u32>> {
    let n = g.n() as usize;
    if n == 0 {
        return Vec::new();
    }
    let m2: f64 = 2.0 * g.m() as f64;
    if m2 == 0.0 {
        return (0..g.n()).map(|v| vec![v]).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Weighted aggregate graph: adjacency maps plus self-loop weights.
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for &(u, v) in g.edges() {
        *adj[u as usize].entry(v as usize).or_insert(0.0) += 1.0;
        *adj[v as usize].entry(u as usize).or_insert(0.0) += 1.0;
    }
    let mut loops = vec![0.0f64; n];
    // membership[v] = current community of ORIGINAL vertex v.
    let mut membership: Vec<usize> = (0..n).collect();

    loop {
        let nn = adj.len();
        let deg: Vec<f64> = (0..nn)
            .map(|i| adj[i].values().sum::<f64>() + 2.0 * loops[i])
            .collect();
        let mut com: Vec<usize> = (0..nn).collect();
        let mut tot = deg.clone();
        let mut order: Vec<usize> = (0..nn).collect();
        order.shuffle(&mut rng);
        let mut moved_any = false;
        for _pass in 0..100 {
            let mut moved = false;
            for &u in &order {
                let cu = com[u];
                tot[cu] -= deg[u];
                let mut links: BTreeMap<usize, f64> = BTreeMap::new();
                links.entry(cu).or_insert(0.0);
                for (&v, &w) in &adj[u] {
                    *links.entry(com[v]).or_insert(0.0) += w;
                }
                // Strictly better gain wins; the old community wins ties so
                // oscillation can't happen, and the ascending map order
                // makes the lowest id win among equal newcomers.
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for (&c, &l) in &links {
                    let gain = l - tot[c] * deg[u] / m2;
                    if gain > best.0 + 1e-12 || (c == cu && gain >= best.0 - 1e-12) {
                        best = (gain, c);
                    }
                }
                let target = best.1;
                tot[target] += deg[u];
                if target != cu {
                    com[u] = target;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        if !moved_any {
            break;
        }
        // Renumber communities densely in first-seen (lowest old id) order.
        let mut renum: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in &com {
            let next = renum.len();
            renum.entry(c).or_insert(next);
        }
        let nc = renum.len();
        for v in 0..n {
            membership[v] = renum[&com[membership[v]]];
        }
        if nc == nn {
            break;
        }
        // Aggregate.
        let mut new_adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); nc];
        let mut new_loops = vec![0.0f64; nc];
        for i in 0..nn {
            let ci = renum[&com[i]];
            new_loops[ci] += loops[i];
            for (&j, &w) in &adj[i] {
                let cj = renum[&com[j]];
                if ci == cj {
                    if i < j {
                        new_loops[ci] += w;
                    }
                } else {
                    *new_adj[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        adj = new_adj;
        loops = new_loops;
    }
    let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for v in 0..n {
        groups.entry(membership[v]).or_default().push(v as u32);
    }
    groups.into_values().collect()
}

/// Greedy code-length merger: start from singletons and repeatedly merge
/// the adjacent block pair that most reduces the SBM-style description
/// length, while the merged block stays within `kmax`. Only adjacent pairs
/// are considered — merging non-adjacent blocks would create a
/// disconnected block.
pub fn mdl_merge(g: &Graph, kmax: usize) -> Vec<Vec<u32>> {
    let n = g.n() as usize;
    if n == 0 {
        return Vec::new();
    }
    // Live block state; merged-away blocks become None.
    let mut blocks: Vec<Option<Vec<u32>>> = (0..g.n()).map(|v| Some(vec![v])).collect();
    let mut intra: Vec<u64> = vec![0; n];
    let mut cut: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for &(u, v) in g.edges() {
        let key = ((u as usize).min(v as usize), (u as usize).max(v as usize));
        *cut.entry(key).or_insert(0) += 1;
    }
    let lg_choose_pairs = |k: u64, m: u64| crate::bits::lg_choose(k * k.saturating_sub(1) / 2, m);
    let mut b_live = n as u64;
    let m_total: u64 = g.m() as u64;
    let n_u64 = n as u64;

    loop {
        // Local cost delta of merging (a, c), excluding the terms that only
        // depend on the block count (identical for all candidates).
        let mut best: Option<(f64, (usize, usize))> = None;
        for (&(a, c), &m_ac) in &cut {
            debug_assert!(m_ac >= 1);
            let (ka, kc) = (
                blocks[a].as_ref().unwrap().len() as u64,
                blocks[c].as_ref().unwrap().len() as u64,
            );
            if ka + kc > kmax as u64 {
                continue;
            }
            let mut delta = lg_choose_pairs(ka + kc, intra[a] + intra[c] + m_ac)
                - lg_choose_pairs(ka, intra[a])
                - lg_choose_pairs(kc, intra[c])
                - crate::bits::lg_choose(ka * kc, m_ac);
            // Cuts from a or c to any third block x merge their slots.
            let mut third: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
            for (&(i, j), &mij) in &cut {
                if (i, j) == (a, c) {
                    continue;
                }
                if i == a || j == a {
                    third.entry(if i == a { j } else { i }).or_insert((0, 0)).0 = mij;
                }
                if i == c || j == c {
                    third.entry(if i == c { j } else { i }).or_insert((0, 0)).1 = mij;
                }
            }
            for (&x, &(m_ax, m_cx)) in &third {
                let kx = blocks[x].as_ref().unwrap().len() as u64;
                delta += crate::bits::lg_choose((ka + kc) * kx, m_ax + m_cx)
                    - crate::bits::lg_choose(ka * kx, m_ax)
                    - crate::bits::lg_choose(kc * kx, m_cx);
            }
            if best.as_ref().is_none_or(|&(d, _)| delta < d) {
                best = Some((delta, (a, c)));
            }
        }
        let Some((local_delta, (a, c))) = best else {
            break;
        };
        // Global terms: block count drops by one.
        let global_delta = crate::bits::lg_choose(n_u64 - 1, b_live - 2)
            - crate::bits::lg_choose(n_u64 - 1, b_live - 1)
            + crate::bits::lg_choose((b_live - 1) * b_live / 2 + m_total - 1, m_total)
            - crate::bits::lg_choose(b_live * (b_live + 1) / 2 + m_total - 1, m_total);
        if local_delta + global_delta >= -1e-9 {
            break;
        }
        // Apply the merge: fold block c into block a.
        let merged_c = blocks[c].take().unwrap();
        blocks[a].as_mut().unwrap().extend(merged_c);
        intra[a] += intra[c] + cut[&(a, c)];
        let old_cut = std::mem::take(&mut cut);
        for ((i, j), mij) in old_cut {
            if (i, j) == (a, c) {
                continue;
            }
            let map = |x: usize| if x == c { a } else { x };
            let (ni, nj) = (map(i), map(j));
            if ni == nj {
                continue;
            }
            *cut.entry((ni.min(nj), ni.max(nj))).or_insert(0) += mij;
        }
        b_live -= 1;
        let _ = m_total;
    }
    blocks.into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPartitioner {
    LabelProp,
    Louvain,
    MdlMerge,
}

impl FixedPartitioner {
    /// Run the partitioner and normalize the result into a valid
    /// [`Partition`].
    pub fn partition(&self, g: &Graph, kmax: usize, seed: u64) -> Result<Partition> {
        let groups = match self {
            FixedPartitioner::LabelProp => label_propagation(g),
            FixedPartitioner::Louvain => louvain(g, seed),
            FixedPartitioner::MdlMerge => mdl_merge(g, kmax),
        };
        Partition::new(g, split_to_valid(g, groups, kmax), kmax)
    }
}

impl FromStr for FixedPartitioner {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "label-prop" | "labelprop" => Ok(FixedPartitioner::LabelProp),
            "louvain" | "modularity" => Ok(FixedPartitioner::Louvain),
            "mdl-merge" | "mdlmerge" => Ok(FixedPartitioner::MdlMerge),
            other => Err(format!(
                "unknown partitioner {other:?} (expected labelprop, modularity, or mdlmerge)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two triangles joined by one bridge edge.
    fn barbell() -> Graph {
        Graph::new(
            6,
            vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)],
        )
        .unwrap()
    }

    #[test]
    fn partition_validation_catches_bad_blocks() {
        let g = barbell();
        // Valid.
        let p = Partition::new(&g, vec![vec![0, 1, 2], vec![3, 4, 5]], 12).unwrap();
        assert_eq!(p.intra_edges, vec![3, 3]);
        assert_eq!(p.cut_counts.get(&(0, 1)), Some(&1));
        assert_eq!(p.m_cut(), 1);
        // Missing vertex.
        assert!(Partition::new(&g, vec![vec![0, 1, 2], vec![3, 4]], 12).is_err());
        // Overlap.
        assert!(Partition::new(&g, vec![vec![0, 1, 2, 3], vec![3, 4, 5]], 12).is_err());
        // Disconnected block.
        assert!(Partition::new(&g, vec![vec![0, 1, 2, 4], vec![3, 5]], 12).is_err());
        // Size limit.
        assert!(Partition::new(&g, vec![(0..6).collect()], 5).is_err());
    }

    #[test]
    fn partition_lengths_match_codelen() {
        let g = Graph::new(4, vec![(0, 1), (2, 3), (1, 2)]).unwrap();
        let p = Partition::new(&g, vec![vec![0, 1], vec![2, 3]], 12).unwrap();
        assert!((p.l_cuts() - 4.321928094887362).abs() < 1e-12);
        assert!((p.l_sbm(4) - 14.036173612553483).abs() < 1e-12);
    }

    #[test]
    fn label_propagation_finds_the_two_triangles() {
        let blocks = label_propagation(&barbell());
        assert_eq!(blocks, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn label_propagation_fuses_cliques_and_isolates_edgeless_vertices() {
        let k4 = Graph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(label_propagation(&k4).len(), 1);
        let empty = Graph::new(3, vec![]).unwrap();
        assert_eq!(label_propagation(&empty).len(), 3);
    }

    #[test]
    fn louvain_finds_the_two_triangles() {
        let blocks = louvain(&barbell(), 0);
        assert_eq!(blocks.len(), 2);
        let mut sizes: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3]);
        // Deterministic for a fixed seed.
        assert_eq!(louvain(&barbell(), 7), louvain(&barbell(), 7));
    }

    #[test]
    fn mdl_merge_recovers_dense_blocks() {
        let blocks = mdl_merge(&barbell(), 12);
        let p = Partition::new(&barbell(), split_to_valid(&barbell(), blocks, 12), 12).unwrap();
        // The merged partition must not cost more than singletons.
        let singles = Partition::new(&barbell(), (0..6).map(|v| vec![v]).collect(), 12).unwrap();
        assert!(p.l_sbm(6) <= singles.l_sbm(6) + 1e-9);
        assert!(p.n_blocks() < 6);
    }

    #[test]
    fn split_carves_oversized_components_into_connected_chunks() {
        let path: Vec<(u32, u32)> = (0..29).map(|i| (i, i + 1)).collect();
        let g = Graph::new(30, path).unwrap();
        let blocks = split_to_valid(&g, vec![(0..30).collect()], 12);
        let sizes: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 30);
        assert!(sizes.iter().all(|&s| s <= 12));
        for b in &blocks {
            assert!(g.induced(b).is_connected());
        }
        // A group with two components splits along them.
        let g2 = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let blocks = split_to_valid(&g2, vec![vec![0, 1, 2, 3]], 12);
        assert_eq!(blocks, vec![vec![0, 1], vec![2, 3]]);
    }

    proptest! {
        #[test]
        fn every_partitioner_yields_a_valid_partition(
            n in 1u32..24,
            edge_bits in any::<[u64; 5]>(),
            seed in any::<u64>(),
        ) {
            let mut edges = Vec::new();
            let mut p = 0usize;
            for j in 1..n {
                for i in 0..j {
                    if edge_bits[p / 64] >> (p % 64) & 1 == 1 {
                        edges.push((i, j));
                    }
                    p += 1;
                }
            }
            let g = Graph::new(n, edges).unwrap();
            for part in [FixedPartitioner::LabelProp, FixedPartitioner::Louvain, FixedPartitioner::MdlMerge] {
                let p = part.partition(&g, 12, seed).unwrap();
                let m: u64 = p.intra_edges.iter().sum::<u64>() + p.m_cut();
                prop_assert_eq!(m, g.m() as u64);
            }
        }
    }
}
