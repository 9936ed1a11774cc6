//! Learned sequential partitioner. Blocks are grown one vertex at a time:
//! first a target block size is drawn from a masked categorical, then
//! vertices are drawn from the frontier (unassigned neighbors of the
//! growing block) by a linear softmax over per-candidate features. Blocks
//! are connected by construction; a block closes early if its frontier
//! empties.
//!
//! Besides sampling, the module enumerates every trajectory of the process
//! on tiny graphs — the exhaustive distribution is the test oracle for
//! both the probabilities and the score-function gradients.

use std::collections::BTreeSet;

use rand::Rng;

use crate::dict::DictModel;
use crate::graph::Graph;

pub const N_FEATURES: usize = 8;

/// Linear policy parameters: `k_logits[i]` scores target size `i + 1`
/// (masked to the sizes currently possible), `w` weights the candidate
/// features.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub k_logits: Vec<f64>,
    pub w: Vec<f64>,
}

impl PolicyParams {
    pub fn new(kmax: usize) -> Self {
        PolicyParams {
            k_logits: vec![0.0; kmax],
            w: vec![0.0; N_FEATURES],
        }
    }

    pub fn n_params(&self) -> usize {
        self.k_logits.len() + self.w.len()
    }
}

/// One recorded decision.
#[derive(Debug, Clone)]
pub enum Step {
    /// Target-size draw over sizes `1..=support`; `chosen` is 0-based.
    K { support: usize, chosen: usize },
    /// Vertex draw; one feature row per candidate.
    V {
        feats: Vec<[f64; N_FEATURES]>,
        chosen: usize,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// Natural-log probability of the whole trajectory.
    pub ln_prob: f64,
}

fn ln_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

/// Per-candidate feature row. `block` is the growing block, `m_block` its
/// internal edge count, `lowest` the smallest candidate id.
#[allow(clippy::too_many_arguments)]
fn features(
    g: &Graph,
    unassigned: &BTreeSet<u32>,
    block: &[u32],
    m_block: u64,
    blocks_done: usize,
    dict: Option<&DictModel>,
    v: u32,
    lowest: u32,
    kmax: usize,
) -> [f64; N_FEATURES] {
    let k = kmax as f64;
    let remaining_degree = g
        .neighbors(v)
        .iter()
        .filter(|w| unassigned.contains(w))
        .count() as f64;
    let frontier_links = g
        .neighbors(v)
        .iter()
        .filter(|w| block.contains(w))
        .count() as f64;
    let bs = block.len() as f64;
    let density = if block.len() >= 2 {
        2.0 * m_block as f64 / (bs * (bs - 1.0))
    } else {
        0.0
    };
    let dict_hit = dict.is_some_and(|d| {
        let mut verts: Vec<u32> = block.to_vec();
        verts.push(v);
        verts.sort_unstable();
        let code = crate::canon::canonical_form(&g.induced(&verts));
        d.lookup(&code).is_some_and(|i| d.xhat(i) >= 0.5)
    });
    [
        1.0,
        remaining_degree / k,
        frontier_links / k,
        bs / k,
        density,
        if dict_hit { 1.0 } else { 0.0 },
        (blocks_done.min(16)) as f64 / 16.0,
        if v == lowest { 1.0 } else { 0.0 },
    ]
}

/// Candidate vertices for the next draw: the whole unassigned set for a
/// block's first vertex, its unassigned neighbors afterwards.
fn candidates(g: &Graph, unassigned: &BTreeSet<u32>, block: &[u32]) -> Vec<u32> {
    if block.is_empty() {
        unassigned.iter().copied().collect()
    } else {
        let mut cs: BTreeSet<u32> = BTreeSet::new();
        for &b in block {
            for &w in g.neighbors(b) {
                if unassigned.contains(&w) {
                    cs.insert(w);
                }
            }
        }
        cs.into_iter().collect()
    }
}

fn candidate_rows(
    g: &Graph,
    params: &PolicyParams,
    unassigned: &BTreeSet<u32>,
    block: &[u32],
    m_block: u64,
    blocks_done: usize,
    dict: Option<&DictModel>,
    cands: &[u32],
    kmax: usize,
) -> (Vec<[f64; N_FEATURES]>, Vec<f64>) {
    let lowest = cands[0];
    let feats: Vec<[f64; N_FEATURES]> = cands
        .iter()
        .map(|&v| {
            features(
                g, unassigned, block, m_block, blocks_done, dict, v, lowest, kmax,
            )
        })
        .collect();
    let logits: Vec<f64> = feats
        .iter()
        .map(|f| f.iter().zip(&params.w).map(|(a, b)| a * b).sum())
        .collect();
    (feats, logits)
}

/// Draw one partition. Returns the blocks and the recorded trajectory.
pub fn sample_partition(
    g: &Graph,
    params: &PolicyParams,
    dict: Option<&DictModel>,
    kmax: usize,
    rng: &mut impl Rng,
) -> (Vec<Vec<u32>>, Trajectory) {
    let mut unassigned: BTreeSet<u32> = (0..g.n()).collect();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut traj = Trajectory::default();
    while !unassigned.is_empty() {
        let support = kmax.min(unassigned.len());
        let lp = ln_softmax(&params.k_logits[..support]);
        let kt = sample_from_ln(&lp, rng);
        traj.steps.push(Step::K {
            support,
            chosen: kt,
        });
        traj.ln_prob += lp[kt];
        let target = kt + 1;

        let mut block: Vec<u32> = Vec::new();
        let mut m_block = 0u64;
        while block.len() < target {
            let cands = candidates(g, &unassigned, &block);
            if cands.is_empty() {
                break;
            }
            let (feats, logits) = candidate_rows(
                g,
                params,
                &unassigned,
                &block,
                m_block,
                blocks.len(),
                dict,
                &cands,
                kmax,
            );
            let lp = ln_softmax(&logits);
            let ci = sample_from_ln(&lp, rng);
            traj.steps.push(Step::V { feats, chosen: ci });
            traj.ln_prob += lp[ci];
            let v = cands[ci];
            m_block += g
                .neighbors(v)
                .iter()
                .filter(|w| block.contains(w))
                .count() as u64;
            block.push(v);
            unassigned.remove(&v);
        }
        block.sort_unstable();
        blocks.push(block);
    }
    (blocks, traj)
}

fn sample_from_ln(ln_probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &lp) in ln_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return i;
        }
    }
    ln_probs.len() - 1
}

/// Accumulate ∇ ln p(trajectory) with weight `scale` into `(dk, dw)`.
pub fn add_grad_ln_prob(
    params: &PolicyParams,
    traj: &Trajectory,
    scale: f64,
    dk: &mut [f64],
    dw: &mut [f64],
) {
    assert_eq!(dk.len(), params.k_logits.len());
    assert_eq!(dw.len(), N_FEATURES);
    for step in &traj.steps {
        match step {
            Step::K { support, chosen } => {
                let lp = ln_softmax(&params.k_logits[..*support]);
                for (i, &l) in lp.iter().enumerate() {
                    let ind = if i == *chosen { 1.0 } else { 0.0 };
                    dk[i] += scale * (ind - l.exp());
                }
            }
            Step::V { feats, chosen } => {
                let logits: Vec<f64> = feats
                    .iter()
                    .map(|f| f.iter().zip(&params.w).map(|(a, b)| a * b).sum())
                    .collect();
                let lp = ln_softmax(&logits);
                for (i, f) in feats.iter().enumerate() {
                    let ind = if i == *chosen { 1.0 } else { 0.0 };
                    let coef = scale * (ind - lp[i].exp());
                    for (d, &x) in dw.iter_mut().zip(f.iter()) {
                        *d += coef * x;
                    }
                }
            }
        }
    }
}

/// Every trajectory of the process with its probability, exhaustively.
/// Exponential — intended for graphs of at most ~5 vertices in tests.
pub fn enumerate_trajectories(
    g: &Graph,
    params: &PolicyParams,
    dict: Option<&DictModel>,
    kmax: usize,
) -> Vec<(Vec<Vec<u32>>, Trajectory, f64)> {
    assert!(g.n() <= 8, "trajectory enumeration is exponential");
    let mut out = Vec::new();
    let unassigned: BTreeSet<u32> = (0..g.n()).collect();
    recurse(
        g,
        params,
        dict,
        kmax,
        unassigned,
        Vec::new(),
        Trajectory::default(),
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    g: &Graph,
    params: &PolicyParams,
    dict: Option<&DictModel>,
    kmax: usize,
    unassigned: BTreeSet<u32>,
    blocks: Vec<Vec<u32>>,
    traj: Trajectory,
    out: &mut Vec<(Vec<Vec<u32>>, Trajectory, f64)>,
) {
    if unassigned.is_empty() {
        let p = traj.ln_prob.exp();
        out.push((blocks, traj, p));
        return;
    }
    let support = kmax.min(unassigned.len());
    let lp = ln_softmax(&params.k_logits[..support]);
    for kt in 0..support {
        let mut t = traj.clone();
        t.steps.push(Step::K {
            support,
            chosen: kt,
        });
        t.ln_prob += lp[kt];
        grow_block(
            g,
            params,
            dict,
            kmax,
            unassigned.clone(),
            blocks.clone(),
            Vec::new(),
            0,
            kt + 1,
            t,
            out,
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn grow_block(
    g: &Graph,
    params: &PolicyParams,
    dict: Option<&DictModel>,
    kmax: usize,
    mut unassigned: BTreeSet<u32>,
    mut blocks: Vec<Vec<u32>>,
    block: Vec<u32>,
    m_block: u64,
    target: usize,
    traj: Trajectory,
    out: &mut Vec<(Vec<Vec<u32>>, Trajectory, f64)>,
) {
    let cands = candidates(g, &unassigned, &block);
    if block.len() >= target || cands.is_empty() {
        let mut done = block;
        done.sort_unstable();
        blocks.push(done);
        recurse(g, params, dict, kmax, unassigned, blocks, traj, out);
        return;
    }
    let (feats, logits) = candidate_rows(
        g,
        params,
        &unassigned,
        &block,
        m_block,
        blocks.len(),
        dict,
        &cands,
        kmax,
    );
    let lp = ln_softmax(&logits);
    for (ci, &v) in cands.iter().enumerate() {
        let mut t = traj.clone();
        t.steps.push(Step::V {
            feats: feats.clone(),
            chosen: ci,
        });
        t.ln_prob += lp[ci];
        let mut nb = block.clone();
        let dm = g
            .neighbors(v)
            .iter()
            .filter(|w| nb.contains(w))
            .count() as u64;
        nb.push(v);
        unassigned.remove(&v);
        grow_block(
            g,
            params,
            dict,
            kmax,
            unassigned.clone(),
            blocks.clone(),
            nb,
            m_block + dm,
            target,
            t,
            out,
        );
        unassigned.insert(v);
    }
}
