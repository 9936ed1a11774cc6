//! The learned probabilistic model over partitioned graphs: an adaptive
//! universe of subgraph atoms with fractional dictionary memberships, the
//! dictionary/null mixing probability, and the block-count distribution.
//!
//! Per-graph description lengths come in two flavors. The *relaxed* length
//! treats memberships as fractions (sigmoids of the `psi` logits) so the
//! whole objective is differentiable; factorials and binomials generalize
//! through the gamma function. The *hard* length rounds memberships,
//! yielding the cost the entropy coder actually realizes (up to table
//! quantization). The two agree wherever memberships are integral.

use std::collections::BTreeMap;

use crate::bits::{lg_choose, lg_choose_real, lg_factorial, sigmoid, softmax};
use crate::canon::{canonical_form, CanonicalCode};
use crate::codelen;
use crate::graph::Graph;
use crate::partition::Partition;

/// Initial membership logit for newly observed atoms: σ ≈ 0.9, so fresh
/// atoms start close to the dictionary and training demotes the useless.
pub const PSI_INIT: f64 = 2.1972245773362196;

/// Probability mass the block-count table reserves for out-of-support
/// counts (escape followed by a 16-bit raw value). Mirrors the coder.
pub const B_ESCAPE_MASS: f64 = 16.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone)]
pub struct AtomEntry {
    pub code: CanonicalCode,
    /// Membership logit; x̂ = σ(psi) is the fractional dictionary
    /// membership.
    pub psi: f64,
    /// Usage logit; atom probabilities are a masked softmax over these.
    pub phi: f64,
    /// Exponential moving average of per-epoch usage counts (reporting
    /// only, never part of the objective).
    pub ema: f64,
    /// Null-model bits to store this atom (structure plus attributes).
    pub l_null: f64,
}

/// One block of a partitioned graph, resolved against the universe.
#[derive(Debug, Clone)]
pub struct BlockRef {
    /// Index into the universe; `None` when the block was never observed
    /// (possible on held-out data) and must be null-coded.
    pub atom: Option<usize>,
    /// Null-model bits for this block (structure plus attributes).
    pub l_null: f64,
    pub code: CanonicalCode,
}

/// The symbols of one partitioned graph, model-agnostic: everything the
/// description length depends on besides the parameters.
#[derive(Debug, Clone)]
pub struct GraphCode {
    pub b: u64,
    pub blocks: Vec<BlockRef>,
    /// Cut structure bits (counts and arrangements).
    pub l_cut_structure: f64,
    /// Uniform payload for cut-edge attributes.
    pub l_cut_attrs: f64,
}

#[derive(Debug, Clone)]
pub struct DictModel {
    pub kmax: usize,
    pub v_domain: Option<u32>,
    pub e_domain: Option<u32>,
    pub atoms: Vec<AtomEntry>,
    index: BTreeMap<CanonicalCode, usize>,
    /// δ = σ(delta_logit) is the probability that a block is *not* in the
    /// dictionary.
    pub delta_logit: f64,
    /// Support of the block-count categorical; `b_logits[b - b_min]`.
    pub b_min: u64,
    pub b_max: u64,
    pub b_logits: Vec<f64>,
    pub ema_rho: f64,
}

impl DictModel {
    pub fn new(kmax: usize, v_domain: Option<u32>, e_domain: Option<u32>) -> Self {
        DictModel {
            kmax,
            v_domain,
            e_domain,
            atoms: Vec::new(),
            index: BTreeMap::new(),
            delta_logit: 0.0,
            b_min: 0,
            b_max: 0,
            b_logits: Vec::new(),
            ema_rho: 0.99,
        }
    }

    /// Null-model bits for a block or atom: structure under the size-capped
    /// Erdős–Rényi code, plus the uniform attribute payload.
    pub fn l_null_code(&self, code: &CanonicalCode) -> f64 {
        codelen::l_null(code.k as u64, code.n_edges() as u64, self.kmax as u64)
            + codelen::l_attributes(
                code.k as u64,
                code.n_edges() as u64,
                self.v_domain,
                self.e_domain,
            )
    }

    pub fn lookup(&self, code: &CanonicalCode) -> Option<usize> {
        self.index.get(code).copied()
    }

    /// Rebuild a hardened model from stored parameters: the atom list is
    /// the dictionary itself, so every membership is pinned to 1.
    pub fn from_parts(
        kmax: usize,
        v_domain: Option<u32>,
        e_domain: Option<u32>,
        delta_logit: f64,
        b_min: u64,
        b_logits: Vec<f64>,
        atoms: Vec<(CanonicalCode, f64)>,
    ) -> Self {
        let b_max = b_min + (b_logits.len() as u64).saturating_sub(1);
        let mut model = DictModel {
            kmax,
            v_domain,
            e_domain,
            atoms: Vec::with_capacity(atoms.len()),
            index: BTreeMap::new(),
            delta_logit,
            b_min,
            b_max,
            b_logits,
            ema_rho: 0.99,
        };
        for (code, phi) in atoms {
            let l_null = model.l_null_code(&code);
            model.index.insert(code.clone(), model.atoms.len());
            model.atoms.push(AtomEntry {
                code,
                psi: 500.0,
                phi,
                ema: 0.0,
                l_null,
            });
        }
        model
    }

    /// Insert an atom if unseen; returns its universe index.
    pub fn intern(&mut self, code: CanonicalCode) -> usize {
        if let Some(&i) = self.index.get(&code) {
            return i;
        }
        let i = self.atoms.len();
        let l_null = self.l_null_code(&code);
        self.index.insert(code.clone(), i);
        self.atoms.push(AtomEntry {
            code,
            psi: PSI_INIT,
            phi: 0.0,
            ema: 0.0,
            l_null,
        });
        i
    }

    /// Grow the block-count support to include `b` (new logits start at 0).
    pub fn ensure_b_support(&mut self, b: u64) {
        if self.b_logits.is_empty() {
            self.b_min = b;
            self.b_max = b;
            self.b_logits = vec![0.0];
            return;
        }
        while self.b_min > b {
            self.b_min -= 1;
            self.b_logits.insert(0, 0.0);
        }
        while self.b_max < b {
            self.b_max += 1;
            self.b_logits.push(0.0);
        }
    }

    /// Resolve a partitioned graph against the universe, inserting unseen
    /// atoms and growing the block-count support (training-time path).
    pub fn observe_graph(&mut self, g: &Graph, p: &Partition) -> GraphCode {
        self.ensure_b_support(p.n_blocks() as u64);
        let mut gc = self.code_graph(g, p);
        for (block, bref) in p.blocks.iter().zip(gc.blocks.iter_mut()) {
            if bref.atom.is_none() {
                let _ = block;
                bref.atom = Some(self.intern(bref.code.clone()));
            }
        }
        gc
    }

    /// Resolve a partitioned graph against the universe without mutating
    /// the model (evaluation/encoding path).
    pub fn code_graph(&self, g: &Graph, p: &Partition) -> GraphCode {
        let blocks: Vec<BlockRef> = p
            .blocks
            .iter()
            .map(|verts| {
                let code = canonical_form(&g.induced(verts));
                BlockRef {
                    atom: self.lookup(&code),
                    l_null: self.l_null_code(&code),
                    code,
                }
            })
            .collect();
        let l_cut_structure = p.l_cuts();
        let l_cut_attrs = codelen::l_attributes(0, p.m_cut(), None, self.e_domain);
        GraphCode {
            b: p.n_blocks() as u64,
            blocks,
            l_cut_structure,
            l_cut_attrs,
        }
    }

    /// Fold one epoch's atom usage counts into the moving averages.
    pub fn update_ema(&mut self, counts: &BTreeMap<usize, f64>) {
        for (i, a) in self.atoms.iter_mut().enumerate() {
            let c = counts.get(&i).copied().unwrap_or(0.0);
            a.ema = self.ema_rho * a.ema + (1.0 - self.ema_rho) * c;
        }
    }

    pub fn xhat(&self, i: usize) -> f64 {
        sigmoid(self.atoms[i].psi)
    }

    pub fn xhats(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| sigmoid(a.psi)).collect()
    }

    pub fn delta(&self) -> f64 {
        sigmoid(self.delta_logit)
    }

    /// log2 q(b) including the escape reservation; out-of-support counts
    /// cost the escape mass plus 16 raw bits.
    pub fn lg_q_b(&self, b: u64) -> f64 {
        if b >= self.b_min && b <= self.b_max && !self.b_logits.is_empty() {
            let probs = softmax(&self.b_logits);
            (1.0 - B_ESCAPE_MASS).log2() + probs[(b - self.b_min) as usize].log2()
        } else {
            B_ESCAPE_MASS.log2() - 16.0
        }
    }

    /// Relaxed atom distribution q(a) ∝ x̂_a·exp(φ_a) over the universe.
    /// Returns the per-atom probabilities; entries with x̂ = 0 get 0.
    pub fn q_relaxed(&self) -> Vec<f64> {
        let weights: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| sigmoid(a.psi) * a.phi.exp())
            .collect();
        let z: f64 = weights.iter().sum();
        if z <= 0.0 {
            return vec![0.0; self.atoms.len()];
        }
        weights.iter().map(|w| w / z).collect()
    }

    /// Per-atom usage counts of one graph (universe index → multiplicity).
    pub fn atom_counts(gc: &GraphCode) -> BTreeMap<usize, f64> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for b in &gc.blocks {
            if let Some(i) = b.atom {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        counts
    }

    /// Relaxed per-graph description length (differentiable objective
    /// piece). Blocks outside the universe count as membership 0.
    pub fn l_graph_relaxed(&self, gc: &GraphCode) -> f64 {
        let b = gc.b as f64;
        let xh = self.xhats();
        let counts = Self::atom_counts(gc);
        // min(b): summation round-up must not push the fractional count
        // past the block total when memberships sit at 1 - ulp.
        let b_dict: f64 = counts
            .iter()
            .map(|(&i, &c)| xh[i] * c)
            .sum::<f64>()
            .min(b);
        let delta = self.delta();

        // Block counts: generalized binomial plus the categorical.
        let mut bits = -lg_choose_real(b, b_dict)
            - b_dict * (1.0 - delta).log2()
            - (b - b_dict) * delta.log2()
            - self.lg_q_b(gc.b);

        // Dictionary blocks: multinomial with fractional counts.
        let q = self.q_relaxed();
        bits -= lg_factorial(b_dict);
        for (&i, &c) in &counts {
            let ba = xh[i] * c;
            bits += lg_factorial(ba);
            if ba > 0.0 {
                bits -= ba * q[i].log2();
            }
        }

        // Null blocks: full null cost scaled by the residual membership.
        for blk in &gc.blocks {
            let x = blk.atom.map_or(0.0, |i| xh[i]);
            bits += (1.0 - x) * blk.l_null;
        }

        bits + gc.l_cut_structure + gc.l_cut_attrs
    }

    /// Hard per-graph description length: memberships rounded, exact
    /// combinatorics. This is what the archive realizes (up to table
    /// quantization).
    pub fn l_graph_hard(&self, gc: &GraphCode) -> f64 {
        let in_dict: Vec<bool> = gc
            .blocks
            .iter()
            .map(|b| b.atom.is_some_and(|i| self.xhat(i) >= 0.5))
            .collect();
        let b = gc.b;
        let b_dict = in_dict.iter().filter(|&&d| d).count() as u64;
        let delta = self.delta();

        let mut bits = -lg_choose(b, b_dict) - self.lg_q_b(b);
        if b_dict > 0 {
            bits -= b_dict as f64 * (1.0 - delta).log2();
        }
        if b - b_dict > 0 {
            bits -= (b - b_dict) as f64 * delta.log2();
        }

        // Hard atom distribution: softmax of φ over dictionary members.
        let members: Vec<usize> = (0..self.atoms.len())
            .filter(|&i| self.xhat(i) >= 0.5)
            .collect();
        let q_members = softmax(
            &members
                .iter()
                .map(|&i| self.atoms[i].phi)
                .collect::<Vec<_>>(),
        );
        let mut q_of: BTreeMap<usize, f64> = BTreeMap::new();
        for (pos, &i) in members.iter().enumerate() {
            q_of.insert(i, q_members[pos]);
        }

        let mut dict_counts: BTreeMap<usize, u64> = BTreeMap::new();
        for (blk, &d) in gc.blocks.iter().zip(&in_dict) {
            if d {
                *dict_counts.entry(blk.atom.unwrap()).or_insert(0) += 1;
            }
        }
        bits -= lg_factorial(b_dict as f64);
        for (&i, &c) in &dict_counts {
            bits += lg_factorial(c as f64);
            bits -= c as f64 * q_of[&i].log2();
        }

        for (blk, &d) in gc.blocks.iter().zip(&in_dict) {
            if !d {
                bits += blk.l_null;
            }
        }

        bits + gc.l_cut_structure + gc.l_cut_attrs
    }

    /// Relaxed dictionary storage cost: Σ x̂_a · L_null(a).
    pub fn l_dict_relaxed(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| sigmoid(a.psi) * a.l_null)
            .sum()
    }

    /// Hard dictionary storage cost over the rounded membership.
    pub fn l_dict_hard(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| sigmoid(a.psi) >= 0.5)
            .map(|a| a.l_null)
            .sum()
    }

    pub fn dict_indices(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| self.xhat(i) >= 0.5)
            .collect()
    }

    /// Bits to transmit the model parameters themselves (half precision
    /// per scalar: δ, the block-count logits, one usage logit per
    /// dictionary atom).
    pub fn l_param_bits(&self) -> f64 {
        16.0 * (1 + self.b_logits.len() + self.dict_indices().len()) as f64
    }

    /// Universe indices sorted by decreasing moving-average usage
    /// (reporting order for dumps).
    pub fn atoms_by_usage(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.atoms.len()).collect();
        idx.sort_by(|&a, &b| {
            self.atoms[b]
                .ema
                .partial_cmp(&self.atoms[a].ema)
                .unwrap()
                .then(a.cmp(&b))
        });
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::logit;
    use approx::assert_relative_eq;

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    /// Corpus of two-triangle graphs partitioned into the triangles.
    fn observed_model() -> (DictModel, GraphCode) {
        let g = Graph::new(6, vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)])
            .unwrap();
        let p = Partition::new(&g, vec![vec![0, 1, 2], vec![3, 4, 5]], 12).unwrap();
        let mut model = DictModel::new(12, None, None);
        let gc = model.observe_graph(&g, &p);
        (model, gc)
    }

    #[test]
    fn interning_is_isomorphism_aware() {
        let (model, gc) = observed_model();
        // Both triangle blocks map to one atom.
        assert_eq!(model.atoms.len(), 1);
        assert_eq!(gc.blocks[0].atom, gc.blocks[1].atom);
        assert_relative_eq!(
            model.atoms[0].l_null,
            5.700439718141093,
            max_relative = 1e-12
        );
    }

    #[test]
    fn relaxed_dictionary_cost_scales_with_membership() {
        let (mut model, _) = observed_model();
        model.atoms[0].psi = 0.0; // x̂ = 1/2
        assert_relative_eq!(
            model.l_dict_relaxed(),
            2.8502198590705463,
            max_relative = 1e-12
        );
        model.atoms[0].psi = 50.0;
        assert_relative_eq!(model.l_dict_relaxed(), model.l_dict_hard(), epsilon = 1e-9);
    }

    #[test]
    fn block_count_escape_costs_32_bits() {
        let (model, _) = observed_model();
        // Support is {2}; anything else escapes.
        assert_relative_eq!(-model.lg_q_b(7), 16.0 - B_ESCAPE_MASS.log2(), epsilon = 1e-12);
        assert_relative_eq!(-model.lg_q_b(7), 32.0, epsilon = 1e-6);
    }

    #[test]
    fn hard_length_matches_hand_formula_on_one_block() {
        let g = triangle();
        let p = Partition::new(&g, vec![vec![0, 1, 2]], 12).unwrap();
        let mut model = DictModel::new(12, None, None);
        let gc = model.observe_graph(&g, &p);
        model.atoms[0].psi = 50.0; // firmly in the dictionary
        model.delta_logit = 0.0; // δ = 1/2
        // b = 1 (support {1} → only the escape reservation), b_dict = 1:
        // -lg C(1,1) - lg(1-δ) - lg q(1); the multinomial over a single
        // atom is free; no null blocks, no cuts.
        let expected = 1.0 - (1.0 - B_ESCAPE_MASS).log2();
        assert_relative_eq!(model.l_graph_hard(&gc), expected, epsilon = 1e-12);
    }

    #[test]
    fn relaxed_equals_hard_at_integral_memberships() {
        let (mut model, gc) = observed_model();
        // Observe a second, non-triangle block shape so the universe has
        // two atoms with distinct memberships.
        let h = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let hp = Partition::new(&h, vec![vec![0, 1, 2, 3, 4]], 12).unwrap();
        let hc = model.observe_graph(&h, &hp);
        model.atoms[0].psi = 60.0; // triangle: x̂ = 1
        model.atoms[1].psi = -60.0; // path: x̂ = 0
        model.atoms[0].phi = 0.7;
        model.atoms[1].phi = -0.3;
        model.delta_logit = logit(0.25);
        for code in [&gc, &hc] {
            assert_relative_eq!(
                model.l_graph_relaxed(code),
                model.l_graph_hard(code),
                epsilon = 1e-9
            );
        }
        // And the relaxed length moves continuously between the extremes.
        model.atoms[0].psi = 1.3;
        let mid = model.l_graph_relaxed(&gc);
        assert!(mid.is_finite());
    }

    #[test]
    fn unseen_blocks_are_null_coded() {
        let (model, _) = observed_model();
        let h = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let hp = Partition::new(&h, vec![vec![0, 1, 2, 3]], 12).unwrap();
        let hc = model.code_graph(&h, &hp);
        assert!(hc.blocks[0].atom.is_none());
        let hard = model.l_graph_hard(&hc);
        // Null cost of the path plus headers; no dictionary involvement:
        // -lg C(1,0) - 1·lg δ - lg q_b(1), and q_b(1) escapes (support {2})
        // at exactly 16 + 16 bits since the escape mass is 2^-16.
        let expected = hc.blocks[0].l_null + 1.0 + 32.0;
        assert_relative_eq!(hard, expected, epsilon = 1e-6);
    }

    #[test]
    fn param_bits_count_the_transmitted_scalars() {
        let (mut model, _) = observed_model();
        assert_relative_eq!(model.l_param_bits(), 16.0 * 3.0); // δ + one b + one atom
        model.atoms[0].psi = -50.0;
        assert_relative_eq!(model.l_param_bits(), 16.0 * 2.0); // atom dropped
    }

    #[test]
    fn attribute_domains_enter_null_costs() {
        let g = Graph::new(3, vec![(0, 1), (0, 2), (1, 2)])
            .unwrap()
            .with_vertex_attrs(vec![0, 1, 0])
            .unwrap()
            .with_edge_attrs(vec![1, 0, 0])
            .unwrap();
        let p = Partition::new(&g, vec![vec![0, 1, 2]], 12).unwrap();
        let mut model = DictModel::new(12, Some(4), Some(2));
        let gc = model.observe_graph(&g, &p);
        // Structure bits plus 3·lg 4 + 3·lg 2.
        assert_relative_eq!(
            gc.blocks[0].l_null,
            5.700439718141093 + 9.0,
            max_relative = 1e-12
        );
    }
}
