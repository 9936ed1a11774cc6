//! Corpus archives: a header carrying the quantized model (half-precision
//! logits plus the dictionary subgraphs), one continuous range-coded body
//! for all graphs, and a checksummed footer.
//!
//! Every combination set — block edge masks, cut-edge placements, the
//! split of cut edges across block pairs — is coded slot by slot with
//! hypergeometric frequencies (remaining ones over remaining slots), which
//! realizes `log2 C(N, M)` exactly without big-integer ranking. Decoding
//! reproduces each graph up to the block-order relabeling; `compress`
//! returns the permutation witness so callers can verify exact equality.

pub mod range;

use std::collections::BTreeMap;

use crate::bits::{f16_bits, f16_from_bits, lg_choose, sigmoid, softmax};
use crate::canon::{canonical_morphism, pair_index, pairs_colex, CanonicalCode};
use crate::dict::DictModel;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::policy::PolicyParams;
use range::{RangeDecoder, RangeEncoder};

pub const MAGIC: [u8; 4] = *b"PNC1";
pub const VERSION: u16 = 1;
/// Probability grid for the quantized tables.
const FREQ_SCALE: u32 = 1 << 20;
/// Mass reserved for out-of-support block counts: 2^-16, so an escape
/// costs 16 bits plus a 16-bit raw count.
const B_ESCAPE_FREQ: u32 = 16;

// ---------------------------------------------------------------- bytes

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Integrity("archive truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// ------------------------------------------------------- symbol helpers

/// Integer frequency table over `0..n`; probabilities are rounded onto a
/// 2^20 grid with every symbol kept reachable.
#[derive(Debug, Clone)]
pub struct FreqTable {
    cum: Vec<u32>,
}

impl FreqTable {
    pub fn from_probs(probs: &[f64]) -> FreqTable {
        assert!(!probs.is_empty());
        let mut cum = Vec::with_capacity(probs.len() + 1);
        cum.push(0);
        let mut acc = 0u32;
        for &p in probs {
            let p = if p.is_finite() { p.max(0.0) } else { 0.0 };
            acc += ((p * FREQ_SCALE as f64).round() as u32).max(1);
            cum.push(acc);
        }
        FreqTable { cum }
    }

    fn total(&self) -> u32 {
        *self.cum.last().unwrap()
    }

    pub fn encode(&self, enc: &mut RangeEncoder, sym: usize) {
        let (lo, hi) = (self.cum[sym], self.cum[sym + 1]);
        enc.encode(lo, hi - lo, self.total());
    }

    pub fn decode(&self, dec: &mut RangeDecoder) -> usize {
        let v = dec.decode_freq(self.total());
        // cum is strictly increasing, so partition_point lands past the
        // last bound ≤ v.
        let sym = self.cum.partition_point(|&c| c <= v) - 1;
        let (lo, hi) = (self.cum[sym], self.cum[sym + 1]);
        dec.decode_update(lo, hi - lo, self.total());
        sym
    }

    /// Quantized information content of `sym` in bits.
    pub fn lg_prob(&self, sym: usize) -> f64 {
        (self.total() as f64 / (self.cum[sym + 1] - self.cum[sym]) as f64).log2()
    }
}

fn u32_total(n: u64) -> Result<u32> {
    if n == 0 || n > range::MAX_TOTAL as u64 {
        return Err(Error::Integrity(format!(
            "symbol alphabet of size {n} is out of coder range"
        )));
    }
    Ok(n as u32)
}

fn encode_uniform(enc: &mut RangeEncoder, value: u64, n: u64) -> Result<()> {
    let total = u32_total(n)?;
    debug_assert!(value < n);
    enc.encode(value as u32, 1, total);
    Ok(())
}

fn decode_uniform(dec: &mut RangeDecoder, n: u64) -> Result<u64> {
    let total = u32_total(n)?;
    let v = dec.decode_freq(total);
    dec.decode_update(v, 1, total);
    Ok(v as u64)
}

/// Encode a sorted `m`-subset of `0..n_slots`, one slot at a time with
/// frequency (remaining ones : remaining zeros). Costs `log2 C(n, m)`.
fn encode_combination(enc: &mut RangeEncoder, n_slots: u64, ones: &[u64]) -> Result<()> {
    let mut remaining = n_slots;
    let mut left = ones.len() as u64;
    let mut next = ones.iter();
    let mut want = next.next();
    for slot in 0..n_slots {
        if left == 0 || left == remaining {
            break; // the rest is forced
        }
        let total = u32_total(remaining)?;
        let is_one = want == Some(&slot);
        if is_one {
            enc.encode(0, left as u32, total);
            left -= 1;
            want = next.next();
        } else {
            enc.encode(left as u32, total - left as u32, total);
        }
        remaining -= 1;
    }
    Ok(())
}

fn decode_combination(dec: &mut RangeDecoder, n_slots: u64, m: u64) -> Result<Vec<u64>> {
    let mut ones = Vec::with_capacity(m as usize);
    let mut remaining = n_slots;
    let mut left = m;
    for slot in 0..n_slots {
        if left == 0 {
            break;
        }
        if left == remaining {
            ones.extend(slot..n_slots);
            break;
        }
        let total = u32_total(remaining)?;
        let v = dec.decode_freq(total);
        if (v as u64) < left {
            dec.decode_update(0, left as u32, total);
            ones.push(slot);
            left -= 1;
        } else {
            dec.decode_update(left as u32, total - left as u32, total);
        }
        remaining -= 1;
    }
    Ok(ones)
}

// --------------------------------------------------------------- header

/// Everything a decoder needs besides the body: corpus shape, attribute
/// domains, and the quantized model (logits are exact half-precision
/// values on both sides, so encoder and decoder build identical tables).
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveHeader {
    pub kmax: u16,
    pub n_max: u32,
    pub n_graphs: u32,
    pub v_domain: Option<u32>,
    pub e_domain: Option<u32>,
    pub b_min: u32,
    pub delta_logit: f64,
    pub b_logits: Vec<f64>,
    pub atom_logits: Vec<f64>,
    pub atoms: Vec<CanonicalCode>,
}

fn q16(x: f64) -> u16 {
    // Keep logits in a range where exp() stays finite after dequantizing.
    f16_bits(x.clamp(-500.0, 500.0))
}

/// Snapshot the parts of a trained model that the archive carries: the
/// hardened dictionary entries and the logits, rounded to half precision.
pub fn archive_header(model: &DictModel, n_max: u32, n_graphs: u32) -> ArchiveHeader {
    let dict = model.dict_indices();
    ArchiveHeader {
        kmax: model.kmax as u16,
        n_max,
        n_graphs,
        v_domain: model.v_domain,
        e_domain: model.e_domain,
        b_min: model.b_min as u32,
        delta_logit: f16_from_bits(q16(model.delta_logit)),
        b_logits: model
            .b_logits
            .iter()
            .map(|&x| f16_from_bits(q16(x)))
            .collect(),
        atom_logits: dict
            .iter()
            .map(|&i| f16_from_bits(q16(model.atoms[i].phi)))
            .collect(),
        atoms: dict.iter().map(|&i| model.atoms[i].code.clone()).collect(),
    }
}

fn write_header(h: &ArchiveHeader) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    put_u16(&mut out, VERSION);
    let mut flags = 0u16;
    if h.v_domain.is_some() {
        flags |= 1;
    }
    if h.e_domain.is_some() {
        flags |= 2;
    }
    put_u16(&mut out, flags);
    put_u16(&mut out, h.kmax);
    put_u32(&mut out, h.n_max);
    put_u32(&mut out, h.n_graphs);
    if let Some(d) = h.v_domain {
        put_u32(&mut out, d);
    }
    if let Some(d) = h.e_domain {
        put_u32(&mut out, d);
    }
    put_u32(&mut out, h.b_min);
    put_u32(&mut out, h.b_logits.len() as u32);
    put_u16(&mut out, f16_bits(h.delta_logit));
    for &b in &h.b_logits {
        put_u16(&mut out, f16_bits(b));
    }
    put_u32(&mut out, h.atoms.len() as u32);
    for &l in &h.atom_logits {
        put_u16(&mut out, f16_bits(l));
    }
    for code in &h.atoms {
        out.push(code.k);
        let edges = code.edges();
        put_u16(&mut out, edges.len() as u16);
        for &(i, j) in &edges {
            out.push(i as u8);
            out.push(j as u8);
        }
        if let Some(va) = &code.vattrs {
            for &a in va {
                put_u16(&mut out, a);
            }
        }
        if let Some(ea) = &code.eattrs {
            for &a in ea {
                put_u16(&mut out, a);
            }
        }
    }
    out
}

fn read_header(r: &mut Reader) -> Result<ArchiveHeader> {
    if r.take(4)? != MAGIC {
        return Err(Error::Integrity("not an archive (bad magic)".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Integrity(format!(
            "unsupported archive version {version}"
        )));
    }
    let flags = r.u16()?;
    let kmax = r.u16()?;
    let n_max = r.u32()?;
    let n_graphs = r.u32()?;
    let v_domain = if flags & 1 != 0 { Some(r.u32()?) } else { None };
    let e_domain = if flags & 2 != 0 { Some(r.u32()?) } else { None };
    let b_min = r.u32()?;
    let b_count = r.u32()? as usize;
    let delta_logit = f16_from_bits(r.u16()?);
    let mut b_logits = Vec::with_capacity(b_count);
    for _ in 0..b_count {
        b_logits.push(f16_from_bits(r.u16()?));
    }
    let n_atoms = r.u32()? as usize;
    let mut atom_logits = Vec::with_capacity(n_atoms);
    for _ in 0..n_atoms {
        atom_logits.push(f16_from_bits(r.u16()?));
    }
    let mut atoms = Vec::with_capacity(n_atoms);
    for _ in 0..n_atoms {
        let k = r.u8()?;
        let m = r.u16()? as usize;
        let p_total = k as u32 * (k as u32).saturating_sub(1) / 2;
        let mut mask = 0u128;
        for _ in 0..m {
            let i = r.u8()? as u32;
            let j = r.u8()? as u32;
            if i >= j || j >= k as u32 {
                return Err(Error::Integrity("malformed dictionary entry".into()));
            }
            mask |= 1u128 << (p_total - 1 - pair_index(i, j));
        }
        let vattrs = if flags & 1 != 0 {
            let mut va = Vec::with_capacity(k as usize);
            for _ in 0..k {
                va.push(r.u16()?);
            }
            Some(va)
        } else {
            None
        };
        let eattrs = if flags & 2 != 0 {
            let mut ea = Vec::with_capacity(m);
            for _ in 0..m {
                ea.push(r.u16()?);
            }
            Some(ea)
        } else {
            None
        };
        let code = CanonicalCode {
            k,
            mask,
            vattrs,
            eattrs,
        };
        if code.n_edges() != m as u32 {
            return Err(Error::Integrity("malformed dictionary entry".into()));
        }
        atoms.push(code);
    }
    Ok(ArchiveHeader {
        kmax,
        n_max,
        n_graphs,
        v_domain,
        e_domain,
        b_min,
        delta_logit,
        b_logits,
        atom_logits,
        atoms,
    })
}

// --------------------------------------------------- tables + graph walk

struct Tables {
    /// Block count: dictionary support then one escape symbol.
    b_table: FreqTable,
    /// Probability that a block is coded against the null model.
    delta: f64,
    /// Dictionary selection probabilities, in dictionary order.
    atom_probs: Vec<f64>,
    atom_graphs: Vec<Graph>,
    atom_index: BTreeMap<CanonicalCode, usize>,
}

fn build_tables(h: &ArchiveHeader) -> Result<Tables> {
    let esc = B_ESCAPE_FREQ as f64 / FREQ_SCALE as f64;
    let mut probs: Vec<f64> = if h.b_logits.is_empty() {
        Vec::new()
    } else {
        softmax(&h.b_logits)
            .into_iter()
            .map(|p| p * (1.0 - esc))
            .collect()
    };
    probs.push(esc);
    let b_table = FreqTable::from_probs(&probs);

    let atom_probs = if h.atoms.is_empty() {
        Vec::new()
    } else {
        softmax(&h.atom_logits)
    };

    let mut atom_graphs = Vec::with_capacity(h.atoms.len());
    let mut atom_index = BTreeMap::new();
    for (i, code) in h.atoms.iter().enumerate() {
        atom_graphs.push(code.to_graph());
        if atom_index.insert(code.clone(), i).is_some() {
            return Err(Error::Integrity("duplicate dictionary entry".into()));
        }
    }
    Ok(Tables {
        b_table,
        delta: sigmoid(h.delta_logit),
        atom_probs,
        atom_graphs,
        atom_index,
    })
}

/// Binomial(n, p) mass on the frequency grid. Encoder and decoder build it
/// from the same half-precision header values, so the tables agree exactly.
fn binomial_table(n: u64, p: f64) -> FreqTable {
    let p = if p.is_finite() { p.clamp(0.0, 1.0) } else { 0.0 };
    let mut probs = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let mut lg = lg_choose(n, k);
        if k > 0 {
            lg += k as f64 * p.log2();
        }
        if n - k > 0 {
            lg += (n - k) as f64 * (1.0 - p).log2();
        }
        probs.push(lg.exp2());
    }
    FreqTable::from_probs(&probs)
}

/// How many blocks map to each dictionary entry, coded as a chain of
/// binomials — count `i` from Binomial(remaining, q_i / tail_i). The chain
/// telescopes to the multinomial mass, so the stream pays the multiset cost
/// of the assignment: order among dictionary blocks carries no bits.
fn encode_atom_counts(enc: &mut RangeEncoder, t: &Tables, counts: &[u64]) {
    let mut rem: u64 = counts.iter().sum();
    let mut tail: f64 = t.atom_probs.iter().sum();
    for (i, (&c, &q)) in counts.iter().zip(&t.atom_probs).enumerate() {
        if rem == 0 {
            break;
        }
        if i + 1 == counts.len() {
            break; // the last count is forced
        }
        let p = if tail > 0.0 { (q / tail).min(1.0) } else { 0.0 };
        binomial_table(rem, p).encode(enc, c as usize);
        rem -= c;
        tail -= q;
    }
}

fn decode_atom_counts(dec: &mut RangeDecoder, t: &Tables, b_dict: u64) -> Vec<u64> {
    let mut counts = vec![0u64; t.atom_probs.len()];
    let mut rem = b_dict;
    let mut tail: f64 = t.atom_probs.iter().sum();
    for i in 0..counts.len() {
        if rem == 0 {
            break;
        }
        if i + 1 == counts.len() {
            counts[i] = rem;
            break;
        }
        let q = t.atom_probs[i];
        let p = if tail > 0.0 { (q / tail).min(1.0) } else { 0.0 };
        let c = binomial_table(rem, p).decode(dec) as u64;
        counts[i] = c;
        rem -= c;
        tail -= q;
    }
    counts
}

/// Colex slot indices of a graph's edges, sorted, with attributes
/// reordered to match.
fn colex_slots(g: &Graph) -> (Vec<u64>, Vec<u16>) {
    let mut tagged: Vec<(u64, u16)> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, &(u, v))| {
            (
                pair_index(u, v) as u64,
                g.edge_attrs().map_or(0, |ea| ea[idx]),
            )
        })
        .collect();
    tagged.sort_unstable();
    tagged.into_iter().unzip()
}

fn encode_graph(
    enc: &mut RangeEncoder,
    g: &Graph,
    part: &Partition,
    h: &ArchiveHeader,
    t: &Tables,
) -> Result<Vec<u32>> {
    let b = part.n_blocks() as u64;
    let support = h.b_logits.len() as u64;
    if b >= h.b_min as u64 && b < h.b_min as u64 + support {
        t.b_table.encode(enc, (b - h.b_min as u64) as usize);
    } else {
        t.b_table.encode(enc, support as usize);
        encode_uniform(enc, b, 1 << 16)?;
    }

    // Blocks are transmitted dictionary-first, grouped by atom: the stream
    // then carries only the dictionary-block count and the per-atom
    // multiplicities — never which blocks hit or in what order. The
    // permutation witness absorbs the reordering.
    let mut dict_blocks: Vec<(usize, usize)> = Vec::new(); // (atom, block)
    let mut null_blocks: Vec<usize> = Vec::new();
    let mut subs: Vec<(Graph, Vec<u32>)> = Vec::with_capacity(part.blocks.len());
    for (bi, block) in part.blocks.iter().enumerate() {
        let sub = g.induced(block);
        let (code, order) = canonical_morphism(&sub);
        match t.atom_index.get(&code) {
            Some(&aid) => dict_blocks.push((aid, bi)),
            None => null_blocks.push(bi),
        }
        subs.push((sub, order));
    }
    dict_blocks.sort_unstable();
    let b_dict = dict_blocks.len() as u64;

    binomial_table(b, 1.0 - t.delta).encode(enc, b_dict as usize);
    let mut counts = vec![0u64; t.atom_probs.len()];
    for &(aid, _) in &dict_blocks {
        counts[aid] += 1;
    }
    encode_atom_counts(enc, t, &counts);

    // Vertex layout under the new block order; remember where each
    // original vertex lands.
    let order_new: Vec<usize> = dict_blocks
        .iter()
        .map(|&(_, bi)| bi)
        .chain(null_blocks.iter().copied())
        .collect();
    let mut perm = vec![0u32; g.n() as usize];
    let mut owner = vec![0u32; g.n() as usize];
    let mut offsets = Vec::with_capacity(order_new.len());
    let mut sizes = Vec::with_capacity(order_new.len());
    let mut offset = 0u32;
    for (ni, &bi) in order_new.iter().enumerate() {
        let block = &part.blocks[bi];
        offsets.push(offset);
        sizes.push(block.len() as u64);
        for &v in block {
            owner[v as usize] = ni as u32;
        }
        if (ni as u64) < b_dict {
            // Canonical layout, so the decoder's atom copy lines up.
            for (pos, &local) in subs[bi].1.iter().enumerate() {
                perm[block[local as usize] as usize] = offset + pos as u32;
            }
        } else {
            for (i, &v) in block.iter().enumerate() {
                perm[v as usize] = offset + i as u32;
            }
        }
        offset += block.len() as u32;
    }

    // Null block contents, in their original relative order.
    for &bi in &null_blocks {
        let (sub, _) = &subs[bi];
        let k = sub.n() as u64;
        encode_uniform(enc, k, h.kmax as u64 + 1)?;
        let pairs = k * (k - 1) / 2;
        encode_uniform(enc, sub.m() as u64, pairs + 1)?;
        let (slots, eattrs) = colex_slots(sub);
        encode_combination(enc, pairs, &slots)?;
        if let Some(d) = h.v_domain {
            for local in 0..sub.n() {
                encode_uniform(enc, sub.vertex_attr(local) as u64, d as u64)?;
            }
        }
        if let Some(d) = h.e_domain {
            for &a in &eattrs {
                encode_uniform(enc, a as u64, d as u64)?;
            }
        }
    }

    // Cuts: total count, split over block pairs, then slots per pair.
    let mut pair_slots: BTreeMap<(u32, u32), Vec<(u64, u16)>> = BTreeMap::new();
    let mut m_c = 0u64;
    for (idx, &(u, v)) in g.edges().iter().enumerate() {
        let (bu, bv) = (owner[u as usize], owner[v as usize]);
        if bu == bv {
            continue;
        }
        m_c += 1;
        let (bi, bj, a, c) = if bu < bv { (bu, bv, u, v) } else { (bv, bu, v, u) };
        let pi = (perm[a as usize] - offsets[bi as usize]) as u64;
        let pj = (perm[c as usize] - offsets[bj as usize]) as u64;
        let slot = pi * sizes[bj as usize] + pj;
        let attr = g.edge_attrs().map_or(0, |ea| ea[idx]);
        pair_slots.entry((bi, bj)).or_default().push((slot, attr));
    }
    let mut grid_total = 0u64;
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            grid_total += sizes[i] * sizes[j];
        }
    }
    encode_uniform(enc, m_c, grid_total + 1)?;
    let parts = b * b.saturating_sub(1) / 2;
    if parts > 0 {
        let mut bars = Vec::with_capacity(parts as usize - 1);
        let mut acc = 0u64;
        let mut p = 0usize;
        for i in 0..sizes.len() {
            for j in i + 1..sizes.len() {
                if p + 1 < parts as usize {
                    acc += pair_slots
                        .get(&(i as u32, j as u32))
                        .map_or(0, |s| s.len() as u64);
                    bars.push(acc + p as u64);
                }
                p += 1;
            }
        }
        encode_combination(enc, m_c + parts - 1, &bars)?;
    }

    // Per-pair cut slots, pairs in index order, slots ascending.
    for ((bi, bj), mut slots) in pair_slots {
        slots.sort_unstable();
        let grid = sizes[bi as usize] * sizes[bj as usize];
        let ones: Vec<u64> = slots.iter().map(|&(s, _)| s).collect();
        encode_combination(enc, grid, &ones)?;
        if let Some(d) = h.e_domain {
            for &(_, a) in &slots {
                encode_uniform(enc, a as u64, d as u64)?;
            }
        }
    }
    Ok(perm)
}

fn decode_graph(dec: &mut RangeDecoder, h: &ArchiveHeader, t: &Tables) -> Result<Graph> {
    let support = h.b_logits.len();
    let sym = t.b_table.decode(dec);
    let b = if sym < support {
        h.b_min as u64 + sym as u64
    } else {
        decode_uniform(dec, 1 << 16)?
    };

    let b_dict = binomial_table(b, 1.0 - t.delta).decode(dec) as u64;
    if b_dict > 0 && t.atom_probs.is_empty() {
        return Err(Error::Integrity(
            "dictionary blocks in an archive with no dictionary".into(),
        ));
    }
    let counts = decode_atom_counts(dec, t, b_dict);

    let mut block_graphs: Vec<Graph> = Vec::with_capacity(b as usize);
    for (aid, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            block_graphs.push(t.atom_graphs[aid].clone());
        }
    }
    for _ in b_dict..b {
        let k = decode_uniform(dec, h.kmax as u64 + 1)?;
        if k == 0 {
            return Err(Error::Integrity("empty block in archive".into()));
        }
        let pairs = k * (k - 1) / 2;
        let m = decode_uniform(dec, pairs + 1)?;
        let slots = decode_combination(dec, pairs, m)?;
        let all_pairs: Vec<(u32, u32)> = pairs_colex(k as u32).collect();
        let edges: Vec<(u32, u32)> = slots.iter().map(|&s| all_pairs[s as usize]).collect();
        let mut bg = Graph::new(k as u32, edges.clone())?;
        if let Some(d) = h.v_domain {
            let mut va = Vec::with_capacity(k as usize);
            for _ in 0..k {
                va.push(decode_uniform(dec, d as u64)? as u16);
            }
            bg = bg.with_vertex_attrs(va)?;
        }
        if let Some(d) = h.e_domain {
            // Attrs arrive in colex slot order; rewire to edge order.
            let mut tagged: Vec<((u32, u32), u16)> = Vec::with_capacity(edges.len());
            for &e in &edges {
                tagged.push((e, decode_uniform(dec, d as u64)? as u16));
            }
            tagged.sort_unstable();
            bg = bg.with_edge_attrs(tagged.into_iter().map(|(_, a)| a).collect())?;
        }
        block_graphs.push(bg);
    }

    let sizes: Vec<u64> = block_graphs.iter().map(|g| g.n() as u64).collect();
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut n = 0u64;
    for &s in &sizes {
        offsets.push(n as u32);
        n += s;
    }
    if n > u32::MAX as u64 {
        return Err(Error::Integrity("graph too large".into()));
    }

    let mut grid_total = 0u64;
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            grid_total += sizes[i] * sizes[j];
        }
    }
    let m_c = decode_uniform(dec, grid_total + 1)?;
    let parts = b * b.saturating_sub(1) / 2;
    let mut counts = vec![0u64; parts as usize];
    if parts > 0 {
        let bars = decode_combination(dec, m_c + parts - 1, parts - 1)?;
        let mut prev = 0u64;
        for (p, &bar) in bars.iter().enumerate() {
            counts[p] = bar - p as u64 - prev;
            prev = bar - p as u64;
        }
        counts[parts as usize - 1] = m_c - prev;
    }

    let mut edges: Vec<((u32, u32), u16)> = Vec::new();
    for (bi, bg) in block_graphs.iter().enumerate() {
        let off = offsets[bi];
        for (idx, &(u, v)) in bg.edges().iter().enumerate() {
            let attr = bg.edge_attrs().map_or(0, |ea| ea[idx]);
            edges.push(((u + off, v + off), attr));
        }
    }
    let mut p = 0usize;
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            let m_ij = counts[p];
            p += 1;
            if m_ij == 0 {
                continue;
            }
            let grid = sizes[i] * sizes[j];
            let slots = decode_combination(dec, grid, m_ij)?;
            for slot in slots {
                let (pi, pj) = (slot / sizes[j], slot % sizes[j]);
                let e = (offsets[i] + pi as u32, offsets[j] + pj as u32);
                let attr = match h.e_domain {
                    Some(d) => decode_uniform(dec, d as u64)? as u16,
                    None => 0,
                };
                edges.push((e, attr));
            }
        }
    }

    edges.sort_unstable();
    let mut g = Graph::new(n as u32, edges.iter().map(|&(e, _)| e).collect())?;
    if h.v_domain.is_some() {
        let mut va = Vec::with_capacity(n as usize);
        for bg in &block_graphs {
            match bg.vertex_attrs() {
                Some(a) => va.extend_from_slice(a),
                None => va.extend(std::iter::repeat(0).take(bg.n() as usize)),
            }
        }
        g = g.with_vertex_attrs(va)?;
    }
    if h.e_domain.is_some() {
        g = g.with_edge_attrs(edges.iter().map(|&(_, a)| a).collect())?;
    }
    Ok(g)
}

// ------------------------------------------------------------- archives

#[derive(Debug)]
pub struct Compressed {
    pub bytes: Vec<u8>,
    /// Quantized-table information content per graph.
    pub ideal_bits: Vec<f64>,
    /// Stream growth per graph (flush amortized over the whole body).
    pub realized_bits: Vec<f64>,
    /// Per-graph relabeling `perm[old] = new` realized by the archive.
    pub witnesses: Vec<Vec<u32>>,
}

fn check_attrs(graphs: &[Graph], model: &DictModel) -> Result<()> {
    for (i, g) in graphs.iter().enumerate() {
        if g.vertex_attrs().is_some() != model.v_domain.is_some()
            || g.edge_attrs().is_some() != model.e_domain.is_some()
        {
            return Err(Error::Integrity(format!(
                "graph {i}: attribute presence does not match the model"
            )));
        }
        if let (Some(d), Some(va)) = (model.v_domain, g.vertex_attrs()) {
            if va.iter().any(|&a| a as u32 >= d) {
                return Err(Error::Integrity(format!(
                    "graph {i}: vertex attribute outside domain {d}"
                )));
            }
        }
        if let (Some(d), Some(ea)) = (model.e_domain, g.edge_attrs()) {
            if ea.iter().any(|&a| a as u32 >= d) {
                return Err(Error::Integrity(format!(
                    "graph {i}: edge attribute outside domain {d}"
                )));
            }
        }
    }
    Ok(())
}

/// Encode `graphs` under `model` with the given per-graph partitions.
pub fn compress(
    graphs: &[Graph],
    partitions: &[Partition],
    model: &DictModel,
    n_max: u32,
) -> Result<Compressed> {
    if graphs.len() != partitions.len() {
        return Err(Error::Integrity("one partition per graph required".into()));
    }
    check_attrs(graphs, model)?;
    for (i, g) in graphs.iter().enumerate() {
        if g.n() as u64 > 0xFFFF {
            return Err(Error::Integrity(format!("graph {i} exceeds 65535 vertices")));
        }
    }
    let h = archive_header(model, n_max, graphs.len() as u32);
    let t = build_tables(&h)?;
    let mut enc = RangeEncoder::new();
    let mut ideal_bits = Vec::with_capacity(graphs.len());
    let mut realized_bits = Vec::with_capacity(graphs.len());
    let mut witnesses = Vec::with_capacity(graphs.len());
    for (g, part) in graphs.iter().zip(partitions) {
        let (i0, r0) = (enc.ideal_bits(), enc.bits_so_far());
        witnesses.push(encode_graph(&mut enc, g, part, &h, &t)?);
        ideal_bits.push(enc.ideal_bits() - i0);
        realized_bits.push(enc.bits_so_far() - r0);
    }
    let body = enc.finish();

    let mut bytes = write_header(&h);
    put_u64(&mut bytes, body.len() as u64);
    let checksum = fnv1a64(&body);
    bytes.extend_from_slice(&body);
    put_u32(&mut bytes, graphs.len() as u32);
    put_u64(&mut bytes, checksum);
    Ok(Compressed {
        bytes,
        ideal_bits,
        realized_bits,
        witnesses,
    })
}

/// Decode an archive produced by [`compress`]. Each graph comes back
/// relabeled by the witness permutation recorded at compression time.
pub fn decompress(bytes: &[u8]) -> Result<(ArchiveHeader, Vec<Graph>)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let h = read_header(&mut r)?;
    let body_len = r.u64()? as usize;
    let body = r.take(body_len)?;
    let n_again = r.u32()?;
    let checksum = r.u64()?;
    if n_again != h.n_graphs {
        return Err(Error::Integrity("graph count mismatch in footer".into()));
    }
    if checksum != fnv1a64(body) {
        return Err(Error::Integrity("archive body checksum mismatch".into()));
    }
    let t = build_tables(&h)?;
    let mut dec = RangeDecoder::new(body);
    let mut graphs = Vec::with_capacity(h.n_graphs as usize);
    for _ in 0..h.n_graphs {
        graphs.push(decode_graph(&mut dec, &h, &t)?);
    }
    Ok((h, graphs))
}

/// Saved-model magic; bundles hold the archive header (the hardened
/// model) plus optional partition-policy weights, checksummed.
pub const MODEL_MAGIC: [u8; 4] = *b"PNCM";

pub fn write_model_bundle(
    model: &DictModel,
    policy: Option<&PolicyParams>,
    n_max: u32,
) -> Vec<u8> {
    let mut body = write_header(&archive_header(model, n_max, 0));
    match policy {
        Some(p) => {
            body.push(1);
            put_u32(&mut body, p.k_logits.len() as u32);
            for &x in &p.k_logits {
                put_u64(&mut body, x.to_bits());
            }
            put_u32(&mut body, p.w.len() as u32);
            for &x in &p.w {
                put_u64(&mut body, x.to_bits());
            }
        }
        None => body.push(0),
    }
    let mut out = Vec::with_capacity(body.len() + 12);
    out.extend_from_slice(&MODEL_MAGIC);
    put_u64(&mut out, fnv1a64(&body));
    out.extend_from_slice(&body);
    out
}

pub fn read_model_bundle(bytes: &[u8]) -> Result<(DictModel, Option<PolicyParams>, u32)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::Integrity("not a model bundle (bad magic)".into()));
    }
    let checksum = r.u64()?;
    if checksum != fnv1a64(&bytes[r.pos..]) {
        return Err(Error::Integrity("model bundle checksum mismatch".into()));
    }
    let h = read_header(&mut r)?;
    let policy = match r.u8()? {
        0 => None,
        1 => {
            let nk = r.u32()? as usize;
            let mut k_logits = Vec::with_capacity(nk);
            for _ in 0..nk {
                k_logits.push(f64::from_bits(r.u64()?));
            }
            let nw = r.u32()? as usize;
            let mut w = Vec::with_capacity(nw);
            for _ in 0..nw {
                w.push(f64::from_bits(r.u64()?));
            }
            Some(PolicyParams { k_logits, w })
        }
        x => {
            return Err(Error::Integrity(format!("bad policy flag {x}")));
        }
    };
    let atoms = h
        .atoms
        .iter()
        .cloned()
        .zip(h.atom_logits.iter().copied())
        .collect();
    let model = DictModel::from_parts(
        h.kmax as usize,
        h.v_domain,
        h.e_domain,
        h.delta_logit,
        h.b_min as u64,
        h.b_logits.clone(),
        atoms,
    );
    Ok((model, policy, h.n_max))
}

/// Apply a vertex relabeling `perm[old] = new`.
pub fn relabel(g: &Graph, perm: &[u32]) -> Result<Graph> {
    assert_eq!(perm.len(), g.n() as usize);
    let mut edges: Vec<((u32, u32), u16)> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, &(u, v))| {
            let (a, b) = (perm[u as usize], perm[v as usize]);
            (
                (a.min(b), a.max(b)),
                g.edge_attrs().map_or(0, |ea| ea[idx]),
            )
        })
        .collect();
    edges.sort_unstable();
    let mut out = Graph::new(g.n(), edges.iter().map(|&(e, _)| e).collect())?;
    if let Some(va) = g.vertex_attrs() {
        let mut new_va = vec![0u16; va.len()];
        for (old, &a) in va.iter().enumerate() {
            new_va[perm[old] as usize] = a;
        }
        out = out.with_vertex_attrs(new_va)?;
    }
    if g.edge_attrs().is_some() {
        out = out.with_edge_attrs(edges.into_iter().map(|(_, a)| a).collect())?;
    }
    Ok(out)
}
