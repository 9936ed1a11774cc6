//! Code-length formulas (in bits) for the graph encodings: the two-stage
//! Erdős–Rényi null code, the trivial uniform and edge-list codes, the
//! hierarchical cut code, an SBM-style whole-graph baseline, and the
//! attribute payload. All lengths are ideal (real-valued); the entropy
//! coder realizes them up to quantization.

use crate::bits::{lg, lg_choose, lg_compositions};

/// Erdős–Rényi null code for a simple graph: vertex count uniform over
/// `0..=n_max`, edge count uniform over `0..=C(n,2)`, then the edge set
/// uniform over all `C(C(n,2), m)` possibilities.
pub fn l_null(n: u64, m: u64, n_max: u64) -> f64 {
    let pairs = n * n.saturating_sub(1) / 2;
    debug_assert!(n <= n_max && m <= pairs);
    lg(n_max + 1) + lg(pairs + 1) + lg_choose(pairs, m)
}

/// Uniform code: every possible edge carries one bit.
pub fn l_uniform(n: u64, n_max: u64) -> f64 {
    let pairs = n * n.saturating_sub(1) / 2;
    lg(n_max + 1) + pairs as f64
}

/// Edge-list code: each edge names its vertex pair independently.
pub fn l_edge_list(n: u64, m: u64, n_max: u64) -> f64 {
    let pairs = n * n.saturating_sub(1) / 2;
    let per_edge = if m == 0 { 0.0 } else { m as f64 * lg(pairs) };
    lg(n_max + 1) + lg(pairs + 1) + per_edge
}

/// Cut code, given block vertex counts `k` and the nonzero inter-block
/// edge counts `cuts` (block index pairs `i < j`). Hierarchical: total cut
/// edge count uniform over `0..=Σ k_i·k_j`, then the split into per-pair
/// counts as a composition, then each pair's edge arrangement uniformly.
pub fn l_cuts(k: &[u64], cuts: &[((usize, usize), u64)]) -> f64 {
    let b = k.len() as u64;
    let mut slot_total = 0u64;
    for i in 0..k.len() {
        for j in i + 1..k.len() {
            slot_total += k[i] * k[j];
        }
    }
    let m_c: u64 = cuts.iter().map(|&(_, m)| m).sum();
    debug_assert!(m_c <= slot_total);
    let mut bits = lg(1 + slot_total) + lg_compositions(b * b.saturating_sub(1) / 2, m_c);
    for &((i, j), m_ij) in cuts {
        debug_assert!(i < j && j < k.len());
        bits += lg_choose(k[i] * k[j], m_ij);
    }
    bits
}

/// SBM-style whole-graph baseline: vertex count, edge count, block count,
/// block sizes as a composition, edge counts as a composition over intra-
/// and inter-block slots, then intra-block edges (`m_i`, parallel to `k`)
/// and inter-block edges (`cuts`) arranged uniformly.
pub fn l_sbm(n_max: u64, k: &[u64], m_i: &[u64], cuts: &[((usize, usize), u64)]) -> f64 {
    assert_eq!(k.len(), m_i.len());
    let n: u64 = k.iter().sum();
    let b = k.len() as u64;
    assert!(b >= 1 && n >= 1);
    let m: u64 = m_i.iter().sum::<u64>() + cuts.iter().map(|&(_, m)| m).sum::<u64>();
    let mut bits = lg(n_max + 1) + lg(n * (n - 1) / 2 + 1) + lg(n) + lg_choose(n - 1, b - 1);
    bits += lg_choose(b * (b + 1) / 2 + m - 1, m);
    for (&ki, &mi) in k.iter().zip(m_i) {
        bits += lg_choose(ki * ki.saturating_sub(1) / 2, mi);
    }
    for &((i, j), m_ij) in cuts {
        bits += lg_choose(k[i] * k[j], m_ij);
    }
    bits
}

/// Attribute payload: each vertex label uniform over its domain, each edge
/// label likewise.
pub fn l_attributes(n: u64, m: u64, v_domain: Option<u32>, e_domain: Option<u32>) -> f64 {
    let mut bits = 0.0;
    if let Some(av) = v_domain {
        bits += n as f64 * lg(av as u64);
    }
    if let Some(ae) = e_domain {
        bits += m as f64 * lg(ae as u64);
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn null_code_matches_pinned_values() {
        assert_relative_eq!(l_null(5, 4, 5), 13.758639637024576, max_relative = 1e-12);
        assert_relative_eq!(l_null(1, 0, 1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(l_null(3, 3, 12), 5.700439718141093, max_relative = 1e-12);
        // Empty graph: only the vertex count costs anything.
        assert_relative_eq!(l_null(0, 0, 7), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn trivial_codes_match_pinned_values() {
        assert_relative_eq!(l_uniform(2, 2), 2.584962500721156, max_relative = 1e-12);
        assert_relative_eq!(l_edge_list(5, 4, 5), 19.3321064989079, max_relative = 1e-12);
    }

    #[test]
    fn cut_code_matches_pinned_values() {
        assert_relative_eq!(
            l_cuts(&[2, 2], &[((0, 1), 1)]),
            4.321928094887362,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            l_cuts(&[3, 2, 1], &[((0, 1), 2), ((1, 2), 1)]),
            11.813781191217036,
            max_relative = 1e-12
        );
        // Singleton blocks of an empty graph: only the "zero cut edges"
        // header remains.
        assert_relative_eq!(l_cuts(&[1, 1, 1], &[]), 2.0, max_relative = 1e-12);
        // One block: nothing to encode.
        assert_relative_eq!(l_cuts(&[5], &[]), 0.0, max_relative = 1e-12);
    }

    #[test]
    fn sbm_baseline_matches_pinned_values() {
        assert_relative_eq!(
            l_sbm(4, &[2, 2], &[1, 1], &[((0, 1), 1)]),
            14.036173612553483,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            l_sbm(28, &[4, 3], &[5, 2], &[((0, 1), 3)]),
            32.70540887086906,
            max_relative = 1e-12
        );
    }

    #[test]
    fn attribute_payload_is_per_symbol_uniform() {
        assert_relative_eq!(
            l_attributes(4, 3, Some(4), Some(2)),
            11.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(l_attributes(4, 3, None, None), 0.0);
        // Domain of size one is free.
        assert_relative_eq!(l_attributes(9, 9, Some(1), Some(1)), 0.0);
    }

    #[test]
    fn null_is_never_above_uniform_by_more_than_the_headers() {
        // log C(P, m) <= P, so the null code exceeds the uniform code by
        // at most the edge-count header.
        for n in 1u64..10 {
            let pairs = n * (n - 1) / 2;
            for m in 0..=pairs {
                let gap = l_null(n, m, 10) - l_uniform(n, 10);
                assert!(gap <= lg(pairs + 1) + 1e-9, "n={n} m={m} gap={gap}");
            }
        }
    }
}
