//! Log-domain combinatorics shared by every code-length formula.
//!
//! All lengths in this crate are base-2 logarithms, i.e. bits. Binomial
//! coefficients whose smaller index is modest are evaluated exactly over big
//! integers before taking the log; larger ones go through `ln_gamma`, which
//! the tests pin against the exact big-integer values to well under 1e-9
//! bits. Real-valued (non-integer) factorials — needed by the relaxed
//! training objective — always use `ln_gamma`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Exact binomial cutoff: below this smaller-index the big-integer product is
/// cheap (at most 96 multiply/divide steps).
const EXACT_K: u64 = 96;

/// log2 of a count.
pub fn lg(x: u64) -> f64 {
    (x as f64).log2()
}

/// log2 Γ(x), x > 0.
pub fn lg_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x) / LN_2
}

/// log2 x! for real x ≥ 0.
pub fn lg_factorial(x: f64) -> f64 {
    lg_gamma(x + 1.0)
}

/// d/dx log2 Γ(x).
pub fn lg_digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x) / LN_2
}

/// Γ-generalized log2 binomial coefficient for real arguments,
/// `0 <= k <= n`. Agrees with `lg_choose` at integers.
pub fn lg_choose_real(n: f64, k: f64) -> f64 {
    debug_assert!(k >= 0.0 && k <= n);
    lg_factorial(n) - lg_factorial(k) - lg_factorial(n - k)
}

/// Exact binomial coefficient.
pub fn choose_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= BigUint::from(n - k + i);
        acc /= BigUint::from(i);
    }
    acc
}

/// log2 of a positive big integer, exact to f64 precision for any size.
pub fn lg_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().expect("fits f64").log2();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_f64().expect("53-bit slice fits f64");
    top.log2() + shift as f64
}

/// log2 C(n, k). Panics if k > n — every caller derives the arguments from
/// graph invariants that guarantee the domain.
pub fn lg_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n, "lg_choose called with k={k} > n={n}");
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if k <= EXACT_K {
        lg_biguint(&choose_exact(n, k))
    } else {
        lg_gamma(n as f64 + 1.0) - lg_gamma(k as f64 + 1.0) - lg_gamma((n - k) as f64 + 1.0)
    }
}

/// log2 of the number of weak compositions of `total` into `parts` parts,
/// i.e. log2 C(parts + total - 1, total). Zero when there is exactly one
/// composition (no parts and nothing to place, or total = 0).
pub fn lg_compositions(parts: u64, total: u64) -> f64 {
    if total == 0 || parts == 0 {
        return 0.0;
    }
    lg_choose(parts + total - 1, total)
}

/// Binary entropy in bits; h2(0) = h2(1) = 0.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Lexicographic rank of a strictly increasing combination drawn from 0..n.
///
/// The rank of {0, 1, …, k-1} is 0; the rank of the final combination
/// {n-k, …, n-1} is C(n, k) - 1.
pub fn rank_combination(n: u64, combo: &[u64]) -> BigUint {
    let k = combo.len() as u64;
    for w in combo.windows(2) {
        assert!(w[0] < w[1], "combination must be strictly increasing");
    }
    if let Some(&last) = combo.last() {
        assert!(last < n, "combination element {last} out of range 0..{n}");
    }
    let mut rank = choose_exact(n, k);
    rank -= BigUint::one();
    for (i, &c) in combo.iter().enumerate() {
        rank -= choose_exact(n - 1 - c, k - i as u64);
    }
    rank
}

/// Inverse of [`rank_combination`]: the `rank`-th combination of size `k`
/// from 0..n in lexicographic order.
pub fn unrank_combination(n: u64, k: u64, rank: &BigUint) -> Vec<u64> {
    assert!(k <= n);
    assert!(
        rank < &choose_exact(n, k),
        "rank out of range for C({n}, {k})"
    );
    let mut out = Vec::with_capacity(k as usize);
    let mut r = rank.clone();
    let mut c = 0u64;
    for i in 0..k {
        loop {
            let block = choose_exact(n - 1 - c, k - 1 - i);
            if r < block {
                out.push(c);
                c += 1;
                break;
            }
            r -= block;
            c += 1;
        }
    }
    out
}

/// Round-trip f64 → IEEE half → f64. Model parameters are stored in archive
/// headers as 16-bit floats; both coder sides must see the identical value.
pub fn f16_quantize(x: f64) -> f64 {
    half::f16::from_f64(x).to_f64()
}

pub fn f16_bits(x: f64) -> u16 {
    half::f16::from_f64(x).to_bits()
}

pub fn f16_from_bits(b: u16) -> f64 {
    half::f16::from_bits(b).to_f64()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
