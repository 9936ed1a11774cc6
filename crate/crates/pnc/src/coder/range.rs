//! Byte-wise range coder with 64-bit state and carry propagation through
//! a cached-byte chain. Frequencies are plain integers; a symbol with
//! frequency `f` out of `total` costs `log2(total/f)` bits up to the
//! truncation of `range / total`, which is negligible at this width
//! (totals are capped far below the renormalization threshold).

/// Renormalize whenever the range drops below 2^56: one byte out per step.
const TOP: u64 = 1 << 56;
/// Cumulative totals must stay far below the post-renormalization range.
pub const MAX_TOTAL: u32 = 1 << 30;

#[derive(Debug)]
pub struct RangeEncoder {
    low: u128,
    range: u64,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
    ideal_bits: f64,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u64::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
            ideal_bits: 0.0,
        }
    }

    /// Encode a symbol occupying `[cum, cum + freq)` of `total`.
    pub fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0, "zero-frequency symbol");
        debug_assert!(cum + freq <= total && total <= MAX_TOTAL);
        let r = self.range / total as u64;
        self.low += r as u128 * cum as u128;
        self.range = r * freq as u64;
        self.ideal_bits += (total as f64 / freq as f64).log2();
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    fn shift_low(&mut self) {
        let carry = (self.low >> 64) as u8;
        if (self.low as u64) < 0xFF00_0000_0000_0000 || carry != 0 {
            let mut b = self.cache;
            while self.cache_size > 0 {
                self.out.push(b.wrapping_add(carry));
                b = 0xFF;
                self.cache_size -= 1;
            }
            self.cache = (self.low >> 56) as u8;
        }
        self.cache_size += 1;
        self.low = ((self.low as u64) << 8) as u128;
    }

    /// Information-theoretic cost of everything encoded so far assuming
    /// the integer tables were exact. Take deltas for per-message costs.
    pub fn ideal_bits(&self) -> f64 {
        self.ideal_bits
    }

    /// Bits actually committed to the stream so far (pending bytes plus
    /// the fraction still held in `range`). Only deltas are meaningful.
    pub fn bits_so_far(&self) -> f64 {
        8.0 * (self.out.len() as u64 + self.cache_size) as f64 - (self.range as f64).log2()
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..9 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    buf: &'a [u8],
    pos: usize,
    range: u64,
    code: u64,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        let mut d = RangeDecoder {
            buf,
            pos: 0,
            range: u64::MAX,
            code: 0,
        };
        // The first byte is the encoder's initial zero cache.
        for _ in 0..9 {
            d.code = (d.code << 8) | d.next() as u64;
        }
        d
    }

    fn next(&mut self) -> u8 {
        let b = self.buf.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    /// Cumulative-frequency position of the next symbol under `total`.
    pub fn decode_freq(&mut self, total: u32) -> u32 {
        let r = self.range / total as u64;
        ((self.code / r) as u32).min(total - 1)
    }

    /// Consume the symbol at `[cum, cum + freq)`; must match the
    /// preceding `decode_freq(total)`.
    pub fn decode_update(&mut self, cum: u32, freq: u32, total: u32) {
        let r = self.range / total as u64;
        self.code -= r * cum as u64;
        self.range = r * freq as u64;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next() as u64;
            self.range <<= 8;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// (cum, freq, total) streams with skewed and uniform entries.
    fn random_stream(seed: u64, len: usize) -> Vec<(u32, u32, u32)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| {
                let total = rng.random_range(2u32..5000);
                let cum = rng.random_range(0..total);
                let freq = rng.random_range(1..=total - cum);
                (cum, freq, total)
            })
            .collect()
    }

    #[test]
    fn round_trips_random_symbol_streams() {
        for seed in 0..8 {
            let stream = random_stream(seed, 10_000);
            let mut enc = RangeEncoder::new();
            for &(c, f, t) in &stream {
                enc.encode(c, f, t);
            }
            let bytes = enc.finish();
            let mut dec = RangeDecoder::new(&bytes);
            for &(c, f, t) in &stream {
                let v = dec.decode_freq(t);
                assert!(v >= c && v < c + f, "decoded {v} outside [{c}, {})", c + f);
                dec.decode_update(c, f, t);
            }
        }
    }

    #[test]
    fn realized_length_hugs_the_ideal() {
        let stream = random_stream(42, 20_000);
        let mut enc = RangeEncoder::new();
        for &(c, f, t) in &stream {
            enc.encode(c, f, t);
        }
        let ideal = enc.ideal_bits();
        let bytes = enc.finish();
        let realized = 8.0 * bytes.len() as f64;
        assert!(realized >= ideal - 1e-6, "{realized} < {ideal}");
        // 9 flush bytes plus sub-bit truncation waste.
        assert!(realized <= ideal + 80.0, "{realized} vs {ideal}");
    }

    #[test]
    fn bit_meter_tracks_the_ideal_per_chunk() {
        let stream = random_stream(7, 4_000);
        let mut enc = RangeEncoder::new();
        let mut meter = Vec::new();
        let mut prev = (enc.bits_so_far(), enc.ideal_bits());
        for (i, &(c, f, t)) in stream.iter().enumerate() {
            enc.encode(c, f, t);
            if i % 500 == 499 {
                meter.push((enc.bits_so_far(), enc.ideal_bits()));
            }
        }
        for &(got, want) in &meter {
            let (dg, dw) = (got - prev.0, want - prev.1);
            assert!((dg - dw).abs() < 1.0, "chunk realized {dg} vs ideal {dw}");
            assert!(dg >= dw - 1e-6);
            prev = (got, want);
        }
    }

    #[test]
    fn empty_stream_is_just_the_flush() {
        assert_eq!(RangeEncoder::new().finish().len(), 9);
    }

    #[test]
    fn ones_heavy_streams_exercise_the_carry_chain() {
        // Maximal-cum symbols drive `low` toward all-ones, forcing carries.
        let mut enc = RangeEncoder::new();
        let stream: Vec<(u32, u32, u32)> = (0..5_000)
            .map(|i| {
                if i % 7 == 0 {
                    (0, 1, 1000)
                } else {
                    (999, 1, 1000)
                }
            })
            .collect();
        for &(c, f, t) in &stream {
            enc.encode(c, f, t);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes);
        for &(c, f, t) in &stream {
            let v = dec.decode_freq(t);
            assert!(v >= c && v < c + f);
            dec.decode_update(c, f, t);
        }
    }
}
