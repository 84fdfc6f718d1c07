//! Counter-based random streams.
//!
//! Every random quantity is a pure function of a master seed and a tuple of
//! counters (stream tag, replication, edge index, ...), so results do not
//! depend on evaluation order or thread count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a counter.
#[inline]
pub fn derive(seed: u64, counter: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN).wrapping_add(mix64(counter.wrapping_add(GOLDEN))))
}

/// Derive a child seed from a textual stream tag (experiment id, "resample", ...).
pub fn derive_tag(seed: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then mixed in as a counter.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive(seed, h)
}

/// Uniform draw in [0, 1) with 53 bits of precision for `(seed, counter)`.
#[inline]
pub fn uniform(seed: u64, counter: u64) -> f64 {
    (derive(seed, counter) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Bernoulli(p) draw for `(seed, counter)`; exact at p = 0 and p = 1.
#[inline]
pub fn bernoulli(seed: u64, counter: u64, p: f64) -> bool {
    uniform(seed, counter) < p
}

/// Uniform index in `0..n` for `(seed, counter)`.
#[inline]
pub fn index(seed: u64, counter: u64, n: usize) -> usize {
    ((derive(seed, counter) as u128 * n as u128) >> 64) as usize
}
