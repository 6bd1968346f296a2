//! Counter-based splittable random streams.
//!
//! Every random quantity in this crate is a pure function of a `(key, counter)`
//! pair, so a work item identified by an index can regenerate its stream from
//! scratch. This is what makes sampling reproducible bit-for-bit regardless of
//! how many threads process the items or in which order.

/// SplitMix64 finalizer: a 64-bit bijective mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derives an independent child key from a parent key and an index.
#[inline]
fn derive_key(key: u64, index: u64) -> u64 {
    mix64(mix64(key ^ 0xd1b5_4a32_d192_ed03).wrapping_add(mix64(index.wrapping_add(GOLDEN_GAMMA))))
}

/// A splittable counter-based generator.
///
/// `next_u64` is `mix64(key + i * GOLDEN_GAMMA)` for the i-th call, i.e. the
/// SplitMix64 sequence seeded at `key`. `child(index)` derives a statistically
/// independent stream from `(key, index)` without touching the counter, so a
/// parent handle can be shared immutably across threads while each thread owns
/// the substream for its index.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng {
            key: mix64(seed.wrapping_add(GOLDEN_GAMMA)),
            counter: 0,
        }
    }

    /// Derives the substream for `index`. Pure in `self`: the parent's counter
    /// is neither read nor advanced.
    pub fn child(&self, index: u64) -> StreamRng {
        StreamRng {
            key: derive_key(self.key, index),
            counter: 0,
        }
    }

    /// The stream identity, usable as a derived seed for a sub-run.
    pub fn stream_key(&self) -> u64 {
        self.key
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(
            self.key
                .wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }
}
