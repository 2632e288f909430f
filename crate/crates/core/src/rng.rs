//! Keyed, counter-based randomness.
//!
//! Every random quantity in the simulation is a pure function of a 64-bit
//! master seed, a stream tag and integer coordinates. Nothing is drawn from a
//! sequential generator shared between call sites, so values can be computed
//! lazily over unbounded space-time, in any order and on any number of
//! workers, and still agree bit for bit.
//!
//! The mixing function is the SplitMix64 finalizer. A stream key is obtained
//! by chaining the finalizer over the coordinates; the `k`-th word of a stream
//! is the finalizer applied to `key + (k + 1) * GAMMA`, which is exactly the
//! SplitMix64 sequence and therefore random access.

use rand_core::RngCore;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stream tags. Distinct tags give unrelated streams for the same coordinates.
pub mod tag {
    pub const INITIAL_COUNT: u64 = 0x01;
    pub const FUTURE_STEPS: u64 = 0x02;
    pub const PAST_STEPS: u64 = 0x03;
    pub const UNIFORM: u64 = 0x04;
    pub const REPLICA: u64 = 0x10;
    pub const SPEED: u64 = 0x11;
    pub const BACKTRACK: u64 = 0x12;
    pub const CLT: u64 = 0x13;
    pub const ESCAPE: u64 = 0x14;
    pub const REGENERATION: u64 = 0x15;
    pub const INFLUENCE: u64 = 0x16;
    pub const SWEEP: u64 = 0x20;
    pub const VERIFY: u64 = 0x30;
}

#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline(always)]
fn absorb(h: u64, word: u64) -> u64 {
    mix64(h.wrapping_add(GAMMA) ^ word)
}

/// Keyed hash of a tag and up to three signed coordinates.
#[inline]
pub fn keyed(seed: u64, tag: u64, a: i64, b: i64, c: i64) -> u64 {
    let mut h = mix64(seed ^ tag.wrapping_mul(GAMMA));
    h = absorb(h, a as u64);
    h = absorb(h, b as u64);
    absorb(h, c as u64)
}

/// Seed for replica `index` of an experiment identified by `tag`.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    keyed(master, tag::REPLICA, tag as i64, index as i64, 0)
}

/// `k`-th word of the stream identified by `key`.
#[inline(always)]
pub fn stream_word(key: u64, k: u64) -> u64 {
    mix64(key.wrapping_add(k.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// Maps 64 random bits to a double in `[0, 1)` with 53 bits of resolution.
#[inline(always)]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential view of a keyed stream, for handing to `rand_distr` samplers.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let w = stream_word(self.key, self.counter);
        self.counter += 1;
        w
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}
