//! Reproducible named RNG streams.
//!
//! A root seed expands to per-(purpose, replication) streams: the ChaCha key
//! is a splitmix64 chain seeded with `root ^ fnv1a64(purpose)` and the
//! 64-bit ChaCha stream id is the replication index. Two calls with the same
//! `(root, purpose, rep)` are bit-identical regardless of thread scheduling,
//! and distinct purposes get unrelated keys.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct SeedSpace {
    root: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

impl SeedSpace {
    pub fn new(root: u64) -> Self {
        SeedSpace { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// A sub-space for nested experiments (e.g. one per meta-run).
    pub fn subspace(&self, label: &str) -> SeedSpace {
        SeedSpace { root: self.root ^ fnv1a64(label).rotate_left(17) }
    }

    pub fn stream(&self, purpose: &str, rep: u64) -> ChaCha8Rng {
        let mut state = self.root ^ fnv1a64(purpose);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(rep);
        rng
    }
}
