//! Named, splittable seeds.
//!
//! Every random decision in the pipeline draws from a [`SeedTree`] node
//! derived by label from its parent, so a substream depends only on its path
//! (e.g. `pair/17/fx/kick`) and never on the order in which siblings are
//! consumed. Leaves hand out ChaCha8 generators, which are counter-based.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree(seed)
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn child(self, label: &str) -> Self {
        SeedTree(mix(self.0 ^ fnv1a(label.as_bytes())))
    }

    pub fn index(self, i: u64) -> Self {
        SeedTree(mix(self.0.wrapping_add(mix(i ^ 0x9e37_79b9_7f4a_7c15))))
    }

    pub fn rng(self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
