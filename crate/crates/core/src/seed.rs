//! Named, per-purpose seed streams.
//!
//! Every random draw in a simulation comes from a [`ChaCha8Rng`] seeded by
//! `(master seed, replicate index, purpose)`. Changing how one component
//! consumes randomness therefore never perturbs another component's stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    EnvGeneration,
    SomaticRedraw,
    Dynamics,
    FirstAgent,
    SecondAgent,
    Exploration,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::EnvGeneration => 1,
            Purpose::SomaticRedraw => 2,
            Purpose::Dynamics => 3,
            Purpose::FirstAgent => 4,
            Purpose::SecondAgent => 5,
            Purpose::Exploration => 6,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for one purpose of one replicate.
pub fn derive_seed(master: u64, replicate: u64, purpose: Purpose) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ replicate.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(b ^ purpose.tag().wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream(master: u64, replicate: u64, purpose: Purpose) -> SimRng {
    rng_from_seed(derive_seed(master, replicate, purpose))
}
