//! Per-run seed derivation.
//!
//! `derive_seeds` hashes `(master_seed, rho_index, realization_index)` with
//! the splitmix64 finalizer:
//!
//! ```text
//! x = mix(master + G)
//! x = mix(x ^ rho_index)
//! x = mix(x ^ (realization_index + G))
//! seed_k = mix(x + k·G)   for k = 1..4
//! ```
//!
//! with `G = 0x9E3779B97F4A7C15` and wrapping arithmetic. The mapping is part
//! of the results format: changing it changes every sweep.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds for one reservoir realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunSeeds {
    pub topology: u64,
    pub weights: u64,
    pub input: u64,
    /// Reserved for randomised initial states; runs start from `r = 0`.
    pub init: u64,
}

pub fn derive_seeds(master_seed: u64, rho_index: usize, realization_index: usize) -> RunSeeds {
    let mut x = mix(master_seed.wrapping_add(GOLDEN));
    x = mix(x ^ rho_index as u64);
    x = mix(x ^ (realization_index as u64).wrapping_add(GOLDEN));
    let k = |i: u64| mix(x.wrapping_add(i.wrapping_mul(GOLDEN)));
    RunSeeds {
        topology: k(1),
        weights: k(2),
        input: k(3),
        init: k(4),
    }
}
