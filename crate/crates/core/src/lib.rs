//! Single-sample pseudo-likelihood estimation for hard-constrained Gibbs
//! distributions.
//!
//! Two model families are covered:
//!
//! * the tilted hard-SAT model, where every satisfying assignment `σ` of a CNF
//!   formula has weight `exp(β · #{i : σ_i = 1})`;
//! * H-colorings of a graph `G`, where every valid coloring has weight
//!   `exp(Σ_r β_r c_r(σ))` with `c_r` the number of vertices colored `r`.
//!
//! For both, the crate provides exact enumeration of small instances, exact
//! product samplers (through connected components) and heat-bath Glauber
//! dynamics, the negative log-pseudo-likelihood with its derivatives, and the
//! maximum pseudo-likelihood estimator. The [`sat::lll`] module carries the
//! marking / local-lemma machinery and exact verifiers of the flippability
//! and coupling bounds; [`conditions`] holds the identifiability and mixing
//! condition checkers.
//!
//! The crate is `no_std` and only needs `alloc`. Variable, vertex and color
//! indices are 0-based throughout; the reference color is `q - 1`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod math;
pub mod linalg;
pub mod graph;
pub mod chain;
pub mod dist;
pub mod sat;
pub mod coloring;
pub mod conditions;

pub use dist::ExactDistribution;
pub use error::{Error, Result};

/// Default cap on the number of variables for exhaustive SAT enumeration.
pub const DEFAULT_MAX_ENUM_VARS: usize = 24;

/// Default cap on the number of states visited by exhaustive enumeration.
pub const DEFAULT_MAX_ENUM_STATES: usize = 1 << 24;

/// Parameters outside `[-MAX_ABS_BETA, MAX_ABS_BETA]` are rejected by the
/// enumerators and samplers.
pub const MAX_ABS_BETA: f64 = 20.0;

/// Deterministic RNG used by every seeded entry point.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}

/// Seed for the `index`-th independent stream derived from `seed`
/// (a SplitMix64 step over `seed ^ index`).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = (seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
