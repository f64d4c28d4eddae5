//! Robust temporal-difference learning and natural actor-critic for
//! reinforcement learning with heavy-tailed rewards.
//!
//! * [`env`]: Markov reward/decision processes, centered Pareto reward noise,
//!   iid and Markovian transition samplers.
//! * [`oracle`]: exact stationary distributions, value functions, Bellman
//!   operator, feature Gram spectra and related ground truth.
//! * [`td`]: Robust TD learning (dynamic gradient clipping + ball projection +
//!   iterate averaging), its schedules and error bounds.
//! * [`nac`]: Robust natural actor-critic over log-linear policies.
//! * [`harness`]: seeded multi-trial experiments, CSV output, aggregation and
//!   SVG plots.

pub mod env;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod nac;
pub mod oracle;
pub mod td;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used everywhere in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-run `index` of a run seeded with `base`: `base ⊕ mix64(index)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ mix64(index)
}
