//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! the run seed, so changing how much one component consumes never shifts
//! another component's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent stream `stream` of the generator family identified by `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub mod streams {
    pub const INIT: u64 = 1;
    pub const AUGMENT: u64 = 2;
    pub const NEGATIVES: u64 = 3;
    pub const PARTITION: u64 = 4;
    pub const EVAL: u64 = 5;
    pub const PROBE: u64 = 6;
}
