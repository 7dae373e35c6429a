//! Seeded random sub-streams.
//!
//! A scenario seed fans out into independent ChaCha streams so that changing
//! one consumer (say, the exploration policy) never shifts another (the
//! traffic generator).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Traffic = 2,
    Exploration = 3,
    Init = 4,
    Replay = 5,
    Distances = 6,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
