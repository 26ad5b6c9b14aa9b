//! Reproducible seeding: every replication and every sub-stream gets its own
//! generator derived from a single master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Driver,
    Sigma,
    Marks,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Driver => 1,
            Stream::Sigma => 2,
            Stream::Marks => 3,
        }
    }
}

/// SplitMix64 finalizer (a bijection on `u64`).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ replication) ^ (stream * 0xA24BAED4963EE407))`.
///
/// Each stage is a bijection, so for fixed `(replication, stream)` distinct
/// masters always give distinct seeds.
pub fn derive_seed(master: u64, replication: u64, stream: Stream) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ replication);
    splitmix64(h ^ stream.id().wrapping_mul(0xA24B_AED4_963E_E407))
}

pub fn stream_rng(master: u64, replication: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, replication, stream))
}
