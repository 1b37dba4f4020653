//! Deterministic child seeds derived from the master seed.
//!
//! Each random stream in a run is keyed by (stream, index, epoch) so draws do
//! not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Gps = 1,
    Ping = 2,
    Pressure = 3,
    Ga = 4,
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn child_seed(master: u64, stream: Stream, index: u64, epoch: u64) -> u64 {
    [stream as u64, index, epoch].into_iter().fold(splitmix64(master), |h, w| splitmix64(h ^ w))
}

pub fn child_rng(master: u64, stream: Stream, index: u64, epoch: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, stream, index, epoch))
}
