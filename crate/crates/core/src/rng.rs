//! Seed derivation for independent random streams.
//!
//! A run owns one master seed. Every subsystem (and, where reproducibility
//! across worker counts matters, every `(day, location)` unit of work) draws
//! from its own ChaCha stream keyed off that seed, so adding draws in one place
//! never shifts the numbers seen elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Population = 1,
    Apps = 2,
    Seeding = 3,
    Schedule = 4,
    Contacts = 5,
    Transmission = 6,
    Disease = 7,
    Symptoms = 8,
    Testing = 9,
    Bluetooth = 10,
    Behavior = 11,
    Background = 12,
    Hospital = 13,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream id and up to two integer keys.
pub fn derive_seed(master: u64, stream: Stream, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(master ^ 0xA076_1D64_78BD_642F);
    h = splitmix64(h ^ (stream as u64));
    h = splitmix64(h ^ a);
    splitmix64(h ^ b.rotate_left(17))
}

pub fn stream(master: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream, 0, 0))
}

pub fn keyed(master: u64, stream: Stream, a: u64, b: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream, a, b))
}
