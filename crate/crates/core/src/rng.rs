//! Named, seeded random streams.
//!
//! Every consumer of randomness asks for its own stream by name and index, so
//! adding a draw in one place never shifts the numbers seen anywhere else and
//! parallel tasks stay reproducible regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream `name`/`index` under `master_seed`. The key is `master_seed ^ index`;
/// the name selects the ChaCha stream.
pub fn stream(master_seed: u64, name: &str, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ index);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
