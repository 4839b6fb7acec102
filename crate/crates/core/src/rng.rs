//! Seeded ChaCha20 streams; every randomized routine takes an explicit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
