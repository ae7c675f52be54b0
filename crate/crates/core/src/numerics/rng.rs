//! Seeded random streams.
//!
//! One user seed drives everything. Each consumer gets its own ChaCha
//! stream number so that, for example, changing the dropout rate never
//! shifts the parameter initialization:
//!
//! | stream | consumer                                   |
//! |--------|--------------------------------------------|
//! | 0      | parameter initialization                   |
//! | 1      | dropout masks (re-keyed per example)       |
//! | 2      | batch shuffling (re-keyed per epoch)       |
//! | 3      | sampling during generation                 |
//! | 4      | corpus splitting                           |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Dropout = 1,
    Batching = 2,
    Sampling = 3,
    Split = 4,
}

/// Generator for `stream` under `seed`.
pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Generator for `stream`, additionally keyed by `keys` (epoch, batch,
/// position, ...). Used where work is spread across threads but must not
/// depend on scheduling.
pub fn keyed(seed: u64, which: Stream, keys: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for &k in keys {
        h = splitmix(h ^ k);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    rng.set_stream(which as u64);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
