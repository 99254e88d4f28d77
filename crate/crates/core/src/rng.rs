//! Counter-based random streams.
//!
//! Trial `i` of a run seeded with `s` always draws from ChaCha8 keyed by `s`
//! on stream `i`, whichever worker executes it. Results therefore do not
//! depend on how trials are partitioned across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Independent stream for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Mixes `tag` into `seed` (SplitMix64 finalizer), for deriving per-grid-point
/// seeds from one experiment seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
