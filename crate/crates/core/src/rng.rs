//! Deterministic per-trial random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Independent stream for `(master_seed, trial_index)`; identical for
/// serial and parallel execution.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> TrialRng {
    let mut r = ChaCha8Rng::seed_from_u64(master_seed);
    r.set_stream(trial_index);
    r
}
