//! Counter-based substreams for reproducible parallel simulation.
//!
//! Each ensemble member draws from ChaCha8 keyed by the master seed with the
//! member index as the stream counter, so member m's draws do not depend on
//! how many members run, in what order, or on how work is scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn member_rng(master_seed: u64, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(member);
    rng
}
