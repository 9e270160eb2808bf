//! Deterministic random streams.
//!
//! Every independent unit of simulation work (a Monte Carlo chunk, a frame)
//! gets its own ChaCha stream keyed by the master seed and its coordinates,
//! so results never depend on how work is spread across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream for work item `(a, b)` within a `domain` (an arbitrary tag that
/// keeps, say, sweep streams apart from frame streams).
pub fn stream_rng(master_seed: u64, domain: u64, a: u64, b: u64) -> SimRng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&domain.to_le_bytes());
    seed[16..24].copy_from_slice(&a.to_le_bytes());
    seed[24..].copy_from_slice(&b.to_le_bytes());
    SimRng::from_seed(seed)
}

pub const DOMAIN_SWEEP: u64 = 0x5357_4545_5000_0001;
/// Receiver-side random choices, kept apart so they never shift the trial stream.
pub const DOMAIN_TIE_BREAK: u64 = 0x5449_4542_524b_0003;
pub const DOMAIN_FRAME: u64 = 0x4652_414d_4500_0002;
