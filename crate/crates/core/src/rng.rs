//! Seeded random streams.
//!
//! Every random decision in a run draws from a ChaCha stream whose seed is
//! derived from the experiment seed plus a purpose tag (and, for per-node
//! decisions, the node id and epoch). Streams never share state, so the
//! outcome of one node's exploration does not depend on the order in which
//! nodes are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose tags for independent streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Subscriptions = 1,
    Placement = 2,
    ProcessingDelay = 3,
    InitialOverlay = 4,
    Publication = 5,
    Exploration = 6,
    Attackers = 7,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_0F70_A1A7_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Stream for a run-wide purpose.
pub fn stream(seed: u64, purpose: Stream) -> SimRng {
    SimRng::seed_from_u64(mix(&[seed, purpose as u64]))
}

/// Stream for a run-wide purpose that is redrawn each epoch.
pub fn epoch_stream(seed: u64, purpose: Stream, epoch: usize) -> SimRng {
    SimRng::seed_from_u64(mix(&[seed, purpose as u64, epoch as u64]))
}

/// Stream owned by a single node during a single epoch.
pub fn node_stream(seed: u64, purpose: Stream, node: usize, epoch: usize) -> SimRng {
    SimRng::seed_from_u64(mix(&[seed, purpose as u64, epoch as u64, node as u64, 0xA11CE]))
}
