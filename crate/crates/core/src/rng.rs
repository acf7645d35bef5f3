//! Deterministic random streams.
//!
//! Every random draw in a run comes from a ChaCha stream keyed by the
//! master seed and a stream id. ChaCha is counter based, so a stream can be
//! created independently on any worker and always yields the same sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// Which consumer a stream belongs to. Part of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Chi = 1,
    SecondMoment = 2,
    Dictionary = 3,
    Pilot = 4,
    Fixture = 5,
}

/// Stream id for batch `batch` of a given consumer.
pub fn stream_id(kind: StreamKind, batch: u64) -> u64 {
    ((kind as u64) << 48) | (batch & 0xffff_ffff_ffff)
}

/// Generator for `(master_seed, stream)`.
pub fn stream(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Shorthand for `stream(master_seed, stream_id(kind, batch))`.
pub fn batch_stream(master_seed: u64, kind: StreamKind, batch: u64) -> StreamRng {
    stream(master_seed, stream_id(kind, batch))
}
