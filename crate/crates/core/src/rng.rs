//! Seedable, counter-based random streams.
//!
//! Every stochastic operation takes an explicit `&mut impl Rng`; callers derive
//! one independent [`Stream`] per chain, worker or sample index from a run seed
//! so that results are bit-for-bit reproducible regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ChaCha8 keyed by the run seed, with the 64-bit stream id selecting an
/// independent keystream.
pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Combines a domain tag and an index into a stream id.
///
/// Tags keep unrelated consumers of the same seed (seeding pass, chains,
/// reference renders) on disjoint streams.
pub const fn stream_id(tag: u32, index: u64) -> u64 {
    ((tag as u64) << 48) ^ index
}

/// Uniform sample in `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

pub fn fill_uniform<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = rng.gen::<f64>();
    }
}

pub fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}
