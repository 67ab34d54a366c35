//! Deterministic random streams.
//!
//! Every Monte Carlo run owns its own generator, seeded from the base seed and
//! the run index, so results do not depend on the order in which runs execute.
//! Within a run, each random component (geometry, transmitter-to-RIS channel,
//! user channels, reflection schedule) is drawn from a separate ChaCha stream.
//! Users are drawn one after another from their stream, so the first `K` users
//! of a run are the same whatever the total user count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Identifier of the only generator currently supported.
pub const CHACHA8: &str = "chacha8";

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Geometry = 0,
    TxRis = 1,
    Users = 2,
    Schedule = 3,
}

/// SplitMix64 finalizer, used as the run-index hash.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `run_index`: `base_seed ^ splitmix64(run_index)`.
pub fn run_seed(base_seed: u64, run_index: u64) -> u64 {
    base_seed ^ splitmix64(run_index)
}

pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Circularly-symmetric complex Gaussian with the given variance; real and
/// imaginary parts are i.i.d. N(0, variance/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}
