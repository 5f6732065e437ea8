//! Named random substreams and complex Gaussian sampling.
//!
//! Every random draw in the crate flows from a master seed through
//! [`substream`], keyed by a numeric path (cell id, trial id, link id, ...)
//! and a purpose tag. Two streams with different keys are independent; the
//! same key always reproduces the same stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, CVec};
use num_complex::Complex64;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derive a 64-bit seed from a master seed, a numeric path and a tag.
pub fn derive_seed(master: u64, path: &[u64], tag: &str) -> u64 {
    let mut state = splitmix64(master ^ tag_hash(tag));
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0x51_7cc1_b727_220a)));
    }
    state
}

/// Independent RNG stream for `(master, path, tag)`.
pub fn substream(master: u64, path: &[u64], tag: &str) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, path, tag))
}

/// One `CN(0, 1)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. `CN(0, 1)` entries, filled column by column.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    CMat::from_column_slice(rows, cols, &data)
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_iterator(n, (0..n).map(|_| complex_gaussian(rng)))
}
