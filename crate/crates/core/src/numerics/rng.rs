//! Reproducible random streams.
//!
//! A stream is addressed by `(seed, stream_id)` and backed by ChaCha8, whose
//! keystream is counter based: the draws of one stream never depend on how
//! many other streams were consumed or on which thread did the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Matrix;
use crate::error::{Error, Result};

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Deterministically derived sub-stream, e.g. one per run or per layer.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Overwrites `buf` with i.i.d. `N(0, std²)` draws.
pub fn fill_gaussian<R: Rng + ?Sized>(rng: &mut R, buf: &mut [f64], std: f64) {
    for v in buf.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = std * z;
    }
}

/// Matrix with i.i.d. `N(0, variance)` entries drawn from `stream`.
pub fn gaussian_matrix(rows: usize, cols: usize, variance: f64, stream: &RngStream) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix { rows, cols });
    }
    if variance.is_nan() || variance < 0.0 || variance.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "variance must be finite and non-negative, got {variance}"
        )));
    }
    let mut m = Matrix::zeros(rows, cols);
    if variance > 0.0 {
        fill_gaussian(&mut stream.generator(), m.as_mut_slice(), variance.sqrt());
    }
    Ok(m)
}
