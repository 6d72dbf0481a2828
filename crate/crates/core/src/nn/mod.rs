//! Small dense networks with hand-written backpropagation.

pub mod adam;
pub mod critic;
pub mod gemm;

pub use adam::{clip_global_norm, Adam};
pub use critic::Critic;

use rand::Rng;

/// Fills `out` with `U(−1/√fan_in, 1/√fan_in)` draws.
pub(crate) fn init_uniform<R: Rng + ?Sized>(out: &mut [f64], fan_in: usize, rng: &mut R) {
    let bound = 1.0 / libm::sqrt(fan_in.max(1) as f64);
    for w in out {
        *w = rng.random_range(-bound..bound);
    }
}

/// Adds the bias row to every row of an `n×width` matrix.
pub(crate) fn add_bias(y: &mut [f64], bias: &[f64]) {
    for row in y.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// Column sums of an `n×width` matrix, accumulated into `out`.
pub(crate) fn accumulate_column_sums(m: &[f64], out: &mut [f64]) {
    for row in m.chunks_exact(out.len()) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}
