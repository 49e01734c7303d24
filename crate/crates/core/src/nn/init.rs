use rand::Rng;

use crate::real::Real;
use crate::tensor::Tensor;

/// Uniform Glorot initialization, `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`.
///
/// Samples are drawn as `f64` and then converted, so `f32` and `f64` models
/// built from the same generator state hold the same values up to rounding.
pub fn glorot_uniform<T: Real, R: Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<T> {
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    Tensor::from_fn(shape, |_| T::from_f64(rng.random_range(-limit..limit)))
}
