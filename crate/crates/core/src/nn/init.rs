use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Tensor;

/// `(fan_in, fan_out)` for a weight shape. The last two dimensions are
/// `[in, out]`; any leading dimensions form the receptive field.
pub fn fans(shape: &[usize]) -> (usize, usize) {
    assert!(shape.len() >= 2, "fan-in/fan-out need at least two dimensions, got {shape:?}");
    let receptive: usize = shape[..shape.len() - 2].iter().product();
    (shape[shape.len() - 2] * receptive, shape[shape.len() - 1] * receptive)
}

/// Glorot-uniform sample in `±sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_init(shape: &[usize], seed: u64) -> Tensor {
    xavier_with(shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn xavier_with(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let (fan_in, fan_out) = fans(shape);
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-limit..=limit)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_and_seeded() {
        let t = xavier_init(&[4, 4], 3);
        let bound = (6.0f64 / 8.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= bound));
        assert_eq!(t, xavier_init(&[4, 4], 3));
        assert_ne!(t, xavier_init(&[4, 4], 4));
    }

    #[test]
    fn large_sample_is_centered() {
        let t = xavier_init(&[1000, 1000], 9);
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 0.01, "{mean}");
    }

    #[test]
    fn conv_kernel_fans_include_receptive_field() {
        assert_eq!(fans(&[5, 32, 64]), (160, 320));
        assert_eq!(fans(&[7, 3]), (7, 3));
    }
}
