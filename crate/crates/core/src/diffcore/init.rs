use super::rng::Rng;
use super::tensor::Tensor;

/// Xavier-uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Xavier-uniform `fan_in×fan_out` weight matrix.
pub fn xavier_init(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor {
    let bound = xavier_bound(fan_in, fan_out);
    let data = (0..fan_in * fan_out)
        .map(|_| rng.uniform_range(-bound, bound))
        .collect();
    Tensor::new(fan_in, fan_out, data).expect("shape")
}
