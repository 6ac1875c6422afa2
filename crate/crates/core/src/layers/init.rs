use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::numerics::Matrix;

/// Glorot/Xavier uniform: `U(−L, L)` with `L = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    Matrix::new(rows, cols, data).expect("rows*cols values")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn within_limit_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let m = glorot_uniform(&mut a, 10, 20, 10, 20);
        let limit = (6.0f64 / 30.0).sqrt();
        assert!(m.as_slice().iter().all(|v| v.abs() <= limit));
        assert_eq!(m, glorot_uniform(&mut b, 10, 20, 10, 20));
    }
}
