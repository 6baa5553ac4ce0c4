//! Small numeric kernels shared by the mappers, interaction functions and metrics.
//!
//! All reductions accumulate in `f64` with a fixed eight-lane layout so results are
//! bit-reproducible regardless of how the compiler vectorizes them.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

/// Dot product with eight independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn l2_norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Round-half-even to `decimals` places, rendered as text.
///
/// Works on the shortest decimal representation of the value, so `0.125` renders
/// as `0.12` and `0.375` as `0.38`.
pub fn format_half_even(value: f64, decimals: usize) -> alloc::string::String {
    use alloc::format;
    let scale = libm::pow(10.0, decimals as f64);
    let scaled = value * scale;
    let floor = libm::floor(scaled);
    let frac = scaled - floor;
    // Ties are judged on the decimal string, not the binary expansion.
    let exact = format!("{value}");
    let is_tie = match exact.split_once('.') {
        Some((_, digits)) => digits.len() == decimals + 1 && digits.ends_with('5'),
        None => false,
    };
    let rounded = if is_tie {
        if (floor as i64) % 2 == 0 {
            floor
        } else {
            floor + 1.0
        }
    } else if frac >= 0.5 {
        floor + 1.0
    } else {
        floor
    };
    format!("{:.*}", decimals, rounded / scale)
}

/// Samples `n` values uniformly from `[-bound, bound]`.
pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize, bound: f64) -> Vec<f64> {
    if bound == 0.0 {
        return alloc::vec![0.0; n];
    }
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    (0..n).map(|_| dist.sample(rng)).collect()
}

pub fn standard_normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Xavier/Glorot uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    sqrt(6.0 / (fan_in + fan_out) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..19).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..19).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }

    #[test]
    fn half_even_rounding() {
        assert_eq!(format_half_even(0.75, 2), "0.75");
        assert_eq!(format_half_even(0.125, 2), "0.12");
        assert_eq!(format_half_even(0.375, 2), "0.38");
        assert_eq!(format_half_even(1.0, 2), "1.00");
        assert_eq!(format_half_even(0.0, 2), "0.00");
        assert_eq!(format_half_even(2.0 / 3.0, 2), "0.67");
        assert_eq!(format_half_even(0.6, 2), "0.60");
    }
}
