//! Radix-2 complex FFT and FFT-based autocorrelation.

use alloc::vec;
use alloc::vec::Vec;

use crate::C64;

/// In-place iterative radix-2 FFT. `data.len()` must be a power of two.
///
/// The forward transform uses `e^{−2πi jk/n}`; the inverse is unnormalized.
pub fn fft_in_place(data: &mut [C64], inverse: bool) {
    let n = data.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two");
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<C64> = (0..half)
            .map(|k| {
                let (s, c) = libm::sincos(core::f64::consts::TAU * k as f64 / len as f64);
                C64::new(c, sign * s)
            })
            .collect();
        for chunk in data.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
            }
        }
        len *= 2;
    }
}

/// Biased, mean-removed autocovariance `r(l) = (1/N) Σ_i (x_i − x̄)(x_{i+l} − x̄)`
/// for `l = 0..=max_lag`.
pub fn autocovariance(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return vec![0.0; max_lag + 1];
    }
    let mean = crate::sum::neumaier(x) / n as f64;
    let size = (n + max_lag + 1).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); size];
    for (b, v) in buf.iter_mut().zip(x) {
        b.re = v - mean;
    }
    fft_in_place(&mut buf, false);
    for b in buf.iter_mut() {
        *b = C64::new(b.norm_sqr(), 0.0);
    }
    fft_in_place(&mut buf, true);
    let scale = 1.0 / (size as f64 * n as f64);
    (0..=max_lag)
        .map(|l| if l < n { buf[l].re * scale } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let (s, c) = libm::sincos(-core::f64::consts::TAU * (j * k) as f64 / n as f64);
                        v * C64::new(c, s)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<C64> = (0..64)
            .map(|i| C64::new(libm::sin(i as f64 * 0.37), libm::cos(i as f64 * 1.1)))
            .collect();
        let mut y = x.clone();
        fft_in_place(&mut y, false);
        for (a, b) in y.iter().zip(naive_dft(&x)) {
            assert!((a - b).norm() < 1e-11);
        }
        fft_in_place(&mut y, true);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / 64.0 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn autocovariance_matches_direct_sum() {
        let x: Vec<f64> = (0..500)
            .map(|i| libm::sin(i as f64 * 0.21) + 0.3 * libm::cos(i as f64 * 0.05))
            .collect();
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let r = autocovariance(&x, 40);
        for (l, rl) in r.iter().enumerate() {
            let direct: f64 = (0..n - l).map(|i| (x[i] - mean) * (x[i + l] - mean)).sum::<f64>() / n as f64;
            assert!((rl - direct).abs() < 1e-12, "lag {l}");
        }
    }
}
