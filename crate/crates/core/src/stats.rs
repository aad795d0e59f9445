//! Small statistics toolkit: regression, moments, Kolmogorov–Smirnov and
//! normality tests.

use alloc::vec::Vec;

use crate::sum::neumaier;

/// Ordinary least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// Slope.
    pub slope: f64,
    /// Intercept.
    pub intercept: f64,
    /// Coefficient of determination; 1 when the data have no spread.
    pub r2: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
}

/// Least-squares fit; `None` for fewer than two points or degenerate `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = neumaier(&x[..n]) / nf;
    let my = neumaier(&y[..n]) / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let slope_se = if n > 2 {
        libm::sqrt(ss_res / (nf - 2.0) / sxx)
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        r2,
        slope_se,
    })
}

/// Arithmetic mean (compensated).
pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    neumaier(x) / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    neumaier(&d) / x.len() as f64
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (mx, my) = (mean(&x[..n]), mean(&y[..n]));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (x[i] - mx, y[i] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / libm::sqrt(sxx * syy)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Asymptotic Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{j−1} e^{−2j²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = sign * libm::exp(-2.0 * jf * jf * lambda * lambda);
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of a one-sample KS statistic `d` over `n` samples, with Stephens'
/// small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = libm::sqrt(n as f64);
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS statistic of continuous data against `cdf`.
pub fn ks_statistic_continuous(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// One-sample KS statistic of integer-valued data against a discrete `cdf`
/// (`cdf(k) = P(X ≤ k)`), compared at every support point from the smallest
/// to the largest observed value.
pub fn ks_statistic_discrete(samples: &[u64], cdf: impl Fn(u64) -> f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut s = samples.to_vec();
    s.sort_unstable();
    let n = s.len() as f64;
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let mut d: f64 = 0.0;
    let mut idx = 0;
    // Just below the first support point the empirical CDF is zero.
    if lo > 0 {
        d = d.max(cdf(lo - 1));
    }
    for k in lo..=hi {
        while idx < s.len() && s[idx] <= k {
            idx += 1;
        }
        d = d.max((idx as f64 / n - cdf(k)).abs());
    }
    d
}

/// Jarque–Bera normality statistic and its χ²(2) p-value.
pub fn jarque_bera(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let skew = m3 / libm::pow(m2, 1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skew * skew + 0.25 * kurt * kurt);
    (jb, libm::exp(-0.5 * jb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r2 - 1.0).abs() < 1e-15);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn flat_data_is_perfect_zero_slope() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r2, 1.0);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ≈ 0.049, Q(1.63) ≈ 0.010 (standard critical values).
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn ks_uniform_grid_is_small() {
        let s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic_continuous(&s, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.0005 + 1e-12);
    }

    #[test]
    fn ks_discrete_point_mass() {
        let s = [5u64; 100];
        // The largest gap sits just below the atom: the empirical CDF is
        // still 0 at k = 4, where the geometric CDF is 1 − 0.8⁴.
        let d = ks_statistic_discrete(&s, |k| 1.0 - libm::pow(0.8, k as f64));
        assert!((d - (1.0 - libm::pow(0.8, 4.0))).abs() < 1e-12);
    }

    #[test]
    fn pearson_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[8.0, 6.0, 4.0, 2.0]) + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 4]), 0.0);
    }

    #[test]
    fn jarque_bera_flags_uniform() {
        let s: Vec<f64> = (0..5000).map(|i| i as f64 / 5000.0).collect();
        let (_, p) = jarque_bera(&s);
        assert!(p < 1e-6);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.96) - 0.975).abs() < 1e-4);
    }
}
