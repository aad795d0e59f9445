//! Special functions needed for the initial states.

/// Laguerre polynomial `L_m(x)` via the three-term recurrence
/// `(j+1) L_{j+1} = (2j+1−x) L_j − j L_{j−1}`.
pub fn laguerre(m: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for j in 1..m {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 - x) * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln n!`.
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_base_cases() {
        assert_eq!(laguerre(0, 123.4), 1.0);
        assert_eq!(laguerre(1, -1.0), 2.0);
        assert!((laguerre(2, -1.0) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn laguerre_closed_forms() {
        // L_3(x) = (-x³ + 9x² - 18x + 6)/6
        for x in [-10.0, -1.0, 0.0, 0.5, 3.0] {
            let l3 = (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0;
            assert!((laguerre(3, x) - l3).abs() < 1e-12 * l3.abs().max(1.0));
        }
        // L_m(0) = 1 for every m.
        for m in 0..30 {
            assert!((laguerre(m, 0.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - libm::log(120.0)).abs() < 1e-13);
        assert!((ln_factorial(20) - libm::log(2432902008176640000.0)).abs() < 1e-12);
    }
}
