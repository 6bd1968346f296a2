//! Small numerical helpers shared across modules.

/// Natural log of the binomial coefficient C(n, k), via log-gamma.
///
/// Returns `f64::NEG_INFINITY` when `k > n`, matching the convention that the
/// coefficient (and hence any pmf term containing it) is zero. Log-gamma keeps
/// the computation stable for populations in the thousands.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// ln(1 - e^u) for u <= 0, numerically stable at both ends.
///
/// Uses `ln(-expm1(u))` near zero and `log1p(-exp(u))` for very negative `u`.
pub fn ln_one_minus_exp(u: f64) -> f64 {
    debug_assert!(u <= 0.0, "ln_one_minus_exp requires u <= 0, got {u}");
    if u > -std::f64::consts::LN_2 {
        (-u.exp_m1()).ln()
    } else {
        (-u.exp()).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(ln_binomial(0, 0), 0.0);
        assert_eq!(ln_binomial(5, 0), 0.0);
        assert_eq!(ln_binomial(5, 5), 0.0);
        assert!((ln_binomial(5, 2) - 10f64.ln()).abs() < 1e-12);
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(ln_binomial(3, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn binomial_matches_pascal_rule() {
        for n in 1..60u64 {
            for k in 1..n {
                let lhs = ln_binomial(n, k).exp();
                let rhs = ln_binomial(n - 1, k - 1).exp() + ln_binomial(n - 1, k).exp();
                assert!((lhs - rhs).abs() / rhs < 1e-10, "C({n},{k})");
            }
        }
    }

    #[test]
    fn binomial_large_does_not_overflow() {
        let v = ln_binomial(10_000, 5_000);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn ln_one_minus_exp_accuracy() {
        // reference via exact arithmetic at comfortable magnitudes
        for &u in &[-1e-12, -1e-6, -0.1, -0.5, -1.0, -5.0, -50.0, -700.0] {
            let got = ln_one_minus_exp(u);
            let want = (1.0 - u.exp()).ln();
            if u < -1e-3 {
                assert!((got - want).abs() < 1e-12, "u={u}: {got} vs {want}");
            } else {
                // near zero the naive form loses precision; check against the series
                // 1 - e^u = -u * (1 + u/2 + u^2/6 + ...)
                let want_series = (-u).ln() + (u / 2.0 + u * u / 6.0).ln_1p();
                assert!(
                    (got - want_series).abs() < 1e-10,
                    "u={u}: {got} vs {want_series}"
                );
            }
        }
        assert_eq!(ln_one_minus_exp(0.0), f64::NEG_INFINITY);
    }
}
