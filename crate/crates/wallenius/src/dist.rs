//! Gamma and Dirichlet sampling on top of [`StreamRng`].
//!
//! Hand-rolled rather than delegated so that the exact uniform-consumption
//! pattern is owned by this crate: reproducibility of every run depends on
//! it and must not drift with an external crate's internals.

use crate::rng::StreamRng;

/// Standard normal via Marsaglia's polar method. No spare is cached; the
/// second coordinate is discarded to keep the draw a pure function of the
/// stream position.
pub(crate) fn sample_std_normal(rng: &mut StreamRng) -> f64 {
    loop {
        let u = 2.0 * rng.next_f64() - 1.0;
        let v = 2.0 * rng.next_f64() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Gamma(shape, 1) via Marsaglia-Tsang, with the standard boost for
/// shape < 1.
pub(crate) fn sample_gamma(shape: f64, rng: &mut StreamRng) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let g = sample_gamma(shape + 1.0, rng);
        let u = rng.next_f64();
        // u^(1/shape), in log space to survive tiny shapes
        return g * (u.ln() / shape).exp();
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = sample_std_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.next_f64();
        if u < 1.0 - 0.0331 * x * x * x * x {
            return d * v;
        }
        if u > 0.0 && u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// A draw from the symmetric Dirichlet(alpha, ..., alpha) on the open
/// c-simplex: strictly positive components summing to one.
pub(crate) fn sample_dirichlet(alpha: f64, c: usize, rng: &mut StreamRng) -> Vec<f64> {
    debug_assert!(alpha > 0.0 && c >= 2);
    loop {
        let gammas: Vec<f64> = (0..c).map(|_| sample_gamma(alpha, rng)).collect();
        let sum: f64 = gammas.iter().sum();
        // reject underflowed draws so every component stays positive
        if sum.is_finite() && sum > 0.0 && gammas.iter().all(|&g| g > 0.0) {
            return gammas.into_iter().map(|g| g / sum).collect();
        }
    }
}
