//! The Wallenius biased urn: validated parameters, sequential sampling, pmf
//! evaluation by quadrature, and two independent cross-checks (the closed-form
//! multivariate hypergeometric for uniform weights, and exhaustive chain-rule
//! enumeration for small urns).
//!
//! The urn holds `m[i]` balls of colour `i`, each colour carrying a strictly
//! positive priority weight `omega[i]`. Balls are drawn one at a time without
//! replacement; the chance that the next ball has colour `i` is proportional
//! to `(m[i] - drawn[i]) * omega[i]`. The probability of ending an n-ball draw
//! with colour frequencies `x` is
//!
//! ```text
//! P(x) = prod_j C(m_j, x_j) * Int_0^1 prod_j (1 - t^(omega_j / d))^(x_j) dt,
//! d = sum_j omega_j * (m_j - x_j).
//! ```
//!
//! Only the direction of `omega` matters: scaling all weights by a common
//! factor leaves every probability unchanged.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::math::{ln_binomial, ln_one_minus_exp};
use crate::quad::integrate_unit;
use crate::rng::StreamRng;

/// Largest support/state count the enumeration tools will attempt. They are
/// test-scale oracles, not production paths.
pub const ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum UrnError {
    #[error("urn has no categories")]
    NoCategories,
    #[error("dimension mismatch: {left} categories vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-positive weight at index {index}: {value}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("urn is empty: all multiplicities are zero")]
    EmptyUrn,
    #[error("draw size {n} exceeds urn total {total}")]
    DrawTooLarge { n: u64, total: u64 },
    #[error("urn exhausted: every colour is fully drawn")]
    UrnExhausted,
    #[error("drawn count exceeds multiplicity at index {index}")]
    DrawnExceedsMultiplicity { index: usize },
    #[error("frequency vector sums to {actual}, expected {expected}")]
    CountMismatch { expected: u64, actual: u64 },
    #[error("support size bound {bound} exceeds cap {cap}")]
    SupportTooLarge { bound: u128, cap: u128 },
}

/// A validated biased urn: multiplicities `m` and priority weights `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnSpec {
    multiplicities: Vec<u64>,
    weights: Vec<f64>,
    total: u64,
}

impl UrnSpec {
    /// Validates and constructs an urn. The number of colours is implied by
    /// the vector lengths, which must agree; every weight must be a strictly
    /// positive finite number and at least one ball must be present.
    pub fn new(multiplicities: Vec<u64>, weights: Vec<f64>) -> Result<Self, UrnError> {
        if multiplicities.is_empty() && weights.is_empty() {
            return Err(UrnError::NoCategories);
        }
        if multiplicities.len() != weights.len() {
            return Err(UrnError::DimensionMismatch {
                left: multiplicities.len(),
                right: weights.len(),
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            // NaN fails the finiteness check
            if value <= 0.0 || !value.is_finite() {
                return Err(UrnError::NonPositiveWeight { index, value });
            }
        }
        let total = multiplicities.iter().sum();
        if total == 0 {
            return Err(UrnError::EmptyUrn);
        }
        Ok(UrnSpec {
            multiplicities,
            weights,
            total,
        })
    }

    /// Number of colours.
    pub fn colours(&self) -> usize {
        self.multiplicities.len()
    }

    /// Total number of balls in the urn.
    pub fn total_balls(&self) -> u64 {
        self.total
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Observed colour frequencies of one draw of `n` balls.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrequencyVector {
    counts: Vec<u64>,
    n: u64,
}

impl FrequencyVector {
    /// Builds a frequency vector; the draw size is the sum of the counts.
    pub fn new(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        FrequencyVector { counts, n }
    }

    /// Builds from independently stored counts and draw size, verifying that
    /// they agree (used when reading external data).
    pub fn from_parts(counts: Vec<u64>, n: u64) -> Result<Self, UrnError> {
        let actual = counts.iter().sum();
        if actual != n {
            return Err(UrnError::CountMismatch {
                expected: n,
                actual,
            });
        }
        Ok(FrequencyVector { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn draw_size(&self) -> u64 {
        self.n
    }

    /// Per-colour relative frequencies `x_j / n`.
    pub fn relative(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&x| x as f64 / self.n as f64)
            .collect()
    }
}

/// Per-colour tally of balls already removed from the urn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrawState {
    drawn: Vec<u64>,
}

impl DrawState {
    pub fn empty(colours: usize) -> Self {
        DrawState {
            drawn: vec![0; colours],
        }
    }

    pub fn new(drawn: Vec<u64>) -> Self {
        DrawState { drawn }
    }

    pub fn drawn(&self) -> &[u64] {
        &self.drawn
    }
}

/// Probability that the next ball has each colour, given what has already
/// been drawn: `p_i = (m_i - drawn_i) * w_i / sum_j (m_j - drawn_j) * w_j`.
///
/// Exhausted colours get exactly zero. Errors if every colour is exhausted.
pub fn next_draw_probs(spec: &UrnSpec, state: &DrawState) -> Result<Vec<f64>, UrnError> {
    if state.drawn.len() != spec.colours() {
        return Err(UrnError::DimensionMismatch {
            left: spec.colours(),
            right: state.drawn.len(),
        });
    }
    let mut numerators = Vec::with_capacity(spec.colours());
    let mut denom = 0.0;
    for (index, ((&m, &w), &d)) in spec
        .multiplicities
        .iter()
        .zip(&spec.weights)
        .zip(&state.drawn)
        .enumerate()
    {
        if d > m {
            return Err(UrnError::DrawnExceedsMultiplicity { index });
        }
        let num = (m - d) as f64 * w;
        numerators.push(num);
        denom += num;
    }
    if denom == 0.0 {
        return Err(UrnError::UrnExhausted);
    }
    Ok(numerators.into_iter().map(|v| v / denom).collect())
}

/// Draws `n` balls sequentially without replacement.
///
/// Each ball consumes exactly one uniform from `rng`, mapped through the
/// cumulative next-draw probabilities; a uniform landing exactly on a
/// boundary resolves to the lower index.
pub fn sample_draw(
    spec: &UrnSpec,
    n: u64,
    rng: &mut StreamRng,
) -> Result<FrequencyVector, UrnError> {
    if n > spec.total {
        return Err(UrnError::DrawTooLarge {
            n,
            total: spec.total,
        });
    }
    let mut state = DrawState::empty(spec.colours());
    for _ in 0..n {
        let probs = next_draw_probs(spec, &state)?;
        let u = rng.next_f64();
        let mut cum = 0.0;
        let mut chosen = None;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                cum += p;
                if u <= cum {
                    chosen = Some(i);
                    break;
                }
                chosen = Some(i); // fallback: last colour with mass
            }
        }
        let i = chosen.expect("at least one colour has positive probability");
        state.drawn[i] += 1;
    }
    Ok(FrequencyVector::new(state.drawn))
}

/// Checks that `x` has the urn's dimension and a consistent total, returning
/// the shared error variants of the pmf evaluators.
fn check_frequency(spec: &UrnSpec, x: &FrequencyVector) -> Result<(), UrnError> {
    if x.counts.len() != spec.colours() {
        return Err(UrnError::DimensionMismatch {
            left: spec.colours(),
            right: x.counts.len(),
        });
    }
    let actual: u64 = x.counts.iter().sum();
    if actual != x.n {
        return Err(UrnError::CountMismatch {
            expected: x.n,
            actual,
        });
    }
    Ok(())
}

/// Probability of observing frequencies `x` after drawing `x.draw_size()`
/// balls, evaluated by adaptive quadrature of the defining integral.
///
/// Infeasible frequencies (some `x_j > m_j`) have probability exactly 0, and
/// the exhaustive draw (`n = N`, so `x = m`) probability exactly 1; both skip
/// the quadrature. Intended for moderate draw sizes; the ABC machinery never
/// evaluates it.
pub fn wallenius_pmf(spec: &UrnSpec, x: &FrequencyVector) -> Result<f64, UrnError> {
    check_frequency(spec, x)?;
    if x.counts
        .iter()
        .zip(&spec.multiplicities)
        .any(|(&xj, &mj)| xj > mj)
    {
        return Ok(0.0);
    }
    // d = sum_j w_j * (m_j - x_j); zero exactly when the urn is drawn dry
    let d: f64 = spec
        .weights
        .iter()
        .zip(&spec.multiplicities)
        .zip(&x.counts)
        .map(|((&w, &m), &xj)| w * (m - xj) as f64)
        .sum();
    if d == 0.0 {
        return Ok(1.0);
    }
    let ln_binom: f64 = spec
        .multiplicities
        .iter()
        .zip(&x.counts)
        .map(|(&m, &xj)| ln_binomial(m, xj))
        .sum();
    let exponents: Vec<(f64, f64)> = spec
        .weights
        .iter()
        .zip(&x.counts)
        .filter(|&(_, &xj)| xj > 0)
        .map(|(&w, &xj)| (w / d, xj as f64))
        .collect();
    if exponents.is_empty() {
        // n = 0: the integrand is identically 1
        return Ok(ln_binom.exp());
    }
    let integral = integrate_unit(|t| {
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let ln_t = t.ln();
        let ln_f: f64 = exponents
            .iter()
            .map(|&(rate, count)| count * ln_one_minus_exp(rate * ln_t))
            .sum();
        ln_f.exp()
    });
    if integral <= 0.0 {
        return Ok(0.0);
    }
    Ok((ln_binom + integral.ln()).exp())
}

/// Multivariate hypergeometric mass `prod_j C(m_j, x_j) / C(N, n)`, the
/// distribution the urn follows when all weights coincide. Weights are
/// ignored entirely; computed in log space.
pub fn hypergeom_pmf(spec: &UrnSpec, x: &FrequencyVector) -> Result<f64, UrnError> {
    check_frequency(spec, x)?;
    if x.counts
        .iter()
        .zip(&spec.multiplicities)
        .any(|(&xj, &mj)| xj > mj)
    {
        return Ok(0.0);
    }
    if x.n > spec.total {
        return Ok(0.0);
    }
    let ln_num: f64 = spec
        .multiplicities
        .iter()
        .zip(&x.counts)
        .map(|(&m, &xj)| ln_binomial(m, xj))
        .sum();
    Ok((ln_num - ln_binomial(spec.total, x.n)).exp())
}

/// All feasible frequency vectors for an n-ball draw, in ascending
/// lexicographic order. Errors if the support bound exceeds [`ENUMERATION_CAP`].
pub fn enumerate_support(spec: &UrnSpec, n: u64) -> Result<Vec<FrequencyVector>, UrnError> {
    if n > spec.total {
        return Err(UrnError::DrawTooLarge {
            n,
            total: spec.total,
        });
    }
    let bound: u128 = spec
        .multiplicities
        .iter()
        .map(|&m| m.min(n) as u128 + 1)
        .product();
    if bound > ENUMERATION_CAP {
        return Err(UrnError::SupportTooLarge {
            bound,
            cap: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    let mut scratch = vec![0u64; spec.colours()];
    fill_support(spec, n, 0, &mut scratch, &mut out);
    Ok(out)
}

fn fill_support(
    spec: &UrnSpec,
    remaining: u64,
    index: usize,
    scratch: &mut [u64],
    out: &mut Vec<FrequencyVector>,
) {
    if index == spec.colours() - 1 {
        if remaining <= spec.multiplicities[index] {
            scratch[index] = remaining;
            out.push(FrequencyVector::new(scratch.to_vec()));
        }
        return;
    }
    // suffix capacity prunes branches that cannot absorb the remainder
    let suffix: u64 = spec.multiplicities[index + 1..].iter().sum();
    let lo = remaining.saturating_sub(suffix);
    let hi = remaining.min(spec.multiplicities[index]);
    for v in lo..=hi {
        scratch[index] = v;
        fill_support(spec, remaining - v, index + 1, scratch, out);
    }
}

/// Exact distribution of an n-ball draw, computed by pushing probability mass
/// through the one-ball transition rule for n steps. This is the module's
/// independent check on the quadrature evaluator: it never touches the
/// integral form.
pub fn exact_pmf_by_enumeration(
    spec: &UrnSpec,
    n: u64,
) -> Result<BTreeMap<Vec<u64>, f64>, UrnError> {
    if n > spec.total {
        return Err(UrnError::DrawTooLarge {
            n,
            total: spec.total,
        });
    }
    // mixed-radix encoding of the drawn-count lattice
    let radix: Vec<u64> = spec.multiplicities.iter().map(|&m| m.min(n) + 1).collect();
    let bound: u128 = radix.iter().map(|&r| r as u128).product();
    if bound > ENUMERATION_CAP {
        return Err(UrnError::SupportTooLarge {
            bound,
            cap: ENUMERATION_CAP,
        });
    }
    let size = bound as usize;
    let mut strides = vec![1usize; radix.len()];
    for i in 1..radix.len() {
        strides[i] = strides[i - 1] * radix[i - 1] as usize;
    }
    let decode = |mut idx: usize| -> Vec<u64> {
        let mut drawn = vec![0u64; radix.len()];
        for (j, &r) in radix.iter().enumerate() {
            drawn[j] = (idx % r as usize) as u64;
            idx /= r as usize;
        }
        drawn
    };

    let mut mass = vec![0.0f64; size];
    mass[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0f64; size];
        for (idx, &p) in mass.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let drawn = decode(idx);
            let probs = next_draw_probs(spec, &DrawState::new(drawn))?;
            for (j, &pj) in probs.iter().enumerate() {
                if pj > 0.0 {
                    next[idx + strides[j]] += p * pj;
                }
            }
        }
        mass = next;
    }

    let mut out = BTreeMap::new();
    for (idx, &p) in mass.iter().enumerate() {
        if p > 0.0 {
            out.insert(decode(idx), p);
        }
    }
    Ok(out)
}
