//! ABC rejection inference for the urn weight vector.
//!
//! The weight vector is only identified up to scale, so the prior lives on
//! the unit simplex: a symmetric Dirichlet. Proposals are drawn from the
//! prior, pseudo-data simulated from the urn, and a proposal is accepted when
//! the distance in variation between the summarised pseudo-data and the
//! summarised observations falls strictly below the tolerance.
//!
//! Every proposal is an independent work item: proposal `i` regenerates its
//! random stream from `(seed, i)`, and accepted draws are merged in index
//! order. Results are therefore identical for any degree of parallelism, and
//! any accepted draw can be re-verified later from its recorded index.

use rayon::prelude::*;
use thiserror::Error;

use crate::dist::sample_dirichlet;
use crate::rng::StreamRng;
use crate::urn::{sample_draw, FrequencyVector, UrnError, UrnSpec};

/// Stream label for pilot-run simulations.
pub const DOMAIN_PILOT: u64 = 1;
/// Stream label for rejection-loop proposals.
pub const DOMAIN_PROPOSAL: u64 = 2;
/// Stream label for observed-data simulation.
pub const DOMAIN_DATA: u64 = 3;

/// Proposals are generated in fixed-size blocks; the block size must not
/// depend on the worker count or results would vary with it.
const PROPOSAL_BLOCK: u64 = 4096;

#[derive(Debug, Error)]
pub enum AbcError {
    #[error("inference needs at least 2 categories, got {c}")]
    TooFewCategories { c: usize },
    #[error("Dirichlet hyperparameter must be positive, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("dataset has no observations")]
    EmptyDataset,
    #[error("observation {respondent} has draw size 0")]
    ZeroDrawSize { respondent: usize },
    #[error("observation {respondent} has {actual} categories, expected {expected}")]
    ObservationDimension {
        respondent: usize,
        expected: usize,
        actual: usize,
    },
    #[error("observation {respondent} exceeds the urn in category {category}")]
    InfeasibleObservation { respondent: usize, category: usize },
    #[error("observation {respondent} draws {n} balls but the urn holds {total}")]
    DrawExceedsUrn {
        respondent: usize,
        n: u64,
        total: u64,
    },
    #[error("category name {name:?} contains a comma")]
    CategoryNameComma { name: String },
    #[error("expected {expected} category names, got {actual}")]
    CategoryCount { expected: usize, actual: usize },
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("input is not a probability vector: sums to {sum}")]
    NotASimplex { sum: f64 },
    #[error("negative component {value} at index {index}")]
    NegativeComponent { index: usize, value: f64 },
    #[error("pilot size must be at least 100, got {pilot_size}")]
    PilotTooSmall { pilot_size: usize },
    #[error("quantile must lie in (0, 1], got {quantile}")]
    InvalidQuantile { quantile: f64 },
    #[error("tolerance must be positive, got {epsilon}")]
    InvalidEpsilon { epsilon: f64 },
    #[error("must request at least one accepted draw")]
    ZeroAcceptanceTarget,
    #[error("posterior summaries need at least 2 draws, got {t}")]
    TooFewDraws { t: usize },
    #[error("malformed posterior csv at line {line}")]
    MalformedPosteriorCsv { line: usize },
    #[error(
        "attempt budget {attempts} exhausted before reaching the acceptance target \
         (tolerance too small); partial results attached"
    )]
    AttemptsExhausted {
        attempts: u64,
        partial: Vec<PosteriorSample>,
    },
    #[error(transparent)]
    Urn(#[from] UrnError),
}

/// `k` independent observed draws from a shared urn, possibly of unequal
/// size. Feasibility of every observation against the multiplicities is
/// checked on construction, so downstream code can rely on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<FrequencyVector>,
    multiplicities: Vec<u64>,
    categories: Vec<String>,
}

impl Dataset {
    pub fn new(
        observations: Vec<FrequencyVector>,
        multiplicities: Vec<u64>,
    ) -> Result<Self, AbcError> {
        let categories = (1..=multiplicities.len())
            .map(|i| format!("cat_{i}"))
            .collect();
        Self::with_categories(observations, multiplicities, categories)
    }

    pub fn with_categories(
        observations: Vec<FrequencyVector>,
        multiplicities: Vec<u64>,
        categories: Vec<String>,
    ) -> Result<Self, AbcError> {
        if observations.is_empty() {
            return Err(AbcError::EmptyDataset);
        }
        let c = multiplicities.len();
        if categories.len() != c {
            return Err(AbcError::CategoryCount {
                expected: c,
                actual: categories.len(),
            });
        }
        for name in &categories {
            if name.contains(',') {
                return Err(AbcError::CategoryNameComma { name: name.clone() });
            }
        }
        let total: u64 = multiplicities.iter().sum();
        for (respondent, obs) in observations.iter().enumerate() {
            if obs.counts().len() != c {
                return Err(AbcError::ObservationDimension {
                    respondent,
                    expected: c,
                    actual: obs.counts().len(),
                });
            }
            if obs.draw_size() == 0 {
                return Err(AbcError::ZeroDrawSize { respondent });
            }
            if obs.draw_size() > total {
                return Err(AbcError::DrawExceedsUrn {
                    respondent,
                    n: obs.draw_size(),
                    total,
                });
            }
            for (category, (&xj, &mj)) in obs.counts().iter().zip(&multiplicities).enumerate() {
                if xj > mj {
                    return Err(AbcError::InfeasibleObservation {
                        respondent,
                        category,
                    });
                }
            }
        }
        Ok(Dataset {
            observations,
            multiplicities,
            categories,
        })
    }

    pub fn observations(&self) -> &[FrequencyVector] {
        &self.observations
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Number of respondents `k`.
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of categories `c`.
    pub fn num_categories(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn draw_sizes(&self) -> Vec<u64> {
        self.observations.iter().map(|o| o.draw_size()).collect()
    }
}

/// Symmetric Dirichlet prior on the normalised weight vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    alpha: f64,
}

impl PriorConfig {
    pub fn new(alpha: f64) -> Result<Self, AbcError> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(AbcError::InvalidAlpha { alpha });
        }
        Ok(PriorConfig { alpha })
    }

    /// The flat prior on the simplex (all hyperparameters 1).
    pub fn uniform() -> Self {
        PriorConfig { alpha: 1.0 }
    }

    /// The 1/c reference choice, useful when the category count is large.
    pub fn one_over_c(c: usize) -> Result<Self, AbcError> {
        if c < 2 {
            return Err(AbcError::TooFewCategories { c });
        }
        Ok(PriorConfig {
            alpha: 1.0 / c as f64,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self::uniform()
    }
}

/// One accepted proposal, tagged with enough information to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedDraw {
    pub weights: Vec<f64>,
    pub proposal_index: u64,
    pub distance: f64,
}

/// The output of the rejection sampler: accepted weight vectors plus the
/// exact attempt count up to and including the last acceptance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub draws: Vec<AcceptedDraw>,
    pub attempts: u64,
    pub epsilon: f64,
    pub seed: u64,
}

impl PosteriorSample {
    pub fn acceptance_rate(&self) -> f64 {
        self.draws.len() as f64 / self.attempts as f64
    }

    /// CSV with one row per accepted draw, columns `omega_1..omega_c`.
    pub fn to_csv_string(&self) -> String {
        let c = self.draws.first().map_or(0, |d| d.weights.len());
        let mut out = String::new();
        let header: Vec<String> = (1..=c).map(|i| format!("omega_{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for draw in &self.draws {
            let row: Vec<String> = draw.weights.iter().map(|w| w.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Draws a weight vector from the symmetric Dirichlet prior on the open
/// c-simplex.
pub fn sample_prior(
    c: usize,
    prior: &PriorConfig,
    rng: &mut StreamRng,
) -> Result<Vec<f64>, AbcError> {
    if c < 2 {
        return Err(AbcError::TooFewCategories { c });
    }
    Ok(sample_dirichlet(prior.alpha, c, rng))
}

/// Mean over respondents of the per-respondent relative category
/// frequencies. The result sits on the simplex.
pub fn summary_statistic(data: &Dataset) -> Vec<f64> {
    let c = data.num_categories();
    let mut acc = vec![0.0; c];
    for obs in &data.observations {
        let n = obs.draw_size() as f64;
        for (a, &xj) in acc.iter_mut().zip(obs.counts()) {
            *a += xj as f64 / n;
        }
    }
    let k = data.len() as f64;
    for a in &mut acc {
        *a /= k;
    }
    acc
}

fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Distance in variation between two discrete probability vectors: half the
/// L1 distance, in [0, 1]. Inputs must sit on the simplex within 1e-9.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, AbcError> {
    if p.len() != q.len() {
        return Err(AbcError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for v in [p, q] {
        let mut sum = 0.0;
        for (index, &value) in v.iter().enumerate() {
            if value < -1e-9 {
                return Err(AbcError::NegativeComponent { index, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(AbcError::NotASimplex { sum });
        }
    }
    Ok(half_l1(p, q))
}

/// Simulates `n_list.len()` independent draws from the urn `(m, omega)`,
/// matched respondent-by-respondent to the given draw sizes.
pub fn simulate_dataset(
    multiplicities: &[u64],
    omega: &[f64],
    n_list: &[u64],
    rng: &mut StreamRng,
) -> Result<Dataset, AbcError> {
    if n_list.is_empty() {
        return Err(AbcError::EmptyDataset);
    }
    let spec = UrnSpec::new(multiplicities.to_vec(), omega.to_vec())?;
    let mut observations = Vec::with_capacity(n_list.len());
    for &n in n_list {
        observations.push(sample_draw(&spec, n, rng)?);
    }
    Dataset::new(observations, multiplicities.to_vec())
}

/// Simulates pseudo-data for one proposal and returns its summary directly,
/// without materialising a `Dataset`.
fn simulate_summary(
    spec: &UrnSpec,
    n_list: &[u64],
    rng: &mut StreamRng,
) -> Result<Vec<f64>, UrnError> {
    let c = spec.colours();
    let mut acc = vec![0.0; c];
    for &n in n_list {
        let x = sample_draw(spec, n, rng)?;
        let nf = n as f64;
        for (a, &xj) in acc.iter_mut().zip(x.counts()) {
            *a += xj as f64 / nf;
        }
    }
    let k = n_list.len() as f64;
    for a in &mut acc {
        *a /= k;
    }
    Ok(acc)
}

/// One prior-predictive proposal: weights from the prior, pseudo-data from
/// the urn, distance of the summaries. Pure in `(stream, index)`.
fn propose(
    stream: &StreamRng,
    index: u64,
    c: usize,
    prior: &PriorConfig,
    multiplicities: &[u64],
    n_list: &[u64],
    observed: &[f64],
) -> Result<(Vec<f64>, f64), AbcError> {
    let mut rng = stream.child(index);
    let omega = sample_dirichlet(prior.alpha, c, &mut rng);
    let spec = UrnSpec::new(multiplicities.to_vec(), omega.clone())?;
    let summary = simulate_summary(&spec, n_list, &mut rng)?;
    Ok((omega, half_l1(&summary, observed)))
}

/// Re-generates proposal `index` of a run started from `seed`, returning the
/// proposed weights and their distance. Lets accepted draws be audited
/// against the tolerance long after the run.
pub fn replay_proposal(
    data: &Dataset,
    prior: &PriorConfig,
    seed: u64,
    index: u64,
) -> Result<(Vec<f64>, f64), AbcError> {
    let observed = summary_statistic(data);
    let stream = StreamRng::new(seed).child(DOMAIN_PROPOSAL);
    propose(
        &stream,
        index,
        data.num_categories(),
        prior,
        data.multiplicities(),
        &data.draw_sizes(),
        &observed,
    )
}

/// Result of a pilot tolerance calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceCalibration {
    pub epsilon: f64,
    pub pilot_size: usize,
    pub quantile: f64,
    /// Set when every pilot distance came out identical; the quantile is
    /// then meaningless and the caller should inspect the data.
    pub degenerate: bool,
    /// Smallest strictly positive pilot distance, if any. With very coarse
    /// data the low quantile can be exactly zero, which no strict acceptance
    /// predicate can satisfy; this is the natural substitute.
    pub min_positive: Option<f64>,
}

impl ToleranceCalibration {
    /// The tolerance a rejection run should use: the calibrated quantile,
    /// or the smallest positive pilot distance when the quantile collapsed
    /// to zero. `None` when every pilot distance was zero.
    pub fn effective_epsilon(&self) -> Option<f64> {
        if self.epsilon > 0.0 {
            Some(self.epsilon)
        } else {
            self.min_positive
        }
    }
}

/// Chooses a tolerance as an empirical quantile of prior-predictive
/// distances to the observed summary.
///
/// Draws `pilot_size` (weights, pseudo-data) pairs from prior x likelihood
/// and returns the order statistic with 1-based index
/// `ceil(quantile * pilot_size)`. Pilot item `i` uses `stream.child(i)`, so
/// the run parallelises without affecting the result.
pub fn calibrate_tolerance(
    data: &Dataset,
    prior: &PriorConfig,
    pilot_size: usize,
    quantile: f64,
    stream: &StreamRng,
) -> Result<ToleranceCalibration, AbcError> {
    if pilot_size < 100 {
        return Err(AbcError::PilotTooSmall { pilot_size });
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(AbcError::InvalidQuantile { quantile });
    }
    let c = data.num_categories();
    if c < 2 {
        return Err(AbcError::TooFewCategories { c });
    }
    let observed = summary_statistic(data);
    let n_list = data.draw_sizes();
    let mut distances: Vec<f64> = (0..pilot_size as u64)
        .into_par_iter()
        .map(|i| {
            propose(
                stream,
                i,
                c,
                prior,
                data.multiplicities(),
                &n_list,
                &observed,
            )
            .map(|(_, d)| d)
        })
        .collect::<Result<_, _>>()?;
    distances.sort_by(f64::total_cmp);
    let index = ((quantile * pilot_size as f64).ceil() as usize).clamp(1, pilot_size);
    let epsilon = distances[index - 1];
    let degenerate = distances[0] == distances[pilot_size - 1];
    let min_positive = distances.iter().find(|&&d| d > 0.0).copied();
    Ok(ToleranceCalibration {
        epsilon,
        pilot_size,
        quantile,
        degenerate,
        min_positive,
    })
}

/// Rejection sampler: accepts the first `t` proposals (in index order) whose
/// summary lands strictly within `epsilon` of the observed summary.
///
/// Deterministic given `seed`; the attempt count is exact, equal to the
/// index of the t-th acceptance plus one. Errors with partial results if
/// `max_attempts` proposals are exhausted first.
pub fn abc_rejection(
    data: &Dataset,
    prior: &PriorConfig,
    epsilon: f64,
    t: usize,
    max_attempts: u64,
    seed: u64,
) -> Result<PosteriorSample, AbcError> {
    let mut samples = abc_rejection_multi(data, prior, &[epsilon], t, max_attempts, seed)?;
    Ok(samples.pop().expect("one sample per tolerance"))
}

/// Runs the rejection sampler for several tolerances over one shared
/// proposal stream.
///
/// Proposal `i` is identical for every tolerance, so the accepted sets nest:
/// everything accepted at a smaller tolerance is accepted at a larger one.
pub fn abc_rejection_multi(
    data: &Dataset,
    prior: &PriorConfig,
    epsilons: &[f64],
    t: usize,
    max_attempts: u64,
    seed: u64,
) -> Result<Vec<PosteriorSample>, AbcError> {
    if t == 0 {
        return Err(AbcError::ZeroAcceptanceTarget);
    }
    for &epsilon in epsilons {
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(AbcError::InvalidEpsilon { epsilon });
        }
    }
    let c = data.num_categories();
    if c < 2 {
        return Err(AbcError::TooFewCategories { c });
    }
    let observed = summary_statistic(data);
    let n_list = data.draw_sizes();
    let stream = StreamRng::new(seed).child(DOMAIN_PROPOSAL);
    let eps_max = epsilons.iter().cloned().fold(0.0, f64::max);

    let mut accepted: Vec<Vec<AcceptedDraw>> = vec![Vec::new(); epsilons.len()];
    let mut attempts: Vec<Option<u64>> = vec![None; epsilons.len()];
    let mut cursor = 0u64;
    while cursor < max_attempts && attempts.iter().any(Option::is_none) {
        let block_end = (cursor + PROPOSAL_BLOCK).min(max_attempts);
        let candidates: Vec<(u64, Vec<f64>, f64)> = (cursor..block_end)
            .into_par_iter()
            .map(|i| {
                propose(
                    &stream,
                    i,
                    c,
                    prior,
                    data.multiplicities(),
                    &n_list,
                    &observed,
                )
                .map(|(omega, d)| (i, omega, d))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|&(_, _, d)| d < eps_max)
            .collect();
        for (index, omega, distance) in candidates {
            for (slot, &epsilon) in epsilons.iter().enumerate() {
                if attempts[slot].is_none() && distance < epsilon {
                    accepted[slot].push(AcceptedDraw {
                        weights: omega.clone(),
                        proposal_index: index,
                        distance,
                    });
                    if accepted[slot].len() == t {
                        attempts[slot] = Some(index + 1);
                    }
                }
            }
        }
        cursor = block_end;
    }

    if attempts.iter().any(Option::is_none) {
        let partial = epsilons
            .iter()
            .zip(accepted)
            .zip(&attempts)
            .map(|((&epsilon, draws), reached)| PosteriorSample {
                draws,
                attempts: reached.unwrap_or(max_attempts),
                epsilon,
                seed,
            })
            .collect();
        return Err(AbcError::AttemptsExhausted {
            attempts: max_attempts,
            partial,
        });
    }

    Ok(epsilons
        .iter()
        .zip(accepted)
        .zip(attempts)
        .map(|((&epsilon, draws), reached)| PosteriorSample {
            draws,
            attempts: reached.expect("target reached"),
            epsilon,
            seed,
        })
        .collect())
}

/// Per-category posterior moments and the pairwise exceedance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub means: Vec<f64>,
    /// Standard deviations with the unbiased (T - 1) denominator.
    pub sds: Vec<f64>,
    /// `exceedance[i][j]` estimates the posterior probability that weight i
    /// exceeds weight j; diagonal entries are NaN. Rows and columns satisfy
    /// `p_ij + p_ji = 1` exactly (the measure-zero ties go to the
    /// lower-index side).
    pub exceedance: Vec<Vec<f64>>,
    pub accepted: usize,
    pub attempts: Option<u64>,
    pub epsilon: Option<f64>,
}

impl SummaryReport {
    pub fn acceptance_rate(&self) -> Option<f64> {
        self.attempts.map(|a| self.accepted as f64 / a as f64)
    }
}

/// Summarises a posterior sample: componentwise means, unbiased standard
/// deviations, and the exceedance matrix. Needs at least two draws.
pub fn posterior_summaries(sample: &PosteriorSample) -> Result<SummaryReport, AbcError> {
    let weights: Vec<&[f64]> = sample.draws.iter().map(|d| d.weights.as_slice()).collect();
    let mut report = summaries_from_weights(&weights)?;
    report.attempts = Some(sample.attempts);
    report.epsilon = Some(sample.epsilon);
    Ok(report)
}

/// Parses a posterior CSV back into its weight rows.
pub fn parse_posterior_csv(text: &str) -> Result<Vec<Vec<f64>>, AbcError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(AbcError::MalformedPosteriorCsv { line: 1 })?;
    let c = header.split(',').count();
    let mut draws = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| AbcError::MalformedPosteriorCsv { line: idx + 1 })
            })
            .collect::<Result<_, _>>()?;
        if row.len() != c {
            return Err(AbcError::LengthMismatch {
                left: c,
                right: row.len(),
            });
        }
        draws.push(row);
    }
    Ok(draws)
}

/// Summary computation for bare weight matrices (e.g. reloaded CSVs).
pub fn summaries_from_weights(draws: &[&[f64]]) -> Result<SummaryReport, AbcError> {
    let t = draws.len();
    if t < 2 {
        return Err(AbcError::TooFewDraws { t });
    }
    let c = draws[0].len();
    for d in draws {
        if d.len() != c {
            return Err(AbcError::LengthMismatch {
                left: c,
                right: d.len(),
            });
        }
    }
    let tf = t as f64;
    let mut means = vec![0.0; c];
    for d in draws {
        for (m, &w) in means.iter_mut().zip(*d) {
            *m += w;
        }
    }
    for m in &mut means {
        *m /= tf;
    }
    let mut sds = vec![0.0; c];
    for d in draws {
        for ((s, &w), &m) in sds.iter_mut().zip(*d).zip(&means) {
            *s += (w - m) * (w - m);
        }
    }
    for s in &mut sds {
        *s = (*s / (tf - 1.0)).sqrt();
    }
    let mut exceedance = vec![vec![f64::NAN; c]; c];
    for i in 0..c {
        for j in (i + 1)..c {
            let wins = draws.iter().filter(|d| d[i] >= d[j]).count();
            let p = wins as f64 / tf;
            exceedance[i][j] = p;
            exceedance[j][i] = 1.0 - p;
        }
    }
    Ok(SummaryReport {
        means,
        sds,
        exceedance,
        accepted: t,
        attempts: None,
        epsilon: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freq(counts: &[u64]) -> FrequencyVector {
        FrequencyVector::new(counts.to_vec())
    }

    fn small_dataset() -> Dataset {
        Dataset::new(vec![freq(&[1, 1]), freq(&[2, 0])], vec![2, 2]).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(
            Dataset::new(vec![], vec![2, 2]),
            Err(AbcError::EmptyDataset)
        ));
        assert!(matches!(
            Dataset::new(vec![freq(&[3, 0])], vec![2, 2]),
            Err(AbcError::InfeasibleObservation {
                respondent: 0,
                category: 0
            })
        ));
        assert!(matches!(
            Dataset::new(vec![freq(&[0, 0])], vec![2, 2]),
            Err(AbcError::ZeroDrawSize { respondent: 0 })
        ));
        assert!(matches!(
            Dataset::new(vec![freq(&[1, 1, 1])], vec![2, 2]),
            Err(AbcError::ObservationDimension { respondent: 0, .. })
        ));
    }

    #[test]
    fn prior_rejects_degenerate_dimension() {
        let mut rng = StreamRng::new(0);
        assert!(matches!(
            sample_prior(1, &PriorConfig::uniform(), &mut rng),
            Err(AbcError::TooFewCategories { c: 1 })
        ));
        assert!(matches!(
            PriorConfig::new(0.0),
            Err(AbcError::InvalidAlpha { .. })
        ));
    }

    #[test]
    fn prior_means_match_symmetric_dirichlet() {
        let mut rng = StreamRng::new(11);
        let prior = PriorConfig::uniform();
        let n = 100_000;
        let mut acc = [0.0f64; 3];
        for _ in 0..n {
            let w = sample_prior(3, &prior, &mut rng).unwrap();
            for (a, v) in acc.iter_mut().zip(&w) {
                *a += v;
            }
        }
        for a in acc {
            let mean = a / n as f64;
            assert!((mean - 1.0 / 3.0).abs() < 0.005, "mean {mean}");
        }
    }

    #[test]
    fn prior_two_categories_alpha_one_is_uniform() {
        let mut rng = StreamRng::new(12);
        let prior = PriorConfig::uniform();
        let n = 100_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let w = sample_prior(2, &prior, &mut rng).unwrap();
            sum += w[0];
            sumsq += w[0] * w[0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.002, "var {var}");
    }

    #[test]
    fn prior_variance_matches_dirichlet_formula() {
        // Dir(alpha, ..., alpha) component variance: (1/c)(1 - 1/c)/(c*alpha + 1)
        // c = 4, alpha = 1/4 gives (1/4)(3/4)/2 = 0.09375
        let mut rng = StreamRng::new(13);
        let prior = PriorConfig::one_over_c(4).unwrap();
        let n = 100_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let w = sample_prior(4, &prior, &mut rng).unwrap();
            sum += w[0];
            sumsq += w[0] * w[0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((var - 0.09375).abs() < 0.003, "var {var}");
    }

    #[test]
    fn summary_statistic_examples() {
        let one = Dataset::new(vec![freq(&[1, 1])], vec![2, 2]).unwrap();
        assert_eq!(summary_statistic(&one), vec![0.5, 0.5]);

        let two = small_dataset();
        let s = summary_statistic(&two);
        assert!((s[0] - 0.75).abs() < 1e-15);
        assert!((s[1] - 0.25).abs() < 1e-15);

        // idempotence: identical respondents reproduce their shared profile
        let same = Dataset::new(vec![freq(&[1, 3]); 7], vec![4, 4]).unwrap();
        let s = summary_statistic(&same);
        assert!((s[0] - 0.25).abs() < 1e-12);
        assert!((s[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn tv_distance_examples_and_errors() {
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let d = tv_distance(&[0.7, 0.3], &[0.5, 0.5]).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        assert!(matches!(
            tv_distance(&[0.5, 0.5], &[1.0]),
            Err(AbcError::LengthMismatch { .. })
        ));
        assert!(matches!(
            tv_distance(&[0.9, 0.3], &[0.5, 0.5]),
            Err(AbcError::NotASimplex { .. })
        ));
        assert!(matches!(
            tv_distance(&[-0.5, 1.5], &[0.5, 0.5]),
            Err(AbcError::NegativeComponent { index: 0, .. })
        ));
    }

    #[test]
    fn simulate_dataset_full_draw_recovers_multiplicities() {
        let mut rng = StreamRng::new(3);
        let data = simulate_dataset(&[3, 2], &[0.9, 0.1], &[5], &mut rng).unwrap();
        assert_eq!(data.observations()[0].counts(), &[3, 2]);
    }

    #[test]
    fn simulate_dataset_symmetric_mean() {
        let mut rng = StreamRng::new(4);
        let n_list = vec![3u64; 100_000];
        let data = simulate_dataset(&[3, 3], &[0.5, 0.5], &n_list, &mut rng).unwrap();
        let s = summary_statistic(&data);
        assert!((s[0] - 0.5).abs() < 0.005, "{s:?}");
    }

    #[test]
    fn calibration_quantile_extremes() {
        // enough respondents and balls that the distance distribution is
        // close to continuous
        let mut rng = StreamRng::new(8).child(DOMAIN_DATA);
        let data = simulate_dataset(&[10, 10], &[0.7, 0.3], &vec![10; 30], &mut rng).unwrap();
        let prior = PriorConfig::uniform();
        let stream = StreamRng::new(9).child(DOMAIN_PILOT);
        let full = calibrate_tolerance(&data, &prior, 500, 1.0, &stream).unwrap();
        let low = calibrate_tolerance(&data, &prior, 500, 0.05, &stream).unwrap();
        assert!(low.epsilon <= full.epsilon);
        assert!(!full.degenerate);

        // quantile 1.0 returns the max: nothing can exceed it
        let again = calibrate_tolerance(&data, &prior, 500, 1.0, &stream).unwrap();
        assert_eq!(full.epsilon, again.epsilon);

        // roughly 5% of pilot distances sit at or below the 0.05 quantile
        let stream2 = StreamRng::new(10).child(DOMAIN_PILOT);
        let cal = calibrate_tolerance(&data, &prior, 2000, 0.05, &stream2).unwrap();
        let observed = summary_statistic(&data);
        let mut at_or_below = 0;
        for i in 0..2000u64 {
            let (_, d) = propose(
                &stream2,
                i,
                2,
                &prior,
                data.multiplicities(),
                &data.draw_sizes(),
                &observed,
            )
            .unwrap();
            if d <= cal.epsilon {
                at_or_below += 1;
            }
        }
        let frac = at_or_below as f64 / 2000.0;
        assert!((0.04..=0.08).contains(&frac), "frac {frac}");
    }

    #[test]
    fn calibration_flags_degenerate_distances() {
        // an urn with one ball per category forces every draw of size 2 to
        // equal (1, 1): all distances are identically zero
        let data = Dataset::new(vec![freq(&[1, 1])], vec![1, 1]).unwrap();
        let prior = PriorConfig::uniform();
        let stream = StreamRng::new(5).child(DOMAIN_PILOT);
        let cal = calibrate_tolerance(&data, &prior, 200, 0.05, &stream).unwrap();
        assert!(cal.degenerate);
        assert_eq!(cal.epsilon, 0.0);
    }

    #[test]
    fn calibration_input_validation() {
        let data = small_dataset();
        let prior = PriorConfig::uniform();
        let stream = StreamRng::new(0);
        assert!(matches!(
            calibrate_tolerance(&data, &prior, 50, 0.05, &stream),
            Err(AbcError::PilotTooSmall { pilot_size: 50 })
        ));
        assert!(matches!(
            calibrate_tolerance(&data, &prior, 200, 0.0, &stream),
            Err(AbcError::InvalidQuantile { .. })
        ));
        assert!(matches!(
            calibrate_tolerance(&data, &prior, 200, 1.5, &stream),
            Err(AbcError::InvalidQuantile { .. })
        ));
    }

    #[test]
    fn rejection_with_loose_tolerance_accepts_everything() {
        let data = small_dataset();
        let prior = PriorConfig::uniform();
        let sample = abc_rejection(&data, &prior, 1.5, 500, 10_000, 21).unwrap();
        assert_eq!(sample.draws.len(), 500);
        assert_eq!(sample.attempts, 500);
        assert_eq!(sample.acceptance_rate(), 1.0);
        // posterior equals prior: component means near 1/2
        let report = posterior_summaries(&sample).unwrap();
        for m in &report.means {
            assert!((m - 0.5).abs() < 0.05, "mean {m}");
        }
    }

    #[test]
    fn rejection_is_deterministic_and_thread_count_invariant() {
        let data = small_dataset();
        let prior = PriorConfig::uniform();
        let run = || abc_rejection(&data, &prior, 0.3, 50, 100_000, 99).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a, b);

        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let c = pool1.install(run);
        let d = pool4.install(run);
        assert_eq!(c, d);
        assert_eq!(a, c);
    }

    #[test]
    fn rejection_attempt_budget_errors_with_partial_results() {
        let data = small_dataset();
        let prior = PriorConfig::uniform();
        // exact-match proposals do occur on this coarse dataset, but not in
        // every one of 2000 attempts, so the target of 2000 is unreachable
        let err = abc_rejection(&data, &prior, 1e-12, 2000, 2000, 1).unwrap_err();
        match err {
            AbcError::AttemptsExhausted { attempts, partial } => {
                assert_eq!(attempts, 2000);
                assert_eq!(partial.len(), 1);
                assert!(partial[0].draws.len() < 2000);
                assert_eq!(partial[0].attempts, 2000);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejection_accepted_draws_satisfy_the_predicate_on_replay() {
        let data = small_dataset();
        let prior = PriorConfig::uniform();
        let sample = abc_rejection(&data, &prior, 0.3, 25, 100_000, 42).unwrap();
        for draw in &sample.draws {
            let (omega, distance) =
                replay_proposal(&data, &prior, sample.seed, draw.proposal_index).unwrap();
            assert_eq!(omega, draw.weights);
            assert_eq!(distance, draw.distance);
            assert!(distance < sample.epsilon);
        }
    }

    #[test]
    fn rejection_accepted_sets_nest_across_tolerances() {
        let data = small_dataset();
        let prior = PriorConfig::uniform();
        let samples = abc_rejection_multi(&data, &prior, &[0.2, 0.5], 40, 100_000, 7).unwrap();
        let tight: Vec<u64> = samples[0].draws.iter().map(|d| d.proposal_index).collect();
        let loose_all: std::collections::HashSet<u64> = {
            // everything the loose tolerance would accept over the tight run's span
            let span = samples[0].attempts;
            (0..span)
                .filter(|&i| {
                    let (_, d) = replay_proposal(&data, &prior, 7, i).unwrap();
                    d < 0.5
                })
                .collect()
        };
        for index in tight {
            assert!(loose_all.contains(&index));
        }
        // shrinking the tolerance cannot increase the mean accepted distance
        let mean = |s: &PosteriorSample| {
            s.draws.iter().map(|d| d.distance).sum::<f64>() / s.draws.len() as f64
        };
        assert!(mean(&samples[0]) <= mean(&samples[1]));
    }

    #[test]
    fn summaries_hand_example() {
        let sample = PosteriorSample {
            draws: vec![
                AcceptedDraw {
                    weights: vec![0.6, 0.4],
                    proposal_index: 0,
                    distance: 0.0,
                },
                AcceptedDraw {
                    weights: vec![0.7, 0.3],
                    proposal_index: 1,
                    distance: 0.0,
                },
            ],
            attempts: 2,
            epsilon: 1.0,
            seed: 0,
        };
        let report = posterior_summaries(&sample).unwrap();
        assert!((report.means[0] - 0.65).abs() < 1e-15);
        assert!((report.means[1] - 0.35).abs() < 1e-15);
        // unbiased sd of {0.6, 0.7}
        assert!((report.sds[0] - (0.005f64).sqrt()).abs() < 1e-12);
        assert_eq!(report.exceedance[0][1], 1.0);
        assert_eq!(report.exceedance[1][0], 0.0);
        assert!(report.exceedance[0][0].is_nan());
    }

    #[test]
    fn summaries_require_two_draws() {
        let sample = PosteriorSample {
            draws: vec![AcceptedDraw {
                weights: vec![0.5, 0.5],
                proposal_index: 0,
                distance: 0.0,
            }],
            attempts: 1,
            epsilon: 1.0,
            seed: 0,
        };
        assert!(matches!(
            posterior_summaries(&sample),
            Err(AbcError::TooFewDraws { t: 1 })
        ));
    }

    #[test]
    fn prior_only_exceedance_is_symmetric_near_half() {
        let data = Dataset::new(vec![freq(&[1, 1, 1])], vec![2, 2, 2]).unwrap();
        let prior = PriorConfig::uniform();
        let sample = abc_rejection(&data, &prior, 1.5, 10_000, 20_000, 31).unwrap();
        let report = posterior_summaries(&sample).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let p = report.exceedance[i][j];
                assert!((p - 0.5).abs() < 0.02, "p[{i}][{j}] = {p}");
                let q = report.exceedance[j][i];
                assert!((p + q - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn posterior_csv_has_one_row_per_draw() {
        let data = small_dataset();
        let prior = PriorConfig::uniform();
        let sample = abc_rejection(&data, &prior, 1.5, 5, 100, 2).unwrap();
        let csv = sample.to_csv_string();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "omega_1,omega_2");
        assert_eq!(lines.len(), 6);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn simplex(c: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(1e-3f64..1.0, c).prop_map(|raw| {
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / sum).collect()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

            #[test]
            fn tv_is_a_metric_on_the_simplex(
                p in simplex(4),
                q in simplex(4),
                r in simplex(4),
            ) {
                let dpq = tv_distance(&p, &q).unwrap();
                let dqp = tv_distance(&q, &p).unwrap();
                prop_assert!((dpq - dqp).abs() < 1e-15);
                prop_assert!((0.0..=1.0).contains(&dpq));
                prop_assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
                let dpr = tv_distance(&p, &r).unwrap();
                let drq = tv_distance(&r, &q).unwrap();
                prop_assert!(dpq <= dpr + drq + 1e-12);
            }

            #[test]
            fn summary_is_invariant_under_respondent_permutation(
                counts in proptest::collection::vec(
                    proptest::collection::vec(0u64..4, 3),
                    1..8,
                ),
                swap in any::<prop::sample::Index>(),
            ) {
                let obs: Vec<FrequencyVector> = counts
                    .iter()
                    .map(|c| {
                        let mut c = c.clone();
                        if c.iter().all(|&v| v == 0) { c[0] = 1; }
                        FrequencyVector::new(c)
                    })
                    .collect();
                let data = Dataset::new(obs.clone(), vec![4, 4, 4]).unwrap();
                let mut shuffled = obs;
                let i = swap.index(shuffled.len());
                shuffled.swap(0, i);
                let data2 = Dataset::new(shuffled, vec![4, 4, 4]).unwrap();
                let a = summary_statistic(&data);
                let b = summary_statistic(&data2);
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
