//! Biased-urn preference modelling: the Wallenius distribution with ABC
//! rejection inference for category importance weights.
//!
//! The crate is organised around the workflow it supports:
//!
//! - [`urn`]: the urn model itself — validation, sequential sampling, pmf
//!   evaluation, and exhaustive enumeration oracles for cross-checking.
//! - [`abc`]: likelihood-free inference of the weight vector — Dirichlet
//!   prior on the simplex, summary statistics, distance in variation,
//!   pilot tolerance calibration, and the rejection sampler.
//! - [`ingest`]: converting ratings tables and preference lists plus a
//!   category map into frequency datasets.
//! - [`bench`]: a simulation-study harness reporting RMSE and acceptance
//!   rates over scenario grids.
//! - [`rng`]: the splittable counter-based random streams that make every
//!   run reproducible independent of thread count.

pub mod abc;
pub mod bench;
mod dist;
pub mod ingest;
pub mod math;
pub mod quad;
pub mod report;
pub mod rng;
pub mod urn;

pub use abc::{
    abc_rejection, abc_rejection_multi, calibrate_tolerance, parse_posterior_csv,
    posterior_summaries, replay_proposal, sample_prior, simulate_dataset, summaries_from_weights,
    summary_statistic, tv_distance, AbcError, AcceptedDraw, Dataset, PosteriorSample, PriorConfig,
    SummaryReport, ToleranceCalibration,
};
pub use bench::{
    run_scenario, scenario_urn, BenchError, ScenarioConfig, ScenarioKind, ScenarioResult,
};
pub use ingest::{
    load_category_map, preference_lists_to_frequencies, ratings_to_frequencies, CategoryMap,
    IngestError, RatingRecord,
};
pub use rng::StreamRng;
pub use urn::{
    enumerate_support, exact_pmf_by_enumeration, hypergeom_pmf, next_draw_probs, sample_draw,
    wallenius_pmf, DrawState, FrequencyVector, UrnError, UrnSpec,
};
