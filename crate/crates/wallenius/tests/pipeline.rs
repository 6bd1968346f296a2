//! End-to-end inference checks: signal recovery, multi-tolerance behaviour,
//! and the journal-survey protocol on synthetic data.

use wallenius::abc::{
    abc_rejection, abc_rejection_multi, calibrate_tolerance, posterior_summaries, simulate_dataset,
    PriorConfig, DOMAIN_DATA, DOMAIN_PILOT,
};
use wallenius::ingest::{
    dataset_from_frequency_csv, dataset_to_frequency_csv, journals_category_map,
};
use wallenius::rng::StreamRng;

#[test]
fn two_category_signal_is_recovered_across_replications() {
    // strong true signal: weights (0.8, 0.2) on a 20-ball urn, 50 draws of 10
    let multiplicities = [10u64, 10];
    let true_weights = [0.8, 0.2];
    let n_list = vec![10u64; 50];
    let prior = PriorConfig::uniform();
    let replications = 20;
    let mut correct = 0;
    for rep in 0..replications {
        let root = StreamRng::new(4000 + rep);
        let mut data_rng = root.child(DOMAIN_DATA);
        let data =
            simulate_dataset(&multiplicities, &true_weights, &n_list, &mut data_rng).unwrap();
        let calibration =
            calibrate_tolerance(&data, &prior, 2000, 0.05, &root.child(DOMAIN_PILOT)).unwrap();
        let epsilon = calibration.effective_epsilon().unwrap();
        let sample = abc_rejection(&data, &prior, epsilon, 200, 400_000, 4000 + rep).unwrap();
        let report = posterior_summaries(&sample).unwrap();
        if report.means[0] > report.means[1] {
            correct += 1;
        }
    }
    assert!(
        correct >= 19,
        "sign recovered in only {correct}/{replications} replications"
    );
}

#[test]
fn multi_tolerance_fit_shares_proposals_and_tightens() {
    let root = StreamRng::new(99);
    let mut data_rng = root.child(DOMAIN_DATA);
    let data = simulate_dataset(&[5, 5, 5], &[0.5, 0.3, 0.2], &vec![7; 40], &mut data_rng).unwrap();
    let prior = PriorConfig::uniform();
    let epsilons = [0.05, 0.1, 0.2];
    let samples = abc_rejection_multi(&data, &prior, &epsilons, 150, 1_000_000, 99).unwrap();

    // nesting: a tighter tolerance accepts a subset of proposal indices over
    // the span both runs examined
    for window in samples.windows(2) {
        let tight = &window[0];
        let loose = &window[1];
        let span = tight.attempts.min(loose.attempts);
        let loose_indices: std::collections::HashSet<u64> = loose
            .draws
            .iter()
            .map(|d| d.proposal_index)
            .filter(|&i| i < span)
            .collect();
        for draw in tight.draws.iter().filter(|d| d.proposal_index < span) {
            assert!(
                loose_indices.contains(&draw.proposal_index),
                "index {} accepted at eps={} but not at eps={}",
                draw.proposal_index,
                tight.epsilon,
                loose.epsilon
            );
        }
    }

    // concentration: mean accepted distance is monotone in the tolerance
    let mean_distance: Vec<f64> = samples
        .iter()
        .map(|s| s.draws.iter().map(|d| d.distance).sum::<f64>() / s.draws.len() as f64)
        .collect();
    assert!(mean_distance[0] <= mean_distance[1]);
    assert!(mean_distance[1] <= mean_distance[2]);

    // posterior spread shrinks (or at worst stays put) as epsilon shrinks
    let sd_norm: Vec<f64> = samples
        .iter()
        .map(|s| {
            let r = posterior_summaries(s).unwrap();
            r.sds.iter().sum::<f64>()
        })
        .collect();
    assert!(sd_norm[0] <= sd_norm[2] + 0.02, "sds {sd_norm:?}");
}

#[test]
fn journals_protocol_round_trip_on_synthetic_survey() {
    // the bundled map fixes the urn: 124 journals over 5 areas
    let map = journals_category_map();
    assert_eq!(map.multiplicities(), vec![45, 23, 34, 9, 13]);

    // a synthetic survey of 174 respondents listing 10..=20 journals each
    let true_weights = [0.35, 0.08, 0.22, 0.20, 0.15];
    let n_list: Vec<u64> = (0..174).map(|i| 10 + (i % 11) as u64).collect();
    let root = StreamRng::new(2016);
    let mut data_rng = root.child(DOMAIN_DATA);
    let data =
        simulate_dataset(&map.multiplicities(), &true_weights, &n_list, &mut data_rng).unwrap();
    assert_eq!(data.len(), 174);

    // frequency CSV round trip preserves the dataset exactly
    let text = dataset_to_frequency_csv(&data);
    let reloaded = dataset_from_frequency_csv(&text).unwrap();
    assert_eq!(data.multiplicities(), reloaded.multiplicities());
    assert_eq!(data.observations(), reloaded.observations());

    let prior = PriorConfig::uniform();
    let calibration =
        calibrate_tolerance(&data, &prior, 10_000, 0.05, &root.child(DOMAIN_PILOT)).unwrap();
    let epsilon = calibration.effective_epsilon().unwrap();
    // survey-scale tolerances land in the same regime as real fits of this
    // protocol (roughly 0.05 .. 0.2 at the 5% pilot quantile)
    assert!(
        (0.01..0.35).contains(&epsilon),
        "calibrated epsilon {epsilon} outside the expected regime"
    );

    let sample = abc_rejection(&data, &prior, epsilon, 500, 2_000_000, 2016).unwrap();
    let report = posterior_summaries(&sample).unwrap();
    for (i, (&mean, &truth)) in report.means.iter().zip(&true_weights).enumerate() {
        assert!(
            (mean - truth).abs() < 0.1,
            "component {i}: posterior mean {mean} vs truth {truth}"
        );
    }
    // exceedance matrix is unit-complement off the diagonal
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                let p = report.exceedance[i][j] + report.exceedance[j][i];
                assert!((p - 1.0).abs() < 1e-12);
            }
        }
    }
}
