//! Implementations of the five subcommands. Every command creates its output
//! directory, writes its files, and finishes with a manifest recording the
//! resolved parameters and input digests.

use std::fs;
use std::path::Path;

use wallenius::abc::{
    abc_rejection_multi, calibrate_tolerance, parse_posterior_csv, posterior_summaries,
    simulate_dataset, summaries_from_weights, Dataset, PriorConfig, DOMAIN_DATA, DOMAIN_PILOT,
};
use wallenius::bench::{run_scenario, ScenarioConfig, ScenarioKind};
use wallenius::ingest::{
    dataset_to_frequency_csv, parse_preference_lists_str, parse_ratings_str,
    preference_lists_to_frequencies, ratings_to_frequencies, CategoryMap, GENRE_PRIORITY_FIXTURE,
    JOURNALS_FIXTURE,
};
use wallenius::report::{
    format_grid_tables, format_summary_table, grid_csv_row, replication_detail_csv,
    summary_key_values, GRID_CSV_HEADER,
};
use wallenius::rng::StreamRng;

use crate::manifest::RunManifest;
use crate::{BenchArgs, CalibrateArgs, CliError, DataArgs, FitArgs, SimulateArgs, SummarizeArgs};

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("cannot parse {what} entry {v:?}")))
        })
        .collect()
}

fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)?;
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let multiplicities: Vec<u64> = parse_list(&args.m, "--m")?;
    let omega: Vec<f64> = parse_list(&args.omega, "--omega")?;
    let n_list: Vec<u64> = match (&args.n_list, args.k, args.n) {
        (Some(list), _, _) => parse_list(list, "--n-list")?,
        (None, Some(k), Some(n)) => vec![n; k],
        _ => {
            return Err(CliError::Usage(
                "simulate needs either --n-list or both --k and --n".into(),
            ))
        }
    };
    let mut rng = StreamRng::new(args.seed).child(DOMAIN_DATA);
    let dataset = simulate_dataset(&multiplicities, &omega, &n_list, &mut rng)?;

    ensure_out_dir(&args.out)?;
    let csv = dataset_to_frequency_csv(&dataset);
    fs::write(args.out.join("data.csv"), &csv)?;

    let mut manifest = RunManifest::new("simulate");
    manifest.set("m", &args.m);
    manifest.set("omega", &args.omega);
    match (&args.n_list, args.k, args.n) {
        (Some(list), _, _) => manifest.set("n_list", list),
        (None, Some(k), Some(n)) => {
            manifest.set("k", k);
            manifest.set("n", n);
        }
        _ => unreachable!("validated above"),
    }
    manifest.set("seed", args.seed);
    manifest.write(&args.out)?;
    println!(
        "wrote {} observations to {}",
        dataset.len(),
        args.out.join("data.csv").display()
    );
    Ok(())
}

/// Resolves `--map`/`--priority` values, which are either file paths or
/// `builtin:` names for the bundled fixtures.
fn resolve_text_source(
    value: &str,
    manifest_key: &str,
    manifest: &mut RunManifest,
) -> Result<String, CliError> {
    let text = match value {
        "builtin:journals" => JOURNALS_FIXTURE.to_string(),
        "builtin:genres" => GENRE_PRIORITY_FIXTURE.to_string(),
        path if path.starts_with("builtin:") => {
            return Err(CliError::Usage(format!(
                "unknown builtin {path:?}; available: builtin:journals, builtin:genres"
            )))
        }
        path => fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?,
    };
    manifest.set(manifest_key, value);
    manifest.set_digest(manifest_key, text.as_bytes());
    Ok(text)
}

/// Loads the dataset named by the data flags, recording inputs in the
/// manifest and returning human-readable ingestion notes.
fn load_dataset(
    args: &DataArgs,
    manifest: &mut RunManifest,
) -> Result<(Dataset, Vec<String>), CliError> {
    let sources = [
        args.data.is_some(),
        args.ratings.is_some(),
        args.prefs.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::Usage(
            "exactly one of --data, --ratings or --prefs is required".into(),
        ));
    }
    let mut notes = Vec::new();

    if let Some(path) = &args.data {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        manifest.set("data", path.display());
        manifest.set_digest("data", text.as_bytes());
        let dataset = wallenius::ingest::dataset_from_frequency_csv(&text)?;
        return Ok((dataset, notes));
    }

    let map_value = args
        .map
        .as_deref()
        .ok_or_else(|| CliError::Usage("--map is required with --ratings or --prefs".into()))?;
    let map_text = resolve_text_source(map_value, "map", manifest)?;
    let priority_text = match &args.priority {
        Some(value) => Some(resolve_text_source(value, "priority", manifest)?),
        None => None,
    };
    let map = CategoryMap::from_csv_str(&map_text, priority_text.as_deref())?;

    if let Some(path) = &args.ratings {
        let threshold = args
            .threshold
            .ok_or_else(|| CliError::Usage("--threshold is required with --ratings".into()))?;
        let scale = (args.scale_min, args.scale_max);
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        manifest.set("ratings", path.display());
        manifest.set_digest("ratings", text.as_bytes());
        manifest.set("threshold", threshold);
        manifest.set("scale_min", scale.0);
        manifest.set("scale_max", scale.1);
        let records = parse_ratings_str(&text, scale)?;
        let outcome = ratings_to_frequencies(&records, &map, threshold, scale)?;
        if outcome.dropped_users > 0 {
            notes.push(format!(
                "dropped {} user(s) with no rating at or above {threshold}",
                outcome.dropped_users
            ));
        }
        return Ok((outcome.dataset, notes));
    }

    let path = args.prefs.as_ref().expect("checked above");
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    manifest.set("prefs", path.display());
    manifest.set_digest("prefs", text.as_bytes());
    let lists = parse_preference_lists_str(&text)?;
    let outcome = preference_lists_to_frequencies(&lists, &map)?;
    if outcome.out_of_bounds_lists > 0 {
        notes.push(format!(
            "{} preference list(s) outside the expected length bounds",
            outcome.out_of_bounds_lists
        ));
    }
    Ok((outcome.dataset, notes))
}

pub fn fit(args: FitArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("fit");
    let (dataset, notes) = load_dataset(&args.data, &mut manifest)?;
    for note in &notes {
        eprintln!("note: {note}");
    }
    let prior = PriorConfig::new(args.alpha)?;
    let max_attempts = args.max_attempts.unwrap_or(1000 * args.accept as u64);

    // recorded even when --epsilon takes precedence, so a manifest rerun
    // regenerates an identical manifest
    if let Some(quantile) = args.calibrate_quantile {
        manifest.set("calibrate_quantile", quantile);
    }
    let epsilons: Vec<f64> = match (&args.epsilon, args.calibrate_quantile) {
        (Some(list), _) => parse_list(list, "--epsilon")?,
        (None, Some(quantile)) => {
            let stream = StreamRng::new(args.seed).child(DOMAIN_PILOT);
            let calibration =
                calibrate_tolerance(&dataset, &prior, args.pilot_size, quantile, &stream)?;
            if calibration.degenerate {
                eprintln!(
                    "warning: every pilot distance equals {}; the data carry no \
                     gradient for calibration",
                    calibration.epsilon
                );
            }
            let epsilon = calibration.effective_epsilon().ok_or_else(|| {
                CliError::Usage(
                    "calibration found only zero distances; supply --epsilon instead".into(),
                )
            })?;
            if epsilon > calibration.epsilon {
                eprintln!(
                    "note: quantile tolerance was 0; using the smallest positive \
                     pilot distance {epsilon}"
                );
            }
            vec![epsilon]
        }
        (None, None) => {
            return Err(CliError::Usage(
                "fit needs either --epsilon or --calibrate-quantile".into(),
            ))
        }
    };

    let samples = abc_rejection_multi(
        &dataset,
        &prior,
        &epsilons,
        args.accept,
        max_attempts,
        args.seed,
    )?;

    ensure_out_dir(&args.out)?;
    let mut summary_text = String::new();
    let mut summary_kv = String::new();
    for (i, sample) in samples.iter().enumerate() {
        let index = i + 1;
        fs::write(
            args.out.join(format!("posterior.{index}.csv")),
            sample.to_csv_string(),
        )?;
        let report = posterior_summaries(sample)?;
        summary_text.push_str(&format!("== tolerance {index} ==\n"));
        summary_text.push_str(&format_summary_table(&report, dataset.categories()));
        summary_text.push('\n');
        for line in summary_key_values(&report, dataset.categories()).lines() {
            summary_kv.push_str(&format!("fit{index}.{line}\n"));
        }
    }
    fs::write(args.out.join("summary.txt"), &summary_text)?;
    fs::write(args.out.join("summary.kv"), &summary_kv)?;

    let eps_strings: Vec<String> = epsilons.iter().map(f64::to_string).collect();
    manifest.set("epsilon", eps_strings.join(","));
    manifest.set("accept", args.accept);
    manifest.set("max_attempts", max_attempts);
    manifest.set("alpha", args.alpha);
    manifest.set("pilot_size", args.pilot_size);
    manifest.set("seed", args.seed);
    manifest.write(&args.out)?;

    print!("{summary_text}");
    Ok(())
}

pub fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("calibrate");
    let (dataset, notes) = load_dataset(&args.data, &mut manifest)?;
    for note in &notes {
        eprintln!("note: {note}");
    }
    let prior = PriorConfig::new(args.alpha)?;
    let stream = StreamRng::new(args.seed).child(DOMAIN_PILOT);
    let calibration =
        calibrate_tolerance(&dataset, &prior, args.pilot_size, args.quantile, &stream)?;

    ensure_out_dir(&args.out)?;
    let mut out = String::new();
    out.push_str(&format!("epsilon={}\n", calibration.epsilon));
    out.push_str(&format!("quantile={}\n", calibration.quantile));
    out.push_str(&format!("pilot_size={}\n", calibration.pilot_size));
    out.push_str(&format!("degenerate={}\n", calibration.degenerate));
    match calibration.effective_epsilon() {
        Some(e) => out.push_str(&format!("effective_epsilon={e}\n")),
        None => out.push_str("effective_epsilon=none\n"),
    }
    fs::write(args.out.join("calibration.txt"), &out)?;

    manifest.set("quantile", args.quantile);
    manifest.set("pilot_size", args.pilot_size);
    manifest.set("alpha", args.alpha);
    manifest.set("seed", args.seed);
    manifest.write(&args.out)?;

    print!("{out}");
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    let cs: Vec<usize> = parse_list(&args.c, "--c")?;
    let ks: Vec<usize> = parse_list(&args.k, "--k")?;
    let kinds: Vec<ScenarioKind> = args
        .configs
        .split(',')
        .map(|s| s.trim().parse().map_err(CliError::Usage))
        .collect::<Result<_, _>>()?;

    ensure_out_dir(&args.out)?;
    let mut results = Vec::new();
    let mut grid_csv = String::from(GRID_CSV_HEADER);
    grid_csv.push('\n');
    let master = StreamRng::new(args.seed);
    for (kind_idx, &kind) in kinds.iter().enumerate() {
        for &c in &cs {
            for &k in &ks {
                // the cell seed depends on the cell identity, not its
                // position in the requested grid, so subsets agree
                let cell_seed = master
                    .child(kind_idx as u64)
                    .child(c as u64)
                    .child(k as u64)
                    .stream_key();
                let config = ScenarioConfig {
                    c,
                    k,
                    kind,
                    replications: args.reps,
                    pilot_size: args.pilot_size,
                    pilot_quantile: args.quantile,
                    accept: args.accept,
                    max_attempts_factor: args.max_attempts_factor,
                    uniform_m: args.uniform_m,
                    alpha: args.alpha,
                    seed: cell_seed,
                };
                let result = run_scenario(&config)?;
                let detail_name = format!("detail_{}_c{}_k{}.csv", kind.as_str(), c, k);
                fs::write(args.out.join(&detail_name), replication_detail_csv(&result))?;
                grid_csv.push_str(&grid_csv_row(&result, &detail_name));
                grid_csv.push('\n');
                println!(
                    "cell {} c={} k={}: rmse={:.4} acc_rate={:.4}",
                    kind.as_str(),
                    c,
                    k,
                    result.rmse,
                    result.mean_acceptance_rate
                );
                results.push(result);
            }
        }
    }
    fs::write(args.out.join("grid.csv"), &grid_csv)?;
    let tables = format_grid_tables(&results);
    fs::write(args.out.join("tables.txt"), &tables)?;

    let mut manifest = RunManifest::new("bench");
    manifest.set("c", &args.c);
    manifest.set("k", &args.k);
    manifest.set("configs", &args.configs);
    manifest.set("reps", args.reps);
    manifest.set("accept", args.accept);
    manifest.set("pilot_size", args.pilot_size);
    manifest.set("quantile", args.quantile);
    manifest.set("uniform_m", args.uniform_m);
    manifest.set("alpha", args.alpha);
    manifest.set("max_attempts_factor", args.max_attempts_factor);
    manifest.set("seed", args.seed);
    manifest.write(&args.out)?;

    print!("{tables}");
    Ok(())
}

pub fn summarize(args: SummarizeArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.posterior)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.posterior.display())))?;
    let draws = parse_posterior_csv(&text)?;
    let rows: Vec<&[f64]> = draws.iter().map(Vec::as_slice).collect();
    let report = summaries_from_weights(&rows)?;
    let categories: Vec<String> = (1..=report.means.len())
        .map(|i| format!("omega_{i}"))
        .collect();

    ensure_out_dir(&args.out)?;
    let table = format_summary_table(&report, &categories);
    fs::write(args.out.join("summary.txt"), &table)?;
    fs::write(
        args.out.join("summary.kv"),
        summary_key_values(&report, &categories),
    )?;

    let mut manifest = RunManifest::new("summarize");
    manifest.set("posterior", args.posterior.display());
    manifest.set_digest("posterior", text.as_bytes());
    manifest.write(&args.out)?;

    print!("{table}");
    Ok(())
}
