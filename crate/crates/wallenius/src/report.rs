//! Rendering of posterior summaries and grid results, in a human-readable
//! table form (3 decimal places) and a machine-readable key-value form
//! (full float precision).

use crate::abc::SummaryReport;
use crate::bench::ScenarioResult;

/// Human-readable posterior summary: means with standard deviations in
/// brackets, then the pairwise exceedance matrix.
pub fn format_summary_table(report: &SummaryReport, categories: &[String]) -> String {
    let c = report.means.len();
    let name_width = categories.iter().map(String::len).max().unwrap_or(8).max(8);
    let mut out = String::new();
    if let Some(epsilon) = report.epsilon {
        out.push_str(&format!("tolerance epsilon = {epsilon:.6}\n"));
    }
    if let (Some(attempts), Some(rate)) = (report.attempts, report.acceptance_rate()) {
        out.push_str(&format!(
            "accepted {} of {} proposals (acceptance rate {:.4})\n",
            report.accepted, attempts, rate
        ));
    }
    out.push_str(&format!(
        "{:<name_width$}  {:>8}  {:>8}\n",
        "category", "mean", "sd"
    ));
    for ((name, mean), sd) in categories.iter().zip(&report.means).zip(&report.sds) {
        out.push_str(&format!("{name:<name_width$}  {mean:>8.3}  ({sd:.3})\n"));
    }
    out.push_str("\npairwise exceedance probabilities p[i][j] = Pr(w_i > w_j):\n");
    out.push_str(&format!("{:<name_width$}", ""));
    for name in categories {
        out.push_str(&format!("  {:>8}", short_name(name, 8)));
    }
    out.push('\n');
    for (i, name) in categories.iter().enumerate() {
        out.push_str(&format!("{name:<name_width$}"));
        for j in 0..c {
            if i == j {
                out.push_str(&format!("  {:>8}", "-"));
            } else {
                out.push_str(&format!("  {:>8.3}", report.exceedance[i][j]));
            }
        }
        out.push('\n');
    }
    out
}

fn short_name(name: &str, width: usize) -> String {
    if name.len() <= width {
        name.to_string()
    } else {
        name[..width].to_string()
    }
}

/// Machine-readable key-value summary, one `key=value` per line.
pub fn summary_key_values(report: &SummaryReport, categories: &[String]) -> String {
    let mut out = String::new();
    if let Some(epsilon) = report.epsilon {
        out.push_str(&format!("epsilon={epsilon}\n"));
    }
    out.push_str(&format!("accepted={}\n", report.accepted));
    if let Some(attempts) = report.attempts {
        out.push_str(&format!("attempts={attempts}\n"));
    }
    if let Some(rate) = report.acceptance_rate() {
        out.push_str(&format!("acceptance_rate={rate}\n"));
    }
    for (name, mean) in categories.iter().zip(&report.means) {
        out.push_str(&format!("mean.{}={}\n", key_safe(name), mean));
    }
    for (name, sd) in categories.iter().zip(&report.sds) {
        out.push_str(&format!("sd.{}={}\n", key_safe(name), sd));
    }
    let c = report.means.len();
    for i in 0..c {
        for j in 0..c {
            if i != j {
                out.push_str(&format!(
                    "p.{}.{}={}\n",
                    i + 1,
                    j + 1,
                    report.exceedance[i][j]
                ));
            }
        }
    }
    out
}

fn key_safe(name: &str) -> String {
    name.chars()
        .map(|ch| if ch.is_alphanumeric() { ch } else { '_' })
        .collect()
}

/// CSV header for grid results.
pub const GRID_CSV_HEADER: &str = "c,k,config,rmse,acc_rate,detail_file";

/// One grid CSV row per cell.
pub fn grid_csv_row(result: &ScenarioResult, detail_file: &str) -> String {
    format!(
        "{},{},{},{},{},{}",
        result.config.c,
        result.config.k,
        result.config.kind.as_str(),
        result.rmse,
        result.mean_acceptance_rate,
        detail_file
    )
}

/// Per-replication detail CSV of one cell.
pub fn replication_detail_csv(result: &ScenarioResult) -> String {
    let mut out =
        String::from("replication,epsilon,accepted,attempts,acc_rate,error_norm,ranking_recovered");
    for name in 1..=result.config.c {
        out.push_str(&format!(",mean_{name}"));
    }
    out.push('\n');
    for rep in &result.replications {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            rep.replication,
            rep.epsilon,
            rep.accepted,
            rep.attempts,
            rep.acceptance_rate,
            rep.error_norm,
            rep.ranking_recovered
        ));
        for mean in &rep.posterior_mean {
            out.push_str(&format!(",{mean}"));
        }
        out.push('\n');
    }
    out
}

/// Formats grid results in the study-table layout: one block per
/// configuration, rows over c, column pairs (RMSE, acceptance rate) per k.
///
/// The RMSE convention is printed in the header: mean over replications of
/// the Euclidean norm of the posterior-mean error on the normalised scale.
pub fn format_grid_tables(results: &[ScenarioResult]) -> String {
    let mut out = String::new();
    out.push_str(
        "RMSE convention: mean over replications of ||posterior mean - true weights||_2,\n\
         both on the normalised (simplex) scale.\n",
    );
    let mut kinds: Vec<&str> = results.iter().map(|r| r.config.kind.as_str()).collect();
    kinds.dedup();
    kinds.sort_unstable();
    kinds.dedup();
    for kind in kinds {
        let mut cell: Vec<&ScenarioResult> = results
            .iter()
            .filter(|r| r.config.kind.as_str() == kind)
            .collect();
        let mut ks: Vec<usize> = cell.iter().map(|r| r.config.k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut cs: Vec<usize> = cell.iter().map(|r| r.config.c).collect();
        cs.sort_unstable();
        cs.dedup();
        cell.sort_by_key(|r| (r.config.c, r.config.k));

        out.push_str(&format!("\nconfiguration: {kind}\n"));
        out.push_str(&format!("{:>4}", "c"));
        for k in &ks {
            out.push_str(&format!(
                "  {:>10} {:>10}",
                format!("k={k} RMSE"),
                "acc.rate"
            ));
        }
        out.push('\n');
        for c in cs {
            out.push_str(&format!("{c:>4}"));
            for k in &ks {
                match cell.iter().find(|r| r.config.c == c && r.config.k == *k) {
                    Some(r) => out.push_str(&format!(
                        "  {:>10.4} {:>10.4}",
                        r.rmse, r.mean_acceptance_rate
                    )),
                    None => out.push_str(&format!("  {:>10} {:>10}", "-", "-")),
                }
            }
            out.push('\n');
        }
    }
    out
}
