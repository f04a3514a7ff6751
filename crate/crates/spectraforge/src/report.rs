use std::fmt::Write;

use spectraforge_core::classify::ExperimentReport;

/// Aligned plain-text table, one row per condition.
pub fn render_table(reports: &[ExperimentReport]) -> String {
    let name_w = reports
        .iter()
        .map(|r| r.condition.name().len())
        .max()
        .unwrap_or(0)
        .max("condition".len());
    let mut out = String::new();
    writeln!(out, "{:<name_w$}  {:>4}  {:>8}  {:>8}  per-seed AR", "condition", "runs", "mean AR", "stddev").unwrap();
    for r in reports {
        let sd = if r.stddev_defined {
            format!("{:.4}", r.stddev)
        } else {
            "n/a".to_string()
        };
        let seeds: Vec<String> = r.per_seed_ar.iter().map(|a| format!("{a:.4}")).collect();
        writeln!(
            out,
            "{:<name_w$}  {:>4}  {:>8.4}  {:>8}  {}",
            r.condition.name(),
            r.per_seed_ar.len(),
            r.mean,
            sd,
            seeds.join(" ")
        )
        .unwrap();
    }
    out
}

/// Long-format CSV: `condition,seed,ar`.
pub fn render_csv(reports: &[ExperimentReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["condition", "seed", "ar"]).unwrap();
    for r in reports {
        for (seed, ar) in r.seeds.iter().zip(&r.per_seed_ar) {
            w.write_record([r.condition.name(), &seed.to_string(), &ar.to_string()]).unwrap();
        }
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}
