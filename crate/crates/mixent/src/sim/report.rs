//! Deterministic CSV emission for grid results.

use super::runner::CellOutcome;

const RESULTS_HEADER: &str = "distribution,method,n,level,n_reps,B,true_entropy,estimate,bias,se,\
perc_lower,perc_upper,perc_coverage,cperc_lower,cperc_upper,cperc_coverage,bias_se_ratio,\
n_collapsed,status";

/// One row per (distribution, method, n, level), summary-table columns plus a
/// status column; failed cells keep their identity columns and carry the
/// error message in `status`.
pub fn results_csv(outcomes: &[CellOutcome]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for outcome in outcomes {
        match outcome {
            CellOutcome::Ok(r) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.4},{:.6},{:.6},{:.4},{:.6},{},ok\n",
                    r.distribution,
                    r.method,
                    r.n,
                    r.level,
                    r.n_reps,
                    r.n_boot,
                    r.true_entropy,
                    r.mean_estimate,
                    r.mean_bias,
                    r.mean_se,
                    r.mean_perc_interval.0,
                    r.mean_perc_interval.1,
                    r.coverage_perc,
                    r.mean_cperc_interval.0,
                    r.mean_cperc_interval.1,
                    r.coverage_cperc,
                    r.bias_se_ratio,
                    r.n_collapsed,
                ));
            }
            CellOutcome::Failed(f) => {
                let empty_stats = RESULTS_HEADER.split(',').count() - 5;
                out.push_str(&format!(
                    "{},{},{},{},{}error: {}\n",
                    f.distribution,
                    f.method,
                    f.n,
                    f.level,
                    ",".repeat(empty_stats),
                    f.message.replace(',', ";"),
                ));
            }
        }
    }
    out
}

/// Long-format coverage and bias-ratio rows for plotting: one row per
/// (distribution, method, interval kind, n, level).
pub fn coverage_curves_csv(outcomes: &[CellOutcome]) -> String {
    let mut out = String::from("distribution,method,interval_kind,n,level,coverage,bias_se_ratio\n");
    for outcome in outcomes {
        if let CellOutcome::Ok(r) = outcome {
            out.push_str(&format!(
                "{},{},percentile,{},{},{:.4},{:.6}\n",
                r.distribution, r.method, r.n, r.level, r.coverage_perc, r.bias_se_ratio,
            ));
            out.push_str(&format!(
                "{},{},centered_percentile,{},{},{:.4},{:.6}\n",
                r.distribution, r.method, r.n, r.level, r.coverage_cperc, r.bias_se_ratio,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::runner::{CellFailure, SimulationResult};
    use super::*;

    fn fake_result() -> SimulationResult {
        SimulationResult {
            distribution: "gaussian(mu=0;sigma=1)".into(),
            method: "WLB(0.8137)".into(),
            n: 100,
            level: 0.95,
            n_reps: 10,
            n_boot: 20,
            true_entropy: 1.4189,
            mean_estimate: 1.40,
            mean_bias: 0.01,
            mean_se: 0.07,
            mean_perc_interval: (1.26, 1.55),
            coverage_perc: 0.9,
            mean_cperc_interval: (1.25, 1.54),
            coverage_cperc: 0.95,
            bias_se_ratio: 0.14,
            n_collapsed: 0,
        }
    }

    #[test]
    fn results_csv_rows_and_header() {
        let rows = vec![
            CellOutcome::Ok(fake_result()),
            CellOutcome::Failed(CellFailure {
                distribution: "t(df=3)".into(),
                method: "BS".into(),
                n: 100,
                level: 0.95,
                message: "boom, with comma".into(),
            }),
        ];
        let csv = results_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("distribution,method,n,level"));
        assert!(lines[1].ends_with(",ok"));
        assert!(lines[2].contains("error: boom; with comma"));
        // Every row has the same column count as the header.
        let cols = lines[0].split(',').count();
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), cols, "row: {line}");
        }
    }

    #[test]
    fn coverage_curves_has_two_rows_per_cell() {
        let rows = vec![CellOutcome::Ok(fake_result())];
        let csv = coverage_curves_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains(",percentile,"));
        assert!(lines[2].contains(",centered_percentile,"));
    }
}
