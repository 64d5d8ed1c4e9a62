use std::fmt::Write;

use super::{ExperimentResult, Method, RegionCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    /// Timing columns vary between runs; leave them out for byte-level
    /// comparisons.
    pub include_timing: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { include_timing: true }
    }
}

/// One line per tolerance: both methods' means and the improvements.
pub fn to_csv(result: &ExperimentResult, opts: CsvOptions) -> String {
    let mut out = String::new();
    out.push_str("tolerance,pcp_iterations,cp_iterations,improvement_iterations_pct");
    if opts.include_timing {
        out.push_str(",pcp_time_s,cp_time_s,improvement_time_pct");
    }
    out.push_str(",flagged\n");
    for (j, imp) in result.improvements.iter().enumerate() {
        let pcp = result.row(Method::Pcp, j);
        let cp = result.row(Method::Cp, j);
        let _ =
            write!(out, "{:e},{},{},{:.4}", imp.tolerance, pcp.mean_iterations, cp.mean_iterations, imp.iterations_pct);
        if opts.include_timing {
            let _ = write!(out, ",{:.6},{:.6},{:.4}", pcp.mean_time_s, cp.mean_time_s, imp.time_pct);
        }
        let _ = writeln!(out, ",{}", pcp.flagged || cp.flagged);
    }
    out
}

/// Layout of the published tables: methods as rows, tolerances as columns.
pub fn to_markdown(result: &ExperimentResult) -> String {
    let tols = &result.config.tolerances;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "N = {}, m = {}, n = {}, gamma = {:e}, {} realizations, seed {}, {:?}, {:?}\n",
        result.config.nn,
        result.config.m,
        result.config.n,
        result.config.gamma,
        result.config.realizations,
        result.config.seed,
        result.config.entries,
        result.config.feasibility_mode
    );
    out.push_str("| | ");
    out.push_str(&tols.iter().map(|t| format!("e = {t:e}")).collect::<Vec<_>>().join(" | "));
    out.push_str(" |\n|---|");
    out.push_str(&"---:|".repeat(tols.len()));
    out.push('\n');

    let mut line = |label: &str, cells: Vec<String>| {
        let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
    };
    for method in [Method::Pcp, Method::Cp] {
        let flag = |j| if result.row(method, j).flagged { "*" } else { "" };
        line(
            &format!("{} iterations", method.label()),
            (0..tols.len()).map(|j| format!("{:.1}{}", result.row(method, j).mean_iterations, flag(j))).collect(),
        );
        line(
            &format!("{} time (s)", method.label()),
            (0..tols.len()).map(|j| format!("{:.4}", result.row(method, j).mean_time_s)).collect(),
        );
    }
    line(
        "improvement iterations (%)",
        result.improvements.iter().map(|i| format!("{:.1}", i.iterations_pct)).collect(),
    );
    line("improvement time (%)", result.improvements.iter().map(|i| format!("{:.1}", i.time_pct)).collect());
    if result.rows.iter().any(|r| r.flagged) {
        out.push_str("\n`*` some runs hit the iteration limit\n");
    }
    out
}

pub fn grid_to_csv(cells: &[RegionCell]) -> String {
    let mut out = String::from("i,j,tau,gamma,in_rb,in_sb\n");
    for c in cells {
        let _ = writeln!(out, "{},{},{},{},{},{}", c.i, c.j, c.tau, c.gamma, c.in_rb as u8, c.in_sb as u8);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{
        EntryDistribution, ExperimentConfig, FeasibilityMode, Improvement, RealizationRecord, ResultRow,
    };

    fn fake() -> ExperimentResult {
        let config = ExperimentConfig {
            nn: 10,
            m: 1,
            n: 2,
            gamma: 0.01,
            tolerances: vec![1e-3],
            realizations: 1,
            seed: 0,
            feasibility_mode: FeasibilityMode::GenerateFromPoint,
            entries: EntryDistribution::Uniform01,
            max_iter: 10,
        };
        let row = |method, it: f64| ResultRow {
            method,
            tolerance: 1e-3,
            mean_iterations: it,
            mean_time_s: 0.5,
            flagged: false,
        };
        ExperimentResult {
            config,
            rows: vec![row(Method::Pcp, 75.0), row(Method::Cp, 100.0)],
            improvements: vec![Improvement { tolerance: 1e-3, iterations_pct: 25.0, time_pct: 0.0 }],
            records: Vec::<RealizationRecord>::new(),
        }
    }

    #[test]
    fn csv_layout() {
        let s = to_csv(&fake(), CsvOptions { include_timing: false });
        assert_eq!(
            s,
            "tolerance,pcp_iterations,cp_iterations,improvement_iterations_pct,flagged\n1e-3,75,100,25.0000,false\n"
        );
        let s = to_csv(&fake(), CsvOptions::default());
        assert!(s.lines().next().unwrap().contains("pcp_time_s"));
    }

    #[test]
    fn markdown_has_all_rows() {
        let s = to_markdown(&fake());
        assert!(s.contains("| PCP iterations | 75.0 |"));
        assert!(s.contains("| CP iterations | 100.0 |"));
        assert!(s.contains("| improvement iterations (%) | 25.0 |"));
    }
}
