//! Checking emitted suites and summarizing checks into comparison tables.
//!
//! A checks file is JSON Lines, each object tagged by `record`:
//!
//! - `summary`: one per checked suite, see [`CheckSummary`]
//! - `violation`: one per violated constraint, the fields of [`Violation`]
//! - `warning`: `{test_id, message}` for calls that could not be checked
//!
//! Several check runs may be concatenated into one file; each summary
//! starts a new configuration row in the report.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::KnowledgeBase;
use crate::oracle::{check_test, model_coverage, ProxyWeights, Violation};
use crate::suite::{Backend, TestSuite};
use crate::synth::CoverageFeedback;
use crate::usage::PatternIndex;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checks line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub module: String,
    pub backend: Backend,
    pub seed: u64,
    pub guided: bool,
    pub tests: usize,
    pub valid: usize,
    pub invalid: usize,
    /// `invalid / tests`, 0 for an empty suite.
    pub invalid_rate: f64,
    pub violations: usize,
    pub proxy: f64,
}

impl CheckSummary {
    pub fn label(&self) -> String {
        let mode = if self.guided { "guided" } else { "blind" };
        format!("{} {} {mode} seed={}", self.module, self.backend, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum CheckRecord {
    Summary(CheckSummary),
    Violation(Violation),
    Warning { test_id: String, message: String },
}

/// Checks every test of `suite` against `kb`. The proxy score uses
/// `patterns` for its rule component.
pub fn check_suite(
    suite: &TestSuite,
    kb: &KnowledgeBase,
    patterns: &PatternIndex,
    weights: ProxyWeights,
) -> Vec<CheckRecord> {
    let mut records = Vec::new();
    let mut invalid = 0;
    let mut violations = 0;
    for t in &suite.tests {
        let verdict = check_test(t, kb);
        if !verdict.is_valid() {
            invalid += 1;
        }
        violations += verdict.violations.len();
        records.extend(verdict.violations.into_iter().map(CheckRecord::Violation));
        records.extend(verdict.warnings.into_iter().map(|message| CheckRecord::Warning {
            test_id: t.id.clone(),
            message,
        }));
    }
    let tests = suite.tests.len();
    let summary = CheckSummary {
        module: suite.module.clone(),
        backend: suite.backend,
        seed: suite.seed,
        guided: suite.guided,
        tests,
        valid: tests - invalid,
        invalid,
        invalid_rate: if tests == 0 { 0.0 } else { invalid as f64 / tests as f64 },
        violations,
        proxy: model_coverage(suite, &suite.module, kb, patterns, weights).score,
    };
    records.insert(0, CheckRecord::Summary(summary));
    records
}

pub fn render_checks(records: &[CheckRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

pub fn parse_checks(text: &str) -> Result<Vec<CheckRecord>, ReportError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReportError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_checks(path: &Path) -> Result<Vec<CheckRecord>, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_checks(&text)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    Text,
    Structured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub configuration: String,
    pub tests: usize,
    pub valid: usize,
    pub invalid: usize,
    pub invalid_rate: f64,
    pub proxy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branches_covered: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branches_total: Option<u64>,
    /// Covered fraction when the total is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    /// Relative coverage gain of a guided row over the blind row with the
    /// same module, backend and seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improvement: Option<f64>,
}

/// Builds one row per summary. The i-th feedback, when present, holds the
/// executed coverage of the i-th summarized suite.
pub fn report_rows(records: &[CheckRecord], feedback: &[CoverageFeedback]) -> Vec<ReportRow> {
    let summaries: Vec<&CheckSummary> = records
        .iter()
        .filter_map(|r| match r {
            CheckRecord::Summary(s) => Some(s),
            _ => None,
        })
        .collect();
    let mut rows: Vec<ReportRow> = summaries
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let fb = feedback.get(i);
            let covered = fb.map(|f| f.covered().len());
            let total = fb.and_then(|f| f.total_branches);
            ReportRow {
                configuration: s.label(),
                tests: s.tests,
                valid: s.valid,
                invalid: s.invalid,
                invalid_rate: s.invalid_rate,
                proxy: s.proxy,
                branches_covered: covered,
                branches_total: total,
                coverage: match (covered, total) {
                    (Some(c), Some(t)) if t > 0 => Some(c as f64 / t as f64),
                    _ => None,
                },
                improvement: None,
            }
        })
        .collect();
    for i in 0..rows.len() {
        let s = summaries[i];
        if !s.guided {
            continue;
        }
        let baseline = summaries
            .iter()
            .position(|b| !b.guided && b.module == s.module && b.backend == s.backend && b.seed == s.seed);
        if let (Some(j), Some(c)) = (baseline, rows[i].branches_covered) {
            if let Some(base) = rows[j].branches_covered.filter(|b| *b > 0) {
                rows[i].improvement = Some((c as f64 - base as f64) / base as f64);
            }
        }
    }
    rows
}

const HEADER: [&str; 8] = ["configuration", "tests", "valid", "invalid", "invalid%", "proxy", "coverage", "improvement"];

pub fn render_report(records: &[CheckRecord], feedback: &[CoverageFeedback], format: ReportFormat) -> String {
    let rows = report_rows(records, feedback);
    match format {
        ReportFormat::Structured => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
        ReportFormat::Text => {
            let cells: Vec<[String; 8]> = rows
                .iter()
                .map(|r| {
                    let coverage = match (r.branches_covered, r.branches_total, r.coverage) {
                        (Some(c), Some(t), Some(f)) => format!("{c}/{t} ({:.1}%)", f * 100.0),
                        (Some(c), _, _) => format!("{c}"),
                        _ => "-".into(),
                    };
                    [
                        r.configuration.clone(),
                        r.tests.to_string(),
                        r.valid.to_string(),
                        r.invalid.to_string(),
                        format!("{:.1}", r.invalid_rate * 100.0),
                        format!("{:.4}", r.proxy),
                        coverage,
                        r.improvement.map_or("-".into(), |x| format!("{:+.1}%", x * 100.0)),
                    ]
                })
                .collect();
            let mut widths = HEADER.map(str::len);
            for row in &cells {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let mut out = String::new();
            let line = |out: &mut String, cols: &[String]| {
                let padded: Vec<String> = cols
                    .iter()
                    .zip(widths)
                    .enumerate()
                    .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                let _ = writeln!(out, "{}", padded.join("  ").trim_end());
            };
            line(&mut out, &HEADER.map(String::from));
            for row in &cells {
                line(&mut out, row);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(guided: bool, invalid: usize) -> CheckSummary {
        CheckSummary {
            module: "fx.cluster".into(),
            backend: Backend::Search,
            seed: 1,
            guided,
            tests: 10,
            valid: 10 - invalid,
            invalid,
            invalid_rate: invalid as f64 / 10.0,
            violations: invalid,
            proxy: 0.5,
        }
    }

    fn fb(n: usize) -> CoverageFeedback {
        CoverageFeedback {
            total_branches: Some(40),
            tests: [("0000".to_string(), (0..n).map(|i| format!("b{i}")).collect())].into(),
        }
    }

    #[test]
    fn empty_inputs_give_header_only() {
        let text = render_report(&[], &[], ReportFormat::Text);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("configuration"));
        assert_eq!(render_report(&[], &[], ReportFormat::Structured), "[]\n");
    }

    #[test]
    fn guided_row_gets_improvement_over_blind() {
        let records = vec![
            CheckRecord::Summary(summary(true, 1)),
            CheckRecord::Summary(summary(false, 6)),
        ];
        let rows = report_rows(&records, &[fb(25), fb(20)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].improvement, Some(0.25));
        assert_eq!(rows[1].improvement, None);
        assert_eq!(rows[0].coverage, Some(25.0 / 40.0));
        let text = render_report(&records, &[fb(25), fb(20)], ReportFormat::Text);
        assert!(text.contains("+25.0%"), "{text}");
        assert!(text.contains("25/40 (62.5%)"), "{text}");
    }

    #[test]
    fn checks_round_trip_and_errors_name_the_line() {
        let records = vec![
            CheckRecord::Summary(summary(true, 0)),
            CheckRecord::Warning {
                test_id: "0000".into(),
                message: "x".into(),
            },
        ];
        assert_eq!(parse_checks(&render_checks(&records)).unwrap(), records);
        match parse_checks("{\"record\":\"warning\",\"test_id\":\"a\",\"message\":\"b\"}\n\n{oops}\n") {
            Err(ReportError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
