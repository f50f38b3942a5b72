//! Branch-coverage feedback written by the test runner.
//!
//! Format, one record per line, UTF-8, `\n` line ends:
//!
//! ```text
//! #branches\t<total>          optional header, first non-blank line only
//! <test_id>\t<b1> <b2> ...    covered branch ids, space separated
//! ```
//!
//! A test that covered nothing has an empty field after the tab. Blank
//! lines are ignored. Test ids and branch ids contain no whitespace. A test
//! id may appear once.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::suite::TestCase;

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("feedback line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverageFeedback {
    /// Branch count of the code under test, when the runner reports it.
    pub total_branches: Option<u64>,
    pub tests: BTreeMap<String, BTreeSet<String>>,
}

impl CoverageFeedback {
    pub fn parse(text: &str) -> Result<CoverageFeedback, FeedbackError> {
        let mut out = CoverageFeedback::default();
        let mut first = true;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let bad = |message: String| FeedbackError::Malformed { line, message };
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.trim().is_empty() {
                continue;
            }
            let was_first = std::mem::replace(&mut first, false);
            let Some((id, rest)) = raw.split_once('\t') else {
                return Err(bad("expected `<test_id>\\t<branches>`".into()));
            };
            if id == "#branches" {
                if !was_first {
                    return Err(bad("#branches header must come first".into()));
                }
                let n = rest.trim().parse().map_err(|_| bad(format!("bad branch total {rest:?}")))?;
                out.total_branches = Some(n);
                continue;
            }
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(bad(format!("bad test id {id:?}")));
            }
            if rest.contains('\t') {
                return Err(bad("more than one tab".into()));
            }
            let branches: BTreeSet<String> = rest.split(' ').filter(|b| !b.is_empty()).map(str::to_string).collect();
            if out.tests.insert(id.to_string(), branches).is_some() {
                return Err(bad(format!("test {id} listed twice")));
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<CoverageFeedback, FeedbackError> {
        let text = std::fs::read_to_string(path).map_err(|source| FeedbackError::Io {
            path: path.display().to_string(),
            source,
        })?;
        CoverageFeedback::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(n) = self.total_branches {
            out.push_str(&format!("#branches\t{n}\n"));
        }
        for (id, branches) in &self.tests {
            let list: Vec<&str> = branches.iter().map(String::as_str).collect();
            out.push_str(&format!("{id}\t{}\n", list.join(" ")));
        }
        out
    }

    /// Union of branches covered by all listed tests.
    pub fn covered(&self) -> BTreeSet<&str> {
        self.tests.values().flatten().map(String::as_str).collect()
    }
}

/// Tests from an earlier run together with the branches each covered,
/// keyed by test fingerprint so coverage follows a test across runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PriorRun {
    pub tests: Vec<TestCase>,
    pub coverage: BTreeMap<String, BTreeSet<String>>,
}

impl PriorRun {
    /// Tests the feedback does not mention are kept without coverage.
    pub fn new(tests: Vec<TestCase>, feedback: &CoverageFeedback) -> PriorRun {
        let coverage = tests
            .iter()
            .filter_map(|t| feedback.tests.get(&t.id).map(|b| (t.fingerprint(), b.clone())))
            .collect();
        PriorRun { tests, coverage }
    }

    /// Branches covered by the known tests among `tests`.
    pub fn branches_of<'a>(&'a self, tests: &[TestCase]) -> BTreeSet<&'a str> {
        tests
            .iter()
            .filter_map(|t| self.coverage.get(&t.fingerprint()))
            .flatten()
            .map(String::as_str)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        let text = "#branches\t42\n0000\tfx/cluster.py:10->12 fx/cluster.py:10->14\n0001\t\n";
        let fb = CoverageFeedback::parse(text).unwrap();
        assert_eq!(fb.total_branches, Some(42));
        assert_eq!(fb.tests["0000"].len(), 2);
        assert!(fb.tests["0001"].is_empty());
        assert_eq!(fb.render(), text);
        assert_eq!(fb.covered().len(), 2);
    }

    #[test]
    fn errors_name_the_line() {
        for (text, line) in [
            ("0000\ta\n\nnotab\n", 3),
            ("0000\ta\n#branches\t3\n", 2),
            ("#branches\tmany\n", 1),
            ("0000\ta\n0000\tb\n", 2),
        ] {
            match CoverageFeedback::parse(text) {
                Err(FeedbackError::Malformed { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_file_is_empty_feedback() {
        assert_eq!(CoverageFeedback::parse("").unwrap(), CoverageFeedback::default());
    }

    #[test]
    fn prior_run_follows_fingerprints() {
        let t = crate::suite::tests::fit_predict();
        let fb = CoverageFeedback::parse("t0\tb1 b2\n").unwrap();
        let prior = PriorRun::new(vec![t.clone()], &fb);
        let mut renamed = t;
        renamed.id = "0007".into();
        assert_eq!(prior.branches_of(&[renamed]).len(), 2);
    }
}
