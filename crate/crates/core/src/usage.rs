//! Usage-pattern mining: API-call transactions from code fragments, Apriori
//! frequent itemsets and single-consequent association rules.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ApiId;
use crate::resolve::{resolve_calls, KnownApis};

pub type Itemset = BTreeSet<ApiId>;

/// Calls to known APIs in textual order. Duplicates are kept.
pub fn extract_api_calls(code: &str, known: &KnownApis) -> Vec<ApiId> {
    if known.is_empty() || code.trim().is_empty() {
        return Vec::new();
    }
    resolve_calls(code, known)
        .resolved
        .into_iter()
        .map(|r| r.api_id)
        .collect()
}

/// One corpus source (e.g. a Q&A post) with its code fragments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub source_id: String,
    pub fragments: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub source_id: String,
    /// First occurrences only, in call order.
    pub apis: Vec<ApiId>,
}

impl Transaction {
    pub fn items(&self) -> Itemset {
        self.apis.iter().cloned().collect()
    }
}

fn dedup_keep_first(apis: impl IntoIterator<Item = ApiId>) -> Vec<ApiId> {
    let mut seen = BTreeSet::new();
    apis.into_iter().filter(|a| seen.insert(a.clone())).collect()
}

pub fn build_transactions(posts: &[Post], known: &KnownApis) -> Vec<Transaction> {
    posts
        .iter()
        .filter_map(|p| {
            let apis = dedup_keep_first(p.fragments.iter().flat_map(|f| extract_api_calls(f, known)));
            (!apis.is_empty()).then(|| Transaction {
                source_id: p.source_id.clone(),
                apis,
            })
        })
        .collect()
}

/// Itemsets contained in at least `min_support` transactions, with their
/// exact support counts. Level-wise Apriori with subset pruning.
pub fn mine_frequent_itemsets(transactions: &[Transaction], min_support: u64) -> BTreeMap<Itemset, u64> {
    assert!(min_support >= 1, "min_support must be at least 1");
    let baskets: Vec<Itemset> = transactions.iter().map(Transaction::items).collect();
    let mut out = BTreeMap::new();

    let mut singles: BTreeMap<ApiId, u64> = BTreeMap::new();
    for b in &baskets {
        for item in b {
            *singles.entry(item.clone()).or_default() += 1;
        }
    }
    let mut level: Vec<Vec<ApiId>> = singles
        .into_iter()
        .filter(|(_, n)| *n >= min_support)
        .map(|(item, n)| {
            out.insert(BTreeSet::from([item.clone()]), n);
            vec![item]
        })
        .collect();

    while level.len() > 1 {
        let frequent: BTreeSet<&Vec<ApiId>> = level.iter().collect();
        let mut candidates = Vec::new();
        for (i, a) in level.iter().enumerate() {
            for b in &level[i + 1..] {
                let k = a.len();
                if a[..k - 1] != b[..k - 1] {
                    // `level` is sorted, so later b's share even less.
                    break;
                }
                let mut cand = a.clone();
                cand.push(b[k - 1].clone());
                let closed = (0..cand.len()).all(|skip| {
                    let sub: Vec<ApiId> = cand
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != skip)
                        .map(|(_, x)| x.clone())
                        .collect();
                    frequent.contains(&sub)
                });
                if closed {
                    candidates.push(cand);
                }
            }
        }
        let mut next = Vec::new();
        for cand in candidates {
            let n = baskets
                .iter()
                .filter(|b| cand.iter().all(|x| b.contains(x)))
                .count() as u64;
            if n >= min_support {
                out.insert(cand.iter().cloned().collect(), n);
                next.push(cand);
            }
        }
        level = next;
    }
    out
}

/// Exact non-negative fraction.
#[derive(Clone, Copy, Debug, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Ratio {
        assert!(den > 0, "zero denominator");
        Ratio { num, den }
    }

    /// Parses a plain decimal such as `0.5`, `1`, `.75` exactly.
    pub fn parse_decimal(text: &str) -> Option<Ratio> {
        let t = text.trim();
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
        if !digits(int) || !digits(frac) || frac.len() > 18 {
            return None;
        }
        let den = 10u64.checked_pow(frac.len() as u32)?;
        let i: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let f: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        Some(Ratio::new(i.checked_mul(den)?.checked_add(f)?, den))
    }

    /// Exact value of a finite non-negative float, via its shortest decimal
    /// spelling.
    pub fn from_f64(x: f64) -> Option<Ratio> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        Ratio::parse_decimal(&format!("{x}"))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Ratio) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Ratio) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Ratio) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `antecedent => consequent` with the counts it was derived from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UsageRule {
    pub antecedent: Itemset,
    pub consequent: ApiId,
    /// Transactions containing antecedent and consequent.
    pub support_count: u64,
    /// Transactions containing the antecedent.
    pub antecedent_support: u64,
}

impl UsageRule {
    pub fn confidence(&self) -> Ratio {
        Ratio::new(self.support_count, self.antecedent_support)
    }
}

/// Ranking inside one antecedent: confidence, then support (both
/// descending), then consequent id.
fn rank(a: &UsageRule, b: &UsageRule) -> Ordering {
    b.confidence()
        .cmp(&a.confidence())
        .then(b.support_count.cmp(&a.support_count))
        .then_with(|| a.consequent.cmp(&b.consequent))
}

/// All single-consequent rules whose confidence reaches `min_confidence`.
/// Output is ordered by antecedent, then by rank.
pub fn derive_rules(itemsets: &BTreeMap<Itemset, u64>, min_confidence: Ratio) -> Vec<UsageRule> {
    let mut out = Vec::new();
    for (set, &support) in itemsets.iter().filter(|(s, _)| s.len() >= 2) {
        for c in set {
            let mut antecedent = set.clone();
            antecedent.remove(c);
            let Some(&ante) = itemsets.get(&antecedent) else {
                log::warn!("itemset table is not downward closed; skipping a rule");
                continue;
            };
            let rule = UsageRule {
                antecedent,
                consequent: c.clone(),
                support_count: support,
                antecedent_support: ante,
            };
            if rule.confidence() >= min_confidence {
                out.push(rule);
            }
        }
    }
    out.sort_by(|a, b| a.antecedent.cmp(&b.antecedent).then_with(|| rank(a, b)));
    out
}

/// Rules grouped by antecedent set, each group ranked.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PatternIndex {
    by_antecedent: BTreeMap<Itemset, Vec<UsageRule>>,
}

impl PatternIndex {
    pub fn build(rules: &[UsageRule]) -> PatternIndex {
        let mut by_antecedent: BTreeMap<Itemset, Vec<UsageRule>> = BTreeMap::new();
        for r in rules {
            by_antecedent.entry(r.antecedent.clone()).or_default().push(r.clone());
        }
        for group in by_antecedent.values_mut() {
            group.sort_by(rank);
            group.dedup_by(|a, b| a.consequent == b.consequent);
        }
        PatternIndex { by_antecedent }
    }

    pub fn empty() -> PatternIndex {
        PatternIndex::default()
    }

    pub fn is_empty(&self) -> bool {
        self.by_antecedent.is_empty()
    }

    pub fn len(&self) -> usize {
        self.by_antecedent.values().map(Vec::len).sum()
    }

    /// Ranked rules for an exact antecedent set.
    pub fn rules_for(&self, antecedent: &Itemset) -> &[UsageRule] {
        self.by_antecedent.get(antecedent).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn consequents(&self, antecedent: &Itemset) -> Vec<&ApiId> {
        self.rules_for(antecedent).iter().map(|r| &r.consequent).collect()
    }

    pub fn rule(&self, antecedent: &Itemset, consequent: &str) -> Option<&UsageRule> {
        self.rules_for(antecedent).iter().find(|r| r.consequent == consequent)
    }

    pub fn rules(&self) -> impl Iterator<Item = &UsageRule> {
        self.by_antecedent.values().flatten()
    }
}

pub fn build_pattern_index(rules: &[UsageRule]) -> PatternIndex {
    PatternIndex::build(rules)
}

#[derive(Debug, Error)]
pub enum UsageError {
    #[error("file not found: {}", .0.display())]
    Missing(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn read(path: &Path) -> Result<String, UsageError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => UsageError::Missing(path.to_path_buf()),
        _ => UsageError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

fn write(path: &Path, text: &str) -> Result<(), UsageError> {
    fs::write(path, text).map_err(|source| UsageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses the transactions format: `source_id<TAB>api,api,...` per line.
/// Blank lines are skipped; repeated APIs keep their first occurrence.
pub fn parse_transactions(text: &str) -> Result<Vec<Transaction>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, apis) = line
            .split_once('\t')
            .ok_or_else(|| (i + 1, "expected source_id, a tab, then comma-separated api ids".to_string()))?;
        if id.is_empty() {
            return Err((i + 1, "empty source_id".into()));
        }
        let apis: Vec<ApiId> = apis.split(',').map(|a| a.trim().to_string()).collect();
        if apis.iter().any(String::is_empty) {
            return Err((i + 1, "empty api id".into()));
        }
        out.push(Transaction {
            source_id: id.to_string(),
            apis: dedup_keep_first(apis),
        });
    }
    Ok(out)
}

pub fn render_transactions(transactions: &[Transaction]) -> String {
    transactions
        .iter()
        .map(|t| format!("{}\t{}\n", t.source_id, t.apis.join(",")))
        .collect()
}

pub fn load_transactions(path: &Path) -> Result<Vec<Transaction>, UsageError> {
    parse_transactions(&read(path)?).map_err(|(line, message)| UsageError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub fn save_transactions(transactions: &[Transaction], path: &Path) -> Result<(), UsageError> {
    write(path, &render_transactions(transactions))
}

/// One line of the patterns file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RuleRecord {
    antecedent: Vec<ApiId>,
    consequent: ApiId,
    support: u64,
    antecedent_support: u64,
    confidence: f64,
}

pub fn render_patterns(index: &PatternIndex) -> String {
    let mut out = String::new();
    for r in index.rules() {
        let rec = RuleRecord {
            antecedent: r.antecedent.iter().cloned().collect(),
            consequent: r.consequent.clone(),
            support: r.support_count,
            antecedent_support: r.antecedent_support,
            confidence: r.confidence().to_f64(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("rule records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_patterns(text: &str) -> Result<PatternIndex, (usize, String)> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RuleRecord = serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
        let antecedent: Itemset = rec.antecedent.into_iter().collect();
        if antecedent.is_empty() {
            return Err((i + 1, "empty antecedent".into()));
        }
        if antecedent.contains(&rec.consequent) {
            return Err((i + 1, "consequent appears in its antecedent".into()));
        }
        if rec.antecedent_support == 0 || rec.support > rec.antecedent_support {
            return Err((i + 1, "support counts are inconsistent".into()));
        }
        let rule = UsageRule {
            antecedent,
            consequent: rec.consequent,
            support_count: rec.support,
            antecedent_support: rec.antecedent_support,
        };
        if (rule.confidence().to_f64() - rec.confidence).abs() > 1e-9 {
            return Err((i + 1, "confidence does not match support counts".into()));
        }
        rules.push(rule);
    }
    Ok(PatternIndex::build(&rules))
}

pub fn load_patterns(path: &Path) -> Result<PatternIndex, UsageError> {
    parse_patterns(&read(path)?).map_err(|(line, message)| UsageError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub fn save_patterns(index: &PatternIndex, path: &Path) -> Result<(), UsageError> {
    write(path, &render_patterns(index))
}

/// Posts file: one JSON object per line, `{"source_id": .., "fragments": [..]}`.
pub fn load_posts(path: &Path) -> Result<Vec<Post>, UsageError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| UsageError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(id: &str, apis: &[&str]) -> Transaction {
        Transaction {
            source_id: id.into(),
            apis: apis.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn set(items: &[&str]) -> Itemset {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn abc() -> Vec<Transaction> {
        vec![t("1", &["A", "B"]), t("2", &["A", "B", "C"]), t("3", &["A", "C"])]
    }

    #[test]
    fn itemsets_of_three_transactions() {
        let got = mine_frequent_itemsets(&abc(), 2);
        let want: BTreeMap<Itemset, u64> = [
            (set(&["A"]), 3),
            (set(&["B"]), 2),
            (set(&["C"]), 2),
            (set(&["A", "B"]), 2),
            (set(&["A", "C"]), 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
        assert!(mine_frequent_itemsets(&[], 2).is_empty());
        assert!(mine_frequent_itemsets(&[t("1", &["A", "B"])], 2).is_empty());
    }

    #[test]
    fn rules_and_thresholds() {
        let sets = mine_frequent_itemsets(&abc(), 2);
        let rules = derive_rules(&sets, Ratio::new(1, 2));
        let conf = |a: &str, c: &str| {
            rules
                .iter()
                .find(|r| r.antecedent == set(&[a]) && r.consequent == c)
                .map(|r| r.confidence())
        };
        assert_eq!(rules.len(), 4);
        assert_eq!(conf("B", "A"), Some(Ratio::new(1, 1)));
        assert_eq!(conf("C", "A"), Some(Ratio::new(1, 1)));
        assert_eq!(conf("A", "B"), Some(Ratio::new(2, 3)));
        assert_eq!(conf("A", "C"), Some(Ratio::new(2, 3)));
        let strict = derive_rules(&sets, Ratio::new(1, 1));
        assert_eq!(strict.len(), 2);
        assert!(derive_rules(&BTreeMap::new(), Ratio::new(1, 2)).is_empty());
    }

    #[test]
    fn index_ordering() {
        let r = |c: &str, s, a| UsageRule {
            antecedent: set(&["X"]),
            consequent: c.into(),
            support_count: s,
            antecedent_support: a,
        };
        let idx = PatternIndex::build(&[r("Z", 6, 10), r("Y", 9, 10)]);
        assert_eq!(idx.consequents(&set(&["X"])), vec!["Y", "Z"]);
        let idx = PatternIndex::build(&[r("P", 2, 4), r("Q", 5, 10)]);
        assert_eq!(idx.consequents(&set(&["X"])), vec!["Q", "P"]);
        assert!(PatternIndex::build(&[]).is_empty());
    }

    #[test]
    fn ratio_parsing_is_exact() {
        assert_eq!(Ratio::parse_decimal("0.5"), Some(Ratio::new(1, 2)));
        assert_eq!(Ratio::parse_decimal("1"), Some(Ratio::new(1, 1)));
        assert_eq!(Ratio::parse_decimal(".75"), Some(Ratio::new(3, 4)));
        assert_eq!(Ratio::from_f64(0.5), Some(Ratio::new(1, 2)));
        assert!(Ratio::parse_decimal("abc").is_none());
        assert!(Ratio::parse_decimal("-0.5").is_none());
        assert!(Ratio::new(2, 3) > Ratio::new(666_666, 1_000_000));
    }

    #[test]
    fn transactions_from_posts() {
        let known = KnownApis::new(["KMeans", "fit", "predict"]);
        let posts = vec![
            Post {
                source_id: "q1".into(),
                fragments: vec!["m = KMeans(2).fit(X)".into(), "m.fit(X)\nm.predict(X)".into()],
            },
            Post {
                source_id: "q2".into(),
                fragments: vec!["helper(1)".into()],
            },
        ];
        let ts = build_transactions(&posts, &known);
        assert_eq!(ts, vec![t("q1", &["KMeans", "fit", "predict"])]);
        assert!(extract_api_calls("", &known).is_empty());
    }

    #[test]
    fn file_formats_round_trip() {
        let text = "q1\tA,B,A\n\nq2\tC\n";
        let ts = parse_transactions(text).unwrap();
        assert_eq!(ts, vec![t("q1", &["A", "B"]), t("q2", &["C"])]);
        assert_eq!(render_transactions(&ts), "q1\tA,B\nq2\tC\n");
        assert_eq!(parse_transactions("q1 A,B\n").unwrap_err().0, 1);
        assert_eq!(parse_transactions("q1\tA\nq2\tA,,B\n").unwrap_err().0, 2);

        let idx = PatternIndex::build(&derive_rules(&mine_frequent_itemsets(&abc(), 2), Ratio::new(1, 2)));
        let back = parse_patterns(&render_patterns(&idx)).unwrap();
        assert_eq!(back, idx);
        assert!(parse_patterns("{\"antecedent\":[\"A\"],\"consequent\":\"A\",\"support\":1,\"antecedent_support\":1,\"confidence\":1.0}\n").is_err());
    }
}
