#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use apiknow::docs::{apply_rules, build_kb, load_corpus, normalize_sentence, DocRecord};
use apiknow::model::{FieldKind, KnowledgeBase, ParamConstraint};
use apiknow::resolve::KnownApis;
use apiknow::synth::next_method;
use apiknow::usage::{build_transactions, derive_rules, load_posts, mine_frequent_itemsets, Itemset, PatternIndex, Ratio, Transaction, UsageRule};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Deserialize;
use serde_json::{Map, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn corpus() -> Vec<DocRecord> {
    load_corpus(&fixture("docs.jsonl")).expect("fixture corpus loads")
}

pub fn fixture_kb() -> KnowledgeBase {
    build_kb(&corpus()).expect("fixture corpus mines")
}

/// Usage patterns mined from the fixture posts at the default thresholds.
pub fn fixture_patterns(kb: &KnowledgeBase) -> PatternIndex {
    let known = KnownApis::new(kb.entries.keys().cloned());
    let posts = load_posts(&fixture("posts.jsonl")).expect("fixture posts load");
    let itemsets = mine_frequent_itemsets(&build_transactions(&posts, &known), 2);
    PatternIndex::build(&derive_rules(&itemsets, Ratio::parse_decimal("0.5").unwrap()))
}

pub const MODULES: [&str; 6] = [
    "fx.cluster",
    "fx.model_selection",
    "fx.preprocessing",
    "fx.metrics",
    "fx.neighbors",
    "fx.decomposition",
];

/// A sentence with its hand-labelled constraint fields.
#[derive(Debug, Deserialize)]
pub struct Labelled {
    pub sentence: String,
    pub expected: Map<String, Value>,
    #[serde(default)]
    pub rule: Option<u8>,
}

pub fn labelled(name: &str) -> Vec<Labelled> {
    let text = std::fs::read_to_string(fixture(name)).expect("fixture readable");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("labelled sentence parses"))
        .collect()
}

/// Defined fields of `c` as JSON values, keyed by field name, provenance dropped.
pub fn field_values(c: &ParamConstraint) -> Map<String, Value> {
    let full = serde_json::to_value(c).expect("constraint serializes");
    let mut out = Map::new();
    for kind in c.defined_fields() {
        let key = kind.to_string();
        out.insert(key.clone(), full[&key]["value"].clone());
    }
    out
}

pub const FIELDS: [FieldKind; 8] = [
    FieldKind::Structure,
    FieldKind::DataType,
    FieldKind::DefaultValue,
    FieldKind::Shape,
    FieldKind::Size,
    FieldKind::Dimension,
    FieldKind::AllowedValues,
    FieldKind::Optional,
];

/// `(correct, considered)` over the fields defined in either the label or
/// the extraction.
pub fn score(label: &Labelled) -> (usize, usize) {
    let got = field_values(&apply_rules(&normalize_sentence(&label.sentence)).constraint);
    let mut correct = 0;
    let mut considered = 0;
    for kind in FIELDS {
        let key = kind.to_string();
        let (e, g) = (label.expected.get(&key), got.get(&key));
        if e.is_none() && g.is_none() {
            continue;
        }
        considered += 1;
        if e == g {
            correct += 1;
        }
    }
    (correct, considered)
}

pub fn exact(label: &Labelled) -> bool {
    let (c, n) = score(label);
    c == n
}

pub fn item(i: u8) -> String {
    format!("api.{}", (b'a' + i) as char)
}

/// Itemsets by enumerating every subset of the item universe.
pub fn brute_itemsets(tx: &[Transaction], min_support: u64) -> BTreeMap<Itemset, u64> {
    let universe: Vec<String> = tx.iter().flat_map(|t| t.apis.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let sets: Vec<BTreeSet<String>> = tx.iter().map(|t| t.apis.iter().cloned().collect()).collect();
    let mut out = BTreeMap::new();
    for mask in 1u64..(1 << universe.len()) {
        let set: Itemset = (0..universe.len()).filter(|i| mask >> i & 1 == 1).map(|i| universe[i].clone()).collect();
        let support = sets.iter().filter(|t| set.is_subset(t)).count() as u64;
        if support >= min_support {
            out.insert(set, support);
        }
    }
    out
}

/// Single-consequent rules over the brute-force itemsets, as
/// `(antecedent, consequent, support, antecedent support)`.
pub fn brute_rules(itemsets: &BTreeMap<Itemset, u64>, min_conf: Ratio) -> BTreeSet<(Itemset, String, u64, u64)> {
    let mut out = BTreeSet::new();
    for (set, &s) in itemsets {
        if set.len() < 2 {
            continue;
        }
        for c in set {
            let mut ante = set.clone();
            ante.remove(c);
            let a = itemsets[&ante];
            if s as u128 * min_conf.den as u128 >= a as u128 * min_conf.num as u128 {
                out.insert((ante, c.clone(), s, a));
            }
        }
    }
    out
}

pub fn rule_tuples(rules: &[UsageRule]) -> BTreeSet<(Itemset, String, u64, u64)> {
    rules
        .iter()
        .map(|r| (r.antecedent.clone(), r.consequent.clone(), r.support_count, r.antecedent_support))
        .collect()
}

pub fn transactions(sets: &[BTreeSet<u8>]) -> Vec<Transaction> {
    sets.iter()
        .enumerate()
        .map(|(i, s)| Transaction {
            source_id: format!("t{i}"),
            apis: s.iter().map(|&x| item(x)).collect(),
        })
        .collect()
}

pub const CONFIDENCES: [&str; 6] = ["0", "0.25", "0.5", "0.6", "0.75", "1"];

/// Compares the miner with the enumerators on one corpus.
pub fn apriori_agrees(tx: &[Transaction], min_support: u64, min_conf: &str) -> Result<(), String> {
    let conf = Ratio::parse_decimal(min_conf).expect("decimal");
    let got = mine_frequent_itemsets(tx, min_support);
    let want = brute_itemsets(tx, min_support);
    if got != want {
        return Err(format!("itemsets differ: {got:?} vs {want:?}"));
    }
    let rules = derive_rules(&got, conf);
    for r in &rules {
        if r.confidence() != Ratio::new(r.support_count, r.antecedent_support) {
            return Err(format!("confidence of {r:?}"));
        }
    }
    let (g, w) = (rule_tuples(&rules), brute_rules(&want, conf));
    if g != w {
        return Err(format!("rules differ: {g:?} vs {w:?}"));
    }
    Ok(())
}

pub fn random_corpus<R: Rng>(rng: &mut R) -> Vec<BTreeSet<u8>> {
    let n = rng.gen_range(0..=10);
    let width = rng.gen_range(1..=6);
    (0..n)
        .map(|_| {
            let mut s: BTreeSet<u8> = (0..width).filter(|_| rng.gen_bool(0.5)).collect();
            if s.is_empty() {
                s.insert(rng.gen_range(0..width));
            }
            s
        })
        .collect()
}

/// Inputs of one next-method decision.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub called: Vec<String>,
    pub candidates: Vec<String>,
    pub rules: Vec<UsageRule>,
    pub fallback: Vec<String>,
}

pub fn random_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let alphabet: Vec<String> = (0..6).map(item).collect();
    let called: Vec<String> = (0..rng.gen_range(0..=6)).map(|_| alphabet.choose(rng).unwrap().clone()).collect();
    let mut candidates: Vec<String> = alphabet.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    if candidates.is_empty() && rng.gen_bool(0.8) {
        candidates.push(alphabet.choose(rng).unwrap().clone());
    }
    let mut keyed: BTreeMap<(Itemset, String), UsageRule> = BTreeMap::new();
    for _ in 0..rng.gen_range(0..12) {
        // Half the antecedents come from suffixes of the call sequence so
        // that matches are common.
        let antecedent: Itemset = if !called.is_empty() && rng.gen_bool(0.5) {
            let start = rng.gen_range(0..called.len());
            called[start..].iter().cloned().collect()
        } else {
            (0..rng.gen_range(1..=3)).map(|_| alphabet.choose(rng).unwrap().clone()).collect()
        };
        let consequent = if rng.gen_bool(0.7) && !candidates.is_empty() {
            candidates.choose(rng).unwrap().clone()
        } else {
            alphabet.choose(rng).unwrap().clone()
        };
        if antecedent.contains(&consequent) {
            continue;
        }
        let a = rng.gen_range(1..=8);
        let s = rng.gen_range(1..=a);
        keyed.insert(
            (antecedent.clone(), consequent.clone()),
            UsageRule {
                antecedent,
                consequent,
                support_count: s,
                antecedent_support: a,
            },
        );
    }
    let mut fallback = candidates.clone();
    fallback.shuffle(rng);
    Scenario {
        called,
        candidates,
        rules: keyed.into_values().collect(),
        fallback,
    }
}

/// Checks one next-method decision against an independent reading of the
/// priority rules: a candidate is prioritized by the rule whose antecedent
/// equals the longest matching suffix (of length two or more) of the calls.
pub fn next_method_holds(s: &Scenario) -> Result<(), String> {
    let index = PatternIndex::build(&s.rules);
    let got = next_method(&s.called, &s.candidates, &index, &s.fallback);
    if s.candidates.is_empty() {
        return match got {
            None => Ok(()),
            Some(g) => Err(format!("no candidates but chose {g}")),
        };
    }
    let mut matched: BTreeMap<&String, Ratio> = BTreeMap::new();
    for c in &s.candidates {
        for len in (2..=s.called.len()).rev() {
            let suffix: Itemset = s.called[s.called.len() - len..].iter().cloned().collect();
            if let Some(r) = s.rules.iter().find(|r| r.antecedent == suffix && &r.consequent == c) {
                matched.insert(c, r.confidence());
                break;
            }
        }
    }
    let Some(got) = got else {
        return Err("no choice among nonempty candidates".into());
    };
    if matched.is_empty() {
        if Some(&got) != s.fallback.first() {
            return Err(format!("no rule matches; expected fallback top {:?}, got {got}", s.fallback.first()));
        }
        return Ok(());
    }
    let best = matched.values().max().copied().unwrap();
    match matched.get(&got) {
        None => Err(format!("{got} is not prioritized; priority set {matched:?}")),
        Some(c) if *c != best => Err(format!("{got} has confidence {c}, best is {best}")),
        Some(_) => Ok(()),
    }
}

/// Compares the mined `fx.cluster.KMeans.fit` rows with the expected ones:
/// X array-like/integer/2-d/(n, n)/required, y undefined with default None,
/// sample_weight array-like/float/(n,)/default None.
pub fn kmeans_fit_rows(kb: &KnowledgeBase) -> Result<(), String> {
    use apiknow::model::{DataType, Dim, Literal, Structure};
    let fit = "fx.cluster.KMeans.fit";
    let get = |p: &str| kb.constraint(fit, p).ok_or_else(|| format!("{fit}.{p} missing"));
    let sym = |s: &str| Dim::Symbol(s.into());
    let mut errors = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            errors.push(what.to_string());
        }
    };
    let x = get("X")?;
    expect(x.structure.as_ref().map(|m| m.value.clone()) == Some(vec![Structure::ArrayLike]), "X structure");
    expect(x.data_type.as_ref().map(|m| m.value.clone()) == Some(vec![DataType::Integer]), "X data type");
    expect(x.dimension.as_ref().map(|m| m.value) == Some(2), "X dimension");
    expect(x.shape.as_ref().map(|m| m.value.iter().map(|s| s.dims.clone()).collect::<Vec<_>>()) == Some(vec![vec![sym("n"), sym("n")]]), "X shape");
    expect(x.default_value.is_none() && x.size.is_none() && x.allowed_values.is_none(), "X extra fields");
    expect(x.optional.as_ref().map(|m| m.value) == Some(false), "X optional");

    let y = get("y")?;
    expect(y.describes_no_value(), "y undefined");
    expect(y.default_value.as_ref().map(|m| &m.value) == Some(&Literal::None), "y default");
    expect(y.optional.as_ref().map(|m| m.value) == Some(true), "y optional");

    let w = get("sample_weight")?;
    expect(w.structure.as_ref().map(|m| m.value.clone()) == Some(vec![Structure::ArrayLike]), "sample_weight structure");
    expect(w.data_type.as_ref().map(|m| m.value.clone()) == Some(vec![DataType::Float]), "sample_weight data type");
    expect(w.shape.as_ref().map(|m| m.value.iter().map(|s| s.dims.clone()).collect::<Vec<_>>()) == Some(vec![vec![sym("n")]]), "sample_weight shape");
    expect(w.default_value.as_ref().map(|m| &m.value) == Some(&Literal::None), "sample_weight default");
    expect(w.size.is_none() && w.dimension.is_none() && w.allowed_values.is_none(), "sample_weight extra fields");
    expect(w.optional.as_ref().map(|m| m.value) == Some(true), "sample_weight optional");

    let params: Vec<&str> = kb.lookup(fit).map(|(s, _)| s.params.iter().map(|p| p.name.as_str()).collect()).unwrap_or_default();
    expect(params == ["X", "y", "sample_weight"], "fit parameters");
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join(", "))
    }
}
