use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use apiknow::docs::{build_kb, load_corpus};
use apiknow::emit::{emit_suite, EmitStyle, Manifest};
use apiknow::model::Value;
use apiknow::oracle::ProxyWeights;
use apiknow::report::{check_suite, parse_checks, render_checks, CheckRecord};
use apiknow::resolve::KnownApis;
use apiknow::suite::{Arg, ArgValue, Backend, Statement, TestCase, TestSuite};
use apiknow::synth::{generate, GenConfig};
use apiknow::usage::{
    build_transactions, derive_rules, load_posts, mine_frequent_itemsets, parse_patterns, render_patterns,
    render_transactions, PatternIndex, Ratio,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn apiknow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apiknow"))
        .args(args)
        .env("APIKNOW_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = apiknow(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&f).unwrap()))
        .collect()
}

/// Rules by enumerating every subset of every transaction.
fn brute_force_rules(transactions: &[BTreeSet<&str>], min_support: usize, min_conf: (usize, usize)) -> BTreeSet<(Vec<String>, String, usize, usize)> {
    let items: BTreeSet<&str> = transactions.iter().flatten().copied().collect();
    let items: Vec<&str> = items.into_iter().collect();
    let support = |set: &BTreeSet<&str>| transactions.iter().filter(|t| set.is_subset(t)).count();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << items.len()) {
        let set: BTreeSet<&str> = (0..items.len()).filter(|i| mask & (1 << i) != 0).map(|i| items[i]).collect();
        let s = support(&set);
        if set.len() < 2 || s < min_support {
            continue;
        }
        for c in &set {
            let mut ante = set.clone();
            ante.remove(c);
            let a = support(&ante);
            if s * min_conf.1 >= a * min_conf.0 {
                out.insert((ante.iter().map(|x| x.to_string()).collect(), c.to_string(), s, a));
            }
        }
    }
    out
}

#[test]
fn mine_usage_defaults_on_three_transactions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("patterns.jsonl");
    ok(&["mine-usage", "--transactions", p(&fixture("three.tsv")), "--out", p(&out)]);
    let index = parse_patterns(&fs::read_to_string(&out).unwrap()).unwrap();
    let got: BTreeSet<_> = index
        .rules()
        .map(|r| (r.antecedent.iter().cloned().collect::<Vec<_>>(), r.consequent.clone(), r.support_count as usize, r.antecedent_support as usize))
        .collect();
    let tx = [["A", "B"].into(), ["A", "B", "C"].into(), ["A", "C"].into()];
    let expected = brute_force_rules(&tx, 2, (1, 2));
    assert_eq!(got, expected);
    assert_eq!(got.len(), 4);
}

#[test]
fn zero_budget_gives_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let patterns = dir.path().join("patterns.jsonl");
    let suite = dir.path().join("suite");
    ok(&["mine-docs", "--docs", p(&fixture("docs.jsonl")), "--out", p(&kb)]);
    ok(&["mine-usage", "--transactions", p(&fixture("three.tsv")), "--out", p(&patterns)]);
    let stdout = ok(&[
        "gen", "--kb", p(&kb), "--patterns", p(&patterns), "--target", "fx.cluster", "--budget-seconds", "0", "--out",
        p(&suite),
    ]);
    assert!(stdout.starts_with("0 tests"), "{stdout}");
    let manifest = Manifest::load(&suite).unwrap();
    assert!(manifest.tests.is_empty());
    assert_eq!(read_dir_bytes(&suite).len(), 1);
}

#[test]
fn check_reports_a_known_dtype_violation() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    ok(&["mine-docs", "--docs", p(&fixture("docs.jsonl")), "--out", p(&kb)]);
    let mut suite = TestSuite::new("fx.cluster", Backend::Random, 0, true);
    suite.tests.push(TestCase {
        id: "0000".into(),
        statements: vec![
            Statement::AssignLiteral {
                target: "v0".into(),
                value: Value::str("eight"),
            },
            Statement::Construct {
                target: "v1".into(),
                callee: "fx.cluster.KMeans".into(),
                args: vec![Arg::keyword("n_clusters", ArgValue::Var("v0".into()))],
            },
            Statement::AssertNotNone { var: "v1".into() },
        ],
        seed: 0,
        backend: Backend::Random,
    });
    let suite_dir = dir.path().join("suite");
    fs::create_dir(&suite_dir).unwrap();
    emit_suite(&suite, &suite_dir, &EmitStyle::default()).unwrap();
    let checks = dir.path().join("checks.jsonl");
    let stdout = ok(&["check", "--kb", p(&kb), "--suite", p(&suite_dir), "--out", p(&checks)]);
    assert!(stdout.contains("1 invalid (100.0%)"), "{stdout}");
    let records = parse_checks(&fs::read_to_string(&checks).unwrap()).unwrap();
    let CheckRecord::Summary(s) = &records[0] else { panic!("summary first") };
    assert!(s.invalid_rate > 0.0);
    assert!(records.iter().any(|r| matches!(r, CheckRecord::Violation(v) if v.param == "n_clusters")));
}

#[test]
fn report_handles_empty_and_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let checks = dir.path().join("checks.jsonl");
    fs::write(&checks, "").unwrap();
    let text = ok(&["report", "--checks", p(&checks)]);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("configuration"));

    let fb = dir.path().join("fb.txt");
    fs::write(&fb, "#branches\t10\n0000\tb1\nno-tab-here\n").unwrap();
    let out = apiknow(&["report", "--checks", p(&checks), "--feedback", p(&fb)]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();

    let unknown_flag = apiknow(&["mine-docs", "--bogus"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
    let no_file = apiknow(&["mine-docs", "--docs", p(&missing), "--out", p(&dir.path().join("kb.json"))]);
    assert_eq!(no_file.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&no_file.stderr).contains("missing input file"));
    let malformed = apiknow(&["mine-docs", "--docs", p(&bad), "--out", p(&dir.path().join("kb.json"))]);
    assert_eq!(malformed.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("invalid input"));
    let bad_conf = apiknow(&["mine-usage", "--transactions", p(&fixture("three.tsv")), "--min-confidence", "1.5", "--out", p(&bad)]);
    assert_eq!(bad_conf.status.code(), Some(2));
}

#[test]
fn config_file_supplies_paths_and_settings() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let patterns = dir.path().join("patterns.jsonl");
    let out = dir.path().join("suite");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "min_support = 3\n[paths]\ndocs = {:?}\nkb = {:?}\ntransactions = {:?}\npatterns = {:?}\nout = {:?}\n[gen]\nbudget_seconds = 1\nseed = 9\n",
            p(&fixture("docs.jsonl")),
            p(&kb),
            p(&fixture("three.tsv")),
            p(&patterns),
            p(&out)
        ),
    )
    .unwrap();
    ok(&["--config", p(&config), "mine-docs"]);
    let mined = ok(&["mine-usage", "--config", p(&config)]);
    assert!(mined.starts_with("0 rules"), "support 3 leaves no pair: {mined}");
    ok(&["--config", p(&config), "gen", "--target", "fx.metrics"]);
    let manifest = Manifest::load(&out).unwrap();
    assert_eq!(manifest.seed, 9);
    assert!(!manifest.tests.is_empty());
}

#[test]
fn file_pipeline_matches_single_process_run() {
    let dir = tempfile::tempdir().unwrap();
    let kb_path = dir.path().join("kb.json");
    let tx_path = dir.path().join("tx.tsv");
    let patterns_path = dir.path().join("patterns.jsonl");
    ok(&["mine-docs", "--docs", p(&fixture("docs.jsonl")), "--out", p(&kb_path)]);
    ok(&["extract-usage", "--posts", p(&fixture("posts.jsonl")), "--kb", p(&kb_path), "--out", p(&tx_path)]);
    ok(&["mine-usage", "--transactions", p(&tx_path), "--out", p(&patterns_path)]);

    let kb = build_kb(&load_corpus(&fixture("docs.jsonl")).unwrap()).unwrap();
    assert_eq!(fs::read_to_string(&kb_path).unwrap(), kb.to_json());
    let known = KnownApis::new(kb.entries.keys().cloned());
    let transactions = build_transactions(&load_posts(&fixture("posts.jsonl")).unwrap(), &known);
    assert_eq!(fs::read_to_string(&tx_path).unwrap(), render_transactions(&transactions));
    let itemsets = mine_frequent_itemsets(&transactions, 2);
    let patterns = PatternIndex::build(&derive_rules(&itemsets, Ratio::parse_decimal("0.5").unwrap()));
    assert_eq!(fs::read_to_string(&patterns_path).unwrap(), render_patterns(&patterns));

    for (backend, flag) in [(Backend::Random, "random"), (Backend::Search, "search")] {
        let cli_dir = dir.path().join(format!("cli-{flag}"));
        let lib_dir = dir.path().join(format!("lib-{flag}"));
        ok(&[
            "gen", "--kb", p(&kb_path), "--patterns", p(&patterns_path), "--target", "fx.cluster", "--backend", flag,
            "--budget-seconds", "2", "--seed", "5", "--out", p(&cli_dir),
        ]);
        let cfg = GenConfig {
            backend,
            budget_seconds: 2,
            seed: 5,
            ..GenConfig::default()
        };
        let suite = generate(&kb, &patterns, "fx.cluster", &cfg, None).unwrap();
        fs::create_dir(&lib_dir).unwrap();
        emit_suite(&suite, &lib_dir, &EmitStyle::default()).unwrap();
        assert_eq!(read_dir_bytes(&cli_dir), read_dir_bytes(&lib_dir), "{flag}");

        let checks = dir.path().join(format!("checks-{flag}.jsonl"));
        ok(&["check", "--kb", p(&kb_path), "--suite", p(&cli_dir), "--out", p(&checks)]);
        let expected = render_checks(&check_suite(&suite, &kb, &PatternIndex::empty(), ProxyWeights::default()));
        assert_eq!(fs::read_to_string(&checks).unwrap(), expected);
    }
}

#[test]
fn feedback_seeds_the_next_search_run() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let patterns = dir.path().join("patterns.jsonl");
    let suite = dir.path().join("suite");
    ok(&["mine-docs", "--docs", p(&fixture("docs.jsonl")), "--out", p(&kb)]);
    ok(&["mine-usage", "--transactions", p(&fixture("three.tsv")), "--out", p(&patterns)]);
    let gen = |extra: &[&str]| {
        let mut args = vec![
            "gen", "--kb", p(&kb), "--patterns", p(&patterns), "--target", "fx.preprocessing", "--backend", "search",
            "--budget-seconds", "1", "--seed", "2", "--out", p(&suite),
        ];
        args.extend_from_slice(extra);
        ok(&args)
    };
    let fb = dir.path().join("fb.txt");
    let missing = apiknow(&[
        "gen", "--kb", p(&kb), "--patterns", p(&patterns), "--target", "fx.preprocessing", "--out", p(&suite), "--feedback",
        p(&fb),
    ]);
    assert_eq!(missing.status.code(), Some(3));

    gen(&[]);
    let first = Manifest::load(&suite).unwrap();
    let lines: String = first.tests.iter().map(|t| format!("{}\tbr{}\n", t.test_id, t.test_id)).collect();
    fs::write(&fb, format!("#branches\t50\n{lines}")).unwrap();
    gen(&["--feedback", p(&fb)]);
    let second = Manifest::load(&suite).unwrap();
    let before: BTreeSet<_> = first.tests.iter().map(|t| t.fingerprint.clone()).collect();
    let after: BTreeSet<_> = second.tests.iter().map(|t| t.fingerprint.clone()).collect();
    assert!(before.is_subset(&after), "covered prior tests survive: {before:?} vs {after:?}");
}
