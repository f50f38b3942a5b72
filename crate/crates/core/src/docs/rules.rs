//! Linguistic rules for mining constraints from parametric pages.
//!
//! Each rule is a textual template compiled to a regular expression over a
//! closed slot vocabulary. Rules are searched anywhere in a normalized
//! sentence; the rule with the longest match wins, ties going to the lower
//! rule number.

use std::sync::OnceLock;

use regex::{Captures, Regex};

use crate::model::{
    DataType, FieldKind, Literal, Mined, ParamConstraint, Provenance, ShapeSpec, Structure,
};

const DTYPE: &str = r"\b(?i:integer|int|float|string|str|boolean|bool)s?\b";
const STRUCT: &str = r"\b(?i:array-like|array_like|sparse\s+matri(?:x|ces)|ndarrays?|arrays?|lists?|tuples?|sets?|dicts?|dictionar(?:y|ies)|sequences?|matri(?:x|ces)|scalars?)\b";
const VALUE: &str = r#"(?:'[^']*'|"[^"]*"|\b(?:None|True|False)\b|-?\b\d+(?:\.\d+)?(?:[eE][-+]?\d+)?\b)"#;
const SHAPE: &str = r"\(\s*\w+\s*(?:,\s*\w+\s*)*,?\s*\)";
const DEFAULT: &str = r"\bdefault\s*[=:]?\s*";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub u8);

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "R{}", self.0)
    }
}

pub struct LinguisticRule {
    pub id: RuleId,
    /// Human-readable template with typed slots.
    pub pattern: &'static str,
    pub yields: &'static [FieldKind],
    regex: Regex,
    extract: fn(&Captures) -> ParamConstraint,
}

impl LinguisticRule {
    pub fn regex(&self) -> &Regex {
        &self.regex
    }
}

/// Outcome of rule application: the winning rule (if any) and its fields.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleMatch {
    pub rule: Option<RuleId>,
    pub constraint: ParamConstraint,
}

use FieldKind as K;

pub fn rules() -> &'static [LinguisticRule] {
    static RULES: OnceLock<Vec<LinguisticRule>> = OnceLock::new();
    RULES.get_or_init(build_rules)
}

fn build_rules() -> Vec<LinguisticRule> {
    let struct_enum = format!(r"\{{\s*{STRUCT}\s*(?:,\s*{STRUCT}\s*)*\}}");
    let values_enum = format!(r"\{{\s*{VALUE}\s*(?:,\s*{VALUE}\s*)*\}}");
    let specs: Vec<(u8, &'static str, &'static [FieldKind], String, fn(&Captures) -> ParamConstraint)> = vec![
        (
            1,
            "<D_type> default=<value>",
            &[K::DataType, K::DefaultValue],
            format!(r"(?P<dtype>{DTYPE})\s*,?\s*{DEFAULT}(?P<default>{VALUE})"),
            |c| dtype(c).and_default(c),
        ),
        (
            2,
            "<D_type> or <D_type>",
            &[K::DataType],
            format!(r"(?P<dtypes>{DTYPE}(?:\s*,\s*{DTYPE})*\s*,?\s+or\s+{DTYPE})"),
            |c| {
                let mut out = ParamConstraint::default();
                out.data_type = Some(page(dtypes_in(&c["dtypes"])));
                out
            },
        ),
        (
            3,
            "<Structure> of shape <(shape)>, default=<value>",
            &[K::Structure, K::Shape, K::DefaultValue],
            format!(r"(?P<structure>{STRUCT})\s+of\s+shape\s+(?P<shape>{SHAPE})(?:\s*,?\s*{DEFAULT}(?P<default>{VALUE}))?"),
            |c| structure(c).and_shapes(c).and_default(c),
        ),
        (
            4,
            "<Structure_Enum> of shape <(shape)>, default=<value>",
            &[K::Structure, K::Shape, K::DefaultValue],
            format!(r"(?P<structs>{struct_enum})\s*of\s+shape\s+(?P<shape>{SHAPE})(?:\s*,?\s*{DEFAULT}(?P<default>{VALUE}))?"),
            |c| structures(c).and_shapes(c).and_default(c),
        ),
        (
            5,
            "<Structure> of shape <(shape)> or <(shape)>",
            &[K::Structure, K::Shape],
            format!(r"(?P<structure>{STRUCT})\s+of\s+shape\s+(?P<shape>{SHAPE})\s*,?\s+or\s+(?P<shape2>{SHAPE})"),
            |c| structure(c).and_shapes(c),
        ),
        (
            6,
            "<D_type>/<structure>",
            &[K::Structure, K::DataType],
            format!(r"\b[A-Za-z_]\w*\s*:\s*(?P<word>{DTYPE}|{STRUCT})"),
            |c| {
                let word = &c["word"];
                let mut out = ParamConstraint::default();
                if let Some(t) = DataType::from_word(word) {
                    out.data_type = Some(page(vec![t]));
                } else if let Some(s) = Structure::from_word(word) {
                    out.structure = Some(page(vec![s]));
                }
                out
            },
        ),
        (
            7,
            "{Structure_Enum}",
            &[K::Structure],
            format!(r"(?P<structs>{struct_enum})"),
            structures,
        ),
        (
            8,
            "{Values_Enum} default=<value>",
            &[K::AllowedValues, K::DefaultValue],
            format!(r"(?P<values>{values_enum})\s*,?\s*{DEFAULT}(?P<default>{VALUE})"),
            |c| values(&c["values"]).and_default(c),
        ),
        (
            9,
            "{Values_Enum}",
            &[K::AllowedValues],
            format!(r"(?P<values>{values_enum})"),
            |c| values(&c["values"]),
        ),
        (
            10,
            "<Size> length of {Structure_Enum}",
            &[K::Size, K::Structure],
            format!(r"\b(?P<size>\d+)\s*-?\s*length\s+(?:of\s+)?(?P<structs>(?:{STRUCT}\s*)?[\(\{{]\s*{STRUCT}\s*(?:,\s*{STRUCT}\s*)*(?:,\s*\.\.\.\s*)?[\)\}}])"),
            |c| {
                let mut out = structures(c);
                out.size = c["size"].parse().ok().map(page);
                out
            },
        ),
        (
            11,
            "<Dimension> d <structure>",
            &[K::Dimension, K::Structure],
            format!(r"\b(?P<dim>[1-9]\d*)\s*-?\s*[dD]\s+(?P<structure>{STRUCT})"),
            |c| {
                let mut out = structure(c);
                out.dimension = c["dim"].parse().ok().map(page);
                out
            },
        ),
        (
            12,
            "<value> (def), <value>, .... or <value>",
            &[K::DefaultValue, K::AllowedValues],
            format!(r"(?P<default>{VALUE})\s*\((?:def|default)\)(?P<rest>(?:\s*,\s*(?:or\s+)?{VALUE}|\s+or\s+{VALUE})+)"),
            |c| {
                let mut all = vec![Literal::parse_python(&c["default"])];
                all.extend(values_in(&c["rest"]));
                let mut out = ParamConstraint::default();
                out.allowed_values = Some(page(dedup(all)));
                out.and_default(c)
            },
        ),
        (
            13,
            "<Structure> of <D_type>",
            &[K::Structure, K::DataType],
            format!(r"(?P<structure>{STRUCT})\s+of\s+(?P<dtype>{DTYPE})"),
            |c| {
                let mut out = structure(c);
                out.data_type = dtype(c).data_type;
                out
            },
        ),
        (
            14,
            "<value> or <value>",
            &[K::AllowedValues],
            format!(r"(?P<values>{VALUE}\s*,?\s+or\s+{VALUE})"),
            |c| values(&c["values"]),
        ),
        (
            15,
            "<D_type>, optional",
            &[K::DataType, K::Optional],
            format!(r"\(?\s*(?P<dtype>{DTYPE})\s*,\s*optional\b\s*\)?"),
            |c| {
                let mut out = dtype(c);
                out.optional = Some(page(true));
                out
            },
        ),
        (
            16,
            "<Structure>, optional",
            &[K::Structure, K::Optional],
            format!(r"\(?\s*(?P<structure>{STRUCT})\s*,\s*optional\b\s*\)?"),
            |c| {
                let mut out = structure(c);
                out.optional = Some(page(true));
                out
            },
        ),
        (
            17,
            "<D_type> or <value>",
            &[K::DataType, K::AllowedValues],
            format!(r"(?P<dtype>{DTYPE})\s*,?\s+or\s+(?P<values>{VALUE})"),
            |c| {
                let mut out = dtype(c);
                out.allowed_values = values(&c["values"]).allowed_values;
                out
            },
        ),
        (
            18,
            "<D_type> or <value> default=<value>",
            &[K::DataType, K::AllowedValues, K::DefaultValue],
            format!(r"(?P<dtype>{DTYPE})\s*,?\s+or\s+(?P<values>{VALUE})\s*,?\s*{DEFAULT}(?P<default>{VALUE})"),
            |c| {
                let mut out = dtype(c);
                out.allowed_values = values(&c["values"]).allowed_values;
                out.and_default(c)
            },
        ),
    ];
    specs
        .into_iter()
        .map(|(id, pattern, yields, re, extract)| LinguisticRule {
            id: RuleId(id),
            pattern,
            yields,
            regex: Regex::new(&re).unwrap_or_else(|e| panic!("rule R{id} regex: {e}")),
            extract,
        })
        .collect()
}

trait WithDefault {
    fn and_default(self, c: &Captures) -> ParamConstraint;
    fn and_shapes(self, c: &Captures) -> ParamConstraint;
}

impl WithDefault for ParamConstraint {
    fn and_default(mut self, c: &Captures) -> ParamConstraint {
        if let Some(d) = c.name("default") {
            self.default_value = Some(page(Literal::parse_python(d.as_str())));
        }
        self
    }

    fn and_shapes(mut self, c: &Captures) -> ParamConstraint {
        let shapes: Vec<ShapeSpec> = ["shape", "shape2"]
            .iter()
            .filter_map(|n| c.name(n))
            .filter_map(|m| ShapeSpec::parse(m.as_str()))
            .collect();
        if !shapes.is_empty() {
            self.shape = Some(page(shapes));
        }
        self
    }
}

fn page<T>(value: T) -> Mined<T> {
    Mined::new(value, Provenance::ParametricPage)
}

fn dtype(c: &Captures) -> ParamConstraint {
    let mut out = ParamConstraint::default();
    if let Some(t) = c.name("dtype").and_then(|m| DataType::from_word(m.as_str())) {
        out.data_type = Some(page(vec![t]));
    }
    out
}

fn structure(c: &Captures) -> ParamConstraint {
    let mut out = ParamConstraint::default();
    if let Some(s) = c.name("structure").and_then(|m| Structure::from_word(m.as_str())) {
        out.structure = Some(page(vec![s]));
    }
    out
}

fn structures(c: &Captures) -> ParamConstraint {
    let mut out = ParamConstraint::default();
    let found = structures_in(&c["structs"]);
    if !found.is_empty() {
        out.structure = Some(page(found));
    }
    out
}

fn word_regex(slot: &'static str, cell: &'static OnceLock<Regex>) -> &'static Regex {
    cell.get_or_init(|| Regex::new(slot).expect("slot regex"))
}

fn structures_in(text: &str) -> Vec<Structure> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let found = word_regex(STRUCT, &RE)
        .find_iter(text)
        .filter_map(|m| Structure::from_word(&m.as_str().split_whitespace().collect::<Vec<_>>().join(" ")))
        .collect();
    dedup(found)
}

fn dtypes_in(text: &str) -> Vec<DataType> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let found = word_regex(DTYPE, &RE)
        .find_iter(text)
        .filter_map(|m| DataType::from_word(m.as_str()))
        .collect();
    dedup(found)
}

fn values_in(text: &str) -> Vec<Literal> {
    static RE: OnceLock<Regex> = OnceLock::new();
    word_regex(VALUE, &RE)
        .find_iter(text)
        .map(|m| Literal::parse_python(m.as_str()))
        .collect()
}

fn values(text: &str) -> ParamConstraint {
    let mut out = ParamConstraint::default();
    let found = dedup(values_in(text));
    if !found.is_empty() {
        out.allowed_values = Some(page(found));
    }
    out
}

fn dedup<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Cleans a raw documentation sentence: typographic quotes and ellipses
/// become ASCII, control characters are dropped, whitespace runs collapse,
/// and leading bullets / trailing punctuation are stripped. Brackets and
/// quotes are left alone.
pub fn normalize_sentence(raw: &str) -> String {
    let mut mapped = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' => mapped.push('\''),
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' => mapped.push('"'),
            '\u{2026}' => mapped.push_str("..."),
            '\u{2013}' | '\u{2014}' => mapped.push('-'),
            '\u{00A0}' | '\u{2009}' | '\u{202F}' => mapped.push(' '),
            c if c.is_whitespace() => mapped.push(' '),
            c if c.is_control() => {}
            '\u{200B}' | '\u{FEFF}' => {}
            c => mapped.push(c),
        }
    }
    let collapsed = mapped.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut s = collapsed.as_str();
    s = s.trim_start_matches(['-', '*', '\u{2022}', ',', ';', ':', '.', ' ']);
    loop {
        let before = s.len();
        s = s.trim_end_matches([',', ';', ':', ' ']);
        if s.ends_with('.') && !s.ends_with("...") {
            s = &s[..s.len() - 1];
        }
        if s.len() == before {
            break;
        }
    }
    s.to_string()
}

/// Applies the rules to one normalized sentence. First match wins under the
/// specificity order; no match leaves every field undefined.
pub fn apply_rules(sentence: &str) -> RuleMatch {
    let mut best: Option<(usize, &LinguisticRule, Captures)> = None;
    for rule in rules() {
        for caps in rule.regex.captures_iter(sentence) {
            let len = caps.get(0).map_or(0, |m| m.len());
            let better = match &best {
                None => true,
                Some((best_len, best_rule, _)) => {
                    len > *best_len || (len == *best_len && rule.id < best_rule.id)
                }
            };
            if better {
                best = Some((len, rule, caps));
            }
        }
    }
    match best {
        Some((_, rule, caps)) => RuleMatch {
            rule: Some(rule.id),
            constraint: (rule.extract)(&caps),
        },
        None => RuleMatch {
            rule: None,
            constraint: ParamConstraint::default(),
        },
    }
}

/// Splits a parameter's documentation into sentences (line breaks and
/// sentence-ending periods followed by a capital letter).
pub fn split_sentences(doc: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in doc.split('\n') {
        let chars: Vec<char> = line.chars().collect();
        let mut start = 0;
        for i in 0..chars.len() {
            let ends = chars[i] == '.'
                && chars.get(i + 1).is_some_and(|c| c.is_whitespace())
                && chars[i + 1..]
                    .iter()
                    .find(|c| !c.is_whitespace())
                    .is_some_and(|c| c.is_uppercase());
            if ends {
                out.push(chars[start..=i].iter().collect::<String>());
                start = i + 1;
            }
        }
        out.push(chars[start..].iter().collect::<String>());
    }
    out.into_iter()
        .map(|s| normalize_sentence(&s))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Mines one parameter's documentation: rules applied per sentence, earlier
/// sentences taking precedence field by field.
pub fn mine_parametric_page(doc: &str) -> ParamConstraint {
    let mut out = ParamConstraint::default();
    for sentence in split_sentences(doc) {
        let m = apply_rules(&sentence);
        out.fill_missing_from(&m.constraint);
    }
    out
}
