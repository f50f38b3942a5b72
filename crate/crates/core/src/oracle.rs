//! Execution-free test checking: argument validity against mined
//! constraints, and a model-coverage score used as search fitness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    ApiId, ApiSpec, DataType, Dim, KnowledgeBase, ParamConstraint, ShapeSpec, Structure, Value,
};
use crate::suite::{ArgValue, Binding, Statement, TestCase, TestSuite};
use crate::usage::{Itemset, PatternIndex, UsageRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Dtype,
    Structure,
    Dimension,
    Shape,
    Size,
    AllowedValue,
    MissingRequired,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Dtype => "dtype",
            ViolationKind::Structure => "structure",
            ViolationKind::Dimension => "dimension",
            ViolationKind::Shape => "shape",
            ViolationKind::Size => "size",
            ViolationKind::AllowedValue => "allowed-value",
            ViolationKind::MissingRequired => "missing-required",
        })
    }
}

/// The first failing check for one value, with readable summaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub kind: ViolationKind,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub test_id: String,
    pub statement: usize,
    pub api_id: ApiId,
    pub param: String,
    pub kind: ViolationKind,
    pub expected: String,
    pub actual: String,
}

/// What an argument evaluates to without running anything.
#[derive(Clone, Debug, PartialEq)]
pub enum Operand<'a> {
    Value(&'a Value),
    /// Result of a constructor or call.
    Object(&'a ApiId),
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn describe(v: &Value) -> String {
    let kind = match v {
        Value::Scalar(l) => {
            return match DataType::of(l) {
                Some(t) => format!("{t} {l}"),
                None => l.to_string(),
            }
        }
        Value::List(_) => "list",
        Value::Tuple(_) => "tuple",
        Value::Set(_) => "set",
        Value::Dict(_) => "dict",
    };
    let shape = v
        .shape()
        .map(|s| format!(" of shape ({})", join(&s, ", ")))
        .unwrap_or_else(|| " (ragged)".into());
    match v.element_type() {
        Some(t) => format!("{kind}{shape} of {t}"),
        None => format!("{kind}{shape}"),
    }
}

fn structure_matches(s: Structure, v: &Value) -> bool {
    match (s, v) {
        (Structure::ArrayLike | Structure::Sequence, Value::List(_) | Value::Tuple(_)) => true,
        (Structure::List, Value::List(_)) => true,
        (Structure::Tuple, Value::Tuple(_)) => true,
        (Structure::Set, Value::Set(_)) => true,
        (Structure::Dict, Value::Dict(_)) => true,
        (Structure::Scalar, Value::Scalar(_)) => true,
        _ => false,
    }
}

/// Whether concrete lengths fit a shape, binding equal symbols to equal
/// lengths.
pub fn shape_unifies(spec: &ShapeSpec, dims: &[usize]) -> bool {
    if spec.rank() != dims.len() {
        return false;
    }
    let mut bound: BTreeMap<&str, usize> = BTreeMap::new();
    for (d, &n) in spec.dims.iter().zip(dims) {
        match d {
            Dim::Fixed(k) => {
                if *k != n as u64 {
                    return false;
                }
            }
            Dim::Symbol(s) => {
                if n == 0 || *bound.entry(s).or_insert(n) != n {
                    return false;
                }
            }
        }
    }
    true
}

/// Structure a constraint asks for. A bare data type (no structure, shape,
/// size or dimension) describes a single scalar.
fn effective_structure(c: &ParamConstraint) -> Option<Vec<Structure>> {
    if let Some(s) = &c.structure {
        return Some(s.value.clone());
    }
    let bare = c.data_type.is_some() && c.shape.is_none() && c.size.is_none() && c.dimension.is_none();
    bare.then(|| vec![Structure::Scalar])
}

/// Checks a value against a constraint. Checks run in the order data type,
/// structure, dimension, shape, size, allowed values; undefined fields pass.
/// The declared default and enumerated scalars are always acceptable.
pub fn check_value(v: &Value, c: &ParamConstraint) -> Result<(), Failure> {
    let fail = |kind, expected: String| Err(Failure {
        kind,
        expected,
        actual: describe(v),
    });
    if let (Some(d), Value::Scalar(l)) = (&c.default_value, v) {
        if &d.value == l {
            return Ok(());
        }
    }
    let allowed = c.allowed_values.as_ref().map(|m| &m.value);
    if let (Some(a), Value::Scalar(l)) = (allowed, v) {
        if a.contains(l) {
            return Ok(());
        }
    }
    if let Some(types) = &c.data_type {
        let ok = v.leaves().iter().all(|l| {
            DataType::of(l).is_some_and(|t| types.value.iter().any(|want| want.accepts(t)))
        });
        if !ok {
            return fail(ViolationKind::Dtype, join(&types.value, " or "));
        }
    }
    if let Some(structs) = effective_structure(c) {
        if !structs.iter().any(|s| structure_matches(*s, v)) {
            return fail(ViolationKind::Structure, join(&structs, " or "));
        }
    }
    if let Some(d) = &c.dimension {
        if v.depth() != Some(d.value as usize) {
            return fail(ViolationKind::Dimension, format!("{}-d", d.value));
        }
    }
    if let Some(shapes) = &c.shape {
        let ok = v
            .shape()
            .is_some_and(|dims| shapes.value.iter().any(|s| shape_unifies(s, &dims)));
        if !ok {
            return fail(ViolationKind::Shape, join(&shapes.value, " or "));
        }
    }
    if let Some(size) = &c.size {
        let len = match v {
            Value::List(x) | Value::Tuple(x) | Value::Set(x) => Some(x.len()),
            Value::Dict(kv) => Some(kv.len()),
            Value::Scalar(_) => None,
        };
        if len != Some(size.value as usize) {
            return fail(ViolationKind::Size, format!("length {}", size.value));
        }
    }
    if let Some(a) = allowed {
        // With a data type, enumerated values are extra choices; only a value
        // of an enumerated kind outside the set is rejected.
        let enumerated_kind = match v {
            Value::Scalar(l) => a.iter().any(|x| x.kind() == l.kind()),
            _ => false,
        };
        if c.data_type.is_none() || enumerated_kind {
            return fail(ViolationKind::AllowedValue, format!("one of {{{}}}", join(a, ", ")));
        }
    }
    Ok(())
}

/// Checks an operand; objects only satisfy constraints that say nothing
/// about the value's form.
pub fn check_operand(op: &Operand, c: &ParamConstraint) -> Result<(), Failure> {
    match op {
        Operand::Value(v) => check_value(v, c),
        Operand::Object(api) => {
            let actual = format!("object from {api}");
            let first = if let Some(t) = &c.data_type {
                Some((ViolationKind::Dtype, join(&t.value, " or ")))
            } else if let Some(s) = effective_structure(c) {
                Some((ViolationKind::Structure, join(&s, " or ")))
            } else if let Some(d) = &c.dimension {
                Some((ViolationKind::Dimension, format!("{}-d", d.value)))
            } else if let Some(s) = &c.shape {
                Some((ViolationKind::Shape, join(&s.value, " or ")))
            } else if let Some(s) = &c.size {
                Some((ViolationKind::Size, format!("length {}", s.value)))
            } else {
                c.allowed_values
                    .as_ref()
                    .map(|a| (ViolationKind::AllowedValue, format!("one of {{{}}}", join(&a.value, ", "))))
            };
            match first {
                Some((kind, expected)) => Err(Failure { kind, expected, actual }),
                None => Ok(()),
            }
        }
    }
}

/// Binds a statement's arguments to parameters. Returns the bound operands
/// (absent = omitted) and warnings for arguments that bind nowhere.
fn bind<'a>(
    spec: &ApiSpec,
    args: &'a [crate::suite::Arg],
    defs: &BTreeMap<&str, &'a Statement>,
) -> (BTreeMap<String, Option<Operand<'a>>>, Vec<String>) {
    let positional: Vec<&str> = spec.bindable_params().map(|p| p.name.as_str()).collect();
    let mut bound = BTreeMap::new();
    let mut warnings = Vec::new();
    for a in args {
        let name = match &a.binding {
            Binding::Position(i) => positional.get(*i).map(|s| s.to_string()),
            Binding::Keyword(k) => spec.bindable_params().find(|p| &p.name == k).map(|p| p.name.clone()),
        };
        let Some(name) = name else {
            warnings.push(format!("{}: argument {:?} binds to no parameter", spec.api_id, a.binding));
            continue;
        };
        let op = match &a.value {
            ArgValue::Omitted => None,
            ArgValue::Literal(v) => Some(Operand::Value(v)),
            ArgValue::Var(var) => match defs.get(var.as_str()) {
                Some(Statement::AssignLiteral { value, .. }) => Some(Operand::Value(value)),
                Some(Statement::Construct { callee, .. }) | Some(Statement::Call { callee, .. }) => {
                    Some(Operand::Object(callee))
                }
                _ => {
                    warnings.push(format!("{}: argument uses undefined variable {var}", spec.api_id));
                    continue;
                }
            },
        };
        if bound.insert(name.clone(), op).is_some() {
            warnings.push(format!("{}: parameter {name} bound twice", spec.api_id));
        }
    }
    (bound, warnings)
}

/// Violations of one call statement; `None` when the callee is unknown.
pub fn check_statement(
    test: &TestCase,
    index: usize,
    kb: &KnowledgeBase,
) -> Option<(Vec<Violation>, Vec<String>)> {
    let stmt = &test.statements[index];
    let callee = stmt.callee()?;
    let (spec, constraints) = kb.lookup(callee)?;
    let defs = test.definitions();
    let (bound, warnings) = bind(spec, stmt.args(), &defs);
    let mut out = Vec::new();
    let undefined = ParamConstraint::default();
    for p in spec.bindable_params() {
        let violation = |kind, expected: String, actual: String| Violation {
            test_id: test.id.clone(),
            statement: index,
            api_id: callee.clone(),
            param: p.name.clone(),
            kind,
            expected,
            actual,
        };
        match bound.get(&p.name) {
            None | Some(None) => {
                if p.is_required {
                    out.push(violation(ViolationKind::MissingRequired, "an argument".into(), "omitted".into()));
                }
            }
            Some(Some(op)) => {
                let c = constraints.get(&p.name).unwrap_or(&undefined);
                if let Err(f) = check_operand(op, c) {
                    out.push(violation(f.kind, f.expected, f.actual));
                }
            }
        }
    }
    Some((out, warnings))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestVerdict {
    pub test_id: String,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl TestVerdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A test is invalid when any argument violates a mined constraint or any
/// required parameter is omitted. Calls to APIs outside the knowledge base
/// only produce warnings.
pub fn check_test(test: &TestCase, kb: &KnowledgeBase) -> TestVerdict {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    for (i, s) in test.statements.iter().enumerate() {
        let Some(callee) = s.callee() else { continue };
        match check_statement(test, i, kb) {
            Some((v, w)) => {
                violations.extend(v);
                warnings.extend(w);
            }
            None => warnings.push(format!("{callee} is not in the knowledge base; not checked")),
        }
    }
    TestVerdict {
        test_id: test.id.clone(),
        violations,
        warnings,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyWeights {
    pub satisfied: f64,
    pub apis: f64,
    pub transitions: f64,
}

impl Default for ProxyWeights {
    fn default() -> ProxyWeights {
        ProxyWeights {
            satisfied: 0.5,
            apis: 0.3,
            transitions: 0.2,
        }
    }
}

/// A usage rule seen in action: its consequent called after its whole
/// antecedent.
pub type Transition = (Vec<ApiId>, ApiId);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCoverage {
    /// Module APIs called at least once with every argument valid.
    pub satisfied_apis: BTreeSet<ApiId>,
    pub called_apis: BTreeSet<ApiId>,
    pub conforming_transitions: BTreeSet<Transition>,
    pub module_api_count: usize,
    /// Rules whose APIs all belong to the module.
    pub module_rule_count: usize,
    pub score: f64,
}

fn transition(r: &UsageRule) -> Transition {
    (r.antecedent.iter().cloned().collect(), r.consequent.clone())
}

/// Rules realized by calling `b` once every API in `prefix` has been called.
pub fn conforming_rules<'a>(b: &str, prefix: &Itemset, patterns: &'a PatternIndex) -> Vec<&'a UsageRule> {
    patterns
        .rules()
        .filter(|r| r.consequent == b && r.antecedent.is_subset(prefix))
        .collect()
}

pub fn model_coverage(
    suite: &TestSuite,
    module: &str,
    kb: &KnowledgeBase,
    patterns: &PatternIndex,
    weights: ProxyWeights,
) -> ModelCoverage {
    model_coverage_of(&suite.tests, module, kb, patterns, weights)
}

/// Weighted sum of three set-valued components, each normalized to [0, 1]:
/// module APIs called with valid arguments, module APIs called, and module
/// rules realized. Adding tests never lowers the score.
pub fn model_coverage_of(
    tests: &[TestCase],
    module: &str,
    kb: &KnowledgeBase,
    patterns: &PatternIndex,
    weights: ProxyWeights,
) -> ModelCoverage {
    let module_apis: BTreeSet<&ApiId> = kb.module_apis(module).into_iter().map(|s| &s.api_id).collect();
    let in_module = |r: &UsageRule| {
        module_apis.contains(&r.consequent) && r.antecedent.iter().all(|a| module_apis.contains(a))
    };
    let rule_count = patterns.rules().filter(|r| in_module(r)).count();
    let mut satisfied = BTreeSet::new();
    let mut called = BTreeSet::new();
    let mut conforming = BTreeSet::new();
    for t in tests {
        let mut prefix = Itemset::new();
        for (i, s) in t.statements.iter().enumerate() {
            let Some(callee) = s.callee() else { continue };
            if module_apis.contains(callee) {
                called.insert(callee.clone());
                if check_statement(t, i, kb).is_some_and(|(v, _)| v.is_empty()) {
                    satisfied.insert(callee.clone());
                }
                for r in conforming_rules(callee, &prefix, patterns) {
                    if in_module(r) {
                        conforming.insert(transition(r));
                    }
                }
            }
            prefix.insert(callee.clone());
        }
    }
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let n = module_apis.len();
    let score = weights.satisfied * ratio(satisfied.len(), n)
        + weights.apis * ratio(called.len(), n)
        + weights.transitions * ratio(conforming.len(), rule_count);
    ModelCoverage {
        satisfied_apis: satisfied,
        called_apis: called,
        conforming_transitions: conforming,
        module_api_count: n,
        module_rule_count: rule_count,
        score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ApiKind, Literal, Mined, ParamSpec, Provenance};
    use crate::suite::{Arg, Backend};

    fn m<T>(v: T) -> Option<Mined<T>> {
        Some(Mined::new(v, Provenance::ParametricPage))
    }

    fn fit_x() -> ParamConstraint {
        ParamConstraint {
            structure: m(vec![Structure::ArrayLike]),
            data_type: m(vec![DataType::Integer]),
            dimension: m(2),
            shape: m(vec![ShapeSpec::parse("(n, n)").unwrap()]),
            ..ParamConstraint::default()
        }
    }

    fn grid(rows: usize, cols: usize) -> Value {
        Value::List((0..rows).map(|r| Value::List((0..cols).map(|c| Value::int((r * cols + c) as i64)).collect())).collect())
    }

    #[test]
    fn check_order_and_shapes() {
        let int_only = ParamConstraint {
            data_type: m(vec![DataType::Integer]),
            ..ParamConstraint::default()
        };
        assert_eq!(check_value(&Value::str("a"), &int_only).unwrap_err().kind, ViolationKind::Dtype);
        assert_eq!(check_value(&grid(2, 2), &fit_x()), Ok(()));
        assert_eq!(check_value(&grid(2, 3), &fit_x()).unwrap_err().kind, ViolationKind::Shape);
        assert_eq!(check_value(&grid(2, 2).clone(), &int_only).unwrap_err().kind, ViolationKind::Structure);
        let flat = Value::List(vec![Value::int(1)]);
        assert_eq!(check_value(&flat, &fit_x()).unwrap_err().kind, ViolationKind::Dimension);
        assert_eq!(check_value(&Value::none(), &fit_x()).unwrap_err().kind, ViolationKind::Dtype);
    }

    #[test]
    fn defaults_and_enumerations() {
        let c = ParamConstraint {
            data_type: m(vec![DataType::Integer]),
            allowed_values: m(vec![Literal::Str("all".into())]),
            default_value: m(Literal::Int(10)),
            ..ParamConstraint::default()
        };
        assert!(check_value(&Value::int(3), &c).is_ok());
        assert!(check_value(&Value::str("all"), &c).is_ok());
        assert_eq!(check_value(&Value::str("some"), &c).unwrap_err().kind, ViolationKind::Dtype);
        let e = ParamConstraint {
            allowed_values: m(vec![Literal::Str("text".into()), Literal::Str("diagram".into())]),
            default_value: m(Literal::None),
            ..ParamConstraint::default()
        };
        assert!(check_value(&Value::none(), &e).is_ok());
        assert!(check_value(&Value::str("diagram"), &e).is_ok());
        assert_eq!(check_value(&Value::str("x"), &e).unwrap_err().kind, ViolationKind::AllowedValue);
        assert_eq!(check_value(&Value::int(1), &e).unwrap_err().kind, ViolationKind::AllowedValue);
    }

    #[test]
    fn size_and_unification() {
        let c = ParamConstraint {
            size: m(2),
            structure: m(vec![Structure::Sequence]),
            ..ParamConstraint::default()
        };
        assert!(check_value(&Value::Tuple(vec![Value::int(1), Value::int(2)]), &c).is_ok());
        assert_eq!(check_value(&Value::List(vec![Value::int(1)]), &c).unwrap_err().kind, ViolationKind::Size);
        let s = ShapeSpec::parse("(n, m, n)").unwrap();
        assert!(shape_unifies(&s, &[2, 5, 2]));
        assert!(!shape_unifies(&s, &[2, 5, 3]));
        assert!(!shape_unifies(&s, &[2, 5]));
        assert!(shape_unifies(&ShapeSpec::parse("(3,)").unwrap(), &[3]));
    }

    fn kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new("fx", "1");
        let ctor = ApiSpec {
            api_id: "fx.cluster.KMeans".into(),
            kind: ApiKind::ClassConstructor,
            owner: None,
            params: vec![ParamSpec::optional("n_clusters", 0, Literal::Int(8))],
        };
        let n = ParamConstraint {
            data_type: m(vec![DataType::Integer]),
            ..ParamConstraint::default()
        };
        kb.insert(ctor, [("n_clusters".to_string(), n)].into_iter().collect());
        for name in ["fit", "predict"] {
            let spec = ApiSpec {
                api_id: format!("fx.cluster.KMeans.{name}"),
                kind: ApiKind::Method,
                owner: Some("fx.cluster.KMeans".into()),
                params: vec![ParamSpec::required("X", 0)],
            };
            kb.insert(spec, [("X".to_string(), fit_x())].into_iter().collect());
        }
        kb
    }

    #[test]
    fn valid_and_invalid_tests() {
        let good = crate::suite::tests::fit_predict();
        let v = check_test(&good, &kb());
        assert!(v.is_valid(), "{:?}", v.violations);

        let mut bad = good.clone();
        bad.statements[0] = Statement::AssignLiteral {
            target: "a".into(),
            value: Value::str("k"),
        };
        if let Statement::Call { args, .. } = &mut bad.statements[4] {
            args[0].value = ArgValue::Omitted;
        }
        let v = check_test(&bad, &kb());
        let kinds: Vec<_> = v.violations.iter().map(|x| x.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::Dtype, ViolationKind::MissingRequired]);
        assert_eq!(v.violations[0].statement, 1);
        assert_eq!(v.violations[0].param, "n_clusters");

        let unknown = TestCase {
            id: "u".into(),
            seed: 0,
            backend: Backend::Random,
            statements: vec![Statement::Call {
                target: "r".into(),
                callee: "other.f".into(),
                receiver: None,
                args: vec![Arg::positional(0, ArgValue::Literal(Value::int(1)))],
            }],
        };
        let v = check_test(&unknown, &kb());
        assert!(v.is_valid());
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn proxy_score_bounds() {
        let kb = kb();
        let rule = UsageRule {
            antecedent: ["fx.cluster.KMeans".to_string(), "fx.cluster.KMeans.fit".to_string()]
                .into_iter()
                .collect(),
            consequent: "fx.cluster.KMeans.predict".into(),
            support_count: 2,
            antecedent_support: 2,
        };
        let p = PatternIndex::build(&[rule]);
        let mut suite = TestSuite::new("fx.cluster", Backend::Random, 0, true);
        let w = ProxyWeights::default();
        assert_eq!(model_coverage(&suite, "fx.cluster", &kb, &p, w).score, 0.0);
        suite.tests.push(crate::suite::tests::fit_predict());
        let full = model_coverage(&suite, "fx.cluster", &kb, &p, w);
        assert!((full.score - 1.0).abs() < 1e-12, "{full:?}");
        suite.tests.push(crate::suite::tests::fit_predict());
        assert_eq!(model_coverage(&suite, "fx.cluster", &kb, &p, w), full);
    }
}
