//! Incremental construction of one test and structural repair.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::input::{synth_input, SynthArg};
use super::{GenConfig, SynthError};
use crate::model::{ApiId, ApiKind, ApiSpec, KnowledgeBase, ParamConstraint, Value};
use crate::suite::{Arg, ArgValue, Statement, TestCase};

/// The APIs of the module under test, grouped by how they are called.
pub struct Target<'a> {
    pub kb: &'a KnowledgeBase,
    pub module: String,
    pub constructors: Vec<&'a ApiSpec>,
    /// Methods whose owning class is constructible.
    pub methods: Vec<&'a ApiSpec>,
    pub functions: Vec<&'a ApiSpec>,
}

impl<'a> Target<'a> {
    pub fn new(kb: &'a KnowledgeBase, module: &str) -> Result<Target<'a>, SynthError> {
        let apis = kb.module_apis(module);
        let constructors: Vec<&ApiSpec> = apis.iter().copied().filter(|s| s.kind == ApiKind::ClassConstructor).collect();
        let owners: BTreeSet<&str> = constructors.iter().map(|s| s.api_id.as_str()).collect();
        let methods = apis
            .iter()
            .copied()
            .filter(|s| s.kind == ApiKind::Method && s.owner.as_deref().is_some_and(|o| owners.contains(o)))
            .collect();
        let functions: Vec<&ApiSpec> = apis.iter().copied().filter(|s| s.kind == ApiKind::FreeFunction).collect();
        if constructors.is_empty() && functions.is_empty() {
            return Err(SynthError::EmptyApiSet(module.to_string()));
        }
        Ok(Target {
            kb,
            module: module.to_string(),
            constructors,
            methods,
            functions,
        })
    }

    pub fn spec(&self, id: &str) -> Option<&'a ApiSpec> {
        self.kb.lookup(id).map(|(s, _)| s)
    }

    pub fn constraint(&self, id: &str, param: &str) -> Option<&'a ParamConstraint> {
        self.kb.constraint(id, param)
    }
}

/// A test under construction, without its closing assertion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestBuilder {
    pub statements: Vec<Statement>,
    next_var: usize,
}

impl TestBuilder {
    pub fn new() -> TestBuilder {
        TestBuilder::default()
    }

    /// Resumes from an existing test, dropping its assertions.
    pub fn from_test(test: &TestCase) -> TestBuilder {
        let statements: Vec<Statement> = test
            .statements
            .iter()
            .filter(|s| !matches!(s, Statement::AssertNotNone { .. }))
            .cloned()
            .collect();
        let next_var = statements
            .iter()
            .filter_map(|s| s.target())
            .filter_map(|t| t.strip_prefix('v').and_then(|n| n.parse::<usize>().ok()))
            .map(|n| n + 1)
            .max()
            .unwrap_or(0);
        TestBuilder { statements, next_var }
    }

    pub fn fresh_var(&mut self) -> String {
        let v = format!("v{}", self.next_var);
        self.next_var += 1;
        v
    }

    pub fn calls(&self) -> Vec<ApiId> {
        self.statements.iter().filter_map(Statement::callee).cloned().collect()
    }

    pub fn call_count(&self) -> usize {
        self.statements.iter().filter(|s| s.callee().is_some()).count()
    }

    /// Literal-valued variables, in definition order.
    pub fn pool(&self) -> Vec<(String, Value)> {
        self.statements
            .iter()
            .filter_map(|s| match s {
                Statement::AssignLiteral { target, value } => Some((target.clone(), value.clone())),
                _ => None,
            })
            .collect()
    }

    /// Latest instance of `class`.
    fn instance_of(&self, class: &str) -> Option<String> {
        self.statements.iter().rev().find_map(|s| match s {
            Statement::Construct { target, callee, .. } if callee == class => Some(target.clone()),
            _ => None,
        })
    }

    /// Constructors, free functions, and methods of classes instantiated so far.
    pub fn candidates(&self, target: &Target) -> Vec<ApiId> {
        let built: BTreeSet<&ApiId> = self
            .statements
            .iter()
            .filter_map(|s| match s {
                Statement::Construct { callee, .. } => Some(callee),
                _ => None,
            })
            .collect();
        let mut out: Vec<ApiId> = target.constructors.iter().map(|s| s.api_id.clone()).collect();
        out.extend(
            target
                .methods
                .iter()
                .filter(|s| s.owner.as_ref().is_some_and(|o| built.contains(o)))
                .map(|s| s.api_id.clone()),
        );
        out.extend(target.functions.iter().map(|s| s.api_id.clone()));
        out
    }

    /// Appends a call to `api` with synthesized arguments. Returns the
    /// index of the call statement.
    pub fn extend<R: Rng>(
        &mut self,
        api: &str,
        target: &Target,
        archive: &[Value],
        rng: &mut R,
        cfg: &GenConfig,
    ) -> Result<usize, SynthError> {
        let spec = target.spec(api).ok_or_else(|| SynthError::UnknownApi(api.to_string()))?;
        let receiver = match (&spec.kind, &spec.owner) {
            (ApiKind::Method, Some(owner)) => Some(
                self.instance_of(owner)
                    .ok_or_else(|| SynthError::NoReceiver(api.to_string()))?,
            ),
            _ => None,
        };
        let undefined = ParamConstraint::default();
        let mut args = Vec::new();
        let mut positional = true;
        for (index, p) in spec.bindable_params().enumerate() {
            positional &= p.is_required;
            let c = target.constraint(api, &p.name).unwrap_or(&undefined);
            let value = match synth_input(p, c, &self.pool(), archive, rng, cfg)? {
                SynthArg::Omit => continue,
                SynthArg::Var(v) => ArgValue::Var(v),
                SynthArg::Fresh(value) => {
                    let var = self.fresh_var();
                    self.statements.push(Statement::AssignLiteral {
                        target: var.clone(),
                        value,
                    });
                    ArgValue::Var(var)
                }
            };
            args.push(if positional {
                Arg::positional(index, value)
            } else {
                Arg::keyword(&p.name, value)
            });
        }
        let var = self.fresh_var();
        self.statements.push(match (spec.kind, receiver) {
            (ApiKind::ClassConstructor, _) => Statement::Construct {
                target: var,
                callee: api.to_string(),
                args,
            },
            (_, receiver) => Statement::Call {
                target: var,
                callee: api.to_string(),
                receiver,
                args,
            },
        });
        Ok(self.statements.len() - 1)
    }

    /// The finished statement list, closed by a not-none assertion on the
    /// last call's result.
    pub fn finish(&self) -> Vec<Statement> {
        let mut out = self.statements.clone();
        let last = out.iter().rev().find_map(|s| s.callee().and(s.target()).map(str::to_string));
        if let Some(var) = last {
            out.push(Statement::AssertNotNone { var });
        }
        out
    }
}

/// Random order over candidates, those not yet called first.
pub fn fallback_order<R: Rng>(candidates: &[ApiId], called: &[ApiId], rng: &mut R) -> Vec<ApiId> {
    let used: BTreeSet<&ApiId> = called.iter().collect();
    let (mut fresh, mut seen): (Vec<ApiId>, Vec<ApiId>) = candidates.iter().cloned().partition(|c| !used.contains(c));
    fresh.shuffle(rng);
    seen.shuffle(rng);
    fresh.extend(seen);
    fresh
}

/// Restores the structural invariants of a test after mutation.
///
/// Later redefinitions are dropped, statements that (transitively) depend
/// on variables no statement defines are dropped, and the rest is ordered
/// so that every definition, and every constructor, precedes its uses; the
/// original order is kept wherever it already works. Assertions on live
/// variables stay; a test without one gets one on its last call.
pub fn repair_sequence(test: &TestCase) -> TestCase {
    let mut seen = BTreeSet::new();
    let mut live: Vec<&Statement> = test
        .statements
        .iter()
        .filter(|s| s.target().is_none_or(|t| seen.insert(t.to_string())))
        .collect();

    // Drop statements whose inputs can never be defined.
    loop {
        let targets: BTreeMap<&str, &Statement> = live.iter().filter_map(|s| s.target().map(|t| (t, *s))).collect();
        let before = live.len();
        live.retain(|s| {
            let inputs_defined = s.uses().iter().all(|v| targets.contains_key(v));
            let receiver_ok = match s {
                Statement::Call { receiver: Some(r), .. } => {
                    matches!(targets.get(r.as_str()), Some(Statement::Construct { .. }))
                }
                _ => true,
            };
            inputs_defined && receiver_ok
        });
        if live.len() == before {
            break;
        }
    }

    // Stable topological order: repeatedly take the first ready statement.
    let mut defined: BTreeSet<&str> = BTreeSet::new();
    let mut ordered: Vec<Statement> = Vec::with_capacity(live.len());
    let mut pending = live;
    while !pending.is_empty() {
        let Some(i) = pending.iter().position(|s| s.uses().iter().all(|v| defined.contains(v))) else {
            break;
        };
        let s = pending.remove(i);
        if let Some(t) = s.target() {
            defined.insert(t);
        }
        ordered.push(s.clone());
    }

    let has_call = ordered.iter().any(|s| s.callee().is_some());
    if !has_call {
        ordered.clear();
    } else if !ordered.iter().any(|s| matches!(s, Statement::AssertNotNone { .. })) {
        let last = ordered.iter().rev().find_map(|s| s.callee().and(s.target()).map(str::to_string));
        if let Some(var) = last {
            ordered.push(Statement::AssertNotNone { var });
        }
    }
    TestCase {
        id: test.id.clone(),
        statements: ordered,
        seed: test.seed,
        backend: test.backend,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::tests::fit_predict;

    #[test]
    fn call_before_construct_is_reordered() {
        let t = fit_predict();
        let mut moved = t.clone();
        // Put the constructor after the first method call.
        let ctor = moved.statements.remove(1);
        moved.statements.insert(3, ctor);
        assert!(moved.check_structure().is_err());
        let fixed = repair_sequence(&moved);
        assert_eq!(fixed.check_structure(), Ok(()));
        assert_eq!(fixed.statements.len(), t.statements.len());
    }

    #[test]
    fn dangling_reference_is_dropped() {
        let mut t = fit_predict();
        t.statements.remove(2); // the literal fit and predict read
        let fixed = repair_sequence(&t);
        assert_eq!(fixed.check_structure(), Ok(()));
        assert_eq!(fixed.calls(), vec!["fx.cluster.KMeans"]);
        assert!(matches!(fixed.statements.last(), Some(Statement::AssertNotNone { var }) if var == "m"));
    }

    #[test]
    fn valid_test_is_unchanged() {
        let t = fit_predict();
        assert_eq!(repair_sequence(&t), t);
    }

    #[test]
    fn builder_resumes_fresh_names() {
        let mut t = fit_predict();
        t.statements[0] = Statement::AssignLiteral {
            target: "v7".into(),
            value: Value::int(1),
        };
        let mut b = TestBuilder::from_test(&t);
        assert_eq!(b.fresh_var(), "v8");
        assert!(b.finish().last().is_some_and(|s| matches!(s, Statement::AssertNotNone { .. })));
    }
}
