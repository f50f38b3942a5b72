//! Generated test cases: statement lists over a single-assignment variable
//! pool.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ApiId, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Random,
    Search,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Random => "random",
            Backend::Search => "search",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binding {
    Position(usize),
    Keyword(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ArgValue {
    Var(String),
    Literal(Value),
    /// Left out of the call so the declared default applies.
    Omitted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arg {
    pub binding: Binding,
    pub value: ArgValue,
}

impl Arg {
    pub fn keyword(name: &str, value: ArgValue) -> Arg {
        Arg {
            binding: Binding::Keyword(name.to_string()),
            value,
        }
    }

    pub fn positional(index: usize, value: ArgValue) -> Arg {
        Arg {
            binding: Binding::Position(index),
            value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Statement {
    AssignLiteral {
        target: String,
        value: Value,
    },
    Construct {
        target: String,
        callee: ApiId,
        args: Vec<Arg>,
    },
    /// A free-function call, or a method call when `receiver` is set.
    Call {
        target: String,
        callee: ApiId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        receiver: Option<String>,
        args: Vec<Arg>,
    },
    AssertNotNone {
        var: String,
    },
}

impl Statement {
    pub fn target(&self) -> Option<&str> {
        match self {
            Statement::AssignLiteral { target, .. }
            | Statement::Construct { target, .. }
            | Statement::Call { target, .. } => Some(target),
            Statement::AssertNotNone { .. } => None,
        }
    }

    pub fn callee(&self) -> Option<&ApiId> {
        match self {
            Statement::Construct { callee, .. } | Statement::Call { callee, .. } => Some(callee),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Arg] {
        match self {
            Statement::Construct { args, .. } | Statement::Call { args, .. } => args,
            _ => &[],
        }
    }

    pub fn args_mut(&mut self) -> Option<&mut Vec<Arg>> {
        match self {
            Statement::Construct { args, .. } | Statement::Call { args, .. } => Some(args),
            _ => None,
        }
    }

    /// Variables this statement reads.
    pub fn uses(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        if let Statement::Call {
            receiver: Some(r), ..
        } = self
        {
            out.push(r);
        }
        if let Statement::AssertNotNone { var } = self {
            out.push(var);
        }
        for a in self.args() {
            if let ArgValue::Var(v) = &a.value {
                out.push(v);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub statements: Vec<Statement>,
    pub seed: u64,
    pub backend: Backend,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("statement {index} uses undefined variable {var}")]
    Undefined { index: usize, var: String },
    #[error("statement {index} redefines variable {var}")]
    Redefined { index: usize, var: String },
    #[error("statement {index} calls a method on {var}, which no constructor defines")]
    ReceiverNotConstructed { index: usize, var: String },
    #[error("test makes no call")]
    NoCall,
}

impl TestCase {
    /// API ids called, in statement order.
    pub fn calls(&self) -> Vec<&ApiId> {
        self.statements.iter().filter_map(Statement::callee).collect()
    }

    /// Checks single assignment, define-before-use and construct-before-
    /// method-call.
    pub fn check_structure(&self) -> Result<(), StructureError> {
        let mut defined = BTreeSet::new();
        let mut constructed = BTreeSet::new();
        for (index, s) in self.statements.iter().enumerate() {
            for var in s.uses() {
                if !defined.contains(var) {
                    return Err(StructureError::Undefined {
                        index,
                        var: var.to_string(),
                    });
                }
            }
            if let Statement::Call {
                receiver: Some(r), ..
            } = s
            {
                if !constructed.contains(r.as_str()) {
                    return Err(StructureError::ReceiverNotConstructed { index, var: r.clone() });
                }
            }
            if let Some(t) = s.target() {
                if !defined.insert(t) {
                    return Err(StructureError::Redefined {
                        index,
                        var: t.to_string(),
                    });
                }
                if matches!(s, Statement::Construct { .. }) {
                    constructed.insert(t);
                }
            }
        }
        if self.calls().is_empty() {
            return Err(StructureError::NoCall);
        }
        Ok(())
    }

    /// Content hash over the statements only (ids and seeds excluded), so
    /// equal tests from different runs match.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.statements).expect("statements serialize");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// The statement defining each variable.
    pub fn definitions(&self) -> BTreeMap<&str, &Statement> {
        self.statements
            .iter()
            .filter_map(|s| s.target().map(|t| (t, s)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    /// Dotted path of the module under test.
    pub module: String,
    pub backend: Backend,
    pub seed: u64,
    /// Whether mined knowledge steered generation.
    pub guided: bool,
    pub tests: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(module: &str, backend: Backend, seed: u64, guided: bool) -> TestSuite {
        TestSuite {
            module: module.to_string(),
            backend,
            seed,
            guided,
            tests: Vec::new(),
        }
    }
}
