//! Renders test cases as Python test files and writes a suite manifest.
//!
//! Emitted file layout (UTF-8, `\n` line ends, no trailing spaces):
//!
//! ```text
//! import <module path> as module_<k>      one per module referenced, by alias number
//!                                         blank line
//! def test_<module>_<id>():               <module> is the dotted path with '.' -> '_'
//!     <name> = <literal>                  literal assignment
//!     <name> = module_<k>.<Class>(<args>) construction
//!     <name> = module_<k>.<func>(<args>)  free-function call
//!     <name> = <receiver>.<method>(<args>) method call
//!     assert <name> is not None           closing assertion
//! ```
//!
//! Positional arguments come first, in index order, then keyword arguments
//! as `name=value`. Literal variables are named by type (`int_k`,
//! `float_k`, `str_k`, `bool_k`, `none_k`, `list_k`, `tuple_k`, `set_k`,
//! `dict_k`); call results are `var_k`. Counters start at 0 per prefix and
//! test. Module aliases are numbered by first use across the whole suite.
//!
//! The manifest, `manifest.json`, is described by [`Manifest`].

pub mod syntax;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Literal, Value};
use crate::suite::{Arg, ArgValue, Backend, Binding, Statement, TestCase, TestSuite};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("test {0} has no statements")]
    Empty(String),
    #[error("test {test}: {message}")]
    Unrenderable { test: String, message: String },
    #[error("emitted test {test} fails the syntax check: {error}")]
    Syntax { test: String, error: syntax::SyntaxError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed manifest: {message}")]
    Manifest { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Spelling of the target runtime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmitStyle {
    pub indent: String,
    pub alias_prefix: String,
    pub result_prefix: String,
    pub none: String,
    pub true_: String,
    pub false_: String,
    /// `{var}` is replaced by the checked variable.
    pub assertion: String,
    pub file_extension: String,
}

impl Default for EmitStyle {
    fn default() -> EmitStyle {
        EmitStyle {
            indent: "    ".into(),
            alias_prefix: "module_".into(),
            result_prefix: "var".into(),
            none: "None".into(),
            true_: "True".into(),
            false_: "False".into(),
            assertion: "assert {var} is not None".into(),
            file_extension: "py".into(),
        }
    }
}

/// Module path to alias number.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Aliases {
    numbers: BTreeMap<String, usize>,
}

impl Aliases {
    pub fn for_tests<'a>(tests: impl IntoIterator<Item = &'a TestCase>) -> Aliases {
        let mut a = Aliases::default();
        for t in tests {
            for s in &t.statements {
                if let Some(m) = imported_module(s) {
                    let next = a.numbers.len();
                    a.numbers.entry(m.to_string()).or_insert(next);
                }
            }
        }
        a
    }

    fn get(&self, module: &str) -> Option<usize> {
        self.numbers.get(module).copied()
    }
}

/// Module a statement needs imported: the callee's parent path for
/// constructions and free-function calls.
fn imported_module(s: &Statement) -> Option<&str> {
    match s {
        Statement::Construct { callee, .. }
        | Statement::Call {
            callee, receiver: None, ..
        } => callee.rsplit_once('.').map(|(m, _)| m),
        _ => None,
    }
}

pub fn sanitize(module: &str) -> String {
    module
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

pub fn test_function_name(module: &str, id: &str) -> String {
    format!("test_{}_{}", sanitize(module), sanitize(id))
}

pub fn test_file_name(module: &str, id: &str, style: &EmitStyle) -> String {
    format!("{}.{}", test_function_name(module, id), style.file_extension)
}

fn literal_prefix(v: &Value) -> &'static str {
    match v {
        Value::Scalar(Literal::Int(_)) => "int",
        Value::Scalar(Literal::Float(_)) => "float",
        Value::Scalar(Literal::Str(_)) => "str",
        Value::Scalar(Literal::Bool(_)) => "bool",
        Value::Scalar(Literal::None) => "none",
        Value::Scalar(Literal::Opaque(_)) => "var",
        Value::List(_) => "list",
        Value::Tuple(_) => "tuple",
        Value::Set(_) => "set",
        Value::Dict(_) => "dict",
    }
}

/// Python spelling of a float that reads back to the same value.
pub fn render_float(x: f64) -> String {
    if x.is_nan() {
        "float('nan')".into()
    } else if x.is_infinite() {
        if x > 0.0 { "float('inf')" } else { "-float('inf')" }.into()
    } else {
        // Debug formatting is the shortest round-trip form and keeps a `.0`
        // on integral values.
        format!("{x:?}")
    }
}

pub fn render_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

pub fn render_value(v: &Value, style: &EmitStyle) -> Result<String, String> {
    let items = |xs: &[Value]| -> Result<Vec<String>, String> { xs.iter().map(|x| render_value(x, style)).collect() };
    Ok(match v {
        Value::Scalar(l) => match l {
            Literal::Int(i) => i.to_string(),
            Literal::Float(x) => render_float(*x),
            Literal::Str(s) => render_string(s),
            Literal::Bool(true) => style.true_.clone(),
            Literal::Bool(false) => style.false_.clone(),
            Literal::None => style.none.clone(),
            Literal::Opaque(e) => return Err(format!("opaque expression {e:?} has no literal form")),
        },
        Value::List(xs) => format!("[{}]", items(xs)?.join(", ")),
        Value::Tuple(xs) if xs.len() == 1 => format!("({},)", items(xs)?[0]),
        Value::Tuple(xs) => format!("({})", items(xs)?.join(", ")),
        Value::Set(xs) if xs.is_empty() => "set()".into(),
        Value::Set(xs) => format!("{{{}}}", items(xs)?.join(", ")),
        Value::Dict(kvs) => {
            let pairs: Result<Vec<String>, String> = kvs
                .iter()
                .map(|(k, v)| Ok(format!("{}: {}", render_value(k, style)?, render_value(v, style)?)))
                .collect();
            format!("{{{}}}", pairs?.join(", "))
        }
    })
}

/// Renders one test using aliases computed from the test alone.
pub fn emit_test(test: &TestCase, module: &str, style: &EmitStyle) -> Result<String, EmitError> {
    emit_test_with(test, module, style, &Aliases::for_tests([test]))
}

pub fn emit_test_with(test: &TestCase, module: &str, style: &EmitStyle, aliases: &Aliases) -> Result<String, EmitError> {
    if test.statements.is_empty() {
        return Err(EmitError::Empty(test.id.clone()));
    }
    let fail = |message: String| EmitError::Unrenderable {
        test: test.id.clone(),
        message,
    };
    let mut names: BTreeMap<&str, String> = BTreeMap::new();
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    let mut imports: BTreeSet<(usize, &str)> = BTreeSet::new();
    let mut body = Vec::with_capacity(test.statements.len());

    for s in &test.statements {
        let name_of = |v: &str, names: &BTreeMap<&str, String>| {
            names.get(v).cloned().ok_or_else(|| fail(format!("variable {v} used before definition")))
        };
        let line = match s {
            Statement::AssertNotNone { var } => style.assertion.replace("{var}", &name_of(var, &names)?),
            _ => {
                let rhs = match s {
                    Statement::AssignLiteral { value, .. } => render_value(value, style).map_err(fail)?,
                    Statement::Construct { callee, args, .. }
                    | Statement::Call {
                        callee, receiver: None, args, ..
                    } => {
                        let (m, simple) = callee
                            .rsplit_once('.')
                            .ok_or_else(|| fail(format!("{callee} is not a qualified name")))?;
                        let k = aliases.get(m).ok_or_else(|| fail(format!("no alias for module {m}")))?;
                        imports.insert((k, m));
                        format!("{}{k}.{simple}({})", style.alias_prefix, render_args(args, &names, style).map_err(fail)?)
                    }
                    Statement::Call {
                        callee,
                        receiver: Some(r),
                        args,
                        ..
                    } => {
                        let method = callee.rsplit('.').next().unwrap_or(callee);
                        format!("{}.{method}({})", name_of(r, &names)?, render_args(args, &names, style).map_err(fail)?)
                    }
                    Statement::AssertNotNone { .. } => unreachable!(),
                };
                let target = s.target().expect("assignments have targets");
                let prefix = match s {
                    Statement::AssignLiteral { value, .. } => literal_prefix(value),
                    _ => style.result_prefix.as_str(),
                };
                let counter = counters.entry(prefix).or_insert(0);
                let name = format!("{prefix}_{counter}");
                *counter += 1;
                if names.insert(target, name.clone()).is_some() {
                    return Err(fail(format!("variable {target} assigned twice")));
                }
                format!("{name} = {rhs}")
            }
        };
        body.push(line);
    }

    let mut out = String::new();
    for (k, m) in &imports {
        let _ = writeln!(out, "import {m} as {}{k}", style.alias_prefix);
    }
    if !imports.is_empty() {
        out.push('\n');
    }
    let _ = writeln!(out, "def {}():", test_function_name(module, &test.id));
    for line in body {
        let _ = writeln!(out, "{}{line}", style.indent);
    }
    Ok(out)
}

fn render_args(args: &[Arg], names: &BTreeMap<&str, String>, style: &EmitStyle) -> Result<String, String> {
    let value = |v: &ArgValue| -> Result<Option<String>, String> {
        match v {
            ArgValue::Var(x) => names
                .get(x.as_str())
                .cloned()
                .map(Some)
                .ok_or_else(|| format!("variable {x} used before definition")),
            ArgValue::Literal(l) => render_value(l, style).map(Some),
            ArgValue::Omitted => Ok(None),
        }
    };
    let mut positional: Vec<(usize, String)> = Vec::new();
    let mut keyword: Vec<String> = Vec::new();
    for a in args {
        let Some(v) = value(&a.value)? else { continue };
        match &a.binding {
            Binding::Position(i) => positional.push((*i, v)),
            Binding::Keyword(k) => keyword.push(format!("{k}={v}")),
        }
    }
    positional.sort_by_key(|(i, _)| *i);
    if positional.iter().enumerate().any(|(n, (i, _))| n != *i) {
        return Err("positional arguments are not contiguous from 0".into());
    }
    Ok(positional.into_iter().map(|(_, v)| v).chain(keyword).collect::<Vec<_>>().join(", "))
}

/// `manifest.json`: the suite's configuration and one entry per test, in
/// suite order. `case` holds the full statement list so the suite can be
/// reloaded without parsing the emitted sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub module: String,
    pub backend: Backend,
    pub seed: u64,
    pub guided: bool,
    pub tests: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub test_id: String,
    pub file: String,
    pub fingerprint: String,
    pub case: TestCase,
}

impl Manifest {
    pub fn suite(&self) -> TestSuite {
        TestSuite {
            module: self.module.clone(),
            backend: self.backend,
            seed: self.seed,
            guided: self.guided,
            tests: self.tests.iter().map(|e| e.case.clone()).collect(),
        }
    }

    pub fn load(dir: &Path) -> Result<Manifest, EmitError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| EmitError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Renders every test and checks it with the syntax checker.
pub fn render_suite(suite: &TestSuite, style: &EmitStyle) -> Result<Vec<(String, String)>, EmitError> {
    let aliases = Aliases::for_tests(&suite.tests);
    suite
        .tests
        .iter()
        .map(|t| {
            let src = emit_test_with(t, &suite.module, style, &aliases)?;
            syntax::check_test_source(&src).map_err(|error| EmitError::Syntax {
                test: t.id.clone(),
                error,
            })?;
            Ok((test_file_name(&suite.module, &t.id, style), src))
        })
        .collect()
}

/// Writes one file per test plus the manifest into `dir`, replacing test
/// files of the same module left from an earlier run. Returns the written
/// paths, manifest last.
pub fn emit_suite(suite: &TestSuite, dir: &Path, style: &EmitStyle) -> Result<Vec<PathBuf>, EmitError> {
    let files = render_suite(suite, style)?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let keep: BTreeSet<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    let stale_prefix = format!("test_{}_", sanitize(&suite.module));
    let suffix = format!(".{}", style.file_extension);
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with(&stale_prefix) && name.ends_with(&suffix) && !keep.contains(name.as_str()) {
            let p = entry.path();
            std::fs::remove_file(&p).map_err(io_err(&p))?;
        }
    }

    let mut written = Vec::with_capacity(files.len() + 1);
    let mut entries = Vec::with_capacity(files.len());
    for ((name, src), t) in files.iter().zip(&suite.tests) {
        let path = dir.join(name);
        std::fs::write(&path, src).map_err(io_err(&path))?;
        written.push(path);
        entries.push(ManifestEntry {
            test_id: t.id.clone(),
            file: name.clone(),
            fingerprint: t.fingerprint(),
            case: t.clone(),
        });
    }
    let manifest = Manifest {
        module: suite.module.clone(),
        backend: suite.backend,
        seed: suite.seed,
        guided: suite.guided,
        tests: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, json).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}
