use thiserror::Error;

use crate::model::{Literal, ParamSpec};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("signature has no parameter list: {0:?}")]
    NoParameterList(String),
    #[error("unbalanced parentheses in signature: {0:?}")]
    Unbalanced(String),
    #[error("signature has an empty name: {0:?}")]
    EmptyName(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedSignature {
    /// Last dotted segment of the declared name.
    pub name: String,
    pub params: Vec<ParamSpec>,
}

/// Parses a definition line such as `fit(self, X, y=None, sample_weight=None)`.
///
/// Parameters without `=` are required, with `=` optional and their default
/// typed from the verbatim text. `self`/`cls` in first position, bare `*`
/// and `/` separators, and annotations are dropped; `*args`/`**kwargs` become
/// variadic pseudo-parameters.
pub fn parse_signature(text: &str) -> Result<ParsedSignature, SignatureError> {
    let mut t = text.trim();
    for prefix in ["async def ", "def ", "class "] {
        if let Some(rest) = t.strip_prefix(prefix) {
            t = rest.trim_start();
        }
    }
    let open = t
        .find('(')
        .ok_or_else(|| SignatureError::NoParameterList(text.to_string()))?;
    let full_name = t[..open].trim();
    let name = full_name.rsplit('.').next().unwrap_or("").trim();
    let valid_name = !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_');
    if !valid_name {
        return Err(SignatureError::EmptyName(text.to_string()));
    }
    let close = matching_paren(t, open).ok_or_else(|| SignatureError::Unbalanced(text.to_string()))?;
    let rest = &t[close + 1..];
    if rest.contains('(') || rest.contains(')') {
        let balanced = rest.matches('(').count() == rest.matches(')').count();
        if !balanced {
            return Err(SignatureError::Unbalanced(text.to_string()));
        }
    }

    let mut params = Vec::new();
    for (i, raw) in split_params(&t[open + 1..close]).into_iter().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() || raw == "*" || raw == "/" {
            continue;
        }
        if i == 0 && (raw == "self" || raw == "cls") {
            continue;
        }
        let position = params.len();
        if let Some(stripped) = raw.strip_prefix('*') {
            let name = stripped.split(':').next().unwrap_or("").trim();
            params.push(ParamSpec {
                name: format!("*{name}"),
                position,
                is_required: false,
                declared_default: None,
                variadic: true,
            });
            continue;
        }
        let (lhs, default) = match top_level_eq(raw) {
            Some(at) => (&raw[..at], Some(raw[at + 1..].trim())),
            None => (raw, None),
        };
        let pname = lhs.split(':').next().unwrap_or("").trim();
        if pname.is_empty() {
            continue;
        }
        params.push(match default {
            Some(d) => ParamSpec::optional(pname, position, Literal::parse_python(d)),
            None => ParamSpec::required(pname, position),
        });
    }
    Ok(ParsedSignature {
        name: name.to_string(),
        params,
    })
}

fn matching_paren(t: &str, open: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in t.char_indices().skip_while(|(i, _)| *i < open) {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
                if depth == 0 {
                    return if c == ')' { Some(i) } else { None };
                }
            }
            _ => {}
        }
    }
    None
}

fn split_params(inner: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&inner[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&inner[start..]);
    out
}

fn top_level_eq(param: &str) -> Option<usize> {
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    for (i, c) in param.char_indices() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            '=' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}
