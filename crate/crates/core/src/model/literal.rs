use std::fmt;

use serde::{Deserialize, Serialize};

/// A tagged scalar as it appears in signatures and documentation: defaults,
/// enumerated values, and the leaves of generated inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value")]
pub enum Literal {
    #[serde(rename = "integer")]
    Int(i64),
    #[serde(rename = "float")]
    Float(f64),
    #[serde(rename = "string")]
    Str(String),
    #[serde(rename = "boolean")]
    Bool(bool),
    #[serde(rename = "none-literal")]
    None,
    /// A default expression that is not a scalar literal (`np.float64`,
    /// `(1, 1)`), kept verbatim.
    #[serde(rename = "opaque")]
    Opaque(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LiteralKind {
    Int,
    Float,
    Str,
    Bool,
    None,
    Opaque,
}

impl Literal {
    pub fn kind(&self) -> LiteralKind {
        match self {
            Literal::Int(_) => LiteralKind::Int,
            Literal::Float(_) => LiteralKind::Float,
            Literal::Str(_) => LiteralKind::Str,
            Literal::Bool(_) => LiteralKind::Bool,
            Literal::None => LiteralKind::None,
            Literal::Opaque(_) => LiteralKind::Opaque,
        }
    }

    /// Types a Python-style literal token as written in a signature or a
    /// documentation sentence. Quoted text becomes a string, `None`/`True`/
    /// `False` their own tags, numbers integer or float; anything else is
    /// kept as an opaque expression.
    pub fn parse_python(text: &str) -> Literal {
        let t = text.trim();
        match t {
            "None" => return Literal::None,
            "True" => return Literal::Bool(true),
            "False" => return Literal::Bool(false),
            _ => {}
        }
        if let Some(s) = unquote(t) {
            return Literal::Str(s);
        }
        if let Ok(i) = t.parse::<i64>() {
            return Literal::Int(i);
        }
        if looks_numeric(t) {
            if let Ok(f) = t.parse::<f64>() {
                if f.is_finite() {
                    return Literal::Float(f);
                }
            }
        }
        Literal::Opaque(t.to_string())
    }
}

fn looks_numeric(t: &str) -> bool {
    let body = t.strip_prefix('-').unwrap_or(t);
    body.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '.')
        && body
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+'))
}

fn unquote(t: &str) -> Option<String> {
    let mut chars = t.chars();
    let first = chars.next()?;
    let last = t.chars().last()?;
    if t.len() >= 2 && (first == '\'' || first == '"') && first == last {
        Some(t[1..t.len() - 1].to_string())
    } else {
        None
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Str(s) => write!(f, "'{s}'"),
            Literal::Bool(true) => f.write_str("True"),
            Literal::Bool(false) => f.write_str("False"),
            Literal::None => f.write_str("None"),
            Literal::Opaque(s) => f.write_str(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn types_python_tokens() {
        assert_eq!(Literal::parse_python("None"), Literal::None);
        assert_eq!(Literal::parse_python("2"), Literal::Int(2));
        assert_eq!(Literal::parse_python("-3"), Literal::Int(-3));
        assert_eq!(Literal::parse_python("1e-4"), Literal::Float(1e-4));
        assert_eq!(Literal::parse_python("'x'"), Literal::Str("x".into()));
        assert_eq!(Literal::parse_python("\"k-means++\""), Literal::Str("k-means++".into()));
        assert_eq!(Literal::parse_python("True"), Literal::Bool(true));
        assert_eq!(
            Literal::parse_python("np.float64"),
            Literal::Opaque("np.float64".into())
        );
        assert_eq!(Literal::parse_python("inf"), Literal::Opaque("inf".into()));
    }

    #[test]
    fn serializes_with_type_tag() {
        let json = serde_json::to_string(&Literal::Int(0)).unwrap();
        assert_eq!(json, r#"{"type":"integer","value":0}"#);
        let json = serde_json::to_string(&Literal::None).unwrap();
        assert_eq!(json, r#"{"type":"none-literal"}"#);
    }
}
