//! Lightweight lexical scanner for Python-like code fragments.
//!
//! Fragments from documentation examples and Q&A answers are often
//! incomplete, so nothing here is a full front end: the lexer is lenient,
//! and the scanners recover calls, simple assignments, imports and literal
//! arguments from the token stream.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{Literal, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Name,
    Number,
    /// String literal; `text` holds the decoded contents.
    Str,
    Op,
    /// Logical end of line (only emitted outside brackets).
    Newline,
    /// Leading whitespace width of a logical line, emitted after `Newline`.
    Indent(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
}

impl Token {
    fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    fn is_name(&self, name: &str) -> bool {
        self.kind == TokenKind::Name && self.text == name
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

const THREE_CHAR_OPS: &[&str] = &["**=", "//=", ">>=", "<<=", "...", "!=="];
const TWO_CHAR_OPS: &[&str] = &[
    "==", "!=", "<=", ">=", "**", "//", "->", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "<<", ">>", ":=", "@=",
];

/// Tokenizes `src`. Always returns the tokens it could recover; the error,
/// if any, is the first problem found (unterminated string, unbalanced
/// bracket, stray character).
pub fn tokenize(src: &str) -> (Vec<Token>, Option<LexError>) {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut error: Option<LexError> = None;
    let mut depth: Vec<char> = Vec::new();
    let mut line = 1;
    let mut i = 0;
    let mut at_line_start = true;

    let fail = |error: &mut Option<LexError>, line, msg: &str| {
        if error.is_none() {
            *error = Some(LexError {
                line,
                message: msg.to_string(),
            });
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if at_line_start && depth.is_empty() {
            let mut width = 0;
            while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                width += if chars[i] == '\t' { 4 } else { 1 };
                i += 1;
            }
            at_line_start = false;
            // Blank and comment-only lines carry no indentation.
            if i < chars.len() && chars[i] != '\n' && chars[i] != '#' && chars[i] != '\r' {
                tokens.push(Token {
                    kind: TokenKind::Indent(width),
                    text: String::new(),
                    line,
                });
            }
            continue;
        }
        match c {
            '\n' => {
                if depth.is_empty()
                    && tokens
                        .last()
                        .is_some_and(|t: &Token| !matches!(t.kind, TokenKind::Newline | TokenKind::Indent(_)))
                {
                    tokens.push(Token {
                        kind: TokenKind::Newline,
                        text: String::new(),
                        line,
                    });
                }
                line += 1;
                i += 1;
                at_line_start = depth.is_empty();
            }
            ' ' | '\t' | '\r' | '\x0c' => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                i += 2;
                line += 1;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let is_prefix = word.len() <= 2
                    && word.chars().all(|c| matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'));
                if is_prefix && matches!(chars.get(i), Some('\'' | '"')) {
                    let raw = word.to_ascii_lowercase().contains('r');
                    let (text, next, lines, err) = lex_string(&chars, i, raw);
                    if let Some(e) = err {
                        fail(&mut error, line, &e);
                    }
                    tokens.push(Token {
                        kind: TokenKind::Str,
                        text,
                        line,
                    });
                    line += lines;
                    i = next;
                } else {
                    tokens.push(Token {
                        kind: TokenKind::Name,
                        text: word,
                        line,
                    });
                }
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+')
                        && i > start
                        && matches!(chars[i - 1], 'e' | 'E')
                        && !chars[start..i].iter().any(|c| matches!(c, 'x' | 'X'));
                    if d.is_ascii_alphanumeric() || d == '.' || d == '_' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Number,
                    text: chars[start..i].iter().collect(),
                    line,
                });
            }
            '\'' | '"' => {
                let (text, next, lines, err) = lex_string(&chars, i, false);
                if let Some(e) = err {
                    fail(&mut error, line, &e);
                }
                tokens.push(Token {
                    kind: TokenKind::Str,
                    text,
                    line,
                });
                line += lines;
                i = next;
            }
            '(' | '[' | '{' => {
                depth.push(c);
                tokens.push(op(c.to_string(), line));
                i += 1;
            }
            ')' | ']' | '}' => {
                let want = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                if depth.last() == Some(&want) {
                    depth.pop();
                } else {
                    fail(&mut error, line, &format!("unbalanced '{c}'"));
                }
                tokens.push(op(c.to_string(), line));
                i += 1;
            }
            _ => {
                let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
                if let Some(o) = THREE_CHAR_OPS.iter().find(|o| rest.starts_with(**o)) {
                    tokens.push(op(o.to_string(), line));
                    i += 3;
                } else if let Some(o) = TWO_CHAR_OPS.iter().find(|o| rest.starts_with(**o)) {
                    tokens.push(op(o.to_string(), line));
                    i += 2;
                } else if "+-*/%@&|^~<>=.,:;!".contains(c) {
                    tokens.push(op(c.to_string(), line));
                    i += 1;
                } else {
                    fail(&mut error, line, &format!("unexpected character {c:?}"));
                    i += 1;
                }
            }
        }
    }
    if let Some(open) = depth.last() {
        fail(&mut error, line, &format!("unclosed '{open}'"));
    }
    if tokens
        .last()
        .is_some_and(|t| !matches!(t.kind, TokenKind::Newline | TokenKind::Indent(_)))
    {
        tokens.push(Token {
            kind: TokenKind::Newline,
            text: String::new(),
            line,
        });
    }
    (tokens, error)
}

fn op(text: String, line: usize) -> Token {
    Token {
        kind: TokenKind::Op,
        text,
        line,
    }
}

/// Lexes a string literal starting at the opening quote. Returns the decoded
/// text, the index after it, the number of newlines consumed, and an error
/// for unterminated literals.
fn lex_string(chars: &[char], start: usize, raw: bool) -> (String, usize, usize, Option<String>) {
    let quote = chars[start];
    let triple = chars.get(start + 1) == Some(&quote) && chars.get(start + 2) == Some(&quote);
    let mut i = start + if triple { 3 } else { 1 };
    let mut out = String::new();
    let mut lines = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == quote {
            if !triple {
                return (out, i + 1, lines, None);
            }
            if chars.get(i + 1) == Some(&quote) && chars.get(i + 2) == Some(&quote) {
                return (out, i + 3, lines, None);
            }
        }
        if c == '\n' {
            if !triple {
                return (out, i, lines, Some("unterminated string literal".into()));
            }
            lines += 1;
        }
        if c == '\\' && i + 1 < chars.len() {
            let n = chars[i + 1];
            if raw {
                out.push(c);
                out.push(n);
            } else {
                match n {
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    '0' => out.push('\0'),
                    '\\' => out.push('\\'),
                    '\'' => out.push('\''),
                    '"' => out.push('"'),
                    '\n' => lines += 1,
                    'x' => {
                        let hex: String = chars[i + 2..chars.len().min(i + 4)].iter().collect();
                        match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                            Some(ch) if hex.len() == 2 => {
                                out.push(ch);
                                i += 2;
                            }
                            _ => {
                                out.push('\\');
                                out.push('x');
                            }
                        }
                    }
                    other => {
                        out.push('\\');
                        out.push(other);
                    }
                }
            }
            i += 2;
            continue;
        }
        out.push(c);
        i += 1;
    }
    (out, i, lines, Some("unterminated string literal".into()))
}

/// Index of the bracket matching the opener at `open`.
pub fn matching_close(tokens: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (j, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Op {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(j);
                }
            }
            _ => {}
        }
    }
    None
}

/// Splits the token range `(start, end)` (exclusive bounds, i.e. the
/// brackets themselves) on top-level commas.
pub fn split_top_level(tokens: &[Token], open: usize, close: usize) -> Vec<(usize, usize)> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut begin = open + 1;
    for j in open + 1..close {
        let t = &tokens[j];
        if t.kind == TokenKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                "," if depth == 0 => {
                    parts.push((begin, j));
                    begin = j + 1;
                }
                _ => {}
            }
        }
    }
    if begin < close {
        parts.push((begin, close));
    }
    parts
}

/// Last segments of dotted callees treated as array constructors whose
/// first argument is the literal payload.
const ARRAY_CONSTRUCTORS: &[&str] = &[
    "array",
    "asarray",
    "tensor",
    "Tensor",
    "as_tensor",
    "constant",
    "convert_to_tensor",
    "matrix",
    "csr_matrix",
];

/// A literal recovered from an argument expression.
#[derive(Clone, Debug, PartialEq)]
pub struct LiteralArg {
    pub value: Value,
    /// Wrapped in an array constructor such as `np.array(...)`.
    pub array_wrapped: bool,
}

/// Parses the token range `[start, end)` as a literal expression. Returns
/// `None` unless the whole range is a literal (scalar, container display,
/// or an array constructor around one).
pub fn parse_literal(tokens: &[Token], start: usize, end: usize) -> Option<LiteralArg> {
    let mut p = LiteralParser { tokens, pos: start, end };
    let out = p.expr()?;
    if p.pos == end {
        Some(out)
    } else {
        None
    }
}

struct LiteralParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl LiteralParser<'_> {
    fn peek(&self) -> Option<&Token> {
        if self.pos < self.end {
            self.tokens.get(self.pos)
        } else {
            None
        }
    }

    fn expr(&mut self) -> Option<LiteralArg> {
        let t = self.peek()?.clone();
        match t.kind {
            TokenKind::Number => {
                self.pos += 1;
                Some(plain(Value::Scalar(number(&t.text, false)?)))
            }
            TokenKind::Str => {
                let mut s = String::new();
                while let Some(tok) = self.peek() {
                    if tok.kind != TokenKind::Str {
                        break;
                    }
                    s.push_str(&tok.text);
                    self.pos += 1;
                }
                Some(plain(Value::Scalar(Literal::Str(s))))
            }
            TokenKind::Op if t.text == "-" || t.text == "+" => {
                self.pos += 1;
                let n = self.peek()?.clone();
                if n.kind != TokenKind::Number {
                    return None;
                }
                self.pos += 1;
                Some(plain(Value::Scalar(number(&n.text, t.text == "-")?)))
            }
            TokenKind::Op if t.text == "[" => {
                let items = self.items()?;
                Some(plain(Value::List(items)))
            }
            TokenKind::Op if t.text == "(" => {
                let close = matching_close(self.tokens, self.pos)?;
                let parts = split_top_level(self.tokens, self.pos, close);
                let trailing_comma = close > self.pos + 1 && self.tokens[close - 1].is_op(",");
                if parts.len() == 1 && !trailing_comma {
                    let (s, e) = parts[0];
                    let inner = parse_literal(self.tokens, s, e)?;
                    self.pos = close + 1;
                    return Some(inner);
                }
                let items = self.items()?;
                Some(plain(Value::Tuple(items)))
            }
            TokenKind::Op if t.text == "{" => {
                let close = matching_close(self.tokens, self.pos)?;
                let parts = split_top_level(self.tokens, self.pos, close);
                let is_dict = parts.first().is_some_and(|&(s, e)| {
                    let mut depth = 0usize;
                    self.tokens[s..e].iter().any(|t| {
                        if t.kind == TokenKind::Op {
                            match t.text.as_str() {
                                "(" | "[" | "{" => depth += 1,
                                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                                ":" if depth == 0 => return true,
                                _ => {}
                            }
                        }
                        false
                    })
                });
                if parts.is_empty() {
                    self.pos = close + 1;
                    return Some(plain(Value::Dict(Vec::new())));
                }
                if is_dict {
                    let mut pairs = Vec::new();
                    for (s, e) in parts {
                        let colon = (s..e).find(|&j| self.tokens[j].is_op(":"))?;
                        let k = parse_literal(self.tokens, s, colon)?;
                        let v = parse_literal(self.tokens, colon + 1, e)?;
                        pairs.push((k.value, v.value));
                    }
                    self.pos = close + 1;
                    Some(plain(Value::Dict(pairs)))
                } else {
                    let items = self.items()?;
                    Some(plain(Value::Set(items)))
                }
            }
            TokenKind::Name => match t.text.as_str() {
                "None" => {
                    self.pos += 1;
                    Some(plain(Value::Scalar(Literal::None)))
                }
                "True" | "False" => {
                    self.pos += 1;
                    Some(plain(Value::Scalar(Literal::Bool(t.text == "True"))))
                }
                _ => self.array_constructor(),
            },
            _ => None,
        }
    }

    fn items(&mut self) -> Option<Vec<Value>> {
        let close = matching_close(self.tokens, self.pos)?;
        let mut out = Vec::new();
        for (s, e) in split_top_level(self.tokens, self.pos, close) {
            out.push(parse_literal(self.tokens, s, e)?.value);
        }
        self.pos = close + 1;
        Some(out)
    }

    /// `np.array([[1, 2]], dtype=...)` and friends.
    fn array_constructor(&mut self) -> Option<LiteralArg> {
        let mut j = self.pos;
        let last = loop {
            let t = self.tokens.get(j)?;
            if t.kind != TokenKind::Name {
                return None;
            }
            j += 1;
            if self.tokens.get(j).is_some_and(|t| t.is_op(".")) && j + 1 < self.end {
                j += 1;
            } else {
                break t.text.clone();
            }
        };
        if !ARRAY_CONSTRUCTORS.contains(&last.as_str()) {
            return None;
        }
        if !self.tokens.get(j).is_some_and(|t| t.is_op("(")) {
            return None;
        }
        let close = matching_close(self.tokens, j)?;
        if close >= self.end {
            return None;
        }
        let parts = split_top_level(self.tokens, j, close);
        let &(s, e) = parts.first()?;
        let inner = parse_literal(self.tokens, s, e)?;
        self.pos = close + 1;
        Some(LiteralArg {
            value: inner.value,
            array_wrapped: true,
        })
    }
}

fn plain(value: Value) -> LiteralArg {
    LiteralArg {
        value,
        array_wrapped: false,
    }
}

fn number(text: &str, negative: bool) -> Option<Literal> {
    let clean: String = text.chars().filter(|&c| c != '_').collect();
    let sign = if negative { "-" } else { "" };
    if let Ok(i) = format!("{sign}{clean}").parse::<i64>() {
        return Some(Literal::Int(i));
    }
    if let Some(hex) = clean.strip_prefix("0x").or_else(|| clean.strip_prefix("0X")) {
        let v = i64::from_str_radix(hex, 16).ok()?;
        return Some(Literal::Int(if negative { -v } else { v }));
    }
    let f = format!("{sign}{clean}").parse::<f64>().ok()?;
    f.is_finite().then_some(Literal::Float(f))
}

/// What a call is invoked on.
#[derive(Clone, Debug, PartialEq)]
pub enum Receiver {
    /// Bare call `f(...)`.
    None,
    /// Dotted path before the callee, `a.b` in `a.b.f(...)`.
    Path(Vec<String>),
    /// Result of an earlier call, `KMeans(...)` in `KMeans(...).fit(X)`;
    /// holds the token index of that call's name.
    Call(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CallArg {
    pub keyword: Option<String>,
    /// Token range of the argument expression.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CallSite {
    pub name: String,
    /// Token index of the callee name.
    pub token: usize,
    pub receiver: Receiver,
    pub args: Vec<CallArg>,
}

/// Finds every call `name(...)` in textual order, skipping `def`/`class`
/// headers.
pub fn scan_calls(tokens: &[Token]) -> Vec<CallSite> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        let t = &tokens[i];
        if t.kind != TokenKind::Name || !tokens.get(i + 1).is_some_and(|n| n.is_op("(")) {
            continue;
        }
        if is_keyword(&t.text) {
            continue;
        }
        if i > 0 && (tokens[i - 1].is_name("def") || tokens[i - 1].is_name("class")) {
            continue;
        }
        let Some(close) = matching_close(tokens, i + 1) else {
            continue;
        };
        let receiver = receiver_of(tokens, i);
        let args = split_top_level(tokens, i + 1, close)
            .into_iter()
            .map(|(s, e)| {
                let kw = tokens[s].kind == TokenKind::Name
                    && tokens.get(s + 1).is_some_and(|n| n.is_op("="))
                    && s + 2 <= e;
                if kw {
                    CallArg {
                        keyword: Some(tokens[s].text.clone()),
                        start: s + 2,
                        end: e,
                    }
                } else {
                    CallArg {
                        keyword: None,
                        start: s,
                        end: e,
                    }
                }
            })
            .filter(|a| a.start < a.end)
            .collect();
        out.push(CallSite {
            name: t.text.clone(),
            token: i,
            receiver,
            args,
        });
    }
    out
}

fn receiver_of(tokens: &[Token], name_idx: usize) -> Receiver {
    if name_idx < 2 || !tokens[name_idx - 1].is_op(".") {
        return Receiver::None;
    }
    let before = &tokens[name_idx - 2];
    if before.is_op(")") {
        // Walk back to the opening paren, then to the callee name.
        let mut depth = 0usize;
        let mut j = name_idx - 2;
        loop {
            let t = &tokens[j];
            if t.kind == TokenKind::Op {
                match t.text.as_str() {
                    ")" | "]" | "}" => depth += 1,
                    "(" | "[" | "{" => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
            }
            if j == 0 {
                return Receiver::None;
            }
            j -= 1;
        }
        if j > 0 && tokens[j - 1].kind == TokenKind::Name {
            return Receiver::Call(j - 1);
        }
        return Receiver::None;
    }
    let mut path = Vec::new();
    let mut j = name_idx - 2;
    loop {
        if tokens[j].kind != TokenKind::Name {
            break;
        }
        path.push(tokens[j].text.clone());
        if j >= 2 && tokens[j - 1].is_op(".") {
            j -= 2;
        } else {
            break;
        }
    }
    path.reverse();
    if path.is_empty() {
        Receiver::None
    } else {
        Receiver::Path(path)
    }
}

fn is_keyword(word: &str) -> bool {
    matches!(
        word,
        "if" | "elif" | "while" | "for" | "return" | "print" | "assert" | "and" | "or" | "not"
            | "in" | "is" | "lambda" | "with" | "yield" | "del" | "raise" | "except"
    )
}

/// Simple assignment `name = <expr>` at the start of a logical line.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub target: String,
    pub start: usize,
    pub end: usize,
}

pub fn scan_assignments(tokens: &[Token]) -> Vec<Assignment> {
    let mut out = Vec::new();
    let mut line_start = 0;
    for i in 0..=tokens.len() {
        let at_end = i == tokens.len() || tokens[i].kind == TokenKind::Newline;
        if !at_end {
            continue;
        }
        let mut s = line_start;
        while s < i && matches!(tokens[s].kind, TokenKind::Indent(_)) {
            s += 1;
        }
        if s + 2 < i
            && tokens[s].kind == TokenKind::Name
            && tokens[s + 1].is_op("=")
            && !is_keyword(&tokens[s].text)
        {
            out.push(Assignment {
                target: tokens[s].text.clone(),
                start: s + 2,
                end: i,
            });
        }
        line_start = i + 1;
    }
    out
}

/// Import aliases: local name -> dotted path it stands for.
/// `import numpy as np` maps `np` to `numpy`; `from a.b import C as D` maps
/// `D` to `a.b.C`; `from a.b import C` maps `C` to `a.b.C`.
pub fn scan_imports(tokens: &[Token]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].is_name("import") && (i == 0 || !matches!(tokens[i - 1].kind, TokenKind::Name)) {
            let (items, next) = import_items(tokens, i + 1);
            for (path, alias) in items {
                let local = alias.unwrap_or_else(|| path.split('.').next().unwrap_or("").to_string());
                out.insert(local, path);
            }
            i = next;
        } else if tokens[i].is_name("from") {
            let (module, mut j) = dotted(tokens, i + 1);
            if tokens.get(j).is_some_and(|t| t.is_name("import")) {
                j += 1;
                if tokens.get(j).is_some_and(|t| t.is_op("(")) {
                    j += 1;
                }
                let (items, next) = import_items(tokens, j);
                for (name, alias) in items {
                    let local = alias.unwrap_or_else(|| name.clone());
                    out.insert(local, format!("{module}.{name}"));
                }
                i = next;
            } else {
                i = j;
            }
        } else {
            i += 1;
        }
    }
    out
}

fn dotted(tokens: &[Token], mut j: usize) -> (String, usize) {
    let mut parts = Vec::new();
    while let Some(t) = tokens.get(j) {
        if t.kind == TokenKind::Name {
            parts.push(t.text.clone());
            j += 1;
            if tokens.get(j).is_some_and(|t| t.is_op(".")) {
                j += 1;
                continue;
            }
        }
        break;
    }
    (parts.join("."), j)
}

fn import_items(tokens: &[Token], mut j: usize) -> (Vec<(String, Option<String>)>, usize) {
    let mut items = Vec::new();
    loop {
        let (path, next) = dotted(tokens, j);
        if path.is_empty() {
            break;
        }
        j = next;
        let mut alias = None;
        if tokens.get(j).is_some_and(|t| t.is_name("as")) {
            if let Some(a) = tokens.get(j + 1).filter(|t| t.kind == TokenKind::Name) {
                alias = Some(a.text.clone());
                j += 2;
            }
        }
        items.push((path, alias));
        if tokens.get(j).is_some_and(|t| t.is_op(",")) {
            j += 1;
        } else {
            break;
        }
    }
    (items, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG6: &str = "from sklearn.cluster import KMeans\nimport numpy as np\nX = np.array([[1, 2], [1, 4], [1, 0],\n    [10, 2], [10, 4], [10, 0]])\nkmeans = KMeans(n_clusters=2,\nrandom_state=0).fit(X)\nkmeans.predict([[0, 0], [12, 3]])\n";

    #[test]
    fn lexes_strings_and_numbers() {
        let (toks, err) = tokenize("x = 'a\\'b' + 1.5e-3 # c\n");
        assert!(err.is_none());
        let kinds: Vec<_> = toks.iter().map(|t| t.kind.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Indent(0),
                TokenKind::Name,
                TokenKind::Op,
                TokenKind::Str,
                TokenKind::Op,
                TokenKind::Number,
                TokenKind::Newline
            ]
        );
        assert_eq!(toks[3].text, "a'b");
        assert_eq!(toks[5].text, "1.5e-3");
    }

    #[test]
    fn reports_unterminated_string() {
        let (_, err) = tokenize("x = 'abc\ny = 1\n");
        assert_eq!(err.unwrap().line, 1);
        let (_, err) = tokenize("f(1, 2\n");
        assert!(err.is_some());
    }

    #[test]
    fn brackets_join_lines() {
        let (toks, _) = tokenize(FIG6);
        let newlines = toks.iter().filter(|t| t.kind == TokenKind::Newline).count();
        assert_eq!(newlines, 5);
    }

    #[test]
    fn scans_fig6_calls() {
        let (toks, _) = tokenize(FIG6);
        let calls = scan_calls(&toks);
        let names: Vec<_> = calls.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["array", "KMeans", "fit", "predict"]);
        assert_eq!(calls[0].receiver, Receiver::Path(vec!["np".into()]));
        assert!(matches!(calls[2].receiver, Receiver::Call(i) if toks[i].text == "KMeans"));
        assert_eq!(calls[3].receiver, Receiver::Path(vec!["kmeans".into()]));
        assert_eq!(calls[1].args[0].keyword.as_deref(), Some("n_clusters"));
    }

    fn expr(src: &str) -> Vec<Token> {
        tokenize(src)
            .0
            .into_iter()
            .filter(|t| !matches!(t.kind, TokenKind::Indent(_) | TokenKind::Newline))
            .collect()
    }

    #[test]
    fn parses_literals() {
        let toks = expr("np.array([[1, 2], [3, -4]], dtype=float)");
        let lit = parse_literal(&toks, 0, toks.len()).unwrap();
        assert!(lit.array_wrapped);
        assert_eq!(lit.value.shape(), Some(vec![2, 2]));

        let toks = expr("(1,)");
        let lit = parse_literal(&toks, 0, toks.len()).unwrap();
        assert_eq!(lit.value, Value::Tuple(vec![Value::int(1)]));

        let toks = expr("{'a': 1.5, 'b': None}");
        let lit = parse_literal(&toks, 0, toks.len()).unwrap();
        assert!(matches!(lit.value, Value::Dict(ref kv) if kv.len() == 2));

        let toks = expr("x + 1");
        assert!(parse_literal(&toks, 0, toks.len()).is_none());
        let toks = expr("[1, 2] * 3");
        assert!(parse_literal(&toks, 0, toks.len()).is_none());
    }

    #[test]
    fn scans_imports_and_assignments() {
        let (toks, _) = tokenize(FIG6);
        let imports = scan_imports(&toks);
        assert_eq!(imports["np"], "numpy");
        assert_eq!(imports["KMeans"], "sklearn.cluster.KMeans");
        let assigns = scan_assignments(&toks);
        let targets: Vec<_> = assigns.iter().map(|a| a.target.as_str()).collect();
        assert_eq!(targets, vec!["X", "kmeans"]);
        let (toks, _) = tokenize("from a.b import C as D, E\n");
        let imports = scan_imports(&toks);
        assert_eq!(imports["D"], "a.b.C");
        assert_eq!(imports["E"], "a.b.E");
    }
}
