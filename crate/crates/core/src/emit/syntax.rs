//! A surface-syntax checker for the Python subset emitted test files use:
//! module imports, one zero-argument test function, assignments of literal
//! and call expressions, and `assert` statements.
//!
//! It is deliberately separate from the renderer so that it can catch
//! renderer mistakes.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Number,
    Str,
    Op(char),
}

fn lex(text: &str, line: usize) -> Result<Vec<Tok>, SyntaxError> {
    let err = |m: String| SyntaxError { line, message: m };
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == ' ' {
            i += 1;
        } else if c == '#' {
            break;
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Name(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i = lex_number(&chars, i).map_err(&err)?;
            out.push(Tok::Number);
        } else if c == '\'' || c == '"' {
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err("unterminated string".into())),
                    Some('\\') => i += 2,
                    Some(&q) if q == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            out.push(Tok::Str);
        } else if "=()[]{},:.-+".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(err(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

fn lex_number(chars: &[char], mut i: usize) -> Result<usize, String> {
    let digits = |i: &mut usize| {
        let start = *i;
        while *i < chars.len() && (chars[*i].is_ascii_digit() || chars[*i] == '_') {
            *i += 1;
        }
        *i > start
    };
    let int_part = digits(&mut i);
    let mut frac = false;
    if chars.get(i) == Some(&'.') {
        i += 1;
        frac = digits(&mut i);
    }
    if !int_part && !frac {
        return Err("malformed number".into());
    }
    if matches!(chars.get(i), Some('e' | 'E')) {
        i += 1;
        if matches!(chars.get(i), Some('+' | '-')) {
            i += 1;
        }
        if !digits(&mut i) {
            return Err("malformed exponent".into());
        }
    }
    if chars.get(i).is_some_and(|c| c.is_alphanumeric() || *c == '_') {
        return Err("malformed number".into());
    }
    Ok(i)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl Parser<'_> {
    fn err<T>(&self, m: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            line: self.line,
            message: m.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Name(n)) if n == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, c: char) -> Result<(), SyntaxError> {
        if self.eat_op(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn identifier(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn at_end(&self) -> bool {
        self.pos == self.toks.len()
    }

    /// `primary [is [not] primary]`
    fn expr(&mut self) -> Result<(), SyntaxError> {
        self.primary()?;
        if self.eat_word("is") {
            self.eat_word("not");
            self.primary()?;
        }
        Ok(())
    }

    fn primary(&mut self) -> Result<(), SyntaxError> {
        self.atom()?;
        loop {
            if self.eat_op('.') {
                self.identifier()?;
            } else if self.eat_op('(') {
                self.call_args()?;
            } else {
                return Ok(());
            }
        }
    }

    fn atom(&mut self) -> Result<(), SyntaxError> {
        if self.eat_op('-') || self.eat_op('+') {
            return self.atom();
        }
        match self.peek().cloned() {
            Some(Tok::Number | Tok::Str) => {
                self.pos += 1;
                while self.peek() == Some(&Tok::Str) {
                    self.pos += 1;
                }
                Ok(())
            }
            Some(Tok::Name(n)) if matches!(n.as_str(), "None" | "True" | "False") => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Name(_)) => self.identifier().map(|_| ()),
            Some(Tok::Op('(')) => {
                self.pos += 1;
                self.sequence(')')
            }
            Some(Tok::Op('[')) => {
                self.pos += 1;
                self.sequence(']')
            }
            Some(Tok::Op('{')) => {
                self.pos += 1;
                self.braces()
            }
            _ => self.err("expected an expression"),
        }
    }

    fn sequence(&mut self, close: char) -> Result<(), SyntaxError> {
        while !self.eat_op(close) {
            self.expr()?;
            if !self.eat_op(',') {
                return self.expect_op(close);
            }
        }
        Ok(())
    }

    /// A set or dict display; the first item decides which.
    fn braces(&mut self) -> Result<(), SyntaxError> {
        let mut dict: Option<bool> = None;
        while !self.eat_op('}') {
            self.expr()?;
            let pair = self.eat_op(':');
            if *dict.get_or_insert(pair) != pair {
                return self.err("mixed set and dict items");
            }
            if pair {
                self.expr()?;
            }
            if !self.eat_op(',') {
                return self.expect_op('}');
            }
        }
        Ok(())
    }

    fn call_args(&mut self) -> Result<(), SyntaxError> {
        let mut keywords = BTreeSet::new();
        while !self.eat_op(')') {
            let keyword = matches!((self.toks.get(self.pos), self.toks.get(self.pos + 1)),
                (Some(Tok::Name(_)), Some(Tok::Op('='))));
            if keyword {
                let name = self.identifier()?;
                self.pos += 1;
                if !keywords.insert(name.clone()) {
                    return self.err(format!("keyword argument repeated: {name}"));
                }
            } else if !keywords.is_empty() {
                return self.err("positional argument follows keyword argument");
            }
            self.expr()?;
            if !self.eat_op(',') {
                return self.expect_op(')');
            }
        }
        Ok(())
    }
}

fn parse_line(toks: &[Tok], line: usize, f: impl FnOnce(&mut Parser) -> Result<(), SyntaxError>) -> Result<(), SyntaxError> {
    let mut p = Parser { toks, pos: 0, line };
    f(&mut p)?;
    if !p.at_end() {
        return p.err("unexpected trailing tokens");
    }
    Ok(())
}

/// Checks an emitted test file: imports, then one `def name():` whose body
/// is a consistently indented run of assignments and assertions.
pub fn check_test_source(src: &str) -> Result<(), SyntaxError> {
    #[derive(PartialEq)]
    enum State {
        Header,
        Body(Option<usize>),
    }
    let mut state = State::Header;
    let mut statements = 0;
    let mut last_line = 0;
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let err = |m: &str| SyntaxError {
            line,
            message: m.to_string(),
        };
        if raw.contains('\t') {
            return Err(err("tab in indentation"));
        }
        let text = raw.trim_start_matches(' ');
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let indent = raw.len() - text.len();
        let toks = lex(text, line)?;
        match &mut state {
            State::Header => {
                if indent != 0 {
                    return Err(err("unexpected indent"));
                }
                if toks.first() == Some(&Tok::Name("import".into())) {
                    parse_line(&toks[1..], line, |p| {
                        p.identifier()?;
                        while p.eat_op('.') {
                            p.identifier()?;
                        }
                        if p.eat_word("as") {
                            p.identifier()?;
                        }
                        Ok(())
                    })?;
                } else if toks.first() == Some(&Tok::Name("def".into())) {
                    parse_line(&toks[1..], line, |p| {
                        p.identifier()?;
                        p.expect_op('(')?;
                        p.expect_op(')')?;
                        p.expect_op(':')
                    })?;
                    state = State::Body(None);
                } else {
                    return Err(err("expected an import or a function definition"));
                }
            }
            State::Body(body_indent) => {
                if indent == 0 {
                    return Err(err("only one test function per file"));
                }
                if *body_indent.get_or_insert(indent) != indent {
                    return Err(err("inconsistent indentation"));
                }
                if toks.first() == Some(&Tok::Name("assert".into())) {
                    parse_line(&toks[1..], line, |p| p.expr())?;
                } else {
                    parse_line(&toks, line, |p| {
                        p.identifier()?;
                        p.expect_op('=')?;
                        p.expr()
                    })?;
                }
                statements += 1;
            }
        }
    }
    match state {
        State::Header => Err(SyntaxError {
            line: last_line,
            message: "no test function".into(),
        }),
        State::Body(_) if statements == 0 => Err(SyntaxError {
            line: last_line,
            message: "empty function body".into(),
        }),
        State::Body(_) => Ok(()),
    }
}
