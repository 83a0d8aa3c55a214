//! The `.hjm` model file format.
//!
//! ```text
//! # comment
//! model frw_lambda {
//!     coords: N, a;
//!     consts: Lambda;
//!     lagrangian: "-3*a*da^2/N - N*Lambda*a^3";
//! }
//! ```

use hjq_core::models::ModelSource;
use hjq_core::symcore::is_identifier;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct DslError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Punct(char),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.char_indices().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError { line: self.line, column: self.column, message: message.into() }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, DslError> {
        let mut out = Vec::new();
        while let Some(&(_, c)) = self.chars.peek() {
            let (line, column) = (self.line, self.column);
            match c {
                '#' => {
                    while self.chars.peek().is_some_and(|&(_, c)| c != '\n') {
                        self.bump();
                    }
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some('\n') | None => return Err(DslError { line, column, message: "unterminated string".into() }),
                            Some(c) => s.push(c),
                        }
                    }
                    out.push((Tok::Str(s), line, column));
                }
                '{' | '}' | ':' | ';' | ',' => {
                    self.bump();
                    out.push((Tok::Punct(c), line, column));
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let mut s = String::new();
                    while let Some(&(_, c)) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            s.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    out.push((Tok::Ident(s), line, column));
                }
                c => return Err(self.error(format!("unexpected character `{c}`"))),
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn error_here(&self, message: impl Into<String>) -> DslError {
        let (line, column) = self.toks.get(self.pos).map_or(self.end, |t| (t.1, t.2));
        DslError { line, column, message: message.into() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn expect(&mut self, c: char) -> Result<(), DslError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here(format!("expected `{c}`"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, DslError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                if !is_identifier(&s) {
                    return Err(self.error_here(format!("invalid {what} `{s}`")));
                }
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, DslError> {
        let mut out = Vec::new();
        if matches!(self.peek(), Some(Tok::Punct(';'))) {
            return Ok(out);
        }
        loop {
            out.push(self.ident("identifier")?);
            if matches!(self.peek(), Some(Tok::Punct(','))) {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }
}

/// Parses one `.hjm` model. Symbol validity beyond identifier syntax is
/// left to model validation.
pub fn parse_model(text: &str) -> Result<ModelSource, DslError> {
    let toks = Lexer::new(text).tokens()?;
    let end = text.lines().enumerate().last().map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut p = Parser { toks, pos: 0, end };
    match p.next() {
        Some(Tok::Ident(k)) if k == "model" => {}
        _ => {
            p.pos -= 1;
            return Err(p.error_here("expected `model`"));
        }
    }
    let name = p.ident("model name")?;
    p.expect('{')?;
    let (mut coords, mut consts, mut lagrangian) = (None, None, None);
    loop {
        let start = p.pos;
        let key = match p.next() {
            Some(Tok::Punct('}')) => break,
            Some(Tok::Ident(k)) => k,
            _ => {
                p.pos = start;
                return Err(p.error_here("expected a clause or `}`"));
            }
        };
        p.expect(':')?;
        let (line, column) = (p.toks[start].1, p.toks[start].2);
        let duplicate = || DslError { line, column, message: format!("duplicate `{key}` clause") };
        match key.as_str() {
            "coords" => {
                if coords.is_some() {
                    return Err(duplicate());
                }
                coords = Some(p.ident_list()?);
            }
            "consts" => {
                if consts.is_some() {
                    return Err(duplicate());
                }
                consts = Some(p.ident_list()?);
            }
            "lagrangian" => {
                if lagrangian.is_some() {
                    return Err(duplicate());
                }
                match p.next() {
                    Some(Tok::Str(s)) => lagrangian = Some(s),
                    _ => {
                        p.pos -= 1;
                        return Err(p.error_here("expected a quoted expression"));
                    }
                }
            }
            other => {
                p.pos = start;
                return Err(p.error_here(format!("unknown clause `{other}`")));
            }
        }
        p.expect(';')?;
    }
    if p.pos < p.toks.len() {
        return Err(p.error_here("unexpected input after model"));
    }
    let missing = |what: &str| DslError { line: 1, column: 1, message: format!("missing `{what}` clause") };
    Ok(ModelSource {
        name,
        coordinates: coords.ok_or_else(|| missing("coords"))?,
        constants: consts.unwrap_or_default(),
        lagrangian: lagrangian.ok_or_else(|| missing("lagrangian"))?,
    })
}
