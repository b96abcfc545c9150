use std::fmt;

use crate::error::{Error, Result};

/// One multiplicative factor of a model term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    /// A bare variable: a coordinate, a covariate or a mark.
    Var(String),
    /// `I(...)` holding a monomial: `(variable, power)` pairs, power ≥ 1.
    Monomial(Vec<(String, u32)>),
}

/// Interaction of factors, e.g. `x:y` or `I(x^2):I(y^2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub factors: Vec<Factor>,
}

/// A parsed model formula `~ term + term + ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub intercept: bool,
    pub terms: Vec<Term>,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Var(v) => f.write_str(v),
            Factor::Monomial(parts) => {
                f.write_str("I(")?;
                for (k, (v, p)) in parts.iter().enumerate() {
                    if k > 0 {
                        f.write_str("*")?;
                    }
                    if *p == 1 {
                        write!(f, "{v}")?;
                    } else {
                        write!(f, "{v}^{p}")?;
                    }
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, fac) in self.factors.iter().enumerate() {
            if k > 0 {
                f.write_str(":")?;
            }
            write!(f, "{fac}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("~ ")?;
        let mut parts: Vec<String> = Vec::new();
        if !self.intercept {
            parts.push("0".into());
        } else if self.terms.is_empty() {
            parts.push("1".into());
        }
        parts.extend(self.terms.iter().map(|t| t.to_string()));
        f.write_str(&parts.join(" + "))
    }
}

impl Factor {
    pub fn variables(&self) -> Vec<&str> {
        match self {
            Factor::Var(v) => vec![v.as_str()],
            Factor::Monomial(parts) => parts.iter().map(|(v, _)| v.as_str()).collect(),
        }
    }
}

impl Formula {
    /// Intercept-only model.
    pub fn intercept_only() -> Self {
        Self { intercept: true, terms: Vec::new() }
    }

    /// Every variable name referenced, in first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.terms {
            for f in &t.factors {
                for v in f.variables() {
                    if !out.iter().any(|o| o == v) {
                        out.push(v.to_string());
                    }
                }
            }
        }
        out
    }

    pub fn references(&self, var: &str) -> bool {
        self.variables().iter().any(|v| v == var)
    }

    pub fn is_intercept_only(&self) -> bool {
        self.intercept && self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Tilde,
    Plus,
    Minus,
    Colon,
    Star,
    Caret,
    LParen,
    RParen,
    Ident(String),
    Int(u64),
    // Punctuation only meaningful inside unsupported constructs such as s(x, bs = "tp").
    Other(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let tok = match c {
            c if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            '~' => Tok::Tilde,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            ':' => Tok::Colon,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' | '=' | '"' | '\'' => Tok::Other(c),
            c if c.is_ascii_digit() => {
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'.' || bytes[i].is_ascii_alphabetic()) {
                    return Err(Error::Syntax { offset: start, message: "expected an integer".into() });
                }
                let v = src[start..i].parse::<u64>().map_err(|_| Error::Syntax {
                    offset: start,
                    message: "integer out of range".into(),
                })?;
                out.push((start, Tok::Int(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '.' => {
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' || d == '.' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            other => {
                return Err(Error::Syntax { offset: start, message: format!("unknown token `{other}`") })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.offset(), message: message.into() })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        self.expect(Tok::Tilde, "`~`")?;
        let mut intercept = true;
        let mut terms: Vec<Term> = Vec::new();
        let mut negate = false;
        loop {
            match self.peek() {
                Some(Tok::Int(1)) => {
                    self.pos += 1;
                    intercept = !negate;
                }
                Some(Tok::Int(0)) => {
                    if negate {
                        return self.err("`- 0` is not supported");
                    }
                    self.pos += 1;
                    intercept = false;
                }
                Some(Tok::Int(_)) => return self.err("only 0 or 1 may appear as a constant term"),
                _ => {
                    if negate {
                        return self.err("only `- 1` may be subtracted");
                    }
                    let at = self.offset();
                    let term = self.term()?;
                    let key = canonical(&term);
                    if terms.iter().any(|t| canonical(t) == key) {
                        return Err(Error::Syntax { offset: at, message: format!("duplicate term `{term}`") });
                    }
                    terms.push(term);
                }
            }
            match self.peek() {
                None => break,
                Some(Tok::Plus) => negate = false,
                Some(Tok::Minus) => negate = true,
                Some(_) => return self.err("expected `+`, `-` or end of formula"),
            }
            self.pos += 1;
        }
        Ok(Formula { intercept, terms })
    }

    fn term(&mut self) -> Result<Term> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::Colon) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(Term { factors })
    }

    fn factor(&mut self) -> Result<Factor> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    match name.as_str() {
                        "I" => {
                            self.pos += 1;
                            let m = self.monomial()?;
                            self.expect(Tok::RParen, "`)`")?;
                            Ok(m)
                        }
                        "s" | "te" | "ti" => Err(Error::Unsupported("smooth terms".into())),
                        _ => Err(Error::Syntax { offset: at, message: format!("unknown function `{name}`") }),
                    }
                } else if self.peek() == Some(&Tok::Caret) {
                    self.err("powers must be wrapped in I(), e.g. I(x^2)")
                } else {
                    Ok(Factor::Var(name))
                }
            }
            Some(Tok::Other(c)) => Err(Error::Syntax { offset: at, message: format!("unknown token `{c}`") }),
            Some(_) => Err(Error::Syntax { offset: at, message: "expected a variable or I(...)".into() }),
            None => Err(Error::Syntax { offset: at, message: "unexpected end of formula".into() }),
        }
    }

    fn monomial(&mut self) -> Result<Factor> {
        let mut parts: Vec<(String, u32)> = Vec::new();
        loop {
            let at = self.offset();
            let name = match self.next() {
                Some(Tok::Ident(n)) => n,
                _ => return Err(Error::Syntax { offset: at, message: "expected a variable inside I()".into() }),
            };
            let mut power = 1u32;
            if self.peek() == Some(&Tok::Caret) {
                self.pos += 1;
                let at = self.offset();
                match self.next() {
                    Some(Tok::Int(p)) if p >= 1 && p <= u64::from(u32::MAX) => power = p as u32,
                    Some(Tok::Int(_)) => {
                        return Err(Error::Syntax { offset: at, message: "power must be at least 1".into() })
                    }
                    _ => return Err(Error::Syntax { offset: at, message: "expected an integer power".into() }),
                }
            }
            match parts.iter_mut().find(|(v, _)| *v == name) {
                Some(entry) => entry.1 += power,
                None => parts.push((name, power)),
            }
            match self.peek() {
                Some(Tok::Star) => self.pos += 1,
                Some(Tok::RParen) => break,
                _ => return self.err("only monomials (products of powers) are allowed inside I()"),
            }
        }
        Ok(Factor::Monomial(parts))
    }
}

fn canonical(t: &Term) -> Vec<Factor> {
    let mut f: Vec<Factor> = t
        .factors
        .iter()
        .map(|f| match f {
            Factor::Monomial(p) => {
                let mut p = p.clone();
                p.sort();
                Factor::Monomial(p)
            }
            v => v.clone(),
        })
        .collect();
    f.sort();
    f
}

/// Parses a model formula such as `~ x + y + x:y + I(x^2)`.
pub fn parse_formula(src: &str) -> Result<Formula> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(Error::Syntax { offset: 0, message: "empty formula".into() });
    }
    let mut p = Parser { toks, pos: 0, end: src.len() };
    p.formula()
}
