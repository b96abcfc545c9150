use std::fmt;

use crate::error::{Error, Result};

/// Arithmetic expression for intensities, e.g. `exp(a[1] + a[2]*x)`.
///
/// Variables are `x`, `y`, `t` and covariate names; `a[k]` and `par[k]`
/// index the 1-based parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Param(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Min,
    Max,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "exp" => (Func::Exp, 1),
            "log" => (Func::Log, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "pow" => (Func::Pow, 2),
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Param(k) => write!(f, "a[{k}]"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Expr {
    /// Parses an expression; a leading `function(...)` header is not accepted.
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = ExprParser { src: src.as_bytes(), pos: 0 };
        let e = p.sum()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return p.err("unexpected trailing input");
        }
        Ok(e)
    }

    /// Variable names referenced (excluding parameters), first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Num(_) | Expr::Param(_) => {}
        }
    }

    /// Largest parameter index referenced (0 if none).
    pub fn max_param(&self) -> usize {
        match self {
            Expr::Param(k) => *k,
            Expr::Neg(e) => e.max_param(),
            Expr::Bin(_, a, b) => a.max_param().max(b.max_param()),
            Expr::Call(_, args) => args.iter().map(Expr::max_param).max().unwrap_or(0),
            Expr::Num(_) | Expr::Var(_) => 0,
        }
    }

    /// Evaluates with `var` resolving names and `par` the parameter vector.
    pub fn eval(&self, var: &dyn Fn(&str) -> Option<f64>, par: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => var(v).ok_or_else(|| Error::UnresolvedVariable(v.clone()))?,
            Expr::Param(k) => *par
                .get(k - 1)
                .ok_or_else(|| Error::InvalidInput(format!("parameter a[{k}] not supplied")))?,
            Expr::Neg(e) => -e.eval(var, par)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(var, par)?, b.eval(var, par)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(var, par)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Min => a.min(args[1].eval(var, par)?),
                    Func::Max => a.max(args[1].eval(var, par)?),
                    Func::Pow => a.powf(args[1].eval(var, par)?),
                }
            }
        })
    }
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // Right-associative; binds tighter than unary minus on its left: -x^2 = -(x^2).
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let c = match self.peek() {
            Some(c) => c,
            None => return self.err("unexpected end of expression"),
        };
        if c == b'(' {
            self.pos += 1;
            let e = self.sum()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || matches!(self.src[self.pos], b'_' | b'.'))
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            match self.peek() {
                Some(b'[') if name == "a" || name == "par" => {
                    self.pos += 1;
                    self.skip_ws();
                    let at = self.pos;
                    let k = match self.number()? {
                        Expr::Num(v) if v >= 1.0 && v.fract() == 0.0 => v as usize,
                        _ => {
                            self.pos = at;
                            return self.err("parameter index must be a positive integer");
                        }
                    };
                    self.expect(b']')?;
                    Ok(Expr::Param(k))
                }
                Some(b'(') => {
                    let Some((func, arity)) = Func::lookup(&name) else {
                        self.pos = start;
                        return self.err(format!("unknown function `{name}`"));
                    };
                    self.pos += 1;
                    let mut args = vec![self.sum()?];
                    while self.peek() == Some(b',') {
                        self.pos += 1;
                        args.push(self.sum()?);
                    }
                    self.expect(b')')?;
                    if args.len() != arity {
                        self.pos = start;
                        return self.err(format!("`{name}` takes {arity} argument(s)"));
                    }
                    Ok(Expr::Call(func, args))
                }
                _ => Ok(Expr::Var(name)),
            }
        } else {
            self.err(format!("unexpected character `{}`", c as char))
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && matches!(s[self.pos], b'e' | b'E') {
            let mut p = self.pos + 1;
            if p < s.len() && matches!(s[p], b'+' | b'-') {
                p += 1;
            }
            if p < s.len() && s[p].is_ascii_digit() {
                while p < s.len() && s[p].is_ascii_digit() {
                    p += 1;
                }
                self.pos = p;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(v)),
            Err(_) => {
                self.pos = start;
                self.err(format!("malformed number `{text}`"))
            }
        }
    }
}
