//! Closed-form real expressions over coordinate symbols, with exact symbolic
//! differentiation.
//!
//! Grammar: `+ - * / ^`, parentheses, real literals, the functions
//! `sin cos exp log`, and coordinate symbols. Base-point expressions use
//! `x1..xn`; arrow expressions use `x1..xn` for the source point and
//! `y1..yn` for the target point.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{name}` is not available in dimension {dim}")]
    SymbolOutOfRange { name: String, dim: usize },
    #[error("expression evaluated to a non-finite value ({0})")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
        }
    }
}

/// Which symbols an expression may mention, and how they map to variable slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbols {
    /// `x1..xn` mapped to slots `0..n`.
    Point { dim: usize },
    /// `x1..xn` mapped to `0..n`, `y1..yn` mapped to `n..2n`.
    Arrow { dim: usize },
}

impl Symbols {
    pub fn slots(self) -> usize {
        match self {
            Symbols::Point { dim } => dim,
            Symbols::Arrow { dim } => 2 * dim,
        }
    }

    fn resolve(self, name: &str) -> Result<usize, ExprError> {
        let (head, digits) = name.split_at(1);
        let index: usize = digits
            .parse()
            .map_err(|_| ExprError::UnknownSymbol(name.to_string()))?;
        let (dim, offset) = match (self, head) {
            (Symbols::Point { dim }, "x") => (dim, 0),
            (Symbols::Arrow { dim }, "x") => (dim, 0),
            (Symbols::Arrow { dim }, "y") => (dim, dim),
            _ => return Err(ExprError::UnknownSymbol(name.to_string())),
        };
        if index == 0 || index > dim {
            return Err(ExprError::SymbolOutOfRange {
                name: name.to_string(),
                dim,
            });
        }
        Ok(offset + index - 1)
    }

    fn name(self, slot: usize) -> String {
        match self {
            Symbols::Arrow { dim } if slot >= dim => format!("y{}", slot - dim + 1),
            _ => format!("x{}", slot + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str, symbols: Symbols) -> Result<Expr, ExprError> {
        Parser::new(src, symbols).parse_all()
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(slot: usize) -> Expr {
        Expr::Var(slot)
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => vars[*i],
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Pow(a, b) => match **b {
                Expr::Const(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => {
                    a.eval(vars).powi(c as i32)
                }
                _ => a.eval(vars).powf(b.eval(vars)),
            },
            Expr::Func(f, a) => f.apply(a.eval(vars)),
        }
    }

    /// Evaluates and rejects NaN or infinite results.
    pub fn eval_finite(&self, vars: &[f64]) -> Result<f64, ExprError> {
        let v = self.eval(vars);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite(v))
        }
    }

    /// Highest variable slot referenced, if any.
    pub fn max_slot(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Func(_, a) => a.max_slot(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_slot().max(b.max_slot()),
        }
    }

    pub fn depends_on(&self, slot: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(i) => *i == slot,
            Expr::Neg(a) | Expr::Func(_, a) => a.depends_on(slot),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(slot) || b.depends_on(slot),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_slot().is_none()
    }

    /// Replaces every variable by the expression `f(slot)`. No simplification
    /// is applied, so evaluation order is preserved.
    pub fn substitute(&self, f: &dyn Fn(usize) -> Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(f));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => f(*i),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::Pow(sub(a), sub(b)),
            Expr::Func(g, a) => Expr::Func(*g, sub(a)),
        }
    }

    /// Moves every variable slot up by `offset`.
    pub fn shift_slots(&self, offset: usize) -> Expr {
        self.substitute(&|i| Expr::Var(i + offset))
    }

    /// Symbolic partial derivative with respect to `slot`.
    pub fn diff(&self, slot: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == slot { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(slot)),
            Expr::Add(a, b) => add(a.diff(slot), b.diff(slot)),
            Expr::Sub(a, b) => sub(a.diff(slot), b.diff(slot)),
            Expr::Mul(a, b) => add(
                mul(a.diff(slot), (**b).clone()),
                mul((**a).clone(), b.diff(slot)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(
                    mul(a.diff(slot), (**b).clone()),
                    mul((**a).clone(), b.diff(slot)),
                );
                div(num, powc((**b).clone(), 2.0))
            }
            Expr::Pow(base, exponent) => {
                if !exponent.depends_on(slot) && !base.depends_on(slot) {
                    return Expr::Const(0.0);
                }
                if let Expr::Const(c) = **exponent {
                    // c * u^(c-1) * u'
                    return mul(
                        mul(Expr::Const(c), powc((**base).clone(), c - 1.0)),
                        base.diff(slot),
                    );
                }
                if !exponent.depends_on(slot) {
                    let lowered = sub((**exponent).clone(), Expr::Const(1.0));
                    return mul(
                        mul(
                            (**exponent).clone(),
                            Expr::Pow(base.clone(), Box::new(lowered)),
                        ),
                        base.diff(slot),
                    );
                }
                // u^v * (v' ln u + v u' / u)
                let u = (**base).clone();
                let v = (**exponent).clone();
                let inner = add(
                    mul(v.diff(slot), Expr::Func(Func::Log, Box::new(u.clone()))),
                    div(mul(v.clone(), u.diff(slot)), u.clone()),
                );
                mul(self.clone(), inner)
            }
            Expr::Func(f, a) => {
                let inner = a.diff(slot);
                let outer = match f {
                    Func::Sin => Expr::Func(Func::Cos, a.clone()),
                    Func::Cos => neg(Expr::Func(Func::Sin, a.clone())),
                    Func::Exp => self.clone(),
                    Func::Log => div(Expr::Const(1.0), (**a).clone()),
                };
                mul(outer, inner)
            }
        }
    }

    pub fn display(&self, symbols: Symbols) -> String {
        let mut out = String::new();
        self.write(&mut out, symbols);
        out
    }

    fn write(&self, out: &mut String, symbols: Symbols) {
        use std::fmt::Write;
        let bin = |out: &mut String, a: &Expr, op: &str, b: &Expr| {
            out.push('(');
            a.write(out, symbols);
            out.push_str(op);
            b.write(out, symbols);
            out.push(')');
        };
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    let _ = write!(out, "({c:?})");
                } else {
                    let _ = write!(out, "{c:?}");
                }
            }
            Expr::Var(i) => out.push_str(&symbols.name(*i)),
            Expr::Neg(a) => {
                out.push_str("(-");
                a.write(out, symbols);
                out.push(')');
            }
            Expr::Add(a, b) => bin(out, a, " + ", b),
            Expr::Sub(a, b) => bin(out, a, " - ", b),
            Expr::Mul(a, b) => bin(out, a, "*", b),
            Expr::Div(a, b) => bin(out, a, "/", b),
            Expr::Pow(a, b) => bin(out, a, "^", b),
            Expr::Func(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, symbols);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slots = self.max_slot().map_or(0, |s| s + 1);
        f.write_str(&self.display(Symbols::Point { dim: slots }))
    }
}

// Light constant folding for derivative construction.

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn powc(base: Expr, c: f64) -> Expr {
    if c == 0.0 {
        Expr::Const(1.0)
    } else if c == 1.0 {
        base
    } else {
        Expr::Pow(Box::new(base), Box::new(Expr::Const(c)))
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    symbols: Symbols,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, symbols: Symbols) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            symbols,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.parse_sum()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(e)
    }

    fn parse_sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_product()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.parse_product()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.parse_product()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.parse_unary()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.parse_unary()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.parse_unary()?)))
        } else if self.eat(b'+') {
            self.parse_unary()
        } else {
            self.parse_power()
        }
    }

    // `^` binds tighter than unary minus and is right associative.
    fn parse_power(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_atom()?;
        if self.eat(b'^') {
            let exponent = self.parse_unary()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_sum()?;
                if !self.eat(b')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            Some(c) => self.err(format!("unexpected character `{}`", c as char)),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Const(v)),
            Err(_) => {
                self.pos = start;
                self.err(format!("invalid number `{text}`"))
            }
        }
    }

    fn parse_ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            _ => None,
        };
        if let Some(f) = func {
            if !self.eat(b'(') {
                return self.err(format!("expected `(` after `{name}`"));
            }
            let arg = self.parse_sum()?;
            if !self.eat(b')') {
                return self.err("expected `)`");
            }
            return Ok(Expr::Func(f, Box::new(arg)));
        }
        self.symbols.resolve(name).map(Expr::Var)
    }
}
