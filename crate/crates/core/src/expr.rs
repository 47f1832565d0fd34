//! Scalar expressions: parsing, evaluation and the [`ScalarFn`] wrapper used
//! for every component function of a map.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")* power
//! power  := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-2^2`
//! is `-4` and `2^3^2` is `512`. Functions: `abs`, `ln`, `exp`, `sqrt`.
//! Constants: `pi`, `e`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Ln,
    Exp,
    Sqrt,
}

impl UnaryOp {
    fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Abs => Some("abs"),
            UnaryOp::Ln => Some("ln"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Sqrt => Some("sqrt"),
        }
    }

    fn from_function_name(name: &str) -> Option<Self> {
        match name {
            "abs" => Some(UnaryOp::Abs),
            "ln" => Some(UnaryOp::Ln),
            "exp" => Some(UnaryOp::Exp),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Expression tree. Arity is encoded in the variants, so every value is
/// well formed.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Fully parenthesized form; reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Unary(UnaryOp::Neg, arg) => write!(f, "(-{arg})"),
            Expr::Unary(op, arg) => write!(f, "{}({arg})", op.function_name().unwrap_or("?")),
            Expr::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogNonPositive,
    SqrtNegative,
    InvalidPower,
    Other,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogNonPositive => "logarithm of a non-positive value",
            DomainErrorKind::SqrtNegative => "square root of a negative value",
            DomainErrorKind::InvalidPower => "power with no real value",
            DomainErrorKind::Other => "outside the domain",
        })
    }
}

/// Evaluation left the natural domain of a function. Carries the offending
/// sub-expression (or builtin name) and the argument it was applied to.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{expr}` (argument {at})")]
pub struct DomainError {
    pub kind: DomainErrorKind,
    pub expr: String,
    pub at: f64,
}

impl DomainError {
    pub fn new(kind: DomainErrorKind, expr: impl Into<String>, at: f64) -> Self {
        DomainError { kind, expr: expr.into(), at }
    }

    /// Poles are what take an orbit out of the good set of a recurrence.
    pub fn is_pole(&self) -> bool {
        self.kind == DomainErrorKind::DivisionByZero
    }
}

pub type EvalResult = Result<f64, DomainError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<String>, found: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn describe(tok: Option<&Token>) -> String {
    match tok {
        None => "end of input".into(),
        Some(Token::Number(v)) => format!("number {v}"),
        Some(Token::Ident(s)) => format!("identifier `{s}`"),
        Some(t) => format!("`{}`", token_symbol(t)),
    }
}

fn token_symbol(t: &Token) -> &'static str {
    match t {
        Token::Plus => "+",
        Token::Minus => "-",
        Token::Star => "*",
        Token::Slash => "/",
        Token::Caret => "^",
        Token::LParen => "(",
        Token::RParen => ")",
        Token::Number(_) | Token::Ident(_) => "",
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let lit = &text[i..j];
                let value: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: vec!["decimal number".into()],
                    found: format!("`{lit}`"),
                })?;
                i = j;
                out.push((Token::Number(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((Token::Ident(text[i..j].to_string()), start));
                i = j;
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["number".into(), "identifier".into(), "operator".into()],
                    found: format!("`{}`", text[start..].chars().next().unwrap_or(' ')),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let expected = expected.iter().map(|s| s.to_string()).collect();
        ParseError::Syntax { offset: self.offset(), expected, found: describe(self.peek()) }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinaryOp::Add,
                Some(Token::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinaryOp::Mul,
                Some(Token::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let mut negations = 0usize;
        while self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            negations += 1;
        }
        let mut e = self.power()?;
        for _ in 0..negations {
            e = Expr::Unary(UnaryOp::Neg, Box::new(e));
        }
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Number(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Token::LParen) {
                    let Some(op) = UnaryOp::from_function_name(&name) else {
                        return Err(ParseError::UnknownIdentifier { name, offset });
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                if self.vars.contains(&name.as_str()) {
                    return Ok(Expr::Var(name));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => Err(ParseError::UnknownIdentifier { name, offset }),
                }
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(&Token::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&["`)`", "operator"]))
        }
    }
}

/// Parses `text`, accepting only the identifiers in `vars` (plus `pi`, `e`
/// and the function names).
pub fn parse(text: &str, vars: &[&str]) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0, end: text.len(), vars };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

fn real_pow(base: f64, exponent: f64) -> Option<f64> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return None;
    }
    if base == 0.0 && exponent < 0.0 {
        return None;
    }
    Some(base.powf(exponent))
}

impl Expr {
    /// Bottom-up IEEE evaluation. `vars` binds variable names to values.
    pub fn eval(&self, vars: &[(&str, f64)]) -> EvalResult {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(name) => vars
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| DomainError::new(DomainErrorKind::Other, name.clone(), f64::NAN)),
            Expr::Unary(op, arg) => {
                let a = arg.eval(vars)?;
                match op {
                    UnaryOp::Neg => Ok(-a),
                    UnaryOp::Abs => Ok(a.abs()),
                    UnaryOp::Exp => Ok(a.exp()),
                    UnaryOp::Ln if a > 0.0 => Ok(a.ln()),
                    UnaryOp::Ln => {
                        Err(DomainError::new(DomainErrorKind::LogNonPositive, self.to_string(), a))
                    }
                    UnaryOp::Sqrt if a >= 0.0 => Ok(a.sqrt()),
                    UnaryOp::Sqrt => {
                        Err(DomainError::new(DomainErrorKind::SqrtNegative, self.to_string(), a))
                    }
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(vars)?;
                let b = rhs.eval(vars)?;
                match op {
                    BinaryOp::Add => Ok(a + b),
                    BinaryOp::Sub => Ok(a - b),
                    BinaryOp::Mul => Ok(a * b),
                    BinaryOp::Div if b == 0.0 => {
                        Err(DomainError::new(DomainErrorKind::DivisionByZero, self.to_string(), a))
                    }
                    BinaryOp::Div => Ok(a / b),
                    BinaryOp::Pow => real_pow(a, b).ok_or_else(|| {
                        DomainError::new(DomainErrorKind::InvalidPower, self.to_string(), a)
                    }),
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

type Closure = dyn Fn(f64) -> EvalResult + Send + Sync;

#[derive(Clone)]
enum Repr {
    Builtin { name: Arc<str>, f: Arc<Closure> },
    Expr { ast: Arc<Expr>, var: Arc<str> },
}

/// A real function of one variable: a named builtin or a parsed expression,
/// optionally carrying a closed-form derivative. Immutable and cheap to clone.
#[derive(Clone)]
pub struct ScalarFn {
    repr: Repr,
    derivative: Option<Arc<ScalarFn>>,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({self})")
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Builtin { name, .. } => f.write_str(name),
            Repr::Expr { ast, .. } => write!(f, "{ast}"),
        }
    }
}

/// Default central-difference step for `point`.
pub fn default_step(point: f64) -> f64 {
    1e-6 * point.abs().max(1.0)
}

impl ScalarFn {
    /// Parses an expression in the single variable `u`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Self::parse_in(text, "u")
    }

    pub fn parse_in(text: &str, var: &str) -> Result<Self, ParseError> {
        let ast = parse(text, &[var])?;
        Ok(Self::from_expr(ast, var))
    }

    pub fn from_expr(ast: Expr, var: &str) -> Self {
        ScalarFn { repr: Repr::Expr { ast: Arc::new(ast), var: var.into() }, derivative: None }
    }

    /// Builtin that cannot leave its domain.
    pub fn builtin(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::builtin_checked(name, move |u| Ok(f(u)))
    }

    /// Builtin that may report a domain error.
    pub fn builtin_checked(
        name: impl Into<String>,
        f: impl Fn(f64) -> EvalResult + Send + Sync + 'static,
    ) -> Self {
        let name: String = name.into();
        ScalarFn { repr: Repr::Builtin { name: name.into(), f: Arc::new(f) }, derivative: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::builtin(format!("{c}"), move |_| c).with_derivative(Self::builtin("0", |_| 0.0))
    }

    pub fn identity() -> Self {
        Self::builtin("u", |u| u).with_derivative(Self::constant(1.0))
    }

    pub fn linear(slope: f64) -> Self {
        Self::builtin(format!("{slope}*u"), move |u| slope * u).with_derivative(Self::constant(slope))
    }

    /// `u / (a + b u)`.
    pub fn mobius(a: f64, b: f64) -> Self {
        let name = format!("u/({a} + {b}*u)");
        let f = Self::builtin_checked(name.clone(), move |u| {
            let den = a + b * u;
            if den == 0.0 {
                Err(DomainError::new(DomainErrorKind::DivisionByZero, name.clone(), u))
            } else {
                Ok(u / den)
            }
        });
        let dname = format!("{a}/({a} + {b}*u)^2");
        let d = Self::builtin_checked(dname.clone(), move |u| {
            let den = a + b * u;
            if den == 0.0 {
                Err(DomainError::new(DomainErrorKind::DivisionByZero, dname.clone(), u))
            } else {
                Ok(a / (den * den))
            }
        });
        f.with_derivative(d)
    }

    pub fn with_derivative(mut self, d: ScalarFn) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn closed_form_derivative(&self) -> Option<&ScalarFn> {
        self.derivative.as_deref()
    }

    pub fn ast(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Expr { ast, .. } => Some(ast),
            Repr::Builtin { .. } => None,
        }
    }

    pub fn eval(&self, u: f64) -> EvalResult {
        match &self.repr {
            Repr::Builtin { f, .. } => f(u),
            Repr::Expr { ast, var } => ast.eval(&[(var, u)]),
        }
    }

    /// Closed-form derivative when available, otherwise the central
    /// difference `(f(p+h) - f(p-h)) / 2h`.
    pub fn derivative(&self, point: f64, step: f64) -> EvalResult {
        if let Some(d) = &self.derivative {
            return d.eval(point);
        }
        let hi = self.eval(point + step)?;
        let lo = self.eval(point - step)?;
        Ok((hi - lo) / (2.0 * step))
    }

    /// Derivative with the default step.
    pub fn derivative_at(&self, point: f64) -> EvalResult {
        self.derivative(point, default_step(point))
    }

    /// `self(inner(u))`.
    pub fn compose(&self, inner: &ScalarFn) -> ScalarFn {
        let (outer, inn) = (self.clone(), inner.clone());
        ScalarFn::builtin_checked(format!("({self})∘({inner})"), move |u| outer.eval(inn.eval(u)?))
    }

    /// `self ∘ self ∘ ... ∘ self`, `times` copies; identity for 0.
    pub fn iterate(&self, times: usize) -> ScalarFn {
        if times == 0 {
            return ScalarFn::identity();
        }
        let f = self.clone();
        ScalarFn::builtin_checked(format!("({self})^[{times}]"), move |u| {
            let mut v = u;
            for _ in 0..times {
                v = f.eval(v)?;
            }
            Ok(v)
        })
    }

    pub fn mul(&self, other: &ScalarFn) -> ScalarFn {
        let (a, b) = (self.clone(), other.clone());
        ScalarFn::builtin_checked(format!("({self})*({other})"), move |u| Ok(a.eval(u)? * b.eval(u)?))
    }

    pub fn add(&self, other: &ScalarFn) -> ScalarFn {
        let (a, b) = (self.clone(), other.clone());
        ScalarFn::builtin_checked(format!("({self})+({other})"), move |u| Ok(a.eval(u)? + b.eval(u)?))
    }
}

/// Free-function form of [`ScalarFn::derivative`].
pub fn numeric_derivative(f: &ScalarFn, point: f64, step: f64) -> EvalResult {
    f.derivative(point, step)
}

/// A real function of the two planar coordinates `(x, y)`.
#[derive(Clone)]
pub struct PlanarFn {
    name: Arc<str>,
    f: Arc<dyn Fn(f64, f64) -> EvalResult + Send + Sync>,
}

impl fmt::Debug for PlanarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlanarFn({})", self.name)
    }
}

impl fmt::Display for PlanarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl PlanarFn {
    /// Parses an expression in `x` and `y`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let ast = Arc::new(parse(text, &["x", "y"])?);
        let name = ast.to_string();
        Ok(PlanarFn { name: name.into(), f: Arc::new(move |x, y| ast.eval(&[("x", x), ("y", y)])) })
    }

    pub fn builtin(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> EvalResult + Send + Sync + 'static,
    ) -> Self {
        let name: String = name.into();
        PlanarFn { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: f64, y: f64) -> EvalResult {
        (self.f)(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(text: &str, u: f64) -> EvalResult {
        ScalarFn::parse(text).unwrap().eval(u)
    }

    #[test]
    fn cubic_with_three_fixed_points() {
        assert_eq!(ev("u*(4-u)*(1+u)/6", 2.0).unwrap(), 2.0);
    }

    #[test]
    fn log_abs_expression() {
        let v = ev("1 - 1/ln(abs(u))", (-1.0f64).exp()).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn undeclared_identifier_is_rejected() {
        let err = ScalarFn::parse("u/(a+b*u)").unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { name: "a".into(), offset: 3 });
    }

    #[test]
    fn unknown_function_is_rejected() {
        let err = ScalarFn::parse("sin(u)").unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { ref name, offset: 0 } if name == "sin"));
    }

    #[test]
    fn syntax_errors_report_offset() {
        let err = parse("1 + * 2", &["u"]).unwrap_err();
        assert_eq!(err.offset(), 4);
        let err = parse("(u + 1", &["u"]).unwrap_err();
        assert_eq!(err.offset(), 6);
        match parse("u u", &["u"]).unwrap_err() {
            ParseError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 2);
                assert!(expected.iter().any(|e| e.contains("operator")));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("", &["u"]).is_err());
        assert!(parse("2 # 3", &["u"]).is_err());
    }

    #[test]
    fn mobius_builtin() {
        assert!((ScalarFn::mobius(2.0, 1.0).eval(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!(ScalarFn::mobius(2.0, 1.0).eval(-2.0).unwrap_err().is_pole());
    }

    #[test]
    fn abs_power() {
        assert_eq!(ev("abs(u)^0.5", -4.0).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors() {
        let e = ev("1/u", 0.0).unwrap_err();
        assert_eq!(e.kind, DomainErrorKind::DivisionByZero);
        assert_eq!(e.expr, "(1 / u)");
        assert_eq!(ev("ln(u)", -1.0).unwrap_err().kind, DomainErrorKind::LogNonPositive);
        assert_eq!(ev("ln(u)", 0.0).unwrap_err().kind, DomainErrorKind::LogNonPositive);
        assert_eq!(ev("sqrt(u)", -1.0).unwrap_err().kind, DomainErrorKind::SqrtNegative);
        assert_eq!(ev("u^0.5", -4.0).unwrap_err().kind, DomainErrorKind::InvalidPower);
        assert_eq!(ev("u^-1", 0.0).unwrap_err().kind, DomainErrorKind::InvalidPower);
        assert_eq!(ev("u^3", -2.0).unwrap(), -8.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4", 0.0).unwrap(), 14.0);
        assert_eq!(ev("2^3^2", 0.0).unwrap(), 512.0);
        assert_eq!(ev("-2^2", 0.0).unwrap(), -4.0);
        assert_eq!(ev("2^-1", 0.0).unwrap(), 0.5);
        assert_eq!(ev("8/4/2", 0.0).unwrap(), 1.0);
        assert_eq!(ev("10-4-3", 0.0).unwrap(), 3.0);
        assert_eq!(ev("--u", 3.0).unwrap(), 3.0);
        assert_eq!(ev(" 1.5e1 +  2E-1 ", 0.0).unwrap(), 15.2);
        assert_eq!(ev("pi", 0.0).unwrap(), std::f64::consts::PI);
        assert_eq!(ev("e*u", 1.0).unwrap(), std::f64::consts::E);
    }

    #[test]
    fn derivatives() {
        let phi = ScalarFn::parse("u*(4-u)*(1+u)/6").unwrap();
        assert!((phi.derivative_at(0.0).unwrap() - 2.0 / 3.0).abs() < 1e-8);
        assert!((phi.derivative_at(1.0).unwrap() - 7.0 / 6.0).abs() < 1e-8);
        let sq = ScalarFn::builtin("u^2", |u| u * u);
        // h = 1/4 and 3 ± 1/4 are exact binary fractions
        assert_eq!(sq.derivative(3.0, 0.25).unwrap(), 6.0);
        // closed form wins over the step
        let lin = ScalarFn::linear(0.5);
        assert_eq!(lin.derivative(10.0, 1e3).unwrap(), 0.5);
        assert!(ScalarFn::parse("ln(u)").unwrap().derivative(0.0, 1e-3).is_err());
    }

    #[test]
    fn richardson_behavior_on_polynomials() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..200 {
            let degree = rng.gen_range(3..=5usize);
            let coeffs: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p: f64 = rng.gen_range(-2.0..2.0);
            let c = coeffs.clone();
            let f = ScalarFn::builtin("poly", move |u| c.iter().rev().fold(0.0, |acc, a| acc * u + a));
            let exact: f64 =
                coeffs.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a * p.powi(k as i32 - 1)).sum();
            let third: f64 = coeffs
                .iter()
                .enumerate()
                .skip(3)
                .map(|(k, a)| (k * (k - 1) * (k - 2)) as f64 * a * p.powi(k as i32 - 3))
                .sum();
            // Richardson only describes the leading h^2 term.
            if third.abs() < 0.5 {
                continue;
            }
            let h = 1e-2;
            let e1 = (f.derivative(p, h).unwrap() - exact).abs();
            let e2 = (f.derivative(p, h / 2.0).unwrap() - exact).abs();
            assert!(e2 <= e1 / 2.0, "p={p} coeffs={coeffs:?}: {e2} vs {e1}");
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn combinators() {
        let phi = ScalarFn::mobius(-1.0, 1.0);
        let phi2 = phi.iterate(2);
        assert_eq!(phi2.eval(3.0).unwrap(), 3.0);
        assert_eq!(phi.compose(&phi).eval(3.0).unwrap(), 3.0);
        let g = ScalarFn::linear(2.0).mul(&ScalarFn::constant(3.0)).add(&ScalarFn::identity());
        assert_eq!(g.eval(1.0).unwrap(), 7.0);
        assert_eq!(ScalarFn::linear(2.0).iterate(0).eval(5.0).unwrap(), 5.0);
    }

    #[test]
    fn planar_parse() {
        let f = PlanarFn::parse("x*(4-x*y)/6").unwrap();
        assert_eq!(f.eval(1.0, 1.0).unwrap(), 0.5);
        assert!(PlanarFn::parse("x*u").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Const),
            (0u32..1000).prop_map(|n| Expr::Const(n as f64)),
            Just(Expr::Var("u".into())),
        ];
        leaf.prop_recursive(7, 64, 2, |inner| {
            prop_oneof![
                (
                    prop_oneof![
                        Just(UnaryOp::Neg),
                        Just(UnaryOp::Abs),
                        Just(UnaryOp::Ln),
                        Just(UnaryOp::Exp),
                        Just(UnaryOp::Sqrt)
                    ],
                    inner.clone()
                )
                    .prop_map(|(op, a)| Expr::Unary(op, Box::new(a))),
                (
                    prop_oneof![
                        Just(BinaryOp::Add),
                        Just(BinaryOp::Sub),
                        Just(BinaryOp::Mul),
                        Just(BinaryOp::Div),
                        Just(BinaryOp::Pow)
                    ],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn print_then_parse_roundtrips(e in arb_expr()) {
            prop_assert!(e.depth() <= 8);
            let printed = e.to_string();
            let back = parse(&printed, &["u"]).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
