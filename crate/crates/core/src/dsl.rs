//! Text syntax for f, g and h.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := 'z' | 'i' | number | number 'i' | name '(' args ')' | name | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-z^2`
//! is `-(z^2)`. Names are `exp`, `log` and the presets `koebe`,
//! `moebius(a)` and `polynomial(c1, ..., cn)`, which expand into plain trees.
//! Subtrees that do not involve `z` are folded into constants.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{FunctionExpr, NORMALIZATION_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub position: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.position, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseDiagnostic {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Imag(x) => format!("imaginary {x}i"),
            Tok::Ident(s) => format!("name `{s}`"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn diag(position: usize, message: impl Into<String>, expected: &[&str]) -> ParseDiagnostic {
    ParseDiagnostic {
        position,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn lex(src: &str) -> std::result::Result<Vec<(Tok, usize)>, ParseDiagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if !b.is_ascii() {
            return Err(diag(i, "non-ASCII character", &[]));
        }
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match b {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent, only when followed by digits
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| diag(start, format!("malformed number `{text}`"), &["number"]))?;
                let imaginary = i < bytes.len()
                    && bytes[i] == b'i'
                    && !(i + 1 < bytes.len() && bytes[i + 1].is_ascii_alphanumeric());
                if imaginary {
                    i += 1;
                    out.push((Tok::Imag(value), start));
                } else {
                    out.push((Tok::Num(value), start));
                }
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => return Err(diag(i, format!("unexpected character `{}`", b as char), &[])),
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

const ATOM: &[&str] = &["atom"];

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

type PResult<T> = std::result::Result<T, ParseDiagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, label: &str) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(diag(
                self.offset(),
                format!("found {}", self.peek().describe()),
                &[label],
            ))
        }
    }

    fn expr(&mut self) -> PResult<FunctionExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = FunctionExpr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = FunctionExpr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<FunctionExpr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = FunctionExpr::mul(lhs, self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = FunctionExpr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> PResult<FunctionExpr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(FunctionExpr::neg(self.factor()?));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<FunctionExpr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(FunctionExpr::pow(base, exponent));
        }
        Ok(base)
    }

    fn args(&mut self) -> PResult<Vec<(FunctionExpr, usize)>> {
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            let at = self.offset();
            args.push((self.expr()?, at));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                other => {
                    return Err(diag(
                        self.offset(),
                        format!("found {}", other.describe()),
                        &["','", "')'"],
                    ))
                }
            }
        }
    }

    fn constant_arg(&self, arg: (FunctionExpr, usize), name: &str) -> PResult<Complex64> {
        arg.0.folded().as_const().ok_or_else(|| {
            diag(
                arg.1,
                format!("argument of `{name}` must be a constant"),
                &["constant"],
            )
        })
    }

    fn atom(&mut self) -> PResult<FunctionExpr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(x) => Ok(FunctionExpr::real(x)),
            Tok::Imag(x) => Ok(FunctionExpr::constant(Complex64::new(0.0, x))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => self.named(name, at),
            other => Err(diag(at, format!("found {}", other.describe()), ATOM)),
        }
    }

    fn named(&mut self, name: String, at: usize) -> PResult<FunctionExpr> {
        match name.as_str() {
            "z" => Ok(FunctionExpr::var()),
            "i" => Ok(FunctionExpr::constant(Complex64::new(0.0, 1.0))),
            "exp" | "log" => {
                let mut args = self.args()?;
                if args.len() != 1 {
                    return Err(diag(at, format!("`{name}` takes one argument"), &["1 argument"]));
                }
                let a = args.remove(0).0;
                Ok(if name == "exp" {
                    FunctionExpr::exp(a)
                } else {
                    FunctionExpr::log(a)
                })
            }
            "koebe" => {
                if *self.peek() == Tok::LParen {
                    let args = self.args()?;
                    if !args.is_empty() {
                        return Err(diag(at, "`koebe` takes no arguments", &["')'"]));
                    }
                }
                Ok(koebe())
            }
            "moebius" => {
                let mut args = self.args()?;
                if args.len() != 1 {
                    return Err(diag(at, "`moebius` takes one argument", &["1 argument"]));
                }
                let a = self.constant_arg(args.remove(0), "moebius")?;
                Ok(moebius(a))
            }
            "polynomial" => {
                let args = self.args()?;
                if args.is_empty() {
                    return Err(diag(at, "`polynomial` needs at least one coefficient", &["constant"]));
                }
                let coeffs = args
                    .into_iter()
                    .map(|a| self.constant_arg(a, "polynomial"))
                    .collect::<PResult<Vec<_>>>()?;
                Ok(polynomial(&coeffs))
            }
            _ => Err(diag(
                at,
                format!("unknown name `{name}`"),
                &["z", "i", "exp", "log", "koebe", "moebius", "polynomial"],
            )),
        }
    }
}

/// `z / (1 - z)^2`.
pub fn koebe() -> FunctionExpr {
    FunctionExpr::div(
        FunctionExpr::var(),
        FunctionExpr::pow(
            FunctionExpr::sub(FunctionExpr::real(1.0), FunctionExpr::var()),
            FunctionExpr::real(2.0),
        ),
    )
}

/// `z / (1 + a z)`, the normalized Moebius map with pole at `-1/a`.
pub fn moebius(a: Complex64) -> FunctionExpr {
    FunctionExpr::div(
        FunctionExpr::var(),
        FunctionExpr::add(
            FunctionExpr::real(1.0),
            FunctionExpr::mul(FunctionExpr::constant(a), FunctionExpr::var()),
        ),
    )
}

/// `c1 z + c2 z^2 + ... + cn z^n`.
pub fn polynomial(coeffs: &[Complex64]) -> FunctionExpr {
    let term = |k: usize, c: Complex64| {
        let zk = if k == 1 {
            FunctionExpr::var()
        } else {
            FunctionExpr::pow(FunctionExpr::var(), FunctionExpr::real(k as f64))
        };
        if c == Complex64::new(1.0, 0.0) {
            zk
        } else {
            FunctionExpr::mul(FunctionExpr::constant(c), zk)
        }
    };
    let mut acc = term(1, coeffs[0]);
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        acc = FunctionExpr::add(acc, term(k + 1, *c));
    }
    acc
}

/// Parses DSL source into a constant-folded expression tree.
pub fn parse(src: &str) -> std::result::Result<FunctionExpr, ParseDiagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(diag(
            p.offset(),
            format!("found {}", p.peek().describe()),
            &["operator", "end of input"],
        ));
    }
    Ok(e.folded())
}

fn fmt_real(x: f64) -> String {
    if x.is_sign_negative() && x != 0.0 {
        format!("(-{})", -x)
    } else {
        format!("{}", x.abs())
    }
}

fn fmt_const(c: Complex64) -> String {
    match (c.re != 0.0, c.im != 0.0) {
        (_, false) => fmt_real(c.re),
        (false, true) if c.im > 0.0 => format!("{}i", c.im),
        (false, true) => format!("(-{}i)", -c.im),
        (true, true) if c.im > 0.0 => format!("({} + {}i)", fmt_real(c.re), c.im),
        (true, true) => format!("({} - {}i)", fmt_real(c.re), -c.im),
    }
}

/// Fully parenthesized canonical text; `parse(&print(e)) == e` for trees
/// whose z-free subtrees are already folded.
pub fn print(expr: &FunctionExpr) -> String {
    use FunctionExpr as E;
    match expr {
        E::Var => "z".into(),
        E::Const(c) => fmt_const(*c),
        E::Neg(a) => format!("(-{})", print(a)),
        E::Add(a, b) => format!("({} + {})", print(a), print(b)),
        E::Sub(a, b) => format!("({} - {})", print(a), print(b)),
        E::Mul(a, b) => format!("({} * {})", print(a), print(b)),
        E::Div(a, b) => format!("({} / {})", print(a), print(b)),
        E::Pow(a, b) => format!("({} ^ {})", print(a), print(b)),
        E::Exp(a) => format!("exp({})", print(a)),
        E::Log(a) => format!("log({})", print(a)),
    }
}

/// Outcome of [`validate_normalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub normalized: bool,
    pub value_at_zero: Complex64,
    pub derivative_at_zero: Complex64,
    pub diagnostics: Vec<String>,
}

/// `|f(0)| <= 1e-12` and `|f'(0) - 1| <= 1e-12`.
pub fn validate_normalized(expr: &FunctionExpr) -> Result<Normalization> {
    let (f0, d0) = crate::expr::normalization_defect(expr)?;
    let mut diagnostics = Vec::new();
    if f0.norm() > NORMALIZATION_TOL {
        diagnostics.push(format!("f(0) = {f0}, expected 0"));
    }
    if (d0 - 1.0).norm() > NORMALIZATION_TOL {
        diagnostics.push(format!("f'(0) = {d0}, expected 1"));
    }
    Ok(Normalization {
        normalized: diagnostics.is_empty(),
        value_at_zero: f0,
        derivative_at_zero: d0,
        diagnostics,
    })
}

/// Parses and wraps the diagnostic into the crate error.
pub fn parse_expr(src: &str) -> Result<FunctionExpr> {
    parse(src).map_err(Error::from)
}
