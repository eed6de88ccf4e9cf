//! Expression trees for analytic functions of one complex variable.
//!
//! A [`FunctionExpr`] is evaluated under principal branches: `log` returns an
//! argument in `(-pi, pi]` and `a ^ b` is `exp(b * Log a)`. Symbolic
//! derivatives are produced by tree rewriting with constant folding, so the
//! criteria never stack finite-difference error on top of `f''`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexValue = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Node of an expression tree. Children are reference counted so derivative
/// trees can share subtrees with their source.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionExpr {
    Var,
    Const(Complex64),
    Neg(Arc<FunctionExpr>),
    Add(Arc<FunctionExpr>, Arc<FunctionExpr>),
    Sub(Arc<FunctionExpr>, Arc<FunctionExpr>),
    Mul(Arc<FunctionExpr>, Arc<FunctionExpr>),
    Div(Arc<FunctionExpr>, Arc<FunctionExpr>),
    Pow(Arc<FunctionExpr>, Arc<FunctionExpr>),
    Exp(Arc<FunctionExpr>),
    Log(Arc<FunctionExpr>),
}

use FunctionExpr as E;

impl FunctionExpr {
    pub fn var() -> Self {
        E::Var
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        E::Const(c.into())
    }

    pub fn real(x: f64) -> Self {
        E::Const(Complex64::new(x, 0.0))
    }

    // Raw constructors build exactly the requested node. The `fold_*`
    // variants below collapse z-free subtrees into constants.

    pub fn neg(a: FunctionExpr) -> Self {
        E::Neg(Arc::new(a))
    }
    pub fn add(a: FunctionExpr, b: FunctionExpr) -> Self {
        E::Add(Arc::new(a), Arc::new(b))
    }
    pub fn sub(a: FunctionExpr, b: FunctionExpr) -> Self {
        E::Sub(Arc::new(a), Arc::new(b))
    }
    pub fn mul(a: FunctionExpr, b: FunctionExpr) -> Self {
        E::Mul(Arc::new(a), Arc::new(b))
    }
    pub fn div(a: FunctionExpr, b: FunctionExpr) -> Self {
        E::Div(Arc::new(a), Arc::new(b))
    }
    pub fn pow(a: FunctionExpr, b: FunctionExpr) -> Self {
        E::Pow(Arc::new(a), Arc::new(b))
    }
    pub fn exp(a: FunctionExpr) -> Self {
        E::Exp(Arc::new(a))
    }
    pub fn log(a: FunctionExpr) -> Self {
        E::Log(Arc::new(a))
    }

    /// Returns the node with every z-free subtree replaced by its value.
    /// Subtrees whose evaluation fails (e.g. `1/0`) are left untouched.
    pub fn folded(self) -> Self {
        match self {
            E::Var | E::Const(_) => self,
            E::Neg(a) => fold(E::Neg(Arc::new(unwrap_arc(a).folded()))),
            E::Exp(a) => fold(E::Exp(Arc::new(unwrap_arc(a).folded()))),
            E::Log(a) => fold(E::Log(Arc::new(unwrap_arc(a).folded()))),
            E::Add(a, b) => fold(E::Add(fa(a), fa(b))),
            E::Sub(a, b) => fold(E::Sub(fa(a), fa(b))),
            E::Mul(a, b) => fold(E::Mul(fa(a), fa(b))),
            E::Div(a, b) => fold(E::Div(fa(a), fa(b))),
            E::Pow(a, b) => fold(E::Pow(fa(a), fa(b))),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, E::Const(_))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            E::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// True when the subtree does not reference `z`.
    pub fn is_z_free(&self) -> bool {
        match self {
            E::Var => false,
            E::Const(_) => true,
            E::Neg(a) | E::Exp(a) | E::Log(a) => a.is_z_free(),
            E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) | E::Div(a, b) | E::Pow(a, b) => {
                a.is_z_free() && b.is_z_free()
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            E::Var | E::Const(_) => 1,
            E::Neg(a) | E::Exp(a) | E::Log(a) => 1 + a.size(),
            E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) | E::Div(a, b) | E::Pow(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        eval(self, z)
    }

    pub fn derivative(&self) -> FunctionExpr {
        differentiate(self)
    }
}

fn unwrap_arc(a: Arc<FunctionExpr>) -> FunctionExpr {
    Arc::try_unwrap(a).unwrap_or_else(|a| (*a).clone())
}

fn fa(a: Arc<FunctionExpr>) -> Arc<FunctionExpr> {
    Arc::new(unwrap_arc(a).folded())
}

/// Folds the node itself, assuming its children are already folded.
fn fold(node: FunctionExpr) -> FunctionExpr {
    let children_const = match &node {
        E::Var | E::Const(_) => return node,
        E::Neg(a) | E::Exp(a) | E::Log(a) => a.is_const(),
        E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) | E::Div(a, b) | E::Pow(a, b) => {
            a.is_const() && b.is_const()
        }
    };
    if !children_const {
        return node;
    }
    match eval(&node, ZERO) {
        Ok(v) => E::Const(v),
        Err(_) => node,
    }
}

impl fmt::Display for FunctionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::print(self))
    }
}

/// Principal logarithm with the argument normalized to `(-pi, pi]`.
pub fn principal_log(w: Complex64) -> Complex64 {
    let mut arg = w.im.atan2(w.re);
    if arg == -std::f64::consts::PI {
        arg = std::f64::consts::PI;
    }
    Complex64::new(w.norm().ln(), arg)
}

fn real_integer(e: Complex64) -> Option<i32> {
    if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 64.0 {
        Some(e.re as i32)
    } else {
        None
    }
}

/// `exp(exponent * Log w)` on the principal branch.
///
/// Real integer exponents are evaluated by repeated multiplication, which
/// agrees with the principal branch and keeps polynomial terms exact.
pub fn principal_power(w: Complex64, exponent: Complex64) -> Result<Complex64> {
    if w == ZERO {
        return if exponent.re > 0.0 {
            Ok(ZERO)
        } else {
            Err(Error::BranchPointHit { z: w })
        };
    }
    if let Some(n) = real_integer(exponent) {
        return Ok(w.powi(n));
    }
    Ok((exponent * principal_log(w)).exp())
}

fn finite(v: Complex64, z: Complex64, node: &FunctionExpr) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            z,
            subexpr: crate::dsl::print(node),
        })
    }
}

/// Evaluates `expr` at `z` under principal branches.
pub fn eval(expr: &FunctionExpr, z: Complex64) -> Result<Complex64> {
    let v = match expr {
        E::Var => z,
        E::Const(c) => *c,
        E::Neg(a) => -eval(a, z)?,
        E::Add(a, b) => eval(a, z)? + eval(b, z)?,
        E::Sub(a, b) => eval(a, z)? - eval(b, z)?,
        E::Mul(a, b) => eval(a, z)? * eval(b, z)?,
        E::Div(a, b) => {
            let num = eval(a, z)?;
            let den = eval(b, z)?;
            if den == ZERO {
                return Err(Error::DivisionByZero {
                    z,
                    subexpr: crate::dsl::print(expr),
                });
            }
            num / den
        }
        E::Pow(a, b) => {
            let base = eval(a, z)?;
            let e = eval(b, z)?;
            principal_power(base, e).map_err(|_| Error::BranchPointHit { z })?
        }
        E::Exp(a) => eval(a, z)?.exp(),
        E::Log(a) => {
            let w = eval(a, z)?;
            if w == ZERO {
                return Err(Error::BranchPointHit { z });
            }
            principal_log(w)
        }
    };
    finite(v, z, expr)
}

// Smart constructors used by the differentiator: constant folding plus the
// additive/multiplicative identities, so derivative trees stay small.

fn s_neg(a: FunctionExpr) -> FunctionExpr {
    match a {
        E::Const(c) => E::Const(-c),
        E::Neg(inner) => unwrap_arc(inner),
        other => FunctionExpr::neg(other),
    }
}

fn s_add(a: FunctionExpr, b: FunctionExpr) -> FunctionExpr {
    match (&a, &b) {
        (E::Const(x), E::Const(y)) => E::Const(x + y),
        (E::Const(x), _) if *x == ZERO => b,
        (_, E::Const(y)) if *y == ZERO => a,
        _ => FunctionExpr::add(a, b),
    }
}

fn s_sub(a: FunctionExpr, b: FunctionExpr) -> FunctionExpr {
    match (&a, &b) {
        (E::Const(x), E::Const(y)) => E::Const(x - y),
        (_, E::Const(y)) if *y == ZERO => a,
        (E::Const(x), _) if *x == ZERO => s_neg(b),
        _ => FunctionExpr::sub(a, b),
    }
}

fn s_mul(a: FunctionExpr, b: FunctionExpr) -> FunctionExpr {
    match (&a, &b) {
        (E::Const(x), E::Const(y)) => E::Const(x * y),
        (E::Const(x), _) | (_, E::Const(x)) if *x == ZERO => E::Const(ZERO),
        (E::Const(x), _) if *x == ONE => b,
        (_, E::Const(y)) if *y == ONE => a,
        (E::Const(x), _) if *x == -ONE => s_neg(b),
        (_, E::Const(y)) if *y == -ONE => s_neg(a),
        _ => FunctionExpr::mul(a, b),
    }
}

fn s_div(a: FunctionExpr, b: FunctionExpr) -> FunctionExpr {
    match (&a, &b) {
        (E::Const(x), E::Const(y)) if *y != ZERO => E::Const(x / y),
        (E::Const(x), _) if *x == ZERO => E::Const(ZERO),
        (_, E::Const(y)) if *y == ONE => a,
        _ => FunctionExpr::div(a, b),
    }
}

fn s_pow(a: FunctionExpr, b: FunctionExpr) -> FunctionExpr {
    match (&a, &b) {
        (_, E::Const(y)) if *y == ZERO => E::Const(ONE),
        (_, E::Const(y)) if *y == ONE => a,
        _ => fold(FunctionExpr::pow(a, b)),
    }
}

fn s_exp(a: FunctionExpr) -> FunctionExpr {
    fold(FunctionExpr::exp(a))
}

fn s_log(a: FunctionExpr) -> FunctionExpr {
    fold(FunctionExpr::log(a))
}

/// Exact symbolic derivative d/dz.
pub fn differentiate(expr: &FunctionExpr) -> FunctionExpr {
    let c = |e: &Arc<FunctionExpr>| (**e).clone();
    match expr {
        E::Var => E::Const(ONE),
        E::Const(_) => E::Const(ZERO),
        E::Neg(a) => s_neg(differentiate(a)),
        E::Add(a, b) => s_add(differentiate(a), differentiate(b)),
        E::Sub(a, b) => s_sub(differentiate(a), differentiate(b)),
        E::Mul(a, b) => s_add(
            s_mul(differentiate(a), c(b)),
            s_mul(c(a), differentiate(b)),
        ),
        E::Div(a, b) => s_div(
            s_sub(
                s_mul(differentiate(a), c(b)),
                s_mul(c(a), differentiate(b)),
            ),
            s_mul(c(b), c(b)),
        ),
        E::Pow(a, b) if b.is_z_free() => {
            // b * a^(b-1) * a'
            let lowered = s_sub(c(b), E::Const(ONE));
            s_mul(
                s_mul(c(b), s_pow(c(a), lowered)),
                differentiate(a),
            )
        }
        E::Pow(a, b) => {
            // a^b * (b' log a + b a'/a)
            s_mul(
                expr.clone(),
                s_add(
                    s_mul(differentiate(b), s_log(c(a))),
                    s_div(s_mul(c(b), differentiate(a)), c(a)),
                ),
            )
        }
        E::Exp(a) => s_mul(s_exp(c(a)), differentiate(a)),
        E::Log(a) => s_div(differentiate(a), c(a)),
    }
}

/// `z * expr'(z) / expr(z)` using a precomputed derivative.
///
/// At `z = 0` with a simple zero of `expr` the removable-singularity limit 1
/// is returned exactly.
pub fn log_derivative_with(
    expr: &FunctionExpr,
    derivative: &FunctionExpr,
    z: Complex64,
) -> Result<Complex64> {
    let value = eval(expr, z)?;
    if z == ZERO {
        if value != ZERO {
            return Ok(ZERO);
        }
        let slope = eval(derivative, z)?;
        if slope != ZERO {
            return Ok(ONE);
        }
        return Err(Error::DivisionByZero {
            z,
            subexpr: format!("z*({})'/({})", expr, expr),
        });
    }
    if value == ZERO {
        return Err(Error::DivisionByZero {
            z,
            subexpr: format!("z*({})'/({})", expr, expr),
        });
    }
    Ok(z * eval(derivative, z)? / value)
}

pub fn log_derivative_at(expr: &FunctionExpr, z: Complex64) -> Result<Complex64> {
    log_derivative_with(expr, &differentiate(expr), z)
}

/// Anything that can be evaluated as a complex map on (part of) the plane.
pub trait ComplexMap: Sync {
    fn value(&self, z: Complex64) -> Result<Complex64>;
}

impl ComplexMap for FunctionExpr {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        eval(self, z)
    }
}

/// Adapts a closure into a [`ComplexMap`].
pub struct MapFn<F>(pub F);

impl<F> ComplexMap for MapFn<F>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn value(&self, z: Complex64) -> Result<Complex64> {
        (self.0)(z)
    }
}

impl<T: ComplexMap + ?Sized> ComplexMap for &T {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        (**self).value(z)
    }
}

/// The functions f, g, h of the criteria together with cached derivatives.
#[derive(Debug, Clone)]
pub struct AnalyticTriple {
    pub f: FunctionExpr,
    pub g: FunctionExpr,
    pub h: FunctionExpr,
    pub h0: Complex64,
    pub f1: FunctionExpr,
    pub f2: FunctionExpr,
    pub g1: FunctionExpr,
    pub h1: FunctionExpr,
}

/// Tolerance for `f(0) = 0` and `f'(0) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Checks `|f(0)| <= 1e-12` and `|f'(0) - 1| <= 1e-12`.
pub fn normalization_defect(f: &FunctionExpr) -> Result<(Complex64, Complex64)> {
    let f0 = eval(f, ZERO)?;
    let f1 = eval(&differentiate(f), ZERO)?;
    Ok((f0, f1))
}

pub fn h0_admissible(h0: Complex64) -> bool {
    !(h0.im == 0.0 && h0.re <= 0.0)
}

impl AnalyticTriple {
    pub fn new(f: FunctionExpr, g: FunctionExpr, h: FunctionExpr) -> Result<Self> {
        for (name, e) in [("f", &f), ("g", &g)] {
            let (v0, d0) = normalization_defect(e)?;
            if v0.norm() > NORMALIZATION_TOL || (d0 - ONE).norm() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized(format!(
                    "{name} = {e}: {name}(0) = {v0}, {name}'(0) = {d0}"
                )));
            }
        }
        let h0 = eval(&h, ZERO)?;
        if !h0_admissible(h0) {
            return Err(Error::ExcludedH0 { h0 });
        }
        let f1 = differentiate(&f);
        let f2 = differentiate(&f1);
        let g1 = differentiate(&g);
        let h1 = differentiate(&h);
        Ok(Self {
            f,
            g,
            h,
            h0,
            f1,
            f2,
            g1,
            h1,
        })
    }

    /// `z g'(z) / g(z)`, equal to 1 at the origin.
    pub fn zg_over_g(&self, z: Complex64) -> Result<Complex64> {
        log_derivative_with(&self.g, &self.g1, z)
    }

    /// `z f''(z) / f'(z)`.
    pub fn zf2_over_f1(&self, z: Complex64) -> Result<Complex64> {
        log_derivative_with(&self.f1, &self.f2, z)
    }

    /// `z h'(z) / h(z)`.
    pub fn zh_over_h(&self, z: Complex64) -> Result<Complex64> {
        log_derivative_with(&self.h, &self.h1, z)
    }

    /// `(alpha - 1) z g'/g + 1 + z f''/f' + z h'/h`, the bracket shared by
    /// every criterion built on the operator.
    pub fn bracket(&self, alpha: Complex64, z: Complex64) -> Result<Complex64> {
        Ok((alpha - ONE) * self.zg_over_g(z)?
            + ONE
            + self.zf2_over_f1(z)?
            + self.zh_over_h(z)?)
    }
}
