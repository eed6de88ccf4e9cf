//! Univalence and quasiconformal-extension criteria as grid predicates.
//!
//! Every check samples the disk with a [`DiskGrid`], maximizes the left-hand
//! side of each inequality with [`disk_maximize`] and reports the margin
//! `RHS - max LHS`. A passing report means "certified on the grid": the
//! sampled supremum respects the bound, nothing more.

mod grid;
mod presets;

pub use grid::{disk_maximize, evaluate_ordered, DiskGrid, Maximum, REFINE_POINTS, R_MAX_LIMIT};
pub use presets::{preset_names, preset_parameters, Preset, PresetApplication};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{differentiate, eval, log_derivative_with, AnalyticTriple, FunctionExpr};
use crate::loewner::{qc_bound_k, QcBound};
use crate::operators::{continued_log_ratio, operator_g_alpha, QuadratureConfig, ALPHA_MIN};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Slack used for both strict and non-strict comparisons.
pub const MARGIN_TOL: f64 = 1e-12;

pub const CRITERION_IDS: [&str; 7] = ["T2", "T21", "becker", "T3", "T5-qc", "T6", "logderiv-Uk"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionParams {
    pub alpha: Complex64,
    pub c: Complex64,
    /// `s = a + ib`.
    pub s: Complex64,
    pub m: f64,
    pub k: f64,
}

impl Default for CriterionParams {
    fn default() -> Self {
        Self {
            alpha: ONE,
            c: Complex64::new(-1.0, 0.0),
            s: ONE,
            m: 2.0,
            k: 0.0,
        }
    }
}

impl CriterionParams {
    pub fn new(alpha: Complex64, c: Complex64, s: Complex64, m: f64, k: f64) -> Result<Self> {
        let p = Self { alpha, c, s, m, k };
        p.validate()?;
        Ok(p)
    }

    pub fn a(&self) -> f64 {
        self.s.re
    }

    pub fn b(&self) -> f64 {
        self.s.im
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.s.re > 0.0) {
            return bad(format!("Re s = {} must be > 0", self.s.re));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("m = {} must be > 0", self.m));
        }
        if !(0.0..1.0).contains(&self.k) {
            return bad(format!("k = {} must lie in [0, 1)", self.k));
        }
        if self.c.im == 0.0 && self.c.re >= 0.0 {
            return bad(format!("c = {} lies on [0, inf)", self.c));
        }
        if !(self.alpha.norm() >= ALPHA_MIN) {
            return Err(Error::AlphaTooSmall(self.alpha.norm()));
        }
        Ok(())
    }

    /// `m / (2a)`.
    pub fn half_m_over_a(&self) -> f64 {
        self.m / (2.0 * self.a())
    }
}

/// Membership in `U(k) = {w : |(w - 1)/(w + 1)| <= k}` and the distance
/// `|(w - 1)/(w + 1)|`, infinite at `w = -1`.
pub fn in_uk(w: Complex64, k: f64) -> (bool, f64) {
    let den = w + ONE;
    if den == ZERO {
        return (false, f64::INFINITY);
    }
    let d = ((w - ONE) / den).norm();
    (d <= k, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub r: f64,
    pub lhs: f64,
}

/// One inequality `LHS < RHS` or `LHS <= RHS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: String,
    pub strict: bool,
    pub satisfied: bool,
    pub rhs: f64,
    pub max_lhs: f64,
    pub margin: f64,
    /// `None` for scalar conditions on the parameters alone.
    pub witness: Option<Complex64>,
    /// LHS at the three largest grid radii along the witness ray.
    pub boundary_trend: Vec<TrendPoint>,
}

fn passes(strict: bool, margin: f64) -> bool {
    if strict {
        margin > MARGIN_TOL
    } else {
        margin >= -MARGIN_TOL
    }
}

impl ConditionReport {
    pub fn scalar(id: &str, strict: bool, rhs: f64, lhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            id: id.into(),
            strict,
            satisfied: passes(strict, margin),
            rhs,
            max_lhs: lhs,
            margin,
            witness: None,
            boundary_trend: Vec::new(),
        }
    }

    /// Maximizes `lhs` over the grid and compares with `rhs`.
    pub fn on_grid<F>(id: &str, strict: bool, rhs: f64, lhs: F, grid: &DiskGrid) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<f64> + Sync,
    {
        let best = disk_maximize(&lhs, grid)?;
        let theta = best.witness.arg();
        let boundary_trend = (grid.n_radial.saturating_sub(3)..grid.n_radial)
            .map(|i| {
                let r = grid.radius(i);
                lhs(Complex64::from_polar(r, theta)).map(|v| TrendPoint { r, lhs: v })
            })
            .collect::<Result<Vec<_>>>()?;
        let margin = rhs - best.value;
        Ok(Self {
            id: id.into(),
            strict,
            satisfied: passes(strict, margin),
            rhs,
            max_lhs: best.value,
            margin,
            witness: Some(best.witness),
            boundary_trend,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion_id: String,
    pub satisfied: bool,
    /// `"certified-on-grid"` or `"violated"`.
    pub status: String,
    pub margin: f64,
    /// Witness of the grid condition with the smallest margin.
    pub witness: Option<Complex64>,
    pub failing: Vec<String>,
    pub conditions: Vec<ConditionReport>,
    pub grid_used: DiskGrid,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qc_bound: Option<QcBound>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

pub const CERTIFIED: &str = "certified-on-grid";
pub const VIOLATED: &str = "violated";

impl CriterionReport {
    pub fn assemble(id: &str, conditions: Vec<ConditionReport>, grid: &DiskGrid) -> Self {
        let satisfied = conditions.iter().all(|c| c.satisfied);
        let margin = conditions.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
        let mut worst: Option<&ConditionReport> = None;
        for c in conditions.iter().filter(|c| c.witness.is_some()) {
            if worst.is_none_or(|w| c.margin < w.margin) {
                worst = Some(c);
            }
        }
        Self {
            criterion_id: id.into(),
            satisfied,
            status: if satisfied { CERTIFIED } else { VIOLATED }.into(),
            margin,
            witness: worst.and_then(|c| c.witness),
            failing: conditions
                .iter()
                .filter(|c| !c.satisfied)
                .map(|c| c.id.clone())
                .collect(),
            conditions,
            grid_used: *grid,
            qc_bound: None,
            notes: Vec::new(),
        }
    }

    pub fn condition(&self, id: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

/// `|alpha - m/(2a)|`, whose bound `m/(2a)` is equivalent to `Re(m/alpha) > a`.
pub fn alpha_condition_lhs(p: &CriterionParams) -> f64 {
    (p.alpha - p.half_m_over_a()).norm()
}

pub fn check_alpha_condition(p: &CriterionParams) -> bool {
    alpha_condition_report(p).satisfied
}

fn alpha_condition_report(p: &CriterionParams) -> ConditionReport {
    ConditionReport::scalar("eq1", true, p.half_m_over_a(), alpha_condition_lhs(p))
}

fn h_value(triple: &AnalyticTriple, z: Complex64) -> Result<Complex64> {
    let h = eval(&triple.h, z)?;
    if h == ZERO {
        return Err(Error::DivisionByZero {
            z,
            subexpr: format!("c/({})", triple.h),
        });
    }
    Ok(h)
}

/// `|c/h + m/(2 alpha)|`.
pub fn eq2_lhs(p: &CriterionParams, h: Complex64) -> f64 {
    (p.c / h + p.m / (2.0 * p.alpha)).norm()
}

pub fn eq2_rhs(p: &CriterionParams) -> f64 {
    p.m / (2.0 * p.alpha.norm())
}

/// `|(-c alpha)/(a h) lambda + (1 - lambda) bracket - m/(2a)|`.
pub fn eq3_lhs(p: &CriterionParams, h: Complex64, bracket: Complex64, lambda: f64) -> f64 {
    let first = -p.c * p.alpha / (p.a() * h);
    (first * lambda + bracket * (1.0 - lambda) - p.half_m_over_a()).norm()
}

/// `|bracket - m/(2a)|`.
pub fn eq211_lhs(p: &CriterionParams, bracket: Complex64) -> f64 {
    (bracket - p.half_m_over_a()).norm()
}

/// `|(m - 2)/2 - (1 - |z|^m) z f''/f'|`.
pub fn becker_lhs(m: f64, r: f64, zf2_over_f1: Complex64) -> f64 {
    (0.5 * (m - 2.0) - zf2_over_f1 * (1.0 - r.powf(m))).norm()
}

fn h_condition_report(triple: &AnalyticTriple, p: &CriterionParams, grid: &DiskGrid) -> Result<ConditionReport> {
    ConditionReport::on_grid(
        "eq2",
        true,
        eq2_rhs(p),
        |z| Ok(eq2_lhs(p, h_value(triple, z)?)),
        grid,
    )
}

fn eq3_shaped(
    id: &str,
    triple: &AnalyticTriple,
    p: &CriterionParams,
    exponent: f64,
    rhs: f64,
    grid: &DiskGrid,
) -> Result<ConditionReport> {
    ConditionReport::on_grid(
        id,
        false,
        rhs,
        |z| {
            let h = h_value(triple, z)?;
            let bracket = triple.bracket(p.alpha, z)?;
            Ok(eq3_lhs(p, h, bracket, z.norm().powf(exponent)))
        },
        grid,
    )
}

fn checked(p: &CriterionParams, grid: &DiskGrid) -> Result<()> {
    p.validate()?;
    grid.validate()
}

pub fn check_h_condition(triple: &AnalyticTriple, p: &CriterionParams, grid: &DiskGrid) -> Result<CriterionReport> {
    checked(p, grid)?;
    let eq2 = h_condition_report(triple, p, grid)?;
    Ok(CriterionReport::assemble("eq2", vec![eq2], grid))
}

/// The main criterion: eq1, eq2 and the eq3 inequality with weight
/// `|z|^(m/a)`.
pub fn check_main_t2(triple: &AnalyticTriple, p: &CriterionParams, grid: &DiskGrid) -> Result<CriterionReport> {
    checked(p, grid)?;
    let conditions = vec![
        alpha_condition_report(p),
        h_condition_report(triple, p, grid)?,
        eq3_shaped("eq3", triple, p, p.m / p.a(), p.half_m_over_a(), grid)?,
    ];
    Ok(CriterionReport::assemble("T2", conditions, grid))
}

pub fn check_simplified_t21(triple: &AnalyticTriple, p: &CriterionParams, grid: &DiskGrid) -> Result<CriterionReport> {
    checked(p, grid)?;
    let eq211 = ConditionReport::on_grid(
        "eq211",
        false,
        p.half_m_over_a(),
        |z| Ok(eq211_lhs(p, triple.bracket(p.alpha, z)?)),
        grid,
    )?;
    let conditions = vec![alpha_condition_report(p), h_condition_report(triple, p, grid)?, eq211];
    Ok(CriterionReport::assemble("T21", conditions, grid))
}

/// `|(m-2)/2 - (1 - |z|^m) z f''/f'| <= m/2` for `m > 1`.
pub fn check_becker(f: &FunctionExpr, m: f64, grid: &DiskGrid) -> Result<CriterionReport> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::Precondition(format!("m = {m} must be > 1")));
    }
    grid.validate()?;
    let f1 = differentiate(f);
    let f2 = differentiate(&f1);
    let e4 = ConditionReport::on_grid(
        "e4",
        false,
        0.5 * m,
        |z| Ok(becker_lhs(m, z.norm(), log_derivative_with(&f1, &f2, z)?)),
        grid,
    )?;
    let mut report = CriterionReport::assemble("becker", vec![e4], grid);
    if m == 2.0 {
        report.notes.push("m = 2: classical Becker criterion".into());
    }
    Ok(report)
}

/// As [`check_main_t2`] with weight `|z|^m`; requires `a >= 1`.
pub fn check_t3(triple: &AnalyticTriple, p: &CriterionParams, grid: &DiskGrid) -> Result<CriterionReport> {
    checked(p, grid)?;
    if p.a() < 1.0 {
        return Err(Error::Precondition(format!("Re s = {} must be >= 1", p.a())));
    }
    let conditions = vec![
        alpha_condition_report(p),
        h_condition_report(triple, p, grid)?,
        eq3_shaped("eq18", triple, p, p.m, p.half_m_over_a(), grid)?,
    ];
    Ok(CriterionReport::assemble("T3", conditions, grid))
}

/// `|c alpha/h + m/2|`.
pub fn qc_h_lhs(p: &CriterionParams, h: Complex64) -> f64 {
    (p.c * p.alpha / h + 0.5 * p.m).norm()
}

/// Quasiconformal-extension criterion; a satisfied report carries the
/// dilatation bound in `qc_bound`.
pub fn check_qc_t5(triple: &AnalyticTriple, p: &CriterionParams, grid: &DiskGrid) -> Result<CriterionReport> {
    checked(p, grid)?;
    let k = p.k;
    let conditions = vec![
        alpha_condition_report(p),
        ConditionReport::on_grid("4.1", true, 0.5 * k * p.m, |z| Ok(qc_h_lhs(p, h_value(triple, z)?)), grid)?,
        eq3_shaped("4.112", triple, p, p.m / p.a(), k * p.half_m_over_a(), grid)?,
    ];
    let mut report = CriterionReport::assemble("T5-qc", conditions, grid);
    if report.satisfied {
        report.qc_bound = Some(qc_bound_k(p.s, k)?);
    }
    Ok(report)
}

/// `(g(z)/z)^(alpha-1) f'(z)` with the power continued radially from 1.
pub fn t6_expression(
    f1: &FunctionExpr,
    g: &FunctionExpr,
    g1: &FunctionExpr,
    alpha: f64,
    z: Complex64,
) -> Result<Complex64> {
    if z == ZERO {
        return Ok(ONE);
    }
    let fp = eval(f1, z)?;
    if matches!(g, FunctionExpr::Var) || alpha == 1.0 {
        return Ok(fp);
    }
    let lr = continued_log_ratio(g, g1, z, QuadratureConfig::default().max_subdivision_depth)?;
    Ok((lr * (alpha - 1.0)).exp() * fp)
}

fn real_positive_alpha(alpha: Complex64) -> Result<f64> {
    if alpha.im != 0.0 || !(alpha.re > 0.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} must be real and > 0")));
    }
    Ok(alpha.re)
}

fn check_k(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in [0, 1)")));
    }
    Ok(())
}

/// `z^(1-alpha) g^(alpha-1) f'` in `U(k)` on the grid.
pub fn check_t6(
    f: &FunctionExpr,
    g: &FunctionExpr,
    alpha: Complex64,
    k: f64,
    grid: &DiskGrid,
) -> Result<CriterionReport> {
    let alpha = real_positive_alpha(alpha)?;
    check_k(k)?;
    grid.validate()?;
    let f1 = differentiate(f);
    let g1 = differentiate(g);
    let uk = ConditionReport::on_grid(
        "Uk",
        false,
        k,
        |z| Ok(in_uk(t6_expression(&f1, g, &g1, alpha, z)?, k).1),
        grid,
    )?;
    Ok(CriterionReport::assemble("T6", vec![uk], grid))
}

/// What `G` in the log-derivative criterion is.
#[derive(Debug, Clone)]
pub enum LogDerivativeSource {
    Expr(FunctionExpr),
    /// `G = G_alpha(f, g)` sampled through the quadrature.
    Operator {
        f: FunctionExpr,
        g: FunctionExpr,
        alpha: Complex64,
        quadrature: QuadratureConfig,
    },
}

/// `(4 D(h/2) - D(h))/3` with central differences `D` along the real axis.
pub fn richardson_derivative<F>(map: F, z: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d = |step: f64| -> Result<Complex64> { Ok((map(z + step)? - map(z - step)?) / (2.0 * step)) };
    Ok((d(0.5 * h)? * 4.0 - d(h)?) / 3.0)
}

impl LogDerivativeSource {
    fn prepared(&self) -> PreparedSource<'_> {
        match self {
            Self::Expr(e) => PreparedSource::Expr(e, differentiate(e)),
            Self::Operator { f, g, alpha, quadrature } => PreparedSource::Operator(f, g, *alpha, *quadrature),
        }
    }

    /// `z G'(z)/G(z)`, equal to 1 at the origin.
    pub fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        self.prepared().log_derivative(z)
    }
}

enum PreparedSource<'a> {
    Expr(&'a FunctionExpr, FunctionExpr),
    Operator(&'a FunctionExpr, &'a FunctionExpr, Complex64, QuadratureConfig),
}

impl PreparedSource<'_> {
    fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Self::Expr(e, d) => log_derivative_with(e, d, z),
            Self::Operator(f, g, alpha, q) => {
                if z == ZERO {
                    return Ok(ONE);
                }
                let value = |u: Complex64| -> Result<Complex64> {
                    let v = operator_g_alpha(f, g, *alpha, u, q)?;
                    if !v.branch_ok {
                        return Err(Error::BranchTracking { z: u });
                    }
                    Ok(v.value)
                };
                let gz = value(z)?;
                if gz == ZERO {
                    return Err(Error::DivisionByZero {
                        z,
                        subexpr: "zG'/G".into(),
                    });
                }
                let d = richardson_derivative(value, z, 1e-5 * (1.0 - z.norm()))?;
                Ok(z * d / gz)
            }
        }
    }
}

/// `z G'/G` in `U(k)` on the grid.
pub fn check_log_derivative_condition(
    source: &LogDerivativeSource,
    k: f64,
    grid: &DiskGrid,
) -> Result<CriterionReport> {
    check_k(k)?;
    grid.validate()?;
    let prepared = source.prepared();
    let uk = ConditionReport::on_grid("Uk", false, k, |z| Ok(in_uk(prepared.log_derivative(z)?, k).1), grid)?;
    Ok(CriterionReport::assemble("logderiv-Uk", vec![uk], grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn triple(f: &str, g: &str, h: &str) -> AnalyticTriple {
        AnalyticTriple::new(parse(f).unwrap(), parse(g).unwrap(), parse(h).unwrap()).unwrap()
    }

    fn params(alpha: f64, cc: f64, s: f64, m: f64, k: f64) -> CriterionParams {
        CriterionParams::new(c(alpha, 0.0), c(cc, 0.0), c(s, 0.0), m, k).unwrap()
    }

    fn small() -> DiskGrid {
        DiskGrid::new(32, 64, 0.999, 3)
    }

    #[test]
    fn params_validation() {
        assert!(CriterionParams::default().validate().is_ok());
        let p = |alpha: Complex64, cc: Complex64, s: Complex64, m: f64, k: f64| CriterionParams::new(alpha, cc, s, m, k);
        assert!(p(ONE, -ONE, c(0.0, 1.0), 2.0, 0.0).is_err());
        assert!(p(ONE, -ONE, ONE, 0.0, 0.0).is_err());
        assert!(p(ONE, -ONE, ONE, 2.0, 1.0).is_err());
        assert!(p(ONE, c(0.0, 0.0), ONE, 2.0, 0.0).is_err());
        assert!(p(ONE, c(3.0, 0.0), ONE, 2.0, 0.0).is_err());
        assert!(p(ONE, c(3.0, 1e-3), ONE, 2.0, 0.0).is_ok());
        assert!(matches!(p(c(1e-10, 0.0), -ONE, ONE, 2.0, 0.0), Err(Error::AlphaTooSmall(_))));
    }

    #[test]
    fn uk_membership() {
        assert_eq!(in_uk(ONE, 0.0), (true, 0.0));
        assert_eq!(in_uk(ZERO, 0.5), (false, 1.0));
        let (inside, d) = in_uk(c(5.0 / 3.0, 0.0), 0.5);
        assert!(inside && (d - 0.25).abs() < 1e-15);
        assert_eq!(in_uk(-ONE, 0.5), (false, f64::INFINITY));
    }

    #[test]
    fn alpha_condition_examples() {
        assert!(check_alpha_condition(&params(1.0, -1.0, 1.0, 2.0, 0.0)));
        assert!(!check_alpha_condition(&params(2.0, -1.0, 1.0, 2.0, 0.0)));
        assert!(check_alpha_condition(&params(0.5, -1.0, 2.0, 2.0, 0.0)));
    }

    #[test]
    fn h_condition_examples() {
        let p = params(1.0, -1.0, 1.0, 2.0, 0.0);
        let r = check_h_condition(&triple("z", "z", "1"), &p, &small()).unwrap();
        assert!(r.satisfied);
        assert!((r.margin - 1.0).abs() < 1e-15);
        let r = check_h_condition(&triple("z", "z", "2"), &p, &small()).unwrap();
        assert!(r.satisfied);
        assert!((r.margin - 0.5).abs() < 1e-15);
        assert!(matches!(
            AnalyticTriple::new(parse("z").unwrap(), parse("z").unwrap(), parse("-1").unwrap()),
            Err(Error::ExcludedH0 { .. })
        ));
    }

    #[test]
    fn h_vanishing_on_grid_is_reported() {
        // h = 1 - 2z vanishes at the grid node z = 0.5
        let p = params(1.0, -1.0, 1.0, 2.0, 0.0);
        let grid = DiskGrid::new(1, 4, 0.5, 0);
        let err = check_h_condition(&triple("z", "z", "1 - 2*z"), &p, &grid).unwrap_err();
        assert!(matches!(err, Error::DivisionByZero { .. }));
    }

    #[test]
    fn main_t2_examples() {
        let p = params(1.0, -1.0, 1.0, 2.0, 0.0);
        let r = check_main_t2(&triple("z", "z", "1"), &p, &small()).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.status, CERTIFIED);
        assert!((r.condition("eq3").unwrap().max_lhs).abs() < 1e-15);
        assert!((r.condition("eq3").unwrap().margin - 1.0).abs() < 1e-15);

        let r = check_main_t2(&triple("z + 0.1*z^2", "z", "1"), &p, &small()).unwrap();
        assert!(r.satisfied && r.margin > 0.0);

        let r = check_main_t2(&triple("z/(1 - z)", "z", "1"), &p, &small()).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.failing, vec!["eq3".to_string()]);
        let w = r.witness.unwrap();
        assert!(w.re > 0.95 && w.im.abs() < 0.05, "{w}");
    }

    #[test]
    fn simplified_t21_examples() {
        let p = params(1.0, -1.0, 1.0, 2.0, 0.0);
        let r = check_simplified_t21(&triple("z", "z", "1"), &p, &small()).unwrap();
        assert!(r.satisfied && (r.margin - 1.0).abs() < 1e-15);
        let r = check_simplified_t21(&triple("z + 0.1*z^2", "z", "1"), &p, &small()).unwrap();
        assert!(r.satisfied);
        // sup |0.2z/(1 + 0.2z)| = 0.25 at z -> -1
        let lhs = r.condition("eq211").unwrap().max_lhs;
        assert!((lhs - 0.2 * 0.999 / (1.0 - 0.2 * 0.999)).abs() < 1e-9, "{lhs}");
    }

    #[test]
    fn becker_examples() {
        let r = check_becker(&parse("z").unwrap(), 2.0, &small()).unwrap();
        assert!(r.satisfied && (r.margin - 1.0).abs() < 1e-15);
        assert!(!r.notes.is_empty());
        let r = check_becker(&parse("z + 0.1*z^2").unwrap(), 2.0, &small()).unwrap();
        assert!(r.satisfied);
        assert!(r.condition("e4").unwrap().max_lhs < 0.25);
        let r = check_becker(&parse("z/(1 - z)").unwrap(), 2.0, &small()).unwrap();
        assert!(!r.satisfied);
        let e4 = r.condition("e4").unwrap();
        let exact = 2.0 * 0.999 * 1.999;
        assert!((e4.max_lhs - exact).abs() < 1e-9, "{}", e4.max_lhs);
        assert!(e4.witness.unwrap().arg().abs() < 1e-12);
        assert!(matches!(check_becker(&parse("z").unwrap(), 1.0, &small()), Err(Error::Precondition(_))));
    }

    #[test]
    fn t3_examples() {
        let t = triple("z", "z", "1");
        let r = check_t3(&t, &params(0.5, -1.0, 2.0, 2.0, 0.0), &small()).unwrap();
        assert!(r.satisfied);
        let eq18 = r.condition("eq18").unwrap();
        assert!((eq18.max_lhs - 0.25 * 0.999f64.powi(2)).abs() < 1e-12);
        let r = check_t3(&t, &params(1.0, -1.0, 2.0, 2.0, 0.0), &small()).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.failing, vec!["eq1".to_string()]);
        let err = check_t3(&t, &params(1.0, -1.0, 0.5, 2.0, 0.0), &small()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn qc_t5_examples() {
        let t = triple("z", "z", "1");
        let r = check_qc_t5(&t, &params(1.0, -1.0, 1.0, 2.0, 0.5), &small()).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.qc_bound.unwrap().k_bound, 0.5);
        let r = check_qc_t5(&t, &params(1.0, -1.0, 1.0, 2.0, 0.0), &small()).unwrap();
        assert!(!r.satisfied);
        assert!(r.failing.contains(&"4.1".to_string()));
        assert!(r.qc_bound.is_none());
        let r = check_qc_t5(&triple("z + 0.05*z^2", "z", "1"), &params(1.0, -1.0, 1.0, 2.0, 0.2), &small()).unwrap();
        assert!(r.satisfied);
        // on the negative axis the LHS is (1 - r^2) 0.1r/(1 - 0.1r); dense 1-D scan
        let exact = (0..=99_900)
            .map(|i| {
                let r = i as f64 * 1e-5;
                (1.0 - r * r) * 0.1 * r / (1.0 - 0.1 * r)
            })
            .fold(0.0, f64::max);
        let lhs = r.condition("4.112").unwrap().max_lhs;
        assert!((lhs - exact).abs() < 1e-4 && lhs < 0.2, "{lhs} vs {exact}");
    }

    #[test]
    fn t6_examples() {
        let z = parse("z").unwrap();
        for alpha in [0.5, 1.0, 2.5] {
            let r = check_t6(&z, &z, c(alpha, 0.0), 0.0, &small()).unwrap();
            assert!(r.satisfied);
        }
        let r = check_t6(&parse("z + 0.1*z^2").unwrap(), &z, ONE, 0.2, &small()).unwrap();
        assert!(r.satisfied);
        let d = r.condition("Uk").unwrap().max_lhs;
        assert!((d - 0.2 * 0.999 / (2.0 - 0.2 * 0.999)).abs() < 1e-9, "{d}");
        let r = check_t6(&parse("z/(1 - z)").unwrap(), &z, ONE, 0.9, &small()).unwrap();
        assert!(!r.satisfied);
        assert!(r.condition("Uk").unwrap().max_lhs > 0.99);
        assert!(check_t6(&z, &z, c(1.0, 0.1), 0.2, &small()).is_err());
    }

    #[test]
    fn t6_power_uses_the_continued_branch() {
        // g = z exp(4iz): (g/z)^(alpha-1) = exp(4i(alpha-1)z) on the continued sheet
        let g = parse("z*exp(4i*z)").unwrap();
        let g1 = differentiate(&g);
        let f1 = parse("1").unwrap();
        let zz = c(0.95, 0.0);
        let v = t6_expression(&f1, &g, &g1, 0.5, zz).unwrap();
        let expected = (c(0.0, 4.0) * zz * -0.5).exp();
        assert!((v - expected).norm() < 1e-12);
    }

    #[test]
    fn log_derivative_examples() {
        let src = |s: &str| LogDerivativeSource::Expr(parse(s).unwrap());
        for k in [0.0, 0.5] {
            assert!(check_log_derivative_condition(&src("z"), k, &small()).unwrap().satisfied);
        }
        let r = check_log_derivative_condition(&src("z/(1 - z)"), 0.9, &small()).unwrap();
        assert!(!r.satisfied);
        let r = check_log_derivative_condition(&src("z + 0.1*z^2"), 0.15, &small()).unwrap();
        assert!(r.satisfied);
    }

    #[test]
    fn sampled_operator_log_derivative_matches_exact_form() {
        // zG'/G = phi^(alpha-1) f' / I for G = z I^(1/alpha)
        let f = parse("z + 0.1*z^2").unwrap();
        let g = parse("z + 0.2*z^2").unwrap();
        let alpha = c(1.5, 0.0);
        let q = QuadratureConfig::default();
        let src = LogDerivativeSource::Operator {
            f: f.clone(),
            g: g.clone(),
            alpha,
            quadrature: q,
        };
        for zz in [c(0.3, 0.2), c(-0.6, 0.1), c(0.0, 0.9)] {
            let got = src.log_derivative(zz).unwrap();
            let gv = operator_g_alpha(&f, &g, alpha, zz, &q).unwrap().value;
            let i = (gv / zz).powc(alpha);
            let phi = eval(&g, zz).unwrap() / zz;
            let fp = eval(&differentiate(&f), zz).unwrap();
            let exact = phi.powc(alpha - 1.0) * fp / i;
            assert!((got - exact).norm() < 1e-7, "{got} vs {exact}");
        }
        assert_eq!(src.log_derivative(ZERO).unwrap(), ONE);
    }
}
