//! The integral operator `G_alpha(z) = [alpha * int_0^z g^(alpha-1) f' du]^(1/alpha)`
//! and its classical specializations.
//!
//! Integration runs along the segment `u = tau * z`, `tau in [0, 1]`. With
//! `phi(u) = g(u)/u` the integral becomes
//!
//! ```text
//! alpha * int_0^z u^(alpha-1) phi(u)^beta psi(u) du = z^alpha * I(z)
//! I(z) = alpha * int_0^1 tau^(alpha-1) phi(tau z)^beta psi(tau z) dtau
//! ```
//!
//! so `G = z * I^(1/alpha)` and `G/z -> 1`. The power `phi^beta` uses a
//! logarithm of `phi` continued from `phi(0) = g'(0)` along the segment, and
//! the outer root uses a logarithm of `I(tau z)` continued the same way.
//! Non-integer `alpha` gets geometrically graded panels towards the origin,
//! where `tau^(alpha-1)` is singular, plus a two-term expansion on the
//! innermost piece.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{eval, principal_log, FunctionExpr};
use crate::gauss::GaussRule;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Smallest admissible `|alpha|`.
pub const ALPHA_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub nodes_per_panel: usize,
    pub abs_tolerance: f64,
    #[serde(rename = "max_depth", alias = "max_subdivision_depth")]
    pub max_subdivision_depth: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_panel: 16,
            abs_tolerance: 1e-12,
            max_subdivision_depth: 40,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 4 {
            return Err(Error::InvalidParameter("nodes_per_panel must be >= 4".into()));
        }
        if !(self.abs_tolerance > 0.0) {
            return Err(Error::InvalidParameter("abs_tolerance must be > 0".into()));
        }
        if self.max_subdivision_depth < 1 {
            return Err(Error::InvalidParameter("max_subdivision_depth must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.abs_tolerance = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: Complex64,
    pub estimated_error: f64,
    pub branch_ok: bool,
}

/// Brings `log w` onto the sheet nearest to `reference`.
pub fn nearest_log(w: Complex64, reference: f64) -> Complex64 {
    let l = principal_log(w);
    let k = ((reference - l.im) / TAU).round();
    Complex64::new(l.re, l.im + k * TAU)
}

/// Integrand `alpha tau^(alpha-1) phi(tau z)^beta psi(tau z)`.
#[derive(Clone, Copy)]
pub(crate) struct RadialKernel<'a> {
    pub alpha: Complex64,
    /// `None` means `g(u) = u`, i.e. `phi = 1`.
    pub g: Option<&'a FunctionExpr>,
    pub phi_exponent: Complex64,
    /// `None` means `psi = 1`.
    pub psi: Option<&'a FunctionExpr>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LadderPoint {
    pub tau: f64,
    pub cumulative: Complex64,
    /// Continued `log phi(tau z)`.
    pub log_phi: Complex64,
}

/// Result of one radial integration with its breakpoint ladder.
pub(crate) struct Radial<'a> {
    kernel: RadialKernel<'a>,
    z: Complex64,
    rule_lo: std::sync::Arc<GaussRule>,
    rule_hi: std::sync::Arc<GaussRule>,
    max_depth: usize,
    tol: f64,
    pub points: Vec<LadderPoint>,
    errs: Vec<f64>,
    /// `phi(0)^beta psi(0)`, the value of `I` at the origin.
    pub value_at_origin: Complex64,
    integer_alpha: Option<i32>,
}

pub(crate) fn check_alpha(alpha: Complex64) -> Result<()> {
    if alpha.norm() < ALPHA_MIN {
        return Err(Error::AlphaTooSmall(alpha.norm()));
    }
    if alpha.re <= 0.0 {
        return Err(Error::NonIntegrable(alpha.re));
    }
    Ok(())
}

fn positive_integer(alpha: Complex64) -> Option<i32> {
    if alpha.im == 0.0 && alpha.re.fract() == 0.0 && alpha.re >= 1.0 && alpha.re <= 64.0 {
        Some(alpha.re as i32)
    } else {
        None
    }
}

struct Node {
    value: Complex64,
    log_phi: Complex64,
}

impl<'a> Radial<'a> {
    fn tau_pow(&self, tau: f64, e: Complex64) -> Complex64 {
        match (self.integer_alpha, e == self.kernel.alpha) {
            (Some(n), true) => Complex64::new(tau.powi(n), 0.0),
            (Some(n), false) if e == self.kernel.alpha - ONE => Complex64::new(tau.powi(n - 1), 0.0),
            _ => (e * tau.ln()).exp(),
        }
    }

    fn log_phi_at(&self, tau: f64, reference: f64) -> Result<Complex64> {
        let Some(g) = self.kernel.g else {
            return Ok(ZERO);
        };
        let u = self.z * tau;
        let gu = eval(g, u)?;
        if gu == ZERO {
            return Err(Error::IntegrandSingular { node: u });
        }
        Ok(nearest_log(gu / u, reference))
    }

    /// `phi^beta psi` at `tau` given the continued `log phi`.
    fn smooth_part(&self, tau: f64, log_phi: Complex64) -> Result<Complex64> {
        let phi_pow = if self.kernel.g.is_some() {
            (self.kernel.phi_exponent * log_phi).exp()
        } else {
            ONE
        };
        let psi = match self.kernel.psi {
            Some(p) => eval(p, self.z * tau)?,
            None => ONE,
        };
        Ok(phi_pow * psi)
    }

    fn node(&self, tau: f64, reference: f64) -> Result<Node> {
        let log_phi = self.log_phi_at(tau, reference)?;
        let smooth = self.smooth_part(tau, log_phi)?;
        let value = self.kernel.alpha * self.tau_pow(tau, self.kernel.alpha - ONE) * smooth;
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::IntegrandSingular { node: self.z * tau });
        }
        Ok(Node { value, log_phi })
    }

    /// Applies a rule on `[a, b]`. Returns `None` when the continued
    /// argument of `phi` jumps by `pi/2` or more between adjacent nodes.
    fn apply_rule(
        &self,
        rule: &GaussRule,
        a: f64,
        b: f64,
        lpa: Complex64,
        lpb: Complex64,
    ) -> Result<Option<(Complex64, f64)>> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = ZERO;
        let mut scale = 0.0;
        let mut prev = lpa.im;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let tau = mid + half * x;
            let frac = (tau - a) / (b - a);
            let reference = lpa.im + frac * (lpb.im - lpa.im);
            let n = self.node(tau, reference)?;
            if (n.log_phi.im - prev).abs() >= FRAC_PI_2 {
                return Ok(None);
            }
            prev = n.log_phi.im;
            sum += n.value * *w;
            scale += n.value.norm() * w;
        }
        if (lpb.im - prev).abs() >= FRAC_PI_2 {
            return Ok(None);
        }
        Ok(Some((sum * half, scale * half)))
    }

    #[allow(clippy::too_many_arguments)]
    fn integrate_panel(
        &self,
        a: f64,
        b: f64,
        lpa: Complex64,
        lpb: Complex64,
        share: f64,
        depth: usize,
        out: &mut Vec<(LadderPoint, f64)>,
        base: Complex64,
    ) -> Result<Complex64> {
        let lo = self.apply_rule(&self.rule_lo, a, b, lpa, lpb)?;
        let hi = self.apply_rule(&self.rule_hi, a, b, lpa, lpb)?;
        if let (Some((q_lo, _)), Some((q_hi, scale))) = (lo, hi) {
            let err = (q_hi - q_lo).norm();
            let floor = 64.0 * f64::EPSILON * scale;
            if err <= share.max(floor) {
                out.push((
                    LadderPoint {
                        tau: b,
                        cumulative: base + q_hi,
                        log_phi: lpb,
                    },
                    err,
                ));
                return Ok(q_hi);
            }
            if depth >= self.max_depth {
                return Err(Error::ToleranceNotMet { estimated: err });
            }
        } else if depth >= self.max_depth {
            return Err(Error::BranchTracking { z: self.z });
        }
        let m = 0.5 * (a + b);
        let lpm = self.log_phi_at(m, 0.5 * (lpa.im + lpb.im))?;
        let left = self.integrate_panel(a, m, lpa, lpm, 0.5 * share, depth + 1, out, base)?;
        let right = self.integrate_panel(m, b, lpm, lpb, 0.5 * share, depth + 1, out, base + left)?;
        Ok(left + right)
    }

    /// Walks the breakpoints, bisecting until the continued `arg phi`
    /// moves by less than `pi/2` between neighbours.
    fn walk_breakpoints(&self, breaks: &[f64], lp0: Complex64) -> Result<Vec<(f64, Complex64)>> {
        let mut out = vec![(breaks[0], lp0)];
        for &b in &breaks[1..] {
            self.walk_to(b, 0, &mut out)?;
        }
        Ok(out)
    }

    fn walk_to(&self, b: f64, depth: usize, out: &mut Vec<(f64, Complex64)>) -> Result<()> {
        let (a, lpa) = *out.last().expect("non-empty walk");
        let lpb = self.log_phi_at(b, lpa.im)?;
        if (lpb.im - lpa.im).abs() < FRAC_PI_2 {
            out.push((b, lpb));
            return Ok(());
        }
        if depth >= self.max_depth {
            return Err(Error::BranchTracking { z: self.z });
        }
        let m = 0.5 * (a + b);
        self.walk_to(m, depth + 1, out)?;
        self.walk_to(b, depth + 1, out)
    }

    pub(crate) fn build(
        kernel: RadialKernel<'a>,
        z: Complex64,
        cfg: &QuadratureConfig,
        tol: f64,
    ) -> Result<Self> {
        check_alpha(kernel.alpha)?;
        let n = cfg.nodes_per_panel;
        let integer_alpha = positive_integer(kernel.alpha);
        let mut r = Radial {
            kernel,
            z,
            rule_lo: GaussRule::cached(n),
            rule_hi: GaussRule::cached(2 * n),
            max_depth: cfg.max_subdivision_depth,
            tol,
            points: Vec::new(),
            errs: Vec::new(),
            value_at_origin: ONE,
            integer_alpha,
        };

        // phi(0) = g'(0)
        let lp0 = match kernel.g {
            Some(g) => {
                let slope = eval(&g.derivative(), ZERO)?;
                if slope == ZERO {
                    return Err(Error::IntegrandSingular { node: ZERO });
                }
                principal_log(slope)
            }
            None => ZERO,
        };
        r.value_at_origin = r.smooth_part(0.0, lp0)?;

        let mut breaks: Vec<f64> = Vec::new();
        let graded = integer_alpha.is_none();
        if graded {
            // innermost piece [0, delta] is handled by expansion
            let levels = ((1.0 / (tol * 1e-2)).log2() / (kernel.alpha.re + 1.0)).ceil();
            let levels = levels.clamp(3.0, 60.0) as i32;
            for k in (2..=levels).rev() {
                breaks.push(0.5f64.powi(k));
            }
            breaks.extend([0.5, 0.75, 1.0]);
        } else {
            breaks.extend([0.0, 0.25, 0.5, 0.75, 1.0]);
        }

        let start_lp = if graded {
            r.log_phi_at(breaks[0], lp0.im)?
        } else {
            lp0
        };
        let walked = r.walk_breakpoints(&breaks, start_lp)?;

        r.points.push(LadderPoint {
            tau: 0.0,
            cumulative: ZERO,
            log_phi: lp0,
        });
        let mut total = ZERO;
        if graded {
            let delta = walked[0].0;
            let f_delta = r.smooth_part(delta, walked[0].1)?;
            let f0 = r.value_at_origin;
            let slope = (f_delta - f0) / delta;
            let alpha = kernel.alpha;
            let d_alpha = r.tau_pow(delta, alpha);
            let correction = alpha * slope * d_alpha * delta / (alpha + ONE);
            total = f0 * d_alpha + correction;
            r.points.push(LadderPoint {
                tau: delta,
                cumulative: total,
                log_phi: walked[0].1,
            });
            r.errs.push(correction.norm());
        }

        let span = 1.0 - walked[0].0;
        let mut out = Vec::new();
        for pair in walked.windows(2) {
            let ((a, lpa), (b, lpb)) = (pair[0], pair[1]);
            let share = tol * (b - a) / span;
            out.clear();
            total += r.integrate_panel(a, b, lpa, lpb, share, 0, &mut out, total)?;
            for (p, e) in out.drain(..) {
                r.points.push(p);
                r.errs.push(e);
            }
        }
        Ok(r)
    }

    pub fn total(&self) -> Complex64 {
        self.points.last().expect("ladder is never empty").cumulative
    }

    pub fn error(&self) -> f64 {
        self.errs.iter().sum()
    }

    /// `I(tau z) = cumulative / tau^alpha`, or `phi(0)^beta psi(0)` at 0.
    pub fn normalized_at(&self, p: &LadderPoint) -> Complex64 {
        if p.tau == 0.0 {
            self.value_at_origin
        } else {
            p.cumulative / self.tau_pow(p.tau, self.kernel.alpha)
        }
    }

    /// Continues `log Q` along the ladder, where `Q` is computed from the
    /// ladder data by `track(tau, I(tau z), log phi(tau z))`, starting from
    /// `start` at the origin. Segments whose argument jumps by `pi/2` or more
    /// are split and re-integrated.
    pub fn continue_log<F>(&mut self, start: Complex64, track: F) -> Result<Complex64>
    where
        F: Fn(f64, Complex64, Complex64) -> Result<Complex64>,
    {
        let mut current = start;
        let mut i = 0;
        let mut splits = 0usize;
        while i + 1 < self.points.len() {
            let next = self.points[i + 1];
            let q = track(next.tau, self.normalized_at(&next), next.log_phi)?;
            if q == ZERO {
                return Err(Error::BranchTracking { z: self.z * next.tau });
            }
            let lq = nearest_log(q, current.im);
            if (lq.im - current.im).abs() < FRAC_PI_2 {
                current = lq;
                i += 1;
                continue;
            }
            // the innermost expansion piece cannot be split
            let prev = self.points[i];
            if prev.tau == 0.0 || splits > 64 * self.max_depth {
                return Err(Error::BranchTracking { z: self.z * next.tau });
            }
            splits += 1;
            let m = 0.5 * (prev.tau + next.tau);
            if m - prev.tau < 1e-14 {
                return Err(Error::BranchTracking { z: self.z * next.tau });
            }
            let lpm = self.log_phi_at(m, 0.5 * (prev.log_phi.im + next.log_phi.im))?;
            let share = self.tol * (next.tau - prev.tau);
            let mut out = Vec::new();
            let v = self.integrate_panel(prev.tau, m, prev.log_phi, lpm, share, 0, &mut out, prev.cumulative)?;
            debug_assert!(v.re.is_finite());
            let new_points: Vec<LadderPoint> = out.iter().map(|(p, _)| *p).collect();
            let new_errs: Vec<f64> = out.iter().map(|(_, e)| *e).collect();
            self.points.splice(i + 1..i + 1, new_points);
            // the old error now covers the remaining piece [m, next]
            self.errs.splice(i..i, new_errs);
        }
        Ok(current)
    }
}

/// `alpha * int_0^z phi^beta psi` in normalized form, plus the continued
/// outer root. Returns `G = z * exp(log I / alpha)`.
fn radial_operator(kernel: RadialKernel<'_>, z: Complex64, cfg: &QuadratureConfig) -> Result<OperatorValue> {
    cfg.validate()?;
    check_alpha(kernel.alpha)?;
    if z == ZERO {
        return Ok(OperatorValue {
            value: ZERO,
            estimated_error: 0.0,
            branch_ok: true,
        });
    }
    let alpha = kernel.alpha;
    let mut tol = cfg.abs_tolerance;
    for _ in 0..4 {
        let mut radial = Radial::build(kernel, z, cfg, tol)?;
        let start = principal_log(radial.value_at_origin);
        let (log_i, branch_ok) = match radial.continue_log(start, |_, i, _| Ok(i)) {
            Ok(l) => (l, true),
            Err(Error::BranchTracking { .. }) => (principal_log(radial.total()), false),
            Err(e) => return Err(e),
        };
        let total = radial.total();
        let value = z * (log_i / alpha).exp();
        let estimated_error = value.norm() * radial.error() / (alpha.norm() * total.norm());
        if estimated_error <= cfg.abs_tolerance || !branch_ok {
            return Ok(OperatorValue {
                value,
                estimated_error,
                branch_ok,
            });
        }
        tol *= 0.5 * cfg.abs_tolerance / estimated_error;
    }
    Err(Error::ToleranceNotMet {
        estimated: cfg.abs_tolerance,
    })
}

fn check_disk(z: Complex64) -> Result<()> {
    if z.norm() >= 1.0 {
        return Err(Error::Precondition(format!("|z| = {} must be < 1", z.norm())));
    }
    Ok(())
}

/// `G_alpha(z)` for general `f`, `g`.
pub fn operator_g_alpha(
    f: &FunctionExpr,
    g: &FunctionExpr,
    alpha: Complex64,
    z: Complex64,
    q: &QuadratureConfig,
) -> Result<OperatorValue> {
    check_disk(z)?;
    let f1 = f.derivative();
    radial_operator(
        RadialKernel {
            alpha,
            g: (!matches!(g, FunctionExpr::Var)).then_some(g),
            phi_exponent: alpha - ONE,
            psi: Some(&f1),
        },
        z,
        q,
    )
}

/// `[alpha * int_0^z u^(alpha-1) f'(u) du]^(1/alpha)` (g = z).
pub fn operator_pascu(
    f: &FunctionExpr,
    alpha: Complex64,
    z: Complex64,
    q: &QuadratureConfig,
) -> Result<OperatorValue> {
    operator_g_alpha(f, &FunctionExpr::Var, alpha, z, q)
}

/// `[alpha * int_0^z g^(alpha-1)(u) du]^(1/alpha)` (f = z).
pub fn operator_moldoveanu_pascu(
    g: &FunctionExpr,
    alpha: Complex64,
    z: Complex64,
    q: &QuadratureConfig,
) -> Result<OperatorValue> {
    operator_g_alpha(&FunctionExpr::Var, g, alpha, z, q)
}

/// `[alpha * int_0^z g^alpha(u)/u du]^(1/alpha)`.
pub fn operator_mocanu(
    g: &FunctionExpr,
    alpha: Complex64,
    z: Complex64,
    q: &QuadratureConfig,
) -> Result<OperatorValue> {
    check_disk(z)?;
    radial_operator(
        RadialKernel {
            alpha,
            g: (!matches!(g, FunctionExpr::Var)).then_some(g),
            phi_exponent: alpha,
            psi: None,
        },
        z,
        q,
    )
}

/// `log(g(z)/z)` continued along `[0, z]` from `log g'(0)`; `g1` is `g'`.
/// Steps shrink until the argument moves by less than `pi/2` per step.
pub fn continued_log_ratio(
    g: &FunctionExpr,
    g1: &FunctionExpr,
    z: Complex64,
    max_depth: usize,
) -> Result<Complex64> {
    let slope = eval(g1, ZERO)?;
    if slope == ZERO {
        return Err(Error::IntegrandSingular { node: ZERO });
    }
    let mut current = principal_log(slope);
    if z == ZERO {
        return Ok(current);
    }
    let min_step = 0.25 * 0.5f64.powi(max_depth as i32);
    let (mut a, mut step) = (0.0f64, 0.25f64);
    while a < 1.0 {
        let b = (a + step).min(1.0);
        let u = z * b;
        let gu = eval(g, u)?;
        if gu == ZERO {
            return Err(Error::IntegrandSingular { node: u });
        }
        let lb = nearest_log(gu / u, current.im);
        if (lb.im - current.im).abs() < FRAC_PI_2 {
            current = lb;
            a = b;
            step = (2.0 * step).min(0.25);
        } else {
            step *= 0.5;
            if step < min_step {
                return Err(Error::BranchTracking { z });
            }
        }
    }
    Ok(current)
}

/// Principal argument difference folded into `(-pi, pi]`.
pub fn wrapped_angle(d: f64) -> f64 {
    let mut x = d % TAU;
    if x > PI {
        x -= TAU;
    } else if x <= -PI {
        x += TAU;
    }
    x
}
