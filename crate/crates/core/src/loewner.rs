//! Loewner chains built on the operator, their transfer functions, and the
//! quasiconformal bound `K(s, k)` with the disk-inclusion algebra behind it.
//!
//! With `zeta = e^(-st) z` the chain is
//!
//! ```text
//! L(z, t) = [alpha int_0^zeta g^(alpha-1) f' du
//!            - (a/c)(e^(mt) - 1) zeta g^(alpha-1)(zeta) f'(zeta) h(zeta)]^(1/alpha)
//!         = zeta * Phi(zeta)^(1/alpha)
//! ```
//!
//! where `Phi(0) = e^(mt) X(t)` and `X(t) = (1 + (a/c)h0) e^(-mt) - (a/c)h0`.
//! The root is continued along `[0, zeta]` starting from the logarithm of
//! `Phi(0)` whose `X` part is itself continued in `t` from `X(0) = 1`, so that
//! `L(z, t)/(a1(t) z) -> 1`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{t6_expression, CriterionParams, MARGIN_TOL};
use crate::error::{Error, Result};
use crate::expr::{eval, AnalyticTriple, FunctionExpr};
use crate::operators::{nearest_log, QuadratureConfig, Radial, RadialKernel};
use crate::oracle::polygon_winding;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("t = {t} must be finite and >= 0")));
    }
    Ok(())
}

/// Closed disk check, up to rounding of `z/|z|`; points on the circle are
/// needed at the extension seam.
fn check_closed_disk(z: Complex64) -> Result<()> {
    if !(z.norm() <= 1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::Precondition(format!("|z| = {} must be <= 1", z.norm())));
    }
    Ok(())
}

const MAX_HALVINGS: u32 = 20;

/// `log X(t)` continued from `log X(0) = 0`, doubling the number of steps
/// until the argument moves by less than `pi/2` per step.
pub fn log_a1_bracket(p: &CriterionParams, h0: Complex64, t: f64) -> Result<Complex64> {
    check_time(t)?;
    let q = p.a() / p.c * h0;
    let x = |tau: f64| (ONE + q) * (-p.m * tau).exp() - q;
    let mut n = 1u64;
    for _ in 0..=MAX_HALVINGS {
        let mut current = ZERO;
        let mut resolved = true;
        for k in 1..=n {
            let v = x(t * k as f64 / n as f64);
            if v == ZERO {
                return Err(Error::BranchPointHit { z: ZERO });
            }
            let l = nearest_log(v, current.im);
            if (l.im - current.im).abs() >= FRAC_PI_2 {
                resolved = false;
                break;
            }
            current = l;
        }
        if resolved {
            return Ok(current);
        }
        n *= 2;
    }
    Err(Error::BranchPointHit { z: ZERO })
}

/// `a1(t) = e^(t(m/alpha - s)) X(t)^(1/alpha)` with `a1(0) = 1`.
pub fn chain_a1(p: &CriterionParams, h0: Complex64, t: f64) -> Result<Complex64> {
    p.validate()?;
    let lx = log_a1_bracket(p, h0, t)?;
    Ok(((p.m / p.alpha - p.s) * t + lx / p.alpha).exp())
}

fn kernel_for<'a>(g: &'a FunctionExpr, f1: &'a FunctionExpr, alpha: Complex64) -> RadialKernel<'a> {
    RadialKernel {
        alpha,
        g: (!matches!(g, FunctionExpr::Var)).then_some(g),
        phi_exponent: alpha - ONE,
        psi: Some(f1),
    }
}

/// The chain `L(z, t)`; `|z| <= 1` with `|e^(-st) z| <= 1`.
pub fn chain_l(
    triple: &AnalyticTriple,
    p: &CriterionParams,
    z: Complex64,
    t: f64,
    q: &QuadratureConfig,
) -> Result<Complex64> {
    p.validate()?;
    q.validate()?;
    check_time(t)?;
    check_closed_disk(z)?;
    if z == ZERO {
        return Ok(ZERO);
    }
    let start = p.m * t + log_a1_bracket(p, triple.h0, t)?;
    let zeta = (-p.s * t).exp() * z;
    let kappa = p.a() / p.c * (p.m * t).exp_m1();
    let kernel = kernel_for(&triple.g, &triple.f1, p.alpha);
    let mut radial = Radial::build(kernel, zeta, q, q.abs_tolerance)?;
    let has_g = kernel.g.is_some();
    let log_phi = radial.continue_log(start, |tau, i, log_ratio| {
        let u = zeta * tau;
        let phi1 = if has_g { ((p.alpha - ONE) * log_ratio).exp() } else { ONE };
        let v = i - kappa * phi1 * eval(&triple.f1, u)? * eval(&triple.h, u)?;
        if v == ZERO {
            return Err(Error::NonvanishingViolation { z, t });
        }
        Ok(v)
    })?;
    Ok(zeta * (log_phi / p.alpha).exp())
}

/// Transfer function `A(z, t)`.
pub fn transfer_a(triple: &AnalyticTriple, p: &CriterionParams, z: Complex64, t: f64) -> Result<Complex64> {
    check_time(t)?;
    let zeta = (-p.s * t).exp() * z;
    let decay = (-p.m * t).exp();
    let h = eval(&triple.h, zeta)?;
    if h == ZERO {
        return Err(Error::DivisionByZero {
            z: zeta,
            subexpr: format!("c alpha/({})", triple.h),
        });
    }
    let bracket = triple.bracket(p.alpha, zeta)?;
    Ok(-p.c * p.alpha * decay / (p.a() * h) - bracket * (-p.m * t).exp_m1())
}

/// `w = ((1 + s)A - m)/((1 - s)A + m)`.
pub fn transfer_w(a: Complex64, s: Complex64, m: f64) -> Result<Complex64> {
    let den = (ONE - s) * a + m;
    if den.norm() <= f64::EPSILON * ((ONE - s) * a).norm().max(m) {
        return Err(Error::DenominatorZero { a });
    }
    Ok(((ONE + s) * a - m) / den)
}

/// `p = (1 + w)/(1 - w)`.
pub fn transfer_p(w: Complex64) -> Result<Complex64> {
    if w == ONE {
        return Err(Error::PoleAtOne);
    }
    Ok((ONE + w) / (ONE - w))
}

/// `B = A - m/(2a)`.
pub fn transfer_b(a: Complex64, p: &CriterionParams) -> Complex64 {
    a - p.half_m_over_a()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainPoint {
    pub z: Complex64,
    pub t: f64,
    #[serde(rename = "L")]
    pub l: Complex64,
    #[serde(rename = "A")]
    pub a: Complex64,
    #[serde(rename = "B")]
    pub b: Complex64,
    pub w: Complex64,
    pub p: Complex64,
    pub a1: Complex64,
}

pub fn chain_point(
    triple: &AnalyticTriple,
    p: &CriterionParams,
    z: Complex64,
    t: f64,
    q: &QuadratureConfig,
) -> Result<ChainPoint> {
    let a = transfer_a(triple, p, z, t)?;
    let w = transfer_w(a, p.s, p.m)?;
    Ok(ChainPoint {
        z,
        t,
        l: chain_l(triple, p, z, t, q)?,
        a,
        b: transfer_b(a, p),
        w,
        p: transfer_p(w)?,
        a1: chain_a1(p, triple.h0, t)?,
    })
}

/// Worst margin of one chain condition over the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub id: String,
    pub satisfied: bool,
    pub margin: f64,
    pub witness_z: Option<Complex64>,
    pub witness_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConditionsReport {
    pub satisfied: bool,
    pub samples: usize,
    /// Sorted distinct times of the sample.
    pub t_ladder: Vec<f64>,
    pub checks: Vec<ChainCheck>,
}

/// Regular `(r, theta, t)` lattice with radii `r_max (i+1)/n_r`.
pub fn chain_lattice(n_r: usize, n_theta: usize, r_max: f64, ts: &[f64]) -> Vec<(Complex64, f64)> {
    let mut out = Vec::with_capacity(n_r * n_theta * ts.len());
    for &t in ts {
        for i in 0..n_r {
            let r = r_max * (i + 1) as f64 / n_r as f64;
            for j in 0..n_theta {
                let theta = std::f64::consts::TAU * j as f64 / n_theta as f64;
                out.push((Complex64::from_polar(r, theta), t));
            }
        }
    }
    out
}

/// Checks `|w| < 1`, `Re p > 0`, `|B| < m/(2a)` at every sample and that
/// `|a1|` increases along the sampled times.
pub fn verify_chain_conditions(
    triple: &AnalyticTriple,
    p: &CriterionParams,
    sample: &[(Complex64, f64)],
) -> Result<ChainConditionsReport> {
    p.validate()?;
    let values: Vec<Result<(Complex64, Complex64, Complex64)>> = sample
        .par_iter()
        .map(|&(z, t)| {
            let at = |e: Error| Error::AtSample {
                z,
                t,
                source: Box::new(e),
            };
            let a = transfer_a(triple, p, z, t).map_err(at)?;
            let w = transfer_w(a, p.s, p.m).map_err(at)?;
            let pp = transfer_p(w).map_err(at)?;
            Ok((w, pp, transfer_b(a, p)))
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;

    let bound = p.half_m_over_a();
    type Margin<'a> = &'a dyn Fn(&(Complex64, Complex64, Complex64)) -> f64;
    let margins: [(&str, Margin); 3] = [
        ("w", &|v| 1.0 - v.0.norm()),
        ("re-p", &|v| v.1.re),
        ("B", &|v| bound - v.2.norm()),
    ];
    let mut checks = Vec::new();
    for (id, margin) in margins.iter() {
        let mut worst = (f64::INFINITY, None, 0.0);
        for (v, &(z, t)) in values.iter().zip(sample) {
            let m = margin(v);
            if m < worst.0 {
                worst = (m, Some(z), t);
            }
        }
        checks.push(ChainCheck {
            id: (*id).into(),
            satisfied: worst.0 > MARGIN_TOL,
            margin: worst.0,
            witness_z: worst.1,
            witness_t: worst.2,
        });
    }

    let mut ladder: Vec<f64> = sample.iter().map(|s| s.1).collect();
    ladder.sort_by(f64::total_cmp);
    ladder.dedup();
    let moduli = ladder
        .iter()
        .map(|&t| chain_a1(p, triple.h0, t).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    let mut growth = (f64::INFINITY, 0.0);
    for (k, pair) in moduli.windows(2).enumerate() {
        if pair[1] - pair[0] < growth.0 {
            growth = (pair[1] - pair[0], ladder[k + 1]);
        }
    }
    checks.push(ChainCheck {
        id: "a1-increasing".into(),
        satisfied: growth.0 > 0.0,
        margin: growth.0,
        witness_z: None,
        witness_t: growth.1,
    });

    Ok(ChainConditionsReport {
        satisfied: checks.iter().all(|c| c.satisfied),
        samples: sample.len(),
        t_ladder: ladder,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcBound {
    pub s: Complex64,
    pub k: f64,
    /// Absent for `s = 1`.
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    #[serde(rename = "K")]
    pub k_bound: f64,
    /// `1 - K` without cancellation.
    pub complement: f64,
}

/// Dilatation bound `K(s, k)` of the quasiconformal extension.
pub fn qc_bound_k(s: Complex64, k: f64) -> Result<QcBound> {
    if !(s.re > 0.0) {
        return Err(Error::InvalidParameter(format!("Re s = {} must be > 0", s.re)));
    }
    if !(0.0..1.0).contains(&k) {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in [0, 1)")));
    }
    if s == ONE {
        return Ok(QcBound {
            s,
            k,
            l1: None,
            l2: None,
            l3: None,
            k_bound: k,
            complement: 1.0 - k,
        });
    }
    let a = s.re;
    let dm = (s - ONE).norm();
    let dp = (s + ONE).norm();
    // |s - 1|^2 and |conj(s)^2 - 1| = |s - 1||s + 1|
    let sq = dm * dm;
    let bq = dm * dp;
    let l1 = dm / dp;
    let l2 = if k == 0.0 {
        l1
    } else {
        k * bq * bq / (((4.0 * a * a + k * k * bq * bq).sqrt() + 2.0 * a) * sq)
    };
    let l3 = (sq + k * bq) / (bq + k * sq);
    // bq - sq = |s - 1|(|s + 1| - |s - 1|) = |s - 1| 4a/(|s + 1| + |s - 1|)
    let gap = dm * 4.0 * a / (dp + dm);
    let complement = (1.0 - k) * gap / (bq + k * sq);
    Ok(QcBound {
        s,
        k,
        l1: Some(l1),
        l2: Some(l2),
        l3: Some(l3),
        k_bound: l3,
        complement,
    })
}

/// A number `l in [0, 1)` together with `1 - l`; the complement may be
/// known more accurately than the subtraction gives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contraction {
    pub value: f64,
    pub complement: f64,
}

impl From<f64> for Contraction {
    fn from(value: f64) -> Self {
        Self {
            value,
            complement: 1.0 - value,
        }
    }
}

impl From<&QcBound> for Contraction {
    fn from(b: &QcBound) -> Self {
        Self {
            value: b.k_bound,
            complement: b.complement,
        }
    }
}

impl From<QcBound> for Contraction {
    fn from(b: QcBound) -> Self {
        (&b).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskInclusion {
    pub holds: bool,
    pub slack: f64,
    pub center1: Complex64,
    pub radius1: f64,
    pub center2: f64,
    pub radius2: f64,
}

/// Whether the disk of `A` values permitted by the hypothesis (center
/// `m/(2a)`, radius `km/(2a)`) lies inside the image disk of `|w| <= l`.
pub fn disk_inclusion_check(s: Complex64, m: f64, k: f64, l: impl Into<Contraction>) -> DiskInclusion {
    let l = l.into();
    let (a, b) = (s.re, s.im);
    let lv = l.value;
    let one_minus_sq = l.complement * (1.0 + lv);
    let one_plus_sq = 1.0 + lv * lv;
    let d = 2.0 * a * one_plus_sq + one_minus_sq * (1.0 + s.norm_sqr());
    let center1 = Complex64::new(one_plus_sq + a * one_minus_sq, -b * one_minus_sq) * (m / d);
    let radius1 = 2.0 * lv * m / d;
    let center2 = m / (2.0 * a);
    let radius2 = k * m / (2.0 * a);
    // center1 - center2 = m (1 - l^2)(conj(s)^2 - 1)/(2aD)
    let bq = (s - ONE).norm() * (s + ONE).norm();
    let dist = m * one_minus_sq * bq / (2.0 * a * d);
    let slack = radius1 - dist - radius2;
    DiskInclusion {
        holds: dist + radius2 <= radius1 + 1e-12,
        slack,
        center1,
        radius1,
        center2,
        radius2,
    }
}

/// The chain `L(z, t) = z (J(z) + e^(alpha t) - 1)^(1/alpha)` for real
/// `alpha > 0`, where `z^alpha J(z) = alpha int_0^z g^(alpha-1) f'`.
pub fn chain_t6(
    f1: &FunctionExpr,
    g: &FunctionExpr,
    alpha: f64,
    z: Complex64,
    t: f64,
    q: &QuadratureConfig,
) -> Result<Complex64> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} must be > 0")));
    }
    q.validate()?;
    check_time(t)?;
    check_closed_disk(z)?;
    if z == ZERO {
        return Ok(ZERO);
    }
    let alpha_c = Complex64::new(alpha, 0.0);
    let shift = (alpha * t).exp_m1();
    let mut radial = Radial::build(kernel_for(g, f1, alpha_c), z, q, q.abs_tolerance)?;
    let log_q = radial.continue_log(Complex64::new(alpha * t, 0.0), |_, i, _| {
        let v = i + shift;
        if v == ZERO {
            return Err(Error::NonvanishingViolation { z, t });
        }
        Ok(v)
    })?;
    Ok(z * (log_q / alpha).exp())
}

/// `p(z, t) = e^(-alpha t) (g/z)^(alpha-1) f' + 1 - e^(-alpha t)` of the
/// same chain.
pub fn chain_t6_p(
    f1: &FunctionExpr,
    g: &FunctionExpr,
    g1: &FunctionExpr,
    alpha: f64,
    z: Complex64,
    t: f64,
) -> Result<Complex64> {
    let e = (-alpha * t).exp();
    Ok(t6_expression(f1, g, g1, alpha, z)? * e + (1.0 - e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinationReport {
    pub rho: f64,
    pub t: f64,
    pub s_prime: f64,
    pub boundary_radius: f64,
    pub boundary_nodes: usize,
    pub probes: usize,
    pub contained: bool,
    pub outside_probe: Option<Complex64>,
}

pub const SUBORDINATION_NODES: usize = 720;
pub const SUBORDINATION_BOUNDARY: f64 = 0.999;

/// Whether `L(|z| <= rho, t)` lies inside the region bounded by the image
/// of `|z| = 0.999` under `L(., s_prime)`, judged by winding numbers of a
/// 720-gon at probe points on `|z| = rho` and `|z| = rho/2`.
pub fn subordination_spot_check(
    triple: &AnalyticTriple,
    p: &CriterionParams,
    rho: f64,
    t: f64,
    s_prime: f64,
    q: &QuadratureConfig,
) -> Result<SubordinationReport> {
    if !(0.0 <= t && t <= s_prime && rho > 0.0 && rho < SUBORDINATION_BOUNDARY) {
        return Err(Error::Precondition("need 0 <= t <= s' and 0 < rho < 0.999".into()));
    }
    let n = SUBORDINATION_NODES;
    let polygon = (0..n)
        .into_par_iter()
        .map(|j| {
            let z = Complex64::from_polar(SUBORDINATION_BOUNDARY, std::f64::consts::TAU * j as f64 / n as f64);
            chain_l(triple, p, z, s_prime, q)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let probe_points: Vec<Complex64> = [rho, 0.5 * rho]
        .iter()
        .flat_map(|&r| (0..64).map(move |j| Complex64::from_polar(r, std::f64::consts::TAU * (j as f64 + 0.5) / 64.0)))
        .collect();
    let images = probe_points
        .par_iter()
        .map(|&z| chain_l(triple, p, z, t, q))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let outside = probe_points
        .iter()
        .zip(&images)
        .find(|(_, w)| polygon_winding(&polygon, **w) != Some(1))
        .map(|(z, _)| *z);
    Ok(SubordinationReport {
        rho,
        t,
        s_prime,
        boundary_radius: SUBORDINATION_BOUNDARY,
        boundary_nodes: n,
        probes: probe_points.len(),
        contained: outside.is_none(),
        outside_probe: outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::operators::operator_g_alpha;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn triple(f: &str, g: &str, h: &str) -> AnalyticTriple {
        AnalyticTriple::new(parse(f).unwrap(), parse(g).unwrap(), parse(h).unwrap()).unwrap()
    }

    fn trivial() -> (AnalyticTriple, CriterionParams) {
        (triple("z", "z", "1"), CriterionParams::default())
    }

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn chain_at_time_zero_is_the_operator() {
        let t = triple("z + 0.1*z^2", "z + 0.2*z^2 - 0.05*z^3", "1 + 0.3*z");
        let p = CriterionParams::new(c(0.7, 0.2), c(-1.0, 0.5), c(1.3, -0.4), 2.0, 0.0).unwrap();
        for zz in [c(0.3, 0.4), c(-0.8, 0.1), c(0.0, -0.95)] {
            let l = chain_l(&t, &p, zz, 0.0, &q()).unwrap();
            let g = operator_g_alpha(&t.f, &t.g, p.alpha, zz, &q()).unwrap().value;
            assert!((l - g).norm() < 1e-10, "{l} vs {g}");
        }
    }

    #[test]
    fn trivial_chain_is_exponential_scaling() {
        let (t, p) = trivial();
        for (zz, time) in [(c(0.5, 0.2), 0.0), (c(-0.3, 0.7), 1.0), (c(0.9, 0.0), 3.5)] {
            let l = chain_l(&t, &p, zz, time, &q()).unwrap();
            assert!((l - zz * time.exp()).norm() < 1e-10 * time.exp());
            let a1 = chain_a1(&p, t.h0, time).unwrap();
            assert!((a1 - c(time.exp(), 0.0)).norm() < 1e-12 * time.exp());
        }
    }

    #[test]
    fn a1_starts_at_one() {
        let p = CriterionParams::new(c(0.7, 0.2), c(-1.0, 0.5), c(1.3, -0.4), 2.0, 0.0).unwrap();
        assert_eq!(chain_a1(&p, c(2.0, 1.0), 0.0).unwrap(), ONE);
    }

    #[test]
    fn chain_normalization_near_origin() {
        let t = triple("z + 0.1*z^2", "z + 0.2*z^2", "2 + z");
        let p = CriterionParams::new(c(0.8, 0.0), c(-2.0, 0.0), c(1.2, 0.3), 1.5, 0.0).unwrap();
        for time in [0.0, 0.5, 2.0] {
            let zz = c(1e-6, 0.0);
            let ratio = chain_l(&t, &p, zz, time, &q()).unwrap() / (chain_a1(&p, t.h0, time).unwrap() * zz);
            assert!((ratio - ONE).norm() < 1e-5, "t = {time}: {ratio}");
        }
    }

    #[test]
    fn transfer_examples() {
        let (t, p) = trivial();
        for (zz, time) in [(c(0.5, 0.2), 0.0), (c(-0.3, 0.7), 1.0)] {
            let a = transfer_a(&t, &p, zz, time).unwrap();
            assert!((a - ONE).norm() < 1e-15);
            let w = transfer_w(a, p.s, p.m).unwrap();
            assert!(w.norm() < 1e-15);
            assert!((transfer_p(w).unwrap() - ONE).norm() < 1e-15);
        }
        let s = c(0.7, 0.3);
        assert!(transfer_w(2.0 / (ONE + s), s, 2.0).unwrap().norm() < 1e-15);
        assert_eq!(transfer_w(ZERO, s, 2.0).unwrap(), -ONE);
        assert_eq!(transfer_p(ZERO).unwrap(), ONE);
        assert_eq!(transfer_p(-ONE).unwrap(), ZERO);
        let pw = transfer_p(c(0.0, 0.5)).unwrap();
        assert!((pw - c(0.6, 0.8)).norm() < 1e-15);
        assert!(matches!(transfer_p(ONE), Err(Error::PoleAtOne)));
        // (1 - s)A + m = 0 for s = 3, A = 1, m = 2
        assert!(matches!(transfer_w(ONE, c(3.0, 0.0), 2.0), Err(Error::DenominatorZero { .. })));
    }

    #[test]
    fn transfer_a_at_time_zero_and_origin() {
        let t = triple("z + 0.1*z^2", "z + 0.2*z^2", "2 + z");
        let p = CriterionParams::new(c(0.8, 0.1), c(-2.0, 1.0), c(1.2, 0.3), 1.5, 0.0).unwrap();
        let zz = c(0.4, -0.2);
        let a = transfer_a(&t, &p, zz, 0.0).unwrap();
        let h = eval(&t.h, zz).unwrap();
        assert!((a + p.c * p.alpha / (p.a() * h)).norm() < 1e-14);
        let time = 0.7;
        let e = (-p.m * time).exp();
        let a0 = transfer_a(&t, &p, ZERO, time).unwrap();
        let expected = -p.c * p.alpha * e / (p.a() * t.h0) + (1.0 - e) * p.alpha;
        assert!((a0 - expected).norm() < 1e-14);
        // |B(0, t)| in the expanded form
        let b = transfer_b(a0, &p).norm();
        let expanded = ((p.c * p.alpha / t.h0 + p.m / 2.0) * e + (p.m / 2.0 - p.a() * p.alpha) * (1.0 - e)).norm() / p.a();
        assert!((b - expanded).abs() < 1e-14);
    }

    #[test]
    fn p_from_transfer_matches_chain_derivatives() {
        // p = z L_z / L_t by finite differences of the chain itself
        let t = triple("z + 0.1*z^2", "z", "1");
        let p = CriterionParams::default();
        for (zz, time) in [(c(0.3, 0.2), 0.4), (c(-0.5, 0.4), 1.1)] {
            let l = |u: Complex64, s: f64| chain_l(&t, &p, u, s, &q()).unwrap();
            let h = 1e-4;
            let lz = (l(zz + h, time) - l(zz - h, time)) / (2.0 * h);
            let lt = (l(zz, time + h) - l(zz, time - h)) / (2.0 * h);
            let fd = zz * lz / lt;
            let a = transfer_a(&t, &p, zz, time).unwrap();
            let pp = transfer_p(transfer_w(a, p.s, p.m).unwrap()).unwrap();
            assert!((pp - fd).norm() < 1e-6, "{pp} vs {fd}");
        }
    }

    #[test]
    fn chain_conditions_trivial_and_becker() {
        let (t, p) = trivial();
        let ts = [0.0, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
        let sample = chain_lattice(8, 8, 0.999, &ts);
        let r = verify_chain_conditions(&t, &p, &sample).unwrap();
        assert!(r.satisfied);
        for c in &r.checks[..3] {
            assert!((c.margin - 1.0).abs() < 1e-14, "{c:?}");
        }
        let sample = chain_lattice(32, 32, 0.999, &ts);
        let r = verify_chain_conditions(&triple("z + 0.1*z^2", "z", "1"), &p, &sample).unwrap();
        assert!(r.satisfied);
        let r = verify_chain_conditions(&triple("z/(1 - z)", "z", "1"), &p, &sample).unwrap();
        assert!(!r.satisfied);
        let b = r.checks.iter().find(|c| c.id == "B").unwrap();
        assert!(!b.satisfied && b.witness_z.is_some());
    }

    #[test]
    fn qc_bound_examples() {
        let b = qc_bound_k(ONE, 0.3).unwrap();
        assert_eq!(b.k_bound, 0.3);
        assert!(b.l1.is_none());
        let b = qc_bound_k(c(2.0, 0.0), 0.0).unwrap();
        assert!((b.k_bound - 1.0 / 3.0).abs() < 1e-15);
        assert!((b.l1.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.l2, b.l1);
        let b = qc_bound_k(c(1.0, 1.0), 0.2).unwrap();
        let r5 = 5f64.sqrt();
        assert!((b.k_bound - (1.0 + 0.2 * r5) / (r5 + 0.2)).abs() < 1e-15);
        assert!((b.k_bound - 0.5941).abs() < 1e-4);
        assert!((b.complement - (1.0 - b.k_bound)).abs() < 1e-15);
        assert!(qc_bound_k(c(0.0, 1.0), 0.2).is_err());
        assert!(qc_bound_k(ONE, 1.0).is_err());
    }

    #[test]
    fn disk_inclusion_examples() {
        let r = disk_inclusion_check(ONE, 2.0, 0.4, 0.4);
        assert!(r.holds && r.slack.abs() < 1e-15);
        assert!((r.center1 - ONE).norm() < 1e-15 && (r.radius1 - 0.4).abs() < 1e-15);
        let r = disk_inclusion_check(ONE, 2.0, 0.4, 0.3);
        assert!(!r.holds);
        let s = c(1.0, 1.0);
        let b = qc_bound_k(s, 0.2).unwrap();
        assert!(disk_inclusion_check(s, 2.0, 0.2, b).holds);
    }

    #[test]
    fn t6_chain_examples() {
        let z = parse("z").unwrap();
        let one = parse("1").unwrap();
        let zz = c(0.4, 0.5);
        let l = chain_t6(&one, &z, 1.0, zz, 1.3, &q()).unwrap();
        assert!((l - zz * 1.3f64.exp()).norm() < 1e-12);
        let f = parse("z + 0.1*z^2 + 0.05*z^3").unwrap();
        let g = parse("z + 0.2*z^2").unwrap();
        let f1 = f.derivative();
        let v = chain_t6(&f1, &g, 0.6, zz, 0.0, &q()).unwrap();
        let expected = operator_g_alpha(&f, &g, c(0.6, 0.0), zz, &q()).unwrap().value;
        assert!((v - expected).norm() < 1e-11);
        // eps family: L = e^t z + eps z^2, also on the unit circle
        let fe = parse("1 + 0.4*z").unwrap();
        for zz in [c(0.3, -0.2), Complex64::from_polar(1.0, 2.0)] {
            let v = chain_t6(&fe, &z, 1.0, zz, 0.8, &q()).unwrap();
            assert!((v - (zz * 0.8f64.exp() + 0.2 * zz * zz)).norm() < 1e-12);
        }
    }

    #[test]
    fn t6_p_is_a_convex_combination() {
        let z = parse("z").unwrap();
        let f1 = parse("1 + 0.2*z").unwrap();
        let g1 = parse("1").unwrap();
        let zz = c(0.5, 0.5);
        let v = chain_t6_p(&f1, &z, &g1, 1.0, zz, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((v - ((ONE + 0.2 * zz) * e + (1.0 - e))).norm() < 1e-15);
        // and agrees with z L_z / L_t of the chain
        let l = |u: Complex64, s: f64| chain_t6(&f1, &z, 1.0, u, s, &q()).unwrap();
        let h = 1e-4;
        let fd = zz * (l(zz + h, 1.0) - l(zz - h, 1.0)) / (l(zz, 1.0 + h) - l(zz, 1.0 - h));
        assert!((v - fd).norm() < 1e-7);
    }

    #[test]
    fn subordination_for_trivial_and_becker_chains() {
        let p = CriterionParams::default();
        for f in ["z", "z + 0.1*z^2"] {
            let t = triple(f, "z", "1");
            for (a, b) in [(0.0, 0.0), (0.2, 1.0), (1.0, 3.0)] {
                let r = subordination_spot_check(&t, &p, 0.9, a, b, &q()).unwrap();
                assert!(r.contained, "{f} {a} {b}");
            }
        }
    }
}
