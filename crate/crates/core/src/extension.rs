//! Becker-type extensions `F(z) = L(z/|z|, log|z|)` outside the disk and
//! finite-difference Beltrami coefficients.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionParams, TrendPoint};
use crate::error::{Error, Result};
use crate::expr::{differentiate, AnalyticTriple, ComplexMap, FunctionExpr};
use crate::loewner::{chain_l, chain_t6};
use crate::operators::QuadratureConfig;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A Loewner chain evaluable for `|z| <= 1`, `t >= 0`.
pub trait Chain: Sync {
    fn value(&self, z: Complex64, t: f64) -> Result<Complex64>;
}

impl<C: Chain + ?Sized> Chain for &C {
    fn value(&self, z: Complex64, t: f64) -> Result<Complex64> {
        (**self).value(z, t)
    }
}

/// The chain built from `(f, g, h)` and the criterion parameters.
pub struct OperatorChain {
    pub triple: AnalyticTriple,
    pub params: CriterionParams,
    pub quadrature: QuadratureConfig,
}

impl Chain for OperatorChain {
    fn value(&self, z: Complex64, t: f64) -> Result<Complex64> {
        chain_l(&self.triple, &self.params, z, t, &self.quadrature)
    }
}

/// `L(z, t) = z (J(z) + e^(alpha t) - 1)^(1/alpha)`.
pub struct T6Chain {
    f1: FunctionExpr,
    g: FunctionExpr,
    alpha: f64,
    quadrature: QuadratureConfig,
}

impl T6Chain {
    pub fn new(f: &FunctionExpr, g: FunctionExpr, alpha: f64, quadrature: QuadratureConfig) -> Self {
        Self {
            f1: differentiate(f),
            g,
            alpha,
            quadrature,
        }
    }
}

impl Chain for T6Chain {
    fn value(&self, z: Complex64, t: f64) -> Result<Complex64> {
        chain_t6(&self.f1, &self.g, self.alpha, z, t, &self.quadrature)
    }
}

/// Adapts a closure `(z, t) -> L(z, t)`.
pub struct ChainFn<F>(pub F);

impl<F> Chain for ChainFn<F>
where
    F: Fn(Complex64, f64) -> Result<Complex64> + Sync,
{
    fn value(&self, z: Complex64, t: f64) -> Result<Complex64> {
        (self.0)(z, t)
    }
}

/// `F(z) = L(z, 0)` inside the disk, `L(z/|z|, log|z|)` outside.
pub struct BeckerExtension<C> {
    pub chain: C,
}

impl<C: Chain> BeckerExtension<C> {
    pub fn new(chain: C) -> Self {
        Self { chain }
    }
}

pub fn becker_extension<C: Chain + ?Sized>(chain: &C, z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if r < 1.0 {
        chain.value(z, 0.0)
    } else {
        chain.value(z / r, r.ln())
    }
}

impl<C: Chain> ComplexMap for BeckerExtension<C> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        becker_extension(&self.chain, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltramiSample {
    pub z: Complex64,
    #[serde(rename = "F")]
    pub f: Complex64,
    pub f_z: Complex64,
    pub f_zbar: Complex64,
    pub mu: Complex64,
    pub abs_mu: f64,
}

/// Default relative step of the difference quotients.
pub const BELTRAMI_STEP: f64 = 1e-5;

fn sample_from(map: &(impl ComplexMap + ?Sized), z: Complex64, fx: Complex64, fy: Complex64) -> Result<BeltramiSample> {
    let f_z = (fx - I * fy) * 0.5;
    let f_zbar = (fx + I * fy) * 0.5;
    if f_z.norm() <= 1e-12 {
        return Err(Error::DegenerateJacobian { z });
    }
    let mu = f_zbar / f_z;
    Ok(BeltramiSample {
        z,
        f: map.value(z)?,
        f_z,
        f_zbar,
        mu,
        abs_mu: mu.norm(),
    })
}

fn central(map: &(impl ComplexMap + ?Sized), z: Complex64, h: f64) -> Result<(Complex64, Complex64)> {
    let fx = (map.value(z + h)? - map.value(z - h)?) / (2.0 * h);
    let fy = (map.value(z + I * h)? - map.value(z - I * h)?) / (2.0 * h);
    Ok((fx, fy))
}

fn check_step(z: Complex64, step: f64) -> Result<()> {
    if !(step > 0.0) || !(z.norm() > 1.0 + 2.0 * step) {
        return Err(Error::Precondition(format!(
            "Beltrami estimate needs step > 0 and |z| > 1 + 2 step (|z| = {}, step = {step})",
            z.norm()
        )));
    }
    Ok(())
}

/// `mu = F_zbar / F_z` from central differences with spacing `step |z|`.
pub fn beltrami_estimate(map: &(impl ComplexMap + ?Sized), z: Complex64, step: f64) -> Result<BeltramiSample> {
    check_step(z, step)?;
    let (fx, fy) = central(map, z, step * z.norm())?;
    sample_from(map, z, fx, fy)
}

/// As [`beltrami_estimate`] with one Richardson step on the differences.
pub fn beltrami_estimate_refined(map: &(impl ComplexMap + ?Sized), z: Complex64, step: f64) -> Result<BeltramiSample> {
    check_step(z, step)?;
    let h = step * z.norm();
    let (fx1, fy1) = central(map, z, h)?;
    let (fx2, fy2) = central(map, z, 0.5 * h)?;
    sample_from(map, z, (fx2 * 4.0 - fx1) / 3.0, (fy2 * 4.0 - fy1) / 3.0)
}

/// Geometric radii from `r_min` to `r_max` (both included) times uniform
/// angles, enumerated radius-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGrid {
    pub n_radial: usize,
    pub n_angular: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub step: f64,
}

impl Default for AnnulusGrid {
    fn default() -> Self {
        Self {
            n_radial: 64,
            n_angular: 256,
            r_min: 1.0 + 1e-3,
            r_max: 10.0,
            step: BELTRAMI_STEP,
        }
    }
}

impl AnnulusGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_radial == 0 || self.n_angular == 0 {
            return Err(Error::InvalidParameter("annulus sizes must be positive".into()));
        }
        if !(self.r_min > 1.0 && self.r_max >= self.r_min) {
            return Err(Error::InvalidParameter(format!(
                "annulus radii need 1 < r_min <= r_max, got {} and {}",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    pub fn radius(&self, i: usize) -> f64 {
        if self.n_radial == 1 {
            return self.r_min;
        }
        self.r_min * (self.r_max / self.r_min).powf(i as f64 / (self.n_radial - 1) as f64)
    }

    pub fn point(&self, index: usize) -> Complex64 {
        let (i, j) = (index / self.n_angular, index % self.n_angular);
        Complex64::from_polar(self.radius(i), std::f64::consts::TAU * j as f64 / self.n_angular as f64)
    }

    pub fn len(&self) -> usize {
        self.n_radial * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatationReport {
    pub max_abs_mu: f64,
    pub witness: Complex64,
    /// Largest `|mu|` on each of the three innermost circles.
    pub inner_trend: Vec<TrendPoint>,
    pub grid: AnnulusGrid,
}

/// Beltrami samples over the annulus in enumeration order.
pub fn annulus_samples(map: &(impl ComplexMap + ?Sized), grid: &AnnulusGrid) -> Result<Vec<BeltramiSample>> {
    grid.validate()?;
    (0..grid.len())
        .into_par_iter()
        .map(|k| beltrami_estimate(map, grid.point(k), grid.step))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Maximum of `|mu|` over the annulus grid; ties go to the lowest index.
pub fn max_dilatation(map: &(impl ComplexMap + ?Sized), grid: &AnnulusGrid) -> Result<DilatationReport> {
    let samples = annulus_samples(map, grid)?;
    let mut best = 0;
    for (k, s) in samples.iter().enumerate() {
        if s.abs_mu > samples[best].abs_mu {
            best = k;
        }
    }
    let inner_trend = (0..grid.n_radial.min(3))
        .map(|i| TrendPoint {
            r: grid.radius(i),
            lhs: samples[i * grid.n_angular..(i + 1) * grid.n_angular]
                .iter()
                .map(|s| s.abs_mu)
                .fold(0.0, f64::max),
        })
        .collect();
    Ok(DilatationReport {
        max_abs_mu: samples[best].abs_mu,
        witness: samples[best].z,
        inner_trend,
        grid: *grid,
    })
}

/// Largest `|mu|` on the circle `|z| = r`.
pub fn circle_dilatation(map: &(impl ComplexMap + ?Sized), r: f64, n_angular: usize, step: f64) -> Result<f64> {
    let grid = AnnulusGrid {
        n_radial: 1,
        n_angular,
        r_min: r,
        r_max: r,
        step,
    };
    Ok(max_dilatation(map, &grid)?.max_abs_mu)
}

/// Radius of the inner limit in the seam check.
pub const SEAM_INNER_RADIUS: f64 = 1.0 - 1e-7;

/// `max |F(r e^(i theta)) - F(e^(i theta))|` over `n` angles with
/// `r = 1 - 1e-7`.
pub fn seam_mismatch<C: Chain + ?Sized>(chain: &C, n: usize) -> Result<f64> {
    (0..n)
        .into_par_iter()
        .map(|j| {
            let u = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
            let inside = becker_extension(chain, u * SEAM_INNER_RADIUS)?;
            let on = becker_extension(chain, u)?;
            Ok((inside - on).norm())
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
}
