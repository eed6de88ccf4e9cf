#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64;
use proptest::prelude::*;
use univalent_core::criteria::CriterionParams;
use univalent_core::dsl::polynomial;
use univalent_core::FunctionExpr;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn complex_in(radius: f64) -> impl Strategy<Value = Complex64> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

pub fn disk_point(r_max: f64) -> impl Strategy<Value = Complex64> {
    complex_in(r_max)
}

/// `z + c2 z^2 + c3 z^3` with `|2 c2| + |3 c3| < 1`, so `f'` has no zeros in
/// the closed disk.
pub fn normalized_cubic() -> impl Strategy<Value = FunctionExpr> {
    (complex_in(0.2), complex_in(0.1)).prop_map(|(c2, c3)| polynomial(&[c(1.0, 0.0), c2, c3]))
}

/// `g/z` stays inside `|w - 1| < 0.45`, away from the logarithm's cut.
pub fn normalized_g() -> impl Strategy<Value = FunctionExpr> {
    prop_oneof![
        normalized_cubic(),
        complex_in(0.3).prop_map(|a| FunctionExpr::mul(
            FunctionExpr::var(),
            FunctionExpr::exp(FunctionExpr::mul(FunctionExpr::constant(a), FunctionExpr::var()))
        )),
    ]
}

/// Random admissible parameters satisfying the alpha condition and the
/// constant-h condition: `alpha` inside the disk centered at `m/(2a)` of
/// radius `m/(2a)`, and `c/h` inside the disk centered at `-m/(2 alpha)` of
/// radius `m/(2 |alpha|)`.
pub fn admissible(h: Complex64) -> impl Strategy<Value = CriterionParams> {
    (
        0.05f64..10.0,
        -10.0f64..10.0,
        0.05f64..10.0,
        0.0f64..0.99,
        0.0..std::f64::consts::TAU,
        0.0f64..0.99,
        0.0..std::f64::consts::TAU,
    )
        .prop_filter_map("c on [0, inf)", move |(a, b, m, r1, t1, r2, t2)| {
            let half = m / (2.0 * a);
            let alpha = half + Complex64::from_polar(half * r1, t1);
            let centre = -m / (2.0 * alpha);
            let c = h * (centre + Complex64::from_polar(r2 * m / (2.0 * alpha.norm()), t2));
            CriterionParams::new(alpha, c, Complex64::new(a, b), m, 0.0).ok()
        })
}

/// Truncated power series with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<Complex64>);

impl Series {
    pub fn zero(n: usize) -> Self {
        Series(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        for i in 0..n {
            for j in 0..n - i {
                out.0[i + j] += self.0[i] * other.0[j];
            }
        }
        out
    }

    /// `self^p` for `self[0] != 0`, principal power of the constant term.
    pub fn pow(&self, p: Complex64) -> Series {
        let a = &self.0;
        let n = a.len();
        let mut b = Series::zero(n);
        b.0[0] = a[0].powc(p);
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += (p * j as f64 - (k - j) as f64) * a[j] * b.0[k - j];
            }
            b.0[k] = acc / (k as f64 * a[0]);
        }
        b
    }

    /// Exponential of a series with zero constant term.
    pub fn exp(&self) -> Series {
        let a = &self.0;
        let n = a.len();
        let mut b = Series::zero(n);
        b.0[0] = Complex64::new(1.0, 0.0);
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += a[j] * b.0[k - j] * j as f64;
            }
            b.0[k] = acc / k as f64;
        }
        b
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// `[alpha * int_0^z u^(alpha - 1) phi(u)^(alpha - 1) psi(u) du]^(1/alpha)`
/// by term-wise integration, where `phi = g/z` and `psi` is the extra factor;
/// the power series are truncated at `phi.len()` terms.
pub fn operator_by_series(phi: &Series, psi: &Series, phi_exponent: Complex64, alpha: Complex64, z: Complex64) -> Complex64 {
    let integrand = phi.pow(phi_exponent).mul(psi);
    // int_0^z u^(alpha - 1 + n) du = z^(alpha + n)/(alpha + n); factor z^alpha out.
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    for (n, a) in integrand.0.iter().enumerate() {
        sum += a * zn * alpha / (alpha + n as f64);
        zn *= z;
    }
    z * sum.powc(1.0 / alpha)
}
