//! Criterion-free univalence evidence: grid injectivity, argument-principle
//! preimage counts and derivative zeros. Passing means "no counterexample
//! found at this resolution".

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::DiskGrid;
use crate::error::{Error, Result};
use crate::expr::{differentiate, ComplexMap, FunctionExpr};
use crate::operators::wrapped_angle;

/// Grids larger than this are scanned with spatial buckets instead of all pairs.
pub const ALL_PAIRS_LIMIT: usize = 10_000;
pub const DEFAULT_COLLISION_TOL: f64 = 1e-6;
pub const DERIVATIVE_FLAG: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub injective_on_grid: bool,
    pub collision_pair: Option<(Complex64, Complex64)>,
    pub min_separation_ratio: f64,
    pub points: usize,
    pub tol: f64,
    /// `"all-pairs"` or `"bucketed"`.
    pub method: String,
}

fn map_values<M: ComplexMap + ?Sized>(f: &M, points: &[Complex64]) -> Result<Vec<Complex64>> {
    points.par_iter().map(|&z| f.value(z)).collect::<Vec<_>>().into_iter().collect()
}

#[derive(Clone, Copy)]
struct PairMin {
    ratio: f64,
    i: usize,
    j: usize,
}

impl PairMin {
    const NONE: PairMin = PairMin {
        ratio: f64::INFINITY,
        i: usize::MAX,
        j: usize::MAX,
    };

    /// Smaller ratio wins; ties go to the lexicographically first pair.
    fn better(self, other: PairMin) -> PairMin {
        if other.ratio < self.ratio || (other.ratio == self.ratio && (other.i, other.j) < (self.i, self.j)) {
            other
        } else {
            self
        }
    }
}

fn ratio(z: &[Complex64], w: &[Complex64], i: usize, j: usize) -> PairMin {
    PairMin {
        ratio: (w[i] - w[j]).norm() / (z[i] - z[j]).norm(),
        i: i.min(j),
        j: i.max(j),
    }
}

fn all_pairs(z: &[Complex64], w: &[Complex64]) -> PairMin {
    (0..z.len())
        .into_par_iter()
        .map(|i| {
            ((i + 1)..z.len())
                .map(|j| ratio(z, w, i, j))
                .fold(PairMin::NONE, PairMin::better)
        })
        .reduce(|| PairMin::NONE, PairMin::better)
}

/// Pairs whose images share a bucket of side `cell` or a neighbouring one,
/// plus grid neighbours in radius and angle.
fn bucketed(z: &[Complex64], w: &[Complex64], grid: &DiskGrid, cell: f64) -> PairMin {
    let key = |v: Complex64| ((v.re / cell).floor() as i64, (v.im / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, v) in w.iter().enumerate() {
        buckets.entry(key(*v)).or_default().push(k);
    }
    let close = (0..w.len())
        .into_par_iter()
        .map(|i| {
            let (bx, by) = key(w[i]);
            let mut best = PairMin::NONE;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = buckets.get(&(bx + dx, by + dy)) {
                        for &j in ids.iter().filter(|&&j| j > i) {
                            best = best.better(ratio(z, w, i, j));
                        }
                    }
                }
            }
            best
        })
        .reduce(|| PairMin::NONE, PairMin::better);
    let na = grid.n_angular;
    let adjacent = (0..w.len())
        .into_par_iter()
        .map(|i| {
            let (r, a) = (i / na, i % na);
            let mut best = ratio(z, w, i, r * na + (a + 1) % na);
            if r + 1 < grid.n_radial {
                best = best.better(ratio(z, w, i, i + na));
            }
            best
        })
        .reduce(|| PairMin::NONE, PairMin::better);
    close.better(adjacent)
}

/// Flags a collision when `|f(z1) - f(z2)| < tol |z1 - z2|` for distinct
/// grid points.
pub fn injectivity_test<M: ComplexMap + ?Sized>(f: &M, grid: &DiskGrid, tol: f64) -> Result<InjectivityReport> {
    grid.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    let z: Vec<Complex64> = grid.points().collect();
    let w = map_values(f, &z)?;
    let (best, method) = if z.len() <= ALL_PAIRS_LIMIT {
        (all_pairs(&z, &w), "all-pairs")
    } else {
        // a colliding pair has |f(z1) - f(z2)| < 2 tol, so it shares or
        // neighbours a bucket of side 2 tol
        (bucketed(&z, &w, grid, 2.0 * tol), "bucketed")
    };
    let collided = best.ratio < tol;
    Ok(InjectivityReport {
        injective_on_grid: !collided,
        collision_pair: collided.then(|| (z[best.i], z[best.j])),
        min_separation_ratio: best.ratio,
        points: z.len(),
        tol,
        method: method.into(),
    })
}

/// Winding number of a closed polygon around `w`, or `None` when `w` is a
/// vertex.
pub fn polygon_winding(polygon: &[Complex64], w: Complex64) -> Option<i64> {
    let mut total = 0.0;
    for k in 0..polygon.len() {
        let a = polygon[k] - w;
        let b = polygon[(k + 1) % polygon.len()] - w;
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return None;
        }
        total += wrapped_angle(b.arg() - a.arg());
    }
    Some((total / TAU).round() as i64)
}

const MAX_DOUBLINGS: usize = 12;
const MAX_PERTURBATIONS: usize = 5;

/// Number of preimages of `w0` in `|z| < r` by the argument principle.
pub fn preimage_count<M: ComplexMap + ?Sized>(f: &M, w0: Complex64, r: f64, n_nodes: usize) -> Result<i64> {
    if n_nodes < 3 || !(r > 0.0) {
        return Err(Error::InvalidParameter("preimage_count needs r > 0 and at least 3 nodes".into()));
    }
    let mut radius = r;
    for attempt in 0..=MAX_PERTURBATIONS {
        match count_on_circle(f, w0, radius, n_nodes) {
            Err(Error::OnCurve { .. }) if attempt < MAX_PERTURBATIONS => radius += 1e-4,
            other => return other,
        }
    }
    Err(Error::OnCurve { r: radius })
}

fn count_on_circle<M: ComplexMap + ?Sized>(f: &M, w0: Complex64, r: f64, n_nodes: usize) -> Result<i64> {
    let mut n = n_nodes;
    for _ in 0..=MAX_DOUBLINGS {
        let pts: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(r, TAU * j as f64 / n as f64)).collect();
        let vals = map_values(f, &pts)?;
        let scale = 1.0 + w0.norm();
        if vals.iter().any(|v| (v - w0).norm() <= 1e-14 * scale) {
            return Err(Error::OnCurve { r });
        }
        let mut total = 0.0;
        let mut resolved = true;
        for k in 0..n {
            let d = wrapped_angle((vals[(k + 1) % n] - w0).arg() - (vals[k] - w0).arg());
            if d.abs() >= FRAC_PI_2 {
                resolved = false;
                break;
            }
            total += d;
        }
        if resolved {
            return Ok((total / TAU).round() as i64);
        }
        n *= 2;
    }
    Err(Error::UnresolvedWinding { r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub min_abs_derivative: f64,
    pub witness: Complex64,
    pub flagged: bool,
}

/// Minimum of `|f'|` over the origin and the grid.
pub fn derivative_nonvanishing(f: &FunctionExpr, grid: &DiskGrid) -> Result<DerivativeReport> {
    grid.validate()?;
    let d = differentiate(f);
    let points: Vec<Complex64> = std::iter::once(Complex64::new(0.0, 0.0)).chain(grid.points()).collect();
    let values = map_values(&d, &points)?;
    let mut best = (0, values[0].norm());
    for (k, v) in values.iter().enumerate().skip(1) {
        if v.norm() < best.1 {
            best = (k, v.norm());
        }
    }
    Ok(DerivativeReport {
        min_abs_derivative: best.1,
        witness: points[best.0],
        flagged: best.1 < DERIVATIVE_FLAG,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub w0: Complex64,
    pub count: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// `"no-counterexample-at-resolution"` or `"counterexample"`.
    pub verdict: String,
    pub injectivity: InjectivityReport,
    pub probe_radius: f64,
    pub probe_nodes: usize,
    pub probes: Vec<ProbeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative: Option<DerivativeReport>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.injectivity.injective_on_grid
            && self.probes.iter().all(|p| p.count == 0 || p.count == 1)
            && !self.derivative.as_ref().is_some_and(|d| d.flagged)
    }
}

pub const PROBE_RADIUS: f64 = 0.9;
pub const PROBE_NODES: usize = 1024;

/// Injectivity on `grid`, preimage counts for `probes` targets `f(z)` with
/// `z` drawn uniformly from `|z| < 0.85` and, for expressions, the derivative
/// scan. The draw is seeded, so reports are reproducible.
pub fn run_oracle<M: ComplexMap + ?Sized>(
    f: &M,
    expr: Option<&FunctionExpr>,
    grid: &DiskGrid,
    probes: usize,
    seed: u64,
) -> Result<OracleReport> {
    let injectivity = injectivity_test(f, grid, DEFAULT_COLLISION_TOL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets: Vec<Complex64> = (0..probes)
        .map(|_| {
            let r = 0.85 * rng.gen::<f64>().sqrt();
            Complex64::from_polar(r, TAU * rng.gen::<f64>())
        })
        .collect();
    let probes = targets
        .iter()
        .map(|&z| {
            let w0 = f.value(z)?;
            Ok(ProbeResult {
                w0,
                count: preimage_count(f, w0, PROBE_RADIUS, PROBE_NODES)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let derivative = expr.map(|e| derivative_nonvanishing(e, grid)).transpose()?;
    let mut report = OracleReport {
        verdict: String::new(),
        injectivity,
        probe_radius: PROBE_RADIUS,
        probe_nodes: PROBE_NODES,
        probes,
        derivative,
    };
    report.verdict = if report.passed() {
        "no-counterexample-at-resolution"
    } else {
        "counterexample"
    }
    .into();
    Ok(report)
}
