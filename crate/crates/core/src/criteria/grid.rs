//! Polar sampling of the disk and the refining maximizer.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible sampling radius.
pub const R_MAX_LIMIT: f64 = 1.0 - 1e-6;

/// Polar grid with radii `r_max * (i + 1) / n_radial` and angles
/// `2 pi j / n_angular`, enumerated radius-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiskGrid {
    pub n_radial: usize,
    pub n_angular: usize,
    pub r_max: f64,
    pub refinement_levels: usize,
}

impl Default for DiskGrid {
    fn default() -> Self {
        Self {
            n_radial: 64,
            n_angular: 128,
            r_max: 1.0 - 1e-3,
            refinement_levels: 3,
        }
    }
}

impl DiskGrid {
    pub fn new(n_radial: usize, n_angular: usize, r_max: f64, refinement_levels: usize) -> Self {
        Self {
            n_radial,
            n_angular,
            r_max,
            refinement_levels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_radial == 0 || self.n_angular == 0 {
            return Err(Error::InvalidParameter("grid sizes must be positive".into()));
        }
        if !(self.r_max > 0.0 && self.r_max <= R_MAX_LIMIT) {
            return Err(Error::InvalidParameter(format!(
                "r_max = {} must lie in (0, 1 - 1e-6]",
                self.r_max
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_radial * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r_max * (i + 1) as f64 / self.n_radial as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_angular as f64
    }

    /// Point number `index` in enumeration order.
    pub fn point(&self, index: usize) -> Complex64 {
        let (i, j) = (index / self.n_angular, index % self.n_angular);
        Complex64::from_polar(self.radius(i), self.angle(j))
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }
}

/// Evaluates `objective` at every point in parallel and returns the values
/// in input order, or the first error in that order.
pub fn evaluate_ordered<F>(points: &[Complex64], objective: &F) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    let values: Vec<Result<f64>> = points
        .par_iter()
        .map(|&z| {
            let v = objective(z)?;
            if v.is_nan() {
                return Err(Error::NonFinite {
                    z,
                    subexpr: "objective".into(),
                });
            }
            Ok(v)
        })
        .collect();
    values.into_iter().collect()
}

/// Whether `v` beats `best` by more than rounding; values within a few ulps
/// count as ties.
fn exceeds(v: f64, best: f64) -> bool {
    v > best + 4.0 * f64::EPSILON * best.abs()
}

/// First index of the largest value; later ties never win.
fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (k, &v) in values.iter().enumerate().skip(1) {
        if exceeds(v, best.1) {
            best = (k, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub value: f64,
    pub witness: Complex64,
    pub evaluations: usize,
}

/// Side length of the refinement sub-grid.
pub const REFINE_POINTS: usize = 8;

/// Maximizes a scalar field over the grid, then refines the winning cell
/// `refinement_levels` times on an 8x8 sub-grid.
pub fn disk_maximize<F>(objective: F, grid: &DiskGrid) -> Result<Maximum>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    grid.validate()?;
    let points: Vec<Complex64> = grid.points().collect();
    let values = evaluate_ordered(&points, &objective)?;
    let (k, value) = argmax(&values);
    let mut best = Maximum {
        value,
        witness: points[k],
        evaluations: points.len(),
    };

    let (mut r, mut theta) = (grid.radius(k / grid.n_angular), grid.angle(k % grid.n_angular));
    let mut dr = grid.r_max / grid.n_radial as f64;
    let mut dtheta = TAU / grid.n_angular as f64;
    let steps = (REFINE_POINTS - 1) as f64;
    for _ in 0..grid.refinement_levels {
        let r_lo = (r - dr).max(0.0);
        let r_hi = (r + dr).min(grid.r_max);
        let t_lo = theta - dtheta;
        let sub: Vec<(f64, f64)> = (0..REFINE_POINTS)
            .flat_map(|a| {
                let ra = r_lo + (r_hi - r_lo) * a as f64 / steps;
                (0..REFINE_POINTS).map(move |b| (ra, t_lo + 2.0 * dtheta * b as f64 / steps))
            })
            .collect();
        let sub_points: Vec<Complex64> = sub
            .iter()
            .map(|&(ra, tb)| Complex64::from_polar(ra, tb))
            .collect();
        let sub_values = evaluate_ordered(&sub_points, &objective)?;
        best.evaluations += sub_points.len();
        let (k, v) = argmax(&sub_values);
        if exceeds(v, best.value) {
            best.value = v;
            best.witness = sub_points[k];
            (r, theta) = sub[k];
        }
        dr = (r_hi - r_lo) / steps;
        dtheta = 2.0 * dtheta / steps;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_radius_major() {
        let g = DiskGrid::new(2, 4, 0.5, 0);
        let pts: Vec<_> = g.points().collect();
        assert_eq!(pts.len(), 8);
        assert!((pts[0] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((pts[1] - Complex64::new(0.0, 0.25)).norm() < 1e-15);
        assert!((pts[4] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(DiskGrid::default().validate().is_ok());
        assert!(DiskGrid::new(4, 4, 1.0, 0).validate().is_err());
        assert!(DiskGrid::new(0, 4, 0.5, 0).validate().is_err());
    }

    #[test]
    fn radial_objective_ties_break_to_lowest_index() {
        let grid = DiskGrid::new(16, 32, 0.999, 3);
        let m = disk_maximize(|z| Ok(z.norm_sqr()), &grid).unwrap();
        assert!((m.value - 0.999f64.powi(2)).abs() < 1e-12);
        assert_eq!(m.witness, grid.point(15 * 32));
    }

    #[test]
    fn real_part_peaks_on_positive_axis() {
        let grid = DiskGrid::new(16, 32, 0.999, 3);
        let m = disk_maximize(|z| Ok(z.re), &grid).unwrap();
        assert!((m.value - 0.999).abs() < 1e-12);
        assert!(m.witness.arg().abs() < 1e-12);
    }

    #[test]
    fn pole_growth_is_resolved() {
        // sup over |z| = r of |2z/(1 - z)| is 2r/(1 - r)
        let grid = DiskGrid::new(16, 32, 0.999, 3);
        let m = disk_maximize(|z| Ok((2.0 * z / (1.0 - z)).norm()), &grid).unwrap();
        let exact = 2.0 * 0.999 / 0.001;
        assert!((m.value - exact).abs() / exact < 0.02);
    }

    #[test]
    fn refinement_finds_off_grid_peak() {
        let peak = Complex64::from_polar(0.61, 0.37);
        let grid = DiskGrid::new(8, 16, 0.9, 4);
        let m = disk_maximize(|z| Ok(-(z - peak).norm()), &grid).unwrap();
        let coarse = DiskGrid::new(8, 16, 0.9, 0);
        let m0 = disk_maximize(|z| Ok(-(z - peak).norm()), &coarse).unwrap();
        assert!(m.value > m0.value);
        assert!((m.witness - peak).norm() < 0.01);
    }

    #[test]
    fn errors_surface_in_enumeration_order() {
        let grid = DiskGrid::new(4, 4, 0.8, 0);
        let err = disk_maximize(
            |z| {
                if z.norm() > 0.5 {
                    Err(Error::BranchPointHit { z })
                } else {
                    Ok(0.0)
                }
            },
            &grid,
        )
        .unwrap_err();
        assert_eq!(err, Error::BranchPointHit { z: grid.point(8) });
    }
}
