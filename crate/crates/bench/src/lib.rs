//! Fixed workloads shared by the benchmarks.

use num_complex::Complex64;
use univalent_core::criteria::DiskGrid;
use univalent_core::dsl::parse;
use univalent_core::FunctionExpr;

pub fn expr(src: &str) -> FunctionExpr {
    parse(src).expect("fixture expressions parse")
}

/// Evaluation points spread over `|z| < 0.95`.
pub fn sample_points(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            Complex64::from_polar(0.95 * t.sqrt(), 2.399963 * k as f64)
        })
        .collect()
}

pub fn small_grid() -> DiskGrid {
    DiskGrid::new(16, 32, 0.999, 1)
}

pub fn medium_grid() -> DiskGrid {
    DiskGrid::new(32, 64, 0.999, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_stay_inside() {
        let pts = sample_points(500);
        assert_eq!(pts.len(), 500);
        assert!(pts.iter().all(|z| z.norm() < 0.95));
    }

    #[test]
    fn grids_are_valid() {
        small_grid().validate().unwrap();
        medium_grid().validate().unwrap();
    }
}
