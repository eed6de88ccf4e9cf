use std::f64::consts::PI;
use std::fmt::Write;

use num_complex::Complex64;
use univalent_core::expr::MapFn;
use univalent_core::extension::{becker_extension, beltrami_estimate, Chain};
use univalent_core::report::{FieldRow, KTableRow};

pub const FIELD_HEADER: &str = "x,y,reF,imF,absMu";
pub const KTABLE_HEADER: &str = "s_re,s_im,k,l1,l2,l3,K";

pub fn csv(rows: &[FieldRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.x, r.y, r.re_f, r.im_f, r.abs_mu);
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn ktable_csv(rows: &[KTableRow]) -> String {
    let mut out = String::from(KTABLE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.s.re,
            r.s.im,
            r.k,
            opt(r.l1),
            opt(r.l2),
            opt(r.l3),
            r.k_bound
        );
    }
    out
}

/// Full-value HSV to 8-bit RGB; `h` in turns.
fn hsv(h: f64, s: f64) -> [u8; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let frac = h6 - sector;
    let (p, q, t) = (1.0 - s, 1.0 - s * frac, 1.0 - s * (1.0 - frac));
    let (r, g, b) = match sector as u8 {
        0 => (1.0, t, p),
        1 => (q, 1.0, p),
        2 => (p, 1.0, t),
        3 => (p, q, 1.0),
        4 => (t, p, 1.0),
        _ => (1.0, p, q),
    };
    let byte = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    [byte(r), byte(g), byte(b)]
}

/// Binary P6 raster of `[-extent, extent]^2`: hue is `arg F`, saturation is
/// `|mu|` clamped to `[0, 1]`. Pixels where evaluation fails are black.
pub fn ppm(chain: &(dyn Chain + '_), size: usize, extent: f64, step: f64) -> Vec<u8> {
    use rayon::prelude::*;
    let map = MapFn(|z: Complex64| becker_extension(chain, z));
    let pixel = |index: usize| -> [u8; 3] {
        let (row, col) = (index / size, index % size);
        let coord = |i: usize| extent * (2.0 * (i as f64 + 0.5) / size as f64 - 1.0);
        let z = Complex64::new(coord(col), -coord(row));
        let r = z.norm();
        let value = if r < 1.0 {
            becker_extension(chain, z).map(|f| (f, 0.0))
        } else {
            // Beltrami samples need a full stencil outside the circle.
            let zs = if r > 1.0 + 3.0 * step { z } else { z * ((1.0 + 3.0 * step) / r) };
            beltrami_estimate(&map, zs, step).and_then(|s| Ok((becker_extension(chain, z)?, s.abs_mu)))
        };
        match value {
            Ok((f, mu)) if f.is_finite() && mu.is_finite() => hsv((f.arg() + PI) / (2.0 * PI), mu.clamp(0.0, 1.0)),
            _ => [0, 0, 0],
        }
    };
    let pixels: Vec<[u8; 3]> = (0..size * size).into_par_iter().map(pixel).collect();
    let mut out = format!("P6\n{size} {size}\n255\n").into_bytes();
    out.extend(pixels.iter().flatten());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv(0.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv(1.0 / 3.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv(2.0 / 3.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv(0.4, 0.0), [255, 255, 255]);
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = [FieldRow {
            x: 0.5,
            y: -1.0,
            re_f: 0.5,
            im_f: -1.0,
            abs_mu: 0.0,
        }];
        assert_eq!(csv(&rows), "x,y,reF,imF,absMu\n0.5,-1,0.5,-1,0\n");
    }
}
