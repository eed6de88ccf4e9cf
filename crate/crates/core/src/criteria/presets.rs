//! Named specializations of the general criteria that recover classical
//! univalence results.

use num_complex::Complex64;
use serde::Serialize;

use super::CriterionParams;
use crate::error::{Error, Result};
use crate::expr::{eval, AnalyticTriple, FunctionExpr};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

const NAMES: [&str; 6] = [
    "ruscheweyh",
    "moldoveanu-pascu-remark",
    "singh-chichra",
    "lewandowski",
    "ovesea",
    "becker",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    /// Criterion the preset routes to.
    pub criterion: &'static str,
    pub summary: &'static str,
}

#[derive(Debug, Clone)]
pub struct PresetApplication {
    pub triple: AnalyticTriple,
    pub params: CriterionParams,
    pub criterion: &'static str,
}

pub fn preset_parameters(name: &str) -> Result<Preset> {
    let (criterion, summary) = match name {
        "ruscheweyh" => ("T3", "m = 2, h = 1, g = f, alpha = 1/s"),
        "moldoveanu-pascu-remark" => ("T3", "m = 2, h = 1, g = z, Re s = 1, c = -1/alpha"),
        "singh-chichra" => ("T3", "h replaced by 1/h with h(0) = 1, g = f, alpha = 1/s, m = 2"),
        "lewandowski" => ("T3", "g = f, s = alpha = 1, c = -1, m = 2, h = (k + 1)/2 with k(0) = 1"),
        "ovesea" => ("T2", "m = 2, h(0) = 1"),
        "becker" => ("becker", "s = alpha = 1, h = -c"),
        _ => return Err(Error::UnknownPreset(name.into())),
    };
    let name = NAMES.iter().find(|n| **n == name).copied().expect("listed preset");
    Ok(Preset {
        name,
        criterion,
        summary,
    })
}

fn require_unit_at_origin(role: &str, e: &FunctionExpr) -> Result<()> {
    let v = eval(e, Complex64::new(0.0, 0.0))?;
    if (v - ONE).norm() > 1e-12 {
        return Err(Error::Precondition(format!("{role}(0) = {v} must equal 1")));
    }
    Ok(())
}

impl Preset {
    /// Substitutes into user-supplied `f`, `g`, `h` and parameters. For
    /// `lewandowski` the supplied `h` plays the role of the positive-real-part
    /// function `k`.
    pub fn apply(
        &self,
        f: FunctionExpr,
        g: FunctionExpr,
        h: FunctionExpr,
        mut p: CriterionParams,
    ) -> Result<PresetApplication> {
        let one = FunctionExpr::real(1.0);
        let (g, h) = match self.name {
            "ruscheweyh" => {
                p.m = 2.0;
                p.alpha = ONE / p.s;
                (f.clone(), one)
            }
            "moldoveanu-pascu-remark" => {
                p.m = 2.0;
                p.s = Complex64::new(1.0, p.s.im);
                p.c = -ONE / p.alpha;
                (FunctionExpr::var(), one)
            }
            "singh-chichra" => {
                require_unit_at_origin("h", &h)?;
                p.m = 2.0;
                p.alpha = ONE / p.s;
                (f.clone(), FunctionExpr::div(one, h).folded())
            }
            "lewandowski" => {
                require_unit_at_origin("k", &h)?;
                p.m = 2.0;
                p.s = ONE;
                p.alpha = ONE;
                p.c = -ONE;
                let shifted = FunctionExpr::div(FunctionExpr::add(h, one), FunctionExpr::real(2.0));
                (f.clone(), shifted.folded())
            }
            "ovesea" => {
                require_unit_at_origin("h", &h)?;
                p.m = 2.0;
                (g, h)
            }
            "becker" => {
                p.s = ONE;
                p.alpha = ONE;
                (FunctionExpr::var(), FunctionExpr::constant(-p.c))
            }
            other => return Err(Error::UnknownPreset(other.into())),
        };
        p.validate()?;
        Ok(PresetApplication {
            triple: AnalyticTriple::new(f, g, h)?,
            params: p,
            criterion: self.criterion,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{check_becker, check_t3, DiskGrid};
    use crate::dsl::parse;

    fn grid() -> DiskGrid {
        DiskGrid::new(16, 32, 0.999, 2)
    }

    #[test]
    fn all_names_resolve_and_unknown_is_rejected() {
        for n in preset_names() {
            assert_eq!(preset_parameters(n).unwrap().name, *n);
        }
        assert!(matches!(preset_parameters("bieberbach"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn ruscheweyh_then_t3() {
        let z = parse("z").unwrap();
        let app = preset_parameters("ruscheweyh")
            .unwrap()
            .apply(z.clone(), z.clone(), parse("5").unwrap(), CriterionParams::default())
            .unwrap();
        assert_eq!(app.criterion, "T3");
        assert_eq!(app.params.alpha, ONE);
        assert!(check_t3(&app.triple, &app.params, &grid()).unwrap().satisfied);
    }

    #[test]
    fn becker_routes_to_becker_check() {
        let z = parse("z").unwrap();
        let app = preset_parameters("becker")
            .unwrap()
            .apply(z.clone(), z.clone(), z.clone(), CriterionParams::default())
            .unwrap();
        assert_eq!(app.criterion, "becker");
        assert_eq!(app.triple.h0, ONE);
        assert!(check_becker(&app.triple.f, app.params.m, &grid()).unwrap().satisfied);
    }

    #[test]
    fn lewandowski_with_constant_k() {
        let z = parse("z").unwrap();
        let app = preset_parameters("lewandowski")
            .unwrap()
            .apply(z.clone(), z.clone(), parse("1").unwrap(), CriterionParams::default())
            .unwrap();
        assert_eq!(app.triple.h.as_const(), Some(ONE));
        assert_eq!(app.triple.h0, ONE);
        let bad = preset_parameters("lewandowski")
            .unwrap()
            .apply(z.clone(), z.clone(), parse("2").unwrap(), CriterionParams::default());
        assert!(matches!(bad, Err(Error::Precondition(_))));
    }

    #[test]
    fn singh_chichra_inverts_h() {
        let z = parse("z").unwrap();
        let app = preset_parameters("singh-chichra")
            .unwrap()
            .apply(z.clone(), z.clone(), parse("1 + z").unwrap(), CriterionParams::default())
            .unwrap();
        let v = app.triple.h.eval(Complex64::new(0.5, 0.0)).unwrap();
        assert!((v - 1.0 / 1.5).norm() < 1e-15);
    }

    #[test]
    fn moldoveanu_pascu_sets_c_from_alpha() {
        let z = parse("z").unwrap();
        let p = CriterionParams {
            alpha: Complex64::new(0.5, 0.0),
            s: Complex64::new(3.0, 0.5),
            ..CriterionParams::default()
        };
        let app = preset_parameters("moldoveanu-pascu-remark")
            .unwrap()
            .apply(z.clone(), z.clone(), z.clone(), p)
            .unwrap();
        assert_eq!(app.params.c, Complex64::new(-2.0, 0.0));
        assert_eq!(app.params.s, Complex64::new(1.0, 0.5));
    }
}
