//! Configuration-driven runs: parse the functions, apply a preset, run a
//! criterion with its oracle cross-check, and export extension fields.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criteria::{
    check_becker, check_log_derivative_condition, check_main_t2, check_qc_t5, check_simplified_t21, check_t3,
    check_t6, preset_parameters, CriterionParams, CriterionReport, DiskGrid, LogDerivativeSource, CRITERION_IDS,
};
use crate::dsl::parse_expr;
use crate::error::{Error, Result};
use crate::expr::{eval, AnalyticTriple, ComplexMap, FunctionExpr, MapFn};
use crate::extension::{becker_extension, beltrami_estimate, AnnulusGrid, Chain, ChainFn, OperatorChain, T6Chain};
use crate::loewner::{qc_bound_k, QcBound};
use crate::operators::{operator_g_alpha, QuadratureConfig};
use crate::oracle::{run_oracle, OracleReport};

pub const TOOL: &str = "univalent";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ORACLE_PROBES: usize = 20;

fn default_g() -> String {
    "z".into()
}

fn default_h() -> String {
    "1".into()
}

fn default_check() -> String {
    "T2".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub f: String,
    #[serde(default = "default_g")]
    pub g: String,
    #[serde(default = "default_h")]
    pub h: String,
    /// Explicit `G` for the log-derivative criterion; the operator built
    /// from `f`, `g` is used otherwise.
    #[serde(default, rename = "G", skip_serializing_if = "Option::is_none")]
    pub big_g: Option<String>,
    #[serde(default)]
    pub params: CriterionParams,
    #[serde(default = "default_check")]
    pub check: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub grid: DiskGrid,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(f: &str) -> Self {
        Self {
            f: f.into(),
            g: default_g(),
            h: default_h(),
            big_g: None,
            params: CriterionParams::default(),
            check: default_check(),
            preset: None,
            grid: DiskGrid::default(),
            quadrature: QuadratureConfig::default(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }
}

/// Parsed functions, parameters and criterion after preset substitution.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub triple: AnalyticTriple,
    pub params: CriterionParams,
    pub criterion: String,
    pub log_source: Option<FunctionExpr>,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let f = parse_expr(&config.f)?;
    let g = parse_expr(&config.g)?;
    let h = parse_expr(&config.h)?;
    let log_source = config.big_g.as_deref().map(parse_expr).transpose()?;
    config.grid.validate()?;
    config.quadrature.validate()?;
    let (triple, params, criterion) = match &config.preset {
        Some(name) => {
            let app = preset_parameters(name)?.apply(f, g, h, config.params)?;
            (app.triple, app.params, app.criterion.to_string())
        }
        None => {
            if !CRITERION_IDS.contains(&config.check.as_str()) {
                return Err(Error::UnknownCriterion(config.check.clone()));
            }
            config.params.validate()?;
            (AnalyticTriple::new(f, g, h)?, config.params, config.check.clone())
        }
    };
    Ok(Prepared {
        triple,
        params,
        criterion,
        log_source,
    })
}

impl Prepared {
    fn real_alpha(&self) -> Result<f64> {
        let a = self.params.alpha;
        if a.im != 0.0 || !(a.re > 0.0) {
            return Err(Error::Precondition(format!("alpha = {a} must be real and > 0")));
        }
        Ok(a.re)
    }

    fn log_derivative_source(&self, q: &QuadratureConfig) -> LogDerivativeSource {
        match &self.log_source {
            Some(e) => LogDerivativeSource::Expr(e.clone()),
            None => LogDerivativeSource::Operator {
                f: self.triple.f.clone(),
                g: self.triple.g.clone(),
                alpha: self.params.alpha,
                quadrature: *q,
            },
        }
    }

    pub fn run_criterion(&self, grid: &DiskGrid, q: &QuadratureConfig) -> Result<CriterionReport> {
        let (t, p) = (&self.triple, &self.params);
        match self.criterion.as_str() {
            "T2" => check_main_t2(t, p, grid),
            "T21" => check_simplified_t21(t, p, grid),
            "T3" => check_t3(t, p, grid),
            "T5-qc" => check_qc_t5(t, p, grid),
            "becker" => check_becker(&t.f, p.m, grid),
            "T6" => check_t6(&t.f, &t.g, p.alpha, p.k, grid),
            "logderiv-Uk" => check_log_derivative_condition(&self.log_derivative_source(q), p.k, grid),
            other => Err(Error::UnknownCriterion(other.into())),
        }
    }

    /// The map whose univalence the criterion asserts.
    pub fn certified_map<'a>(&'a self, q: &'a QuadratureConfig) -> Box<dyn ComplexMap + 'a> {
        match (self.criterion.as_str(), &self.log_source) {
            ("becker", _) => Box::new(&self.triple.f),
            ("logderiv-Uk", Some(e)) => Box::new(e),
            _ => Box::new(MapFn(move |z: Complex64| {
                let v = operator_g_alpha(&self.triple.f, &self.triple.g, self.params.alpha, z, q)?;
                if !v.branch_ok {
                    return Err(Error::BranchTracking { z });
                }
                Ok(v.value)
            })),
        }
    }

    /// Expression form of the certified map when there is one.
    pub fn certified_expr(&self) -> Option<&FunctionExpr> {
        match (self.criterion.as_str(), &self.log_source) {
            ("becker", _) => Some(&self.triple.f),
            ("logderiv-Uk", Some(e)) => Some(e),
            _ if self.params.alpha == Complex64::new(1.0, 0.0) => Some(&self.triple.f),
            _ => None,
        }
    }

    /// The Loewner chain whose Becker extension the criterion controls.
    pub fn chain<'a>(&'a self, q: &'a QuadratureConfig) -> Result<Box<dyn Chain + 'a>> {
        match self.criterion.as_str() {
            "T6" => Ok(Box::new(T6Chain::new(&self.triple.f, self.triple.g.clone(), self.real_alpha()?, *q))),
            "logderiv-Uk" => match &self.log_source {
                Some(e) => Ok(Box::new(ChainFn(move |z: Complex64, t: f64| Ok(eval(e, z)? * t.exp())))),
                None => Err(Error::Precondition(
                    "extension for the sampled operator needs an explicit G".into(),
                )),
            },
            _ => Ok(Box::new(OperatorChain {
                triple: self.triple.clone(),
                params: self.params,
                quadrature: *q,
            })),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub criterion_ms: f64,
    pub oracle_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub criterion_id: String,
    pub params_used: CriterionParams,
    pub grid_used: DiskGrid,
    pub quadrature_used: QuadratureConfig,
    pub criterion: CriterionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qc_bound: Option<QcBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn satisfied(&self) -> bool {
        self.criterion.satisfied
    }
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs the configured criterion and the oracle on the map it certifies.
pub fn run_check(config: &RunConfig, timings: bool) -> Result<RunReport> {
    let prepared = prepare(config)?;
    let (grid, q) = (config.grid, config.quadrature);
    let start = Instant::now();
    let criterion = prepared.run_criterion(&grid, &q)?;
    let criterion_ms = millis(start);

    let start = Instant::now();
    let map = prepared.certified_map(&q);
    let oracle_grid = DiskGrid {
        refinement_levels: 0,
        ..grid
    };
    let (oracle, oracle_error) =
        match run_oracle(map.as_ref(), prepared.certified_expr(), &oracle_grid, ORACLE_PROBES, config.seed) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let oracle_ms = millis(start);

    Ok(RunReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: config.clone(),
        criterion_id: prepared.criterion.clone(),
        params_used: prepared.params,
        grid_used: grid,
        quadrature_used: q,
        qc_bound: criterion.qc_bound,
        criterion,
        oracle,
        oracle_error,
        timings: timings.then_some(Timings { criterion_ms, oracle_ms }),
    })
}

/// Oracle only, on the map the configured criterion would certify.
pub fn run_oracle_only(config: &RunConfig) -> Result<OracleReport> {
    let prepared = prepare(config)?;
    let q = config.quadrature;
    let grid = DiskGrid {
        refinement_levels: 0,
        ..config.grid
    };
    let map = prepared.certified_map(&q);
    let report = run_oracle(map.as_ref(), prepared.certified_expr(), &grid, ORACLE_PROBES, config.seed);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub re_f: f64,
    pub im_f: f64,
    pub abs_mu: f64,
}

/// Resolution of an exported field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub interior: DiskGrid,
    pub annulus: AnnulusGrid,
}

impl FieldSpec {
    /// `n` radii and `4n` angles inside and outside.
    pub fn with_resolution(n: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("resolution must be positive".into()));
        }
        let spec = Self {
            interior: DiskGrid::new(n, 4 * n, 1.0 - 1e-3, 0),
            annulus: AnnulusGrid {
                n_radial: n,
                n_angular: 4 * n,
                r_min,
                r_max,
                ..AnnulusGrid::default()
            },
        };
        spec.interior.validate()?;
        spec.annulus.validate()?;
        Ok(spec)
    }
}

/// Values of the extension on the interior grid (where it is analytic and
/// `mu = 0`) followed by Beltrami samples on the annulus.
pub fn extension_field(chain: &(dyn Chain + '_), spec: &FieldSpec) -> Result<Vec<FieldRow>> {
    use rayon::prelude::*;
    let interior: Vec<Complex64> = spec.interior.points().collect();
    let inside = interior
        .par_iter()
        .map(|&z| {
            let v = becker_extension(chain, z)?;
            Ok(FieldRow {
                x: z.re,
                y: z.im,
                re_f: v.re,
                im_f: v.im,
                abs_mu: 0.0,
            })
        })
        .collect::<Vec<Result<FieldRow>>>();
    let map = MapFn(|z: Complex64| becker_extension(chain, z));
    let outside = (0..spec.annulus.len())
        .into_par_iter()
        .map(|k| {
            let s = beltrami_estimate(&map, spec.annulus.point(k), spec.annulus.step)?;
            Ok(FieldRow {
                x: s.z.re,
                y: s.z.im,
                re_f: s.f.re,
                im_f: s.f.im,
                abs_mu: s.abs_mu,
            })
        })
        .collect::<Vec<Result<FieldRow>>>();
    inside.into_iter().chain(outside).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KTableRow {
    pub s: Complex64,
    pub k: f64,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    #[serde(rename = "K")]
    pub k_bound: f64,
}

pub fn ktable(s_values: &[Complex64], k_values: &[f64]) -> Result<Vec<KTableRow>> {
    let mut rows = Vec::with_capacity(s_values.len() * k_values.len());
    for &s in s_values {
        for &k in k_values {
            let b = qc_bound_k(s, k)?;
            rows.push(KTableRow {
                s,
                k,
                l1: b.l1,
                l2: b.l2,
                l3: b.l3,
                k_bound: b.k_bound,
            });
        }
    }
    Ok(rows)
}
