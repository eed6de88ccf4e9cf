mod field;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;
use univalent_core::criteria::{preset_names, preset_parameters};
use univalent_core::dsl::parse_expr;
use univalent_core::expr::eval;
use univalent_core::report::{
    extension_field, ktable, prepare, run_check, run_oracle_only, FieldSpec, RunConfig, TOOL, VERSION,
};
use univalent_core::Error;

const SATISFIED: u8 = 0;
const UNSATISFIED: u8 = 1;
const INPUT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "univalent", version, about = "Univalence criteria, Loewner chains and quasiconformal extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured criterion and the oracle cross-check.
    Check(CheckArgs),
    /// Export the quasiconformal extension field as CSV and optionally PPM.
    Extend(ExtendArgs),
    /// Tabulate the dilatation bound over lists of s and k.
    Ktable(KtableArgs),
    /// Run only the injectivity oracle on the configured map.
    Oracle(OracleArgs),
    /// List preset names with the criterion each one routes to.
    PresetList,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Radial by angular grid size, e.g. 64x128.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the timings block out of the report.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct ExtendArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Radii and angles per region are `n` and `4n`.
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    /// Inner and outer radius of the exterior annulus.
    #[arg(long, value_parser = parse_annulus, default_value = "1.001,10")]
    annulus: (f64, f64),
    #[arg(long)]
    ppm: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    ppm_size: usize,
    /// Half-width of the square rendered into the PPM.
    #[arg(long, default_value_t = 2.0)]
    ppm_extent: f64,
    /// Export even when the criterion fails.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct KtableArgs {
    /// Comma-separated complex constants in the expression syntax, e.g. `1,2,1+i`.
    #[arg(long)]
    s: String,
    /// Comma-separated values in [0, 1).
    #[arg(long)]
    k: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text.split_once(['x', 'X']).ok_or("expected NxM")?;
    let n = a.trim().parse().map_err(|e| format!("{e}"))?;
    let m = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((n, m))
}

fn parse_annulus(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text.split_once(',').ok_or("expected RMIN,RMAX")?;
    let lo = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

/// Failures that map to exit code 2.
struct InputError {
    error: anyhow::Error,
    core: Option<Error>,
}

impl From<anyhow::Error> for InputError {
    fn from(error: anyhow::Error) -> Self {
        Self { error, core: None }
    }
}

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        Self {
            error: anyhow!(e.clone()),
            core: Some(e),
        }
    }
}

impl InputError {
    fn to_json(&self) -> serde_json::Value {
        let diagnostic = match &self.core {
            Some(Error::Parse(d)) => serde_json::to_value(d).ok(),
            _ => None,
        };
        json!({
            "tool": TOOL,
            "version": VERSION,
            "error": {
                "message": format!("{:#}", self.error),
                "diagnostic": diagnostic,
            },
        })
    }
}

type Outcome = Result<u8, InputError>;

fn load_config(args: &ConfigArgs) -> Result<RunConfig, InputError> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = RunConfig::from_json(&text)?;
    if let Some((n, m)) = args.grid {
        config.grid.n_radial = n;
        config.grid.n_angular = m;
    }
    if let Some(r) = args.rmax {
        config.grid.r_max = r;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit_json(value: &impl serde::Serialize, out: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => io::write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_check(args: &CheckArgs) -> Outcome {
    let config = load_config(&args.config)?;
    let report = run_check(&config, !args.no_timings)?;
    emit_json(&report, args.out.as_deref())?;
    Ok(if report.satisfied() { SATISFIED } else { UNSATISFIED })
}

fn cmd_extend(args: &ExtendArgs) -> Outcome {
    let config = load_config(&args.config)?;
    let spec = FieldSpec::with_resolution(args.resolution, args.annulus.0, args.annulus.1)?;
    if args.ppm.is_some() && args.ppm_size == 0 {
        return Err(anyhow!("ppm size must be positive").into());
    }
    let report = run_check(&config, false)?;
    if !report.satisfied() && !args.force {
        emit_json(&report, None)?;
        eprintln!("criterion {} not satisfied; pass --force to export anyway", report.criterion_id);
        return Ok(UNSATISFIED);
    }
    let prepared = prepare(&config)?;
    let chain = prepared.chain(&config.quadrature)?;
    let rows = extension_field(chain.as_ref(), &spec)?;
    io::write_atomic(&args.out, field::csv(&rows).as_bytes())?;
    if let Some(path) = &args.ppm {
        let image = field::ppm(chain.as_ref(), args.ppm_size, args.ppm_extent, spec.annulus.step);
        io::write_atomic(path, &image)?;
    }
    Ok(SATISFIED)
}

fn parse_constant(text: &str) -> Result<Complex64, InputError> {
    let e = parse_expr(text)?;
    let (a, b) = (eval(&e, Complex64::new(0.0, 0.0))?, eval(&e, Complex64::new(0.5, 0.25))?);
    if a != b {
        return Err(anyhow!("`{text}` is not a constant").into());
    }
    Ok(a)
}

fn cmd_ktable(args: &KtableArgs) -> Outcome {
    let s: Vec<Complex64> = args.s.split(',').map(|t| parse_constant(t.trim())).collect::<Result<_, _>>()?;
    let k: Vec<f64> = args
        .k
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("k value `{t}`")))
        .collect::<anyhow::Result<_>>()?;
    let rows = ktable(&s, &k)?;
    let text = field::ktable_csv(&rows);
    match &args.out {
        Some(path) => io::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(SATISFIED)
}

fn cmd_oracle(args: &OracleArgs) -> Outcome {
    let config = load_config(&args.config)?;
    let report = run_oracle_only(&config)?;
    emit_json(&report, args.out.as_deref())?;
    Ok(if report.passed() { SATISFIED } else { UNSATISFIED })
}

fn cmd_preset_list() -> Outcome {
    for name in preset_names() {
        let p = preset_parameters(name)?;
        println!("{}\t{}\t{}", p.name, p.criterion, p.summary);
    }
    Ok(SATISFIED)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, out) = match &cli.command {
        Command::Check(a) => (cmd_check(a), a.out.as_deref()),
        Command::Extend(a) => (cmd_extend(a), None),
        Command::Ktable(a) => (cmd_ktable(a), None),
        Command::Oracle(a) => (cmd_oracle(a), a.out.as_deref()),
        Command::PresetList => (cmd_preset_list(), None),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let report = e.to_json();
            eprintln!("error: {:#}", e.error);
            if let Some(Error::Parse(d)) = &e.core {
                eprintln!("{}", serde_json::to_string(d).unwrap_or_default());
            }
            if let Some(path) = out {
                let _ = emit_json(&report, Some(path));
            }
            ExitCode::from(INPUT_ERROR)
        }
    }
}
