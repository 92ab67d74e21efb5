use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bnftrace::hypcalc::DEFAULT_POLE_TOL;
use bnftrace::series::{FieldKind, Orders};
use clap::{Args, ValueEnum};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Rational,
    Float,
}

#[derive(Args, Debug)]
pub struct ConfigArgs {
    /// Coefficient field; defaults to the field tag of the input document.
    #[arg(long, value_enum, global = true)]
    backend: Option<Backend>,
    /// Mantissa bits of the float backend (only 53 is available).
    #[arg(long, default_value_t = 53, global = true)]
    float_precision: u32,
    /// Truncation orders as IOTA,Z,H.
    #[arg(long, value_parser = parse_orders, global = true)]
    orders: Option<Orders>,
    /// Number of trace powers; defaults to the number recovery needs.
    #[arg(long, global = true)]
    kmax: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_POLE_TOL, global = true)]
    tol_pole: f64,
    #[arg(long, default_value_t = 1e-9, global = true)]
    tol_resonance: f64,
    /// Largest accepted condition number of a recovery stage.
    #[arg(long, default_value_t = 1e8, global = true)]
    tol_conditioning: f64,
    /// Relative residual and round-trip tolerance (float backend).
    #[arg(long, default_value_t = 1e-8, global = true)]
    tol_residual: f64,
    /// Seed for generated fixtures.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Output file for the primary JSON document (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output file for the JSON report.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Evaluate trace powers in parallel.
    #[arg(long, global = true)]
    parallel: bool,
}

fn parse_orders(s: &str) -> Result<Orders, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected IOTA,Z,H, got `{s}`"));
    }
    let p = |t: &str| t.parse::<u32>().map_err(|e| format!("bad order `{t}`: {e}"));
    Ok(Orders::new(p(parts[0])?, p(parts[1])?, p(parts[2])?))
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub backend: Option<Backend>,
    pub orders: Option<Orders>,
    pub k_max: Option<u32>,
    pub tol_pole: f64,
    pub tol_resonance: f64,
    pub tol_conditioning: f64,
    pub tol_residual: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub parallel: bool,
}

impl ConfigArgs {
    pub fn validate(self) -> Result<RunConfig, Failure> {
        if self.float_precision != 53 {
            return Err(Failure::Schema(format!(
                "float precision {} bits is not available; the float backend uses 53",
                self.float_precision
            )));
        }
        for (name, v) in [
            ("--tol-pole", self.tol_pole),
            ("--tol-resonance", self.tol_resonance),
            ("--tol-conditioning", self.tol_conditioning),
            ("--tol-residual", self.tol_residual),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Schema(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.kmax == Some(0) {
            return Err(Failure::Schema("--kmax must be at least 1".into()));
        }
        Ok(RunConfig {
            backend: self.backend,
            orders: self.orders,
            k_max: self.kmax,
            tol_pole: self.tol_pole,
            tol_resonance: self.tol_resonance,
            tol_conditioning: self.tol_conditioning,
            tol_residual: self.tol_residual,
            seed: self.seed,
            out: self.out,
            report: self.report,
            parallel: self.parallel,
        })
    }
}

impl RunConfig {
    /// The requested backend, or the one named by the document's `field` tag.
    pub fn backend_for(&self, text: &str, default: FieldKind) -> Result<Backend, Failure> {
        if let Some(b) = self.backend {
            return Ok(b);
        }
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Failure::Schema(format!("malformed JSON: {e}")))?;
        let field = match v.get("field") {
            None => default,
            Some(serde_json::Value::String(s)) => s.parse().map_err(|e| Failure::Schema(format!("{e}")))?,
            Some(other) => return Err(Failure::Schema(format!("field tag must be a string, got {other}"))),
        };
        Ok(match field {
            FieldKind::Rational => Backend::Rational,
            FieldKind::Float => Backend::Float,
        })
    }

    /// Writes the primary output to `--out` or stdout.
    pub fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(p) => write_file(p, text),
            None => {
                let mut out = std::io::stdout().lock();
                match writeln!(out, "{text}") {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                        Err(Failure::Schema(format!("cannot write to stdout: {e}")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn emit_report(&self, text: &str) -> Result<(), Failure> {
        match &self.report {
            Some(p) => write_file(p, text),
            None => Ok(()),
        }
    }
}

pub fn read_file(p: &Path) -> Result<String, Failure> {
    fs::read_to_string(p).map_err(|e| Failure::Schema(format!("cannot read {}: {e}", p.display())))
}

fn write_file(p: &Path, text: &str) -> Result<(), Failure> {
    fs::write(p, format!("{text}\n")).map_err(|e| Failure::Schema(format!("cannot write {}: {e}", p.display())))
}
