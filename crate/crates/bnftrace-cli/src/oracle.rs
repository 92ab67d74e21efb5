use bnftrace::hypcalc::{lattice_sum_oracle, CschExpression, Exponent};
use bnftrace::series::{ExactRationalComplex, FloatComplex, Scalar};
use clap::{Args, Subcommand};

use crate::config::{Backend, RunConfig};
use crate::failure::{CmdResult, Failure};

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Σ_m p((m+1/2)/i) e^{-<m+1/2, kμ>} over the box [0, M]^n.
    LatticeSum {
        #[command(flatten)]
        exps: ExponentArgs,
        /// Polynomial term `E1,E2,...=COEF`; repeatable. Defaults to p = 1.
        #[arg(long = "term")]
        terms: Vec<String>,
        #[arg(long, default_value_t = 60)]
        m_max: u32,
    },
    /// ∂^α ∏_j (1/2)csch(kμ_j/2).
    CschDerivative {
        #[command(flatten)]
        exps: ExponentArgs,
        /// Derivative orders, one per exponent, comma separated.
        #[arg(long, default_value = "0")]
        alpha: String,
    },
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    /// Half exponentials w = e^{μ/2} as `RE` or `RE:IM` (exact backend).
    #[arg(long = "half-exp", allow_hyphen_values = true)]
    half_exp: Vec<String>,
    /// Exponents μ as `RE` or `RE:IM` (float backend).
    #[arg(long, allow_hyphen_values = true)]
    mu: Vec<String>,
    #[arg(long, default_value_t = 1)]
    k: u32,
}

fn split_complex(s: &str) -> (&str, &str) {
    s.split_once(':').unwrap_or((s, "0"))
}

fn exponents<F: Scalar>(a: &ExponentArgs) -> Result<Vec<Exponent<F>>, Failure> {
    match (a.half_exp.is_empty(), a.mu.is_empty()) {
        (false, true) => a
            .half_exp
            .iter()
            .map(|s| {
                let (re, im) = split_complex(s);
                let w = F::parse_parts(re, im).map_err(|e| Failure::Schema(format!("--half-exp {s}: {e}")))?;
                Exponent::from_half_exp(w).map_err(Failure::from)
            })
            .collect(),
        (true, false) => {
            a.mu.iter()
                .map(|s| {
                    let (re, im) = split_complex(s);
                    let v = FloatComplex::parse_parts(re, im).map_err(|e| Failure::Schema(format!("--mu {s}: {e}")))?;
                    Exponent::from_mu(v.0).ok_or_else(|| {
                        Failure::Schema("--mu needs the float backend; use --half-exp for exact values".into())
                    })
                })
                .collect()
        }
        _ => Err(Failure::Schema("give the exponents through exactly one of --half-exp or --mu".into())),
    }
}

fn parse_list(s: &str) -> Result<Vec<u32>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|e| Failure::Schema(format!("bad index `{t}`: {e}"))))
        .collect()
}

fn parse_terms<F: Scalar>(terms: &[String], n: usize) -> Result<Vec<(Vec<u32>, F)>, Failure> {
    if terms.is_empty() {
        return Ok(vec![(vec![0; n], F::one())]);
    }
    terms
        .iter()
        .map(|t| {
            let (e, c) =
                t.split_once('=').ok_or_else(|| Failure::Schema(format!("term `{t}` needs the form E1,E2=COEF")))?;
            let (re, im) = split_complex(c);
            let c = F::parse_parts(re, im).map_err(|err| Failure::Schema(format!("term `{t}`: {err}")))?;
            Ok((parse_list(e)?, c))
        })
        .collect()
}

/// Exact values verbatim, floats in full, each with a rounded display column.
fn show<F: Scalar>(v: &F) -> String {
    let (re, im) = v.format_parts();
    let c = v.to_c64();
    let full = if im == "0" || im == "0.0" { re } else { format!("{re} + {im}i") };
    let rounded = if c.im == 0.0 { format!("{:.12}", c.re) } else { format!("{:.12}", c) };
    format!("{full}\t≈ {rounded}")
}

pub fn run(cfg: &RunConfig, cmd: &OracleCommand) -> CmdResult {
    let exps = match cmd {
        OracleCommand::LatticeSum { exps, .. } | OracleCommand::CschDerivative { exps, .. } => exps,
    };
    let backend = cfg.backend.unwrap_or(if exps.mu.is_empty() { Backend::Rational } else { Backend::Float });
    match backend {
        Backend::Rational => run_with::<ExactRationalComplex>(cfg, cmd),
        Backend::Float => run_with::<FloatComplex>(cfg, cmd),
    }
}

fn run_with<F: Scalar>(cfg: &RunConfig, cmd: &OracleCommand) -> CmdResult {
    match cmd {
        OracleCommand::LatticeSum { exps, terms, m_max } => {
            let mu = exponents::<F>(exps)?;
            let p = parse_terms::<F>(terms, mu.len())?;
            let s = lattice_sum_oracle(&p, &mu, exps.k, *m_max)?;
            println!("{}", show(&s.value));
            println!("tail bound\t{:e}", s.tail_bound);
        }
        OracleCommand::CschDerivative { exps, alpha } => {
            let mu = exponents::<F>(exps)?;
            let alpha = parse_list(alpha)?;
            let alpha = if alpha.len() == 1 && mu.len() > 1 && alpha[0] == 0 { vec![0; mu.len()] } else { alpha };
            let e = CschExpression::<F>::csch_product(mu.len(), exps.k)?.derivative(&alpha)?;
            println!("{}", show(&e.eval(&mu, cfg.tol_pole)?));
        }
    }
    Ok(())
}
