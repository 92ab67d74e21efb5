use std::collections::BTreeMap;
use std::path::Path;

use bnftrace::classical::{
    birkhoff_normal_form, bnf_report_to_json, bnf_report_to_text, check_nonresonance, classify_eigenvalues,
    map_from_json, BlockDoc, BnfOptions, DEFAULT_CLASSIFY_TOL,
};
use bnftrace::linalg::SolveOptions;
use bnftrace::qbnf::json::{bnf_from_json, bnf_to_json, trace_data_from_json, trace_data_to_json, ActionDoc};
use bnftrace::qbnf::{make_trace_data, QuantumBnf, TraceData, TraceOptions};
use bnftrace::recover::json::{report_to_json, report_to_text};
use bnftrace::recover::{recover_qbnf, required_k, RecoverOptions, RecoveryReport};
use bnftrace::series::{ExactRationalComplex, FieldKind, FloatComplex, MultiSeries, Orders, Scalar};
use nalgebra::DMatrix;
use serde_json::json;

use crate::config::{read_file, Backend, RunConfig};
use crate::failure::{CmdResult, Failure};

fn trace_options(cfg: &RunConfig) -> TraceOptions {
    TraceOptions { pole_tol: cfg.tol_pole, resonance_tol: cfg.tol_resonance, parallel: cfg.parallel }
}

fn recover_options(cfg: &RunConfig) -> RecoverOptions {
    RecoverOptions {
        solve: SolveOptions { max_condition: cfg.tol_conditioning, residual_tol: cfg.tol_residual },
        pole_tol: cfg.tol_pole,
        residual_tol: cfg.tol_residual,
        parallel: cfg.parallel,
        ..RecoverOptions::default()
    }
}

fn load_action<F: Scalar>(path: Option<&Path>) -> Result<(MultiSeries<F>, BTreeMap<u32, u8>), Failure> {
    match path {
        None => Ok((MultiSeries::zero(0, Orders::new(0, 0, 0)), BTreeMap::new())),
        Some(p) => {
            let doc: ActionDoc = serde_json::from_str(&read_file(p)?)
                .map_err(|e| Failure::Schema(format!("{}: malformed JSON: {e}", p.display())))?;
            let action = doc.action.to_series::<F>()?;
            Ok((action, doc.maslov))
        }
    }
}

fn forward_data<F: Scalar>(
    cfg: &RunConfig,
    b: &QuantumBnf<F>,
    action: Option<&Path>,
) -> Result<(TraceData<F>, Orders), Failure> {
    let orders = cfg.orders.unwrap_or(b.f().orders());
    let (action, maslov) = load_action::<F>(action)?;
    let k_max = cfg.k_max.unwrap_or(required_k(b.n(), orders.h, orders) as u32);
    let data = make_trace_data(b, &action, &maslov, k_max, orders.z, orders.h, &trace_options(cfg))?;
    Ok((data, orders))
}

pub fn forward(cfg: &RunConfig, bnf: &Path, action: Option<&Path>) -> CmdResult {
    let text = read_file(bnf)?;
    match cfg.backend_for(&text, FieldKind::Rational)? {
        Backend::Rational => forward_with::<ExactRationalComplex>(cfg, &text, action),
        Backend::Float => forward_with::<FloatComplex>(cfg, &text, action),
    }
}

fn forward_with<F: Scalar>(cfg: &RunConfig, text: &str, action: Option<&Path>) -> CmdResult {
    let b: QuantumBnf<F> = bnf_from_json(text, cfg.tol_resonance)?;
    let (data, orders) = forward_data(cfg, &b, action)?;
    eprintln!("traces k = 1..{} through z^{} h^{}", data.k_max(), orders.z, orders.h);
    cfg.emit(&trace_data_to_json(&data))
}

pub fn recover(cfg: &RunConfig, traces: &Path, n: usize) -> CmdResult {
    let text = read_file(traces)?;
    match cfg.backend_for(&text, FieldKind::Rational)? {
        Backend::Rational => recover_with::<ExactRationalComplex>(cfg, &text, n),
        Backend::Float => recover_with::<FloatComplex>(cfg, &text, n),
    }
}

fn check_report<F: Scalar>(report: &RecoveryReport<F>) -> CmdResult {
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Math(format!(
            "recovered normal form fails its self-check (max residual {:e})",
            report.max_residual()
        )))
    }
}

fn recover_with<F: Scalar>(cfg: &RunConfig, text: &str, n: usize) -> CmdResult {
    let t: TraceData<F> = trace_data_from_json(text, cfg.tol_resonance)?;
    let orders = cfg.orders.ok_or_else(|| Failure::Schema("recover needs --orders IOTA,Z,H".into()))?;
    let report = recover_qbnf(&t, n, orders, &recover_options(cfg))?;
    eprint!("{}", report_to_text(&report));
    cfg.emit_report(&report_to_json(&report))?;
    check_report(&report)?;
    cfg.emit(&bnf_to_json(&report.recovered))
}

pub fn roundtrip(cfg: &RunConfig, bnf: &Path, action: Option<&Path>) -> CmdResult {
    let text = read_file(bnf)?;
    match cfg.backend_for(&text, FieldKind::Rational)? {
        Backend::Rational => roundtrip_with::<ExactRationalComplex>(cfg, &text, action, |a, b| a == b),
        Backend::Float => roundtrip_with::<FloatComplex>(cfg, &text, action, |_, _| false),
    }
}

/// `exact_eq` decides equality on the exact backend; floats compare within `--tol-residual`.
fn roundtrip_with<F: Scalar>(
    cfg: &RunConfig,
    text: &str,
    action: Option<&Path>,
    exact_eq: fn(&QuantumBnf<F>, &QuantumBnf<F>) -> bool,
) -> CmdResult {
    let b: QuantumBnf<F> = bnf_from_json(text, cfg.tol_resonance)?;
    let (data, orders) = forward_data(cfg, &b, action)?;
    let report = recover_qbnf(&data, b.n(), orders, &recover_options(cfg))?;
    cfg.emit_report(&report_to_json(&report))?;
    check_report(&report)?;
    let canon = b.canonicalize();
    let expected = QuantumBnf::new(canon.mu().to_vec(), canon.f().with_orders(orders), cfg.tol_resonance)?;
    let got = &report.recovered;
    let (ok, err) = match F::KIND {
        FieldKind::Rational => {
            let same = exact_eq(got, &expected);
            (same, if same { 0.0 } else { got.relative_error(&expected) })
        }
        FieldKind::Float => {
            let e = got.relative_error(&expected);
            (e <= cfg.tol_residual, e)
        }
    };
    println!(
        "roundtrip k = 1..{}: max relative error {:.3e}, max condition {:.3e}, max residual {:.3e}",
        data.k_max(),
        err,
        report.max_condition(),
        report.max_residual()
    );
    if ok {
        println!("roundtrip OK");
        Ok(())
    } else {
        Err(Failure::Math(format!("recovered normal form differs from the input (relative error {err:e})")))
    }
}

pub fn classical_bnf(cfg: &RunConfig, map: &Path, degree: u32) -> CmdResult {
    let text = read_file(map)?;
    match cfg.backend_for(&text, FieldKind::Float)? {
        Backend::Rational => classical_with::<ExactRationalComplex>(cfg, &text, degree),
        Backend::Float => classical_with::<FloatComplex>(cfg, &text, degree),
    }
}

fn classical_with<F: Scalar>(cfg: &RunConfig, text: &str, degree: u32) -> CmdResult {
    let map = map_from_json::<F>(text)?;
    let opts = BnfOptions { resonance_tol: cfg.tol_resonance, ..BnfOptions::default() };
    let r = birkhoff_normal_form(&map, degree, &opts)?;
    eprint!("{}", bnf_report_to_text(&r));
    let json = bnf_report_to_json(&r);
    cfg.emit_report(&json)?;
    cfg.emit(&json)
}

pub fn classify(cfg: &RunConfig, map: &Path, resonance_order: u32) -> CmdResult {
    let text = read_file(map)?;
    match cfg.backend_for(&text, FieldKind::Float)? {
        Backend::Rational => classify_with::<ExactRationalComplex>(cfg, &text, resonance_order),
        Backend::Float => classify_with::<FloatComplex>(cfg, &text, resonance_order),
    }
}

fn classify_with<F: Scalar>(cfg: &RunConfig, text: &str, resonance_order: u32) -> CmdResult {
    let map = map_from_json::<F>(text)?;
    let m = map.linear_part();
    let blocks = classify_eigenvalues(&m, DEFAULT_CLASSIFY_TOL)?;
    let check = check_nonresonance(blocks.mu(), resonance_order, cfg.tol_resonance);
    let d = m.nrows();
    let mut bridge = Vec::new();
    let mut mk = DMatrix::<f64>::identity(d, d);
    for k in 1..=6u32 {
        mk = &mk * &m;
        let product: f64 = blocks.mu().iter().map(|mu| (2.0 * (mu * (k as f64) / 2.0).sinh()).norm()).product();
        let det_root = (&mk - DMatrix::<f64>::identity(d, d)).determinant().abs().sqrt();
        bridge.push(json!({ "k": k, "sinh_product": product, "det_root": det_root }));
    }
    for (j, b) in BlockDoc::from_blocks(&blocks).iter().enumerate() {
        eprintln!("μ_{} = {:.15}{:+.15}i  [{}]", j + 1, b.mu_re, b.mu_im, b.kind);
    }
    match &check.witness {
        None => eprintln!("non-resonant through order {resonance_order}"),
        Some(w) => eprintln!("resonant: {w}"),
    }
    let doc = json!({
        "blocks": BlockDoc::from_blocks(&blocks),
        "resonance_order": resonance_order,
        "nonresonant": check.nonresonant,
        "witness": check.witness.as_ref().map(|w| json!({ "k": w.k, "m": w.m })),
        "determinant_bridge": bridge,
    });
    cfg.emit(&serde_json::to_string_pretty(&doc).expect("serializable"))
}
