//! JSON and text renderings of a [`RecoveryReport`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RecoveryReport;
use crate::qbnf::json::{BnfDoc, ScalarDoc};
use crate::series::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualDoc {
    pub k: u32,
    pub j: u32,
    pub z: u32,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditioningDoc {
    pub h: u32,
    pub z: u32,
    pub unknowns: usize,
    pub equations: usize,
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReportDoc {
    pub passed: bool,
    pub bnf: BnfDoc,
    pub phi: ScalarDoc,
    pub prony_residual: f64,
    pub max_residual: f64,
    pub max_condition: f64,
    pub conditioning: Vec<ConditioningDoc>,
    pub residuals: Vec<ResidualDoc>,
    pub notes: Vec<String>,
}

impl RecoveryReportDoc {
    pub fn from_report<F: Scalar>(r: &RecoveryReport<F>) -> Self {
        Self {
            passed: r.passed,
            bnf: BnfDoc::from_bnf(&r.recovered),
            phi: ScalarDoc { re: format!("{:?}", r.phi.re), im: format!("{:?}", r.phi.im) },
            prony_residual: r.prony_residual,
            max_residual: r.max_residual(),
            max_condition: r.max_condition(),
            conditioning: r
                .conditioning
                .iter()
                .map(|c| ConditioningDoc {
                    h: c.h,
                    z: c.z,
                    unknowns: c.unknowns,
                    equations: c.equations,
                    condition: c.condition,
                })
                .collect(),
            residuals: r.residuals.iter().map(|e| ResidualDoc { k: e.k, j: e.j, z: e.q, value: e.value }).collect(),
            notes: r.normalization_notes.clone(),
        }
    }
}

pub fn report_to_json<F: Scalar>(r: &RecoveryReport<F>) -> String {
    serde_json::to_string_pretty(&RecoveryReportDoc::from_report(r)).expect("serializable")
}

pub fn report_to_text<F: Scalar>(r: &RecoveryReport<F>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "recovery {}", if r.passed { "PASSED" } else { "FAILED" });
    for (j, m) in r.recovered.mu().iter().enumerate() {
        let kind = r.recovered.blocks().kinds()[j].as_str();
        let _ = writeln!(out, "  μ_{}(0) = {:.12} [{kind}]  e^(μ/2) = {}", j + 1, m.base.mu(), m.base.half_exp());
        for (q, c) in m.taylor.iter().enumerate() {
            let _ = writeln!(out, "    z^{}: {c}", q + 1);
        }
    }
    let _ = writeln!(out, "  φ = {:.12}  (exponential fit residual {:.3e})", r.phi, r.prony_residual);
    let _ = writeln!(out, "  F = {}", r.recovered.f());
    let _ = writeln!(out, "  stages (h, z): unknowns / equations, condition");
    for c in &r.conditioning {
        let _ = writeln!(out, "    ({}, {}): {} / {}, {:.3e}", c.h, c.z, c.unknowns, c.equations, c.condition);
    }
    let _ = writeln!(out, "  max condition number {:.3e}", r.max_condition());
    let _ = writeln!(out, "  max self-check residual {:.3e}", r.max_residual());
    for n in &r.normalization_notes {
        let _ = writeln!(out, "  note: {n}");
    }
    out
}
