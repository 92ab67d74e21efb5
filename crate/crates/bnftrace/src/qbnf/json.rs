//! JSON forms of [`QuantumBnf`] and [`TraceData`].
//!
//! An exponent is written either through its half exponential `w = e^{μ/2}`
//! (required for exact data) or directly as `μ` (`"value"`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{QuantumBnf, TraceData};
use crate::hypcalc::{Exponent, ExponentSeries};
use crate::schema::FormatError;
use crate::series::field::parse_tagged;
use crate::series::json::SeriesDoc;
use crate::series::{FieldKind, MultiSeries, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarDoc {
    pub re: String,
    pub im: String,
}

impl ScalarDoc {
    pub fn from_scalar<F: Scalar>(c: &F) -> Self {
        let (re, im) = c.format_parts();
        Self { re, im }
    }

    pub fn to_scalar<F: Scalar>(&self, field: FieldKind) -> Result<F, FormatError> {
        Ok(parse_tagged::<F>(field, &self.re, &self.im)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_exp: Option<ScalarDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ScalarDoc>,
    /// Coefficients of `z^1, z^2, ...`.
    #[serde(default)]
    pub taylor: Vec<ScalarDoc>,
}

impl ExponentDoc {
    pub fn from_series<F: Scalar>(m: &ExponentSeries<F>) -> Self {
        let taylor = m.taylor.iter().map(ScalarDoc::from_scalar).collect();
        match F::KIND {
            FieldKind::Rational => {
                Self { half_exp: Some(ScalarDoc::from_scalar(m.base.half_exp())), value: None, taylor }
            }
            FieldKind::Float => {
                let mu = m.base.mu();
                let value = ScalarDoc { re: format!("{:?}", mu.re), im: format!("{:?}", mu.im) };
                Self { half_exp: None, value: Some(value), taylor }
            }
        }
    }

    pub fn to_series<F: Scalar>(&self, field: FieldKind) -> Result<ExponentSeries<F>, FormatError> {
        let base = match (&self.half_exp, &self.value) {
            (Some(w), None) => Exponent::from_half_exp(w.to_scalar::<F>(field)?)
                .map_err(|e| FormatError::schema(format!("exponent: {e}")))?,
            (None, Some(v)) => {
                let mu: crate::series::FloatComplex = v.to_scalar(FieldKind::Float)?;
                Exponent::from_mu(mu.0)
                    .ok_or_else(|| FormatError::schema("exact data must give exponents through \"half_exp\""))?
            }
            _ => return Err(FormatError::schema("each exponent needs exactly one of \"half_exp\" or \"value\"")),
        };
        let taylor = self.taylor.iter().map(|c| c.to_scalar(field)).collect::<Result<_, _>>()?;
        Ok(ExponentSeries { base, taylor })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnfDoc {
    pub field: FieldKind,
    pub mu: Vec<ExponentDoc>,
    pub f: SeriesDoc,
}

impl BnfDoc {
    pub fn from_bnf<F: Scalar>(b: &QuantumBnf<F>) -> Self {
        Self {
            field: F::KIND,
            mu: b.mu().iter().map(ExponentDoc::from_series).collect(),
            f: SeriesDoc::from_series(b.f()),
        }
    }

    pub fn to_bnf<F: Scalar>(&self, tol: f64) -> Result<QuantumBnf<F>, FormatError> {
        if self.f.field != self.field {
            return Err(FormatError::schema("field tag of F differs from the document's"));
        }
        let mu = self.mu.iter().map(|m| m.to_series(self.field)).collect::<Result<Vec<_>, _>>()?;
        let f = self.f.to_series::<F>()?;
        QuantumBnf::new(mu, f, tol).map_err(|e| FormatError::schema(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOrdersDoc {
    pub z: u32,
    pub h: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntryDoc {
    pub k: u32,
    pub coefficients: SeriesDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDataDoc {
    pub field: FieldKind,
    pub orders: TraceOrdersDoc,
    pub k_max: u32,
    pub action: SeriesDoc,
    pub maslov: BTreeMap<u32, u8>,
    pub phase: ScalarDoc,
    pub traces: Vec<TraceEntryDoc>,
}

impl TraceDataDoc {
    pub fn from_data<F: Scalar>(t: &TraceData<F>) -> Self {
        Self {
            field: F::KIND,
            orders: TraceOrdersDoc { z: t.n_z(), h: t.n_h() },
            k_max: t.k_max(),
            action: SeriesDoc::from_series(t.action()),
            maslov: t.maslov_map().clone(),
            phase: ScalarDoc::from_scalar(t.phase()),
            traces: t.traces().map(|(k, s)| TraceEntryDoc { k, coefficients: SeriesDoc::from_series(s) }).collect(),
        }
    }

    pub fn to_data<F: Scalar>(&self, tol: f64) -> Result<TraceData<F>, FormatError> {
        if self.traces.len() != self.k_max as usize {
            return Err(FormatError::schema(format!(
                "k_max = {} but {} trace entries are present",
                self.k_max,
                self.traces.len()
            )));
        }
        let mut coefficients = BTreeMap::new();
        for entry in &self.traces {
            let s: MultiSeries<F> = entry.coefficients.to_series()?;
            if coefficients.insert(entry.k, s).is_some() {
                return Err(FormatError::schema(format!("duplicate trace entry k = {}", entry.k)));
            }
        }
        if let Some((k, v)) = self.maslov.iter().find(|(_, &v)| v > 3) {
            return Err(FormatError::schema(format!("Maslov index ν_{k} = {v} is not in 0..4")));
        }
        let action = self.action.to_series::<F>()?;
        let phase = self.phase.to_scalar::<F>(self.field)?;
        TraceData::new(action, self.maslov.clone(), phase, coefficients, self.orders.z, self.orders.h, tol)
            .map_err(|e| FormatError::schema(e.to_string()))
    }
}

/// Action and Maslov data consumed by the forward command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub action: SeriesDoc,
    #[serde(default)]
    pub maslov: BTreeMap<u32, u8>,
}

pub fn bnf_to_json<F: Scalar>(b: &QuantumBnf<F>) -> String {
    serde_json::to_string_pretty(&BnfDoc::from_bnf(b)).expect("serializable")
}

pub fn bnf_from_json<F: Scalar>(text: &str, tol: f64) -> Result<QuantumBnf<F>, FormatError> {
    serde_json::from_str::<BnfDoc>(text)?.to_bnf(tol)
}

pub fn trace_data_to_json<F: Scalar>(t: &TraceData<F>) -> String {
    serde_json::to_string_pretty(&TraceDataDoc::from_data(t)).expect("serializable")
}

pub fn trace_data_from_json<F: Scalar>(text: &str, tol: f64) -> Result<TraceData<F>, FormatError> {
    serde_json::from_str::<TraceDataDoc>(text)?.to_data(tol)
}
