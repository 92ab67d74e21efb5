//! Classical Birkhoff normal forms of polynomial symplectic maps.

mod linear;
mod normal_form;
pub(crate) mod poly;
pub mod resonance;
mod taylor_map;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

pub use linear::{
    classify_eigenvalues, linear_normalize, standard_j, symplectic_defect, LinearNormalization, DEFAULT_CLASSIFY_TOL,
};
pub use normal_form::{
    birkhoff_normal_form, bnf_report_to_json, bnf_report_to_text, BnfOptions, BnfReportDoc, BnfResult, Generator,
};
pub use resonance::{check_nonresonance, NonresonanceCheck, ResonanceWitness, DEFAULT_RESONANCE_TOL};
pub use taylor_map::{map_from_json, map_to_json, MapTermDoc, TaylorMap, TaylorMapDoc};

use crate::qbnf::{QbnfError, SpectrumBlocks};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassicalError {
    #[error("malformed map: {0}")]
    Shape(String),
    #[error("map is not symplectic (residual {residual:e})")]
    NonSymplectic { residual: f64 },
    #[error("excluded eigenvalue: {0}")]
    Excluded(String),
    #[error("{0}")]
    Defective(String),
    #[error("resonant exponents: Σ k_j μ_j = 2πi·m with {0}")]
    Resonant(ResonanceWitness),
    #[error("small denominator |e^<k,μ> - 1| = {value:e} at k = {k:?}")]
    SmallDenominator { k: Vec<i64>, value: f64 },
    #[error("map known through degree {have}, need {need}")]
    InsufficientDegree { have: u32, need: u32 },
    #[error(transparent)]
    Blocks(#[from] QbnfError),
}

impl ClassicalError {
    /// Non-symplectic and malformed input counts as a schema failure.
    pub fn is_math(&self) -> bool {
        !matches!(
            self,
            ClassicalError::Shape(_) | ClassicalError::NonSymplectic { .. } | ClassicalError::InsufficientDegree { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDoc {
    pub kind: String,
    pub mu_re: f64,
    pub mu_im: f64,
}

impl BlockDoc {
    pub fn from_blocks(b: &SpectrumBlocks) -> Vec<Self> {
        b.mu()
            .iter()
            .zip(b.kinds())
            .map(|(m, k)| BlockDoc { kind: k.as_str().to_string(), mu_re: m.re, mu_im: m.im })
            .collect()
    }
}
