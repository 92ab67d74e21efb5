//! JSON forms of test-jet bases, orbit expansions and pairing bundles.

use serde::{Deserialize, Serialize};

use super::{OrbitExpansion, PairingBundle, SmearedPairing, TestJet};
use crate::qbnf::json::ScalarDoc;
use crate::schema::FormatError;
use crate::series::json::SeriesDoc;
use crate::series::{FieldKind, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestJetDoc {
    pub base_point: ScalarDoc,
    /// `g^{(m)}(I₁)` for `m = 0, 1, ...`.
    pub jet: Vec<ScalarDoc>,
}

impl TestJetDoc {
    pub fn from_jet<F: Scalar>(g: &TestJet<F>) -> Self {
        Self {
            base_point: ScalarDoc::from_scalar(&g.base_point),
            jet: g.jet.iter().map(ScalarDoc::from_scalar).collect(),
        }
    }

    pub fn to_jet<F: Scalar>(&self, field: FieldKind) -> Result<TestJet<F>, FormatError> {
        let jet = self.jet.iter().map(|d| d.to_scalar(field)).collect::<Result<_, _>>()?;
        TestJet::new(self.base_point.to_scalar(field)?, jet).map_err(|e| FormatError::schema(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestBasisDoc {
    pub field: FieldKind,
    pub jets: Vec<TestJetDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitDoc {
    /// `I₀, I₁, ...`; the order is `len - 2`.
    pub action: Vec<ScalarDoc>,
    /// Series in `z` and `h` (no action variables).
    pub amplitude: SeriesDoc,
}

impl OrbitDoc {
    pub fn from_orbit<F: Scalar>(o: &OrbitExpansion<F>) -> Self {
        Self {
            action: o.action.iter().map(ScalarDoc::from_scalar).collect(),
            amplitude: SeriesDoc::from_series(&o.amplitude),
        }
    }

    pub fn to_orbit<F: Scalar>(&self, tol: f64) -> Result<OrbitExpansion<F>, FormatError> {
        let field = self.amplitude.field;
        let action = self.action.iter().map(|d| d.to_scalar(field)).collect::<Result<_, _>>()?;
        OrbitExpansion::new(action, self.amplitude.to_series()?, tol).map_err(|e| FormatError::schema(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingEntryDoc {
    pub jet: TestJetDoc,
    /// `b_p / 2π` for `p = 0..=order`.
    pub values: Vec<ScalarDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingBundleDoc {
    pub field: FieldKind,
    pub order: u32,
    pub phase: ScalarDoc,
    pub entries: Vec<PairingEntryDoc>,
}

impl PairingBundleDoc {
    pub fn from_bundle<F: Scalar>(b: &PairingBundle<F>) -> Self {
        let entries = b
            .entries
            .iter()
            .map(|(g, v)| PairingEntryDoc {
                jet: TestJetDoc::from_jet(g),
                values: v.iter().map(ScalarDoc::from_scalar).collect(),
            })
            .collect();
        Self { field: F::KIND, order: b.order, phase: ScalarDoc::from_scalar(&b.phase), entries }
    }

    pub fn to_bundle<F: Scalar>(&self) -> Result<PairingBundle<F>, FormatError> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let v = e.values.iter().map(|d| d.to_scalar(self.field)).collect::<Result<_, _>>()?;
                Ok((e.jet.to_jet(self.field)?, v))
            })
            .collect::<Result<_, FormatError>>()?;
        PairingBundle::new(self.order, self.phase.to_scalar(self.field)?, entries)
            .map_err(|e| FormatError::schema(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmearedEntryDoc {
    pub k: u32,
    pub bundle: PairingBundleDoc,
}

pub fn smeared_to_json<F: Scalar>(data: &[SmearedPairing<F>]) -> String {
    let docs: Vec<SmearedEntryDoc> =
        data.iter().map(|s| SmearedEntryDoc { k: s.k, bundle: PairingBundleDoc::from_bundle(&s.bundle) }).collect();
    serde_json::to_string_pretty(&docs).expect("pairing documents always serialize")
}

pub fn smeared_from_json<F: Scalar>(text: &str) -> Result<Vec<SmearedPairing<F>>, FormatError> {
    let docs: Vec<SmearedEntryDoc> = serde_json::from_str(text)?;
    docs.iter().map(|d| Ok(SmearedPairing { k: d.k, bundle: d.bundle.to_bundle()? })).collect()
}

pub fn bundle_to_json<F: Scalar>(b: &PairingBundle<F>) -> String {
    serde_json::to_string_pretty(&PairingBundleDoc::from_bundle(b)).expect("pairing documents always serialize")
}

pub fn bundle_from_json<F: Scalar>(text: &str) -> Result<PairingBundle<F>, FormatError> {
    let doc: PairingBundleDoc = serde_json::from_str(text)?;
    doc.to_bundle()
}

pub fn orbit_to_json<F: Scalar>(o: &OrbitExpansion<F>) -> String {
    serde_json::to_string_pretty(&OrbitDoc::from_orbit(o)).expect("orbit documents always serialize")
}

pub fn orbit_from_json<F: Scalar>(text: &str, tol: f64) -> Result<OrbitExpansion<F>, FormatError> {
    let doc: OrbitDoc = serde_json::from_str(text)?;
    doc.to_orbit(tol)
}

pub fn basis_to_json<F: Scalar>(basis: &[TestJet<F>]) -> String {
    let doc = TestBasisDoc { field: F::KIND, jets: basis.iter().map(TestJetDoc::from_jet).collect() };
    serde_json::to_string_pretty(&doc).expect("basis documents always serialize")
}

pub fn basis_from_json<F: Scalar>(text: &str) -> Result<Vec<TestJet<F>>, FormatError> {
    let doc: TestBasisDoc = serde_json::from_str(text)?;
    doc.jets.iter().map(|j| j.to_jet(doc.field)).collect()
}
