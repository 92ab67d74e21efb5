//! JSON form of [`MultiSeries`].

use serde::{Deserialize, Serialize};

use super::field::parse_tagged;
use super::{FieldKind, MultiIndex, MultiSeries, Orders, Scalar};
use crate::schema::FormatError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub iota: Vec<u32>,
    pub z: u32,
    pub h: u32,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesDoc {
    pub n_actions: usize,
    pub orders: Orders,
    pub field: FieldKind,
    pub terms: Vec<TermDoc>,
}

impl SeriesDoc {
    pub fn from_series<F: Scalar>(s: &MultiSeries<F>) -> Self {
        let terms = s
            .terms()
            .map(|(idx, c)| {
                let (re, im) = c.format_parts();
                TermDoc { iota: idx.iota.clone(), z: idx.z, h: idx.h, re, im }
            })
            .collect();
        SeriesDoc { n_actions: s.n_actions(), orders: s.orders(), field: F::KIND, terms }
    }

    pub fn to_series<F: Scalar>(&self) -> Result<MultiSeries<F>, FormatError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let c = parse_tagged::<F>(self.field, &t.re, &t.im)?;
            terms.push((MultiIndex::new(t.iota.clone(), t.z, t.h), c));
        }
        Ok(MultiSeries::from_terms(self.n_actions, self.orders, terms)?)
    }
}

pub fn series_to_json<F: Scalar>(s: &MultiSeries<F>) -> String {
    serde_json::to_string_pretty(&SeriesDoc::from_series(s)).expect("series documents always serialize")
}

pub fn series_from_json<F: Scalar>(text: &str) -> Result<MultiSeries<F>, FormatError> {
    let doc: SeriesDoc = serde_json::from_str(text)?;
    doc.to_series()
}
