//! Polynomial maps of `ℝ^{2n}` fixing the origin, in variables
//! `(x₁..x_n, ξ₁..ξ_n)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::poly::{Basis, Poly};
use super::ClassicalError;
use crate::schema::FormatError;
use crate::series::field::parse_tagged;
use crate::series::{FieldKind, FloatComplex, MultiIndex, MultiSeries, Orders, Scalar};

/// Component `i` is the new value of coordinate `i`; each component is a
/// series in `2n` action slots used as the phase-space variables.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorMap<F> {
    n: usize,
    degree: u32,
    components: Vec<MultiSeries<F>>,
}

impl<F: Scalar> TaylorMap<F> {
    pub fn new(n: usize, degree: u32, components: Vec<MultiSeries<F>>) -> Result<Self, ClassicalError> {
        if n == 0 || degree == 0 {
            return Err(ClassicalError::Shape("a map needs n ≥ 1 and degree ≥ 1".into()));
        }
        if components.len() != 2 * n {
            return Err(ClassicalError::Shape(format!("expected {} components, got {}", 2 * n, components.len())));
        }
        let orders = Orders::new(degree, 0, 0);
        let mut out = Vec::with_capacity(components.len());
        for (i, c) in components.into_iter().enumerate() {
            if c.n_actions() != 2 * n {
                return Err(ClassicalError::Shape(format!("component {i} has {} variables", c.n_actions())));
            }
            if let Some((idx, _)) = c.terms().find(|(idx, _)| !idx.fits(&orders) || idx.z > 0 || idx.h > 0) {
                return Err(ClassicalError::Shape(format!(
                    "component {i}: term {:?} beyond degree {degree}",
                    idx.iota
                )));
            }
            if !c.constant_term().is_zero() {
                return Err(ClassicalError::Shape(format!("component {i} moves the origin")));
            }
            out.push(c.with_orders(orders));
        }
        Ok(Self { n, degree, components: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn components(&self) -> &[MultiSeries<F>] {
        &self.components
    }

    /// Jacobian at the origin.
    pub fn linear_part(&self) -> DMatrix<f64> {
        let d = 2 * self.n;
        DMatrix::from_fn(d, d, |i, j| {
            let mut e = vec![0; d];
            e[j] = 1;
            self.components[i].coefficient(&MultiIndex::new(e, 0, 0)).to_c64().re
        })
    }

    /// Largest coefficient of `Dκᵀ J Dκ − J` through degree `degree − 1`.
    /// Zero exactly on exact symplectic maps over the rational backend.
    pub fn symplecticity_residual(&self) -> f64 {
        let d = 2 * self.n;
        let orders = Orders::new(self.degree - 1, 0, 0);
        let jac: Vec<Vec<MultiSeries<F>>> = self
            .components
            .iter()
            .map(|c| (0..d).map(|v| c.derive(crate::series::Var::Iota(v)).expect("variable in range")).collect())
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                let mut acc = MultiSeries::zero(d, orders);
                for a in 0..self.n {
                    let t = jac[a][i].mul(&jac[a + self.n][j]).expect("dims");
                    let u = jac[a + self.n][i].mul(&jac[a][j]).expect("dims");
                    acc = acc.add(&t).expect("dims").sub(&u).expect("dims");
                }
                let target = if j == i + self.n { F::one() } else { F::zero() };
                let k = MultiIndex::zero(d);
                let c0 = acc.coefficient(&k);
                acc.add_term(k, -c0.clone()).expect("in box");
                worst = worst.max(c0.distance(&target)).max(acc.max_abs());
            }
        }
        worst
    }

    /// Checks the symplectic condition within `tol` (exactly on the rational backend).
    pub fn validate_symplectic(&self, tol: f64) -> Result<(), ClassicalError> {
        let r = self.symplecticity_residual();
        let ok = match F::KIND {
            FieldKind::Rational => r == 0.0,
            FieldKind::Float => r <= tol,
        };
        if ok {
            Ok(())
        } else {
            Err(ClassicalError::NonSymplectic { residual: r })
        }
    }

    pub fn to_float(&self) -> TaylorMap<FloatComplex> {
        TaylorMap {
            n: self.n,
            degree: self.degree,
            components: self.components.iter().map(|c| c.map_coefficients(|v| FloatComplex(v.to_c64()))).collect(),
        }
    }

    /// Components as dense complex polynomials over `basis`.
    pub(crate) fn to_polys(&self, basis: &std::sync::Arc<Basis>) -> Vec<Poly> {
        self.components
            .iter()
            .map(|c| {
                let mut p = Poly::zero(basis);
                for (idx, v) in c.terms() {
                    p.set(&idx.iota, v.to_c64());
                }
                p
            })
            .collect()
    }
}

impl TaylorMap<FloatComplex> {
    /// Builds a real map from dense polynomials, dropping imaginary parts.
    pub(crate) fn from_polys(n: usize, degree: u32, polys: &[Poly]) -> Self {
        let orders = Orders::new(degree, 0, 0);
        let components = polys
            .iter()
            .map(|p| {
                let terms = p
                    .terms()
                    .filter(|(e, _)| e.iter().sum::<u32>() <= degree)
                    .map(|(e, v)| (MultiIndex::new(e.to_vec(), 0, 0), FloatComplex::new(v.re, 0.0)));
                MultiSeries::from_terms(2 * n, orders, terms).expect("terms inside the box")
            })
            .collect();
        Self { n, degree, components }
    }

    /// Applies the map to a real point.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.terms()
                    .map(|(idx, v)| idx.iota.iter().zip(w).map(|(&e, &x)| x.powi(e as i32)).product::<f64>() * v.0.re)
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapTermDoc {
    pub exponents: Vec<u32>,
    pub re: String,
    #[serde(default = "zero_string")]
    pub im: String,
}

fn zero_string() -> String {
    "0".into()
}

fn default_field() -> FieldKind {
    FieldKind::Float
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaylorMapDoc {
    pub n: usize,
    pub degree: u32,
    #[serde(default = "default_field")]
    pub field: FieldKind,
    pub components: Vec<Vec<MapTermDoc>>,
}

impl TaylorMapDoc {
    pub fn from_map<F: Scalar>(m: &TaylorMap<F>) -> Self {
        let components = m
            .components
            .iter()
            .map(|c| {
                c.terms()
                    .map(|(idx, v)| {
                        let (re, im) = v.format_parts();
                        MapTermDoc { exponents: idx.iota.clone(), re, im }
                    })
                    .collect()
            })
            .collect();
        Self { n: m.n, degree: m.degree, field: F::KIND, components }
    }

    pub fn to_map<F: Scalar>(&self) -> Result<TaylorMap<F>, FormatError> {
        let orders = Orders::new(self.degree, 0, 0);
        let mut comps = Vec::with_capacity(self.components.len());
        for terms in &self.components {
            let mut parsed = Vec::with_capacity(terms.len());
            for t in terms {
                let v = parse_tagged::<F>(self.field, &t.re, &t.im)?;
                parsed.push((MultiIndex::new(t.exponents.clone(), 0, 0), v));
            }
            comps.push(MultiSeries::from_terms(2 * self.n, orders, parsed)?);
        }
        TaylorMap::new(self.n, self.degree, comps).map_err(|e| FormatError::schema(e.to_string()))
    }
}

pub fn map_to_json<F: Scalar>(m: &TaylorMap<F>) -> String {
    serde_json::to_string_pretty(&TaylorMapDoc::from_map(m)).expect("map documents always serialize")
}

pub fn map_from_json<F: Scalar>(text: &str) -> Result<TaylorMap<F>, FormatError> {
    let doc: TaylorMapDoc = serde_json::from_str(text)?;
    doc.to_map()
}
