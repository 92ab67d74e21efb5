//! Truncated multivariate power series in `(ι₁..ι_n, z, h)`.
//!
//! Every series carries its truncation box. Binary operations truncate to the
//! componentwise minimum of the operand orders, and zero coefficients are
//! never stored.

pub mod field;
pub mod json;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use field::{ExactRationalComplex, FieldKind, FloatComplex, Scalar, ScalarParseError};

/// Truncation orders: total ι-degree, z-degree and h-degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orders {
    pub iota: u32,
    pub z: u32,
    pub h: u32,
}

impl Orders {
    pub const fn new(iota: u32, z: u32, h: u32) -> Self {
        Self { iota, z, h }
    }

    pub fn min(self, other: Orders) -> Orders {
        Orders { iota: self.iota.min(other.iota), z: self.z.min(other.z), h: self.h.min(other.h) }
    }
}

impl fmt::Display for Orders {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ι≤{}, z≤{}, h≤{})", self.iota, self.z, self.h)
    }
}

/// Exponent of a monomial `ι^α z^q h^j`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    pub iota: Vec<u32>,
    pub z: u32,
    pub h: u32,
}

impl MultiIndex {
    pub fn new(iota: Vec<u32>, z: u32, h: u32) -> Self {
        Self { iota, z, h }
    }

    pub fn zero(n: usize) -> Self {
        Self { iota: vec![0; n], z: 0, h: 0 }
    }

    pub fn iota_degree(&self) -> u32 {
        self.iota.iter().sum()
    }

    pub fn fits(&self, orders: &Orders) -> bool {
        self.iota_degree() <= orders.iota && self.z <= orders.z && self.h <= orders.h
    }

    fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            iota: self.iota.iter().zip(&other.iota).map(|(a, b)| a + b).collect(),
            z: self.z + other.z,
            h: self.h + other.h,
        }
    }
}

/// A series variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Iota(usize),
    Z,
    H,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Iota(j) => write!(f, "ι{}", j + 1),
            Var::Z => f.write_str("z"),
            Var::H => f.write_str("h"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("dimension mismatch: {left} vs {right} action variables")]
    DimensionMismatch { left: usize, right: usize },
    #[error("exp_series needs a zero constant term")]
    NonzeroConstant,
    #[error("unknown variable {0}")]
    UnknownVariable(Var),
    #[error("index {index:?} has {found} action exponents, expected {expected}")]
    IndexLength { index: Vec<u32>, found: usize, expected: usize },
    #[error("index (ι={iota:?}, z={z}, h={h}) exceeds truncation {orders}")]
    OutOfBounds { iota: Vec<u32>, z: u32, h: u32, orders: Orders },
    #[error("duplicate index (ι={iota:?}, z={z}, h={h})")]
    Duplicate { iota: Vec<u32>, z: u32, h: u32 },
}

/// Truncated power series with coefficients in `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeries<F> {
    n_actions: usize,
    orders: Orders,
    terms: BTreeMap<MultiIndex, F>,
}

fn accumulate<F: Scalar>(terms: &mut BTreeMap<MultiIndex, F>, idx: MultiIndex, c: F) {
    if c.is_zero() {
        return;
    }
    match terms.entry(idx) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let sum = o.get().clone() + c;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

impl<F: Scalar> MultiSeries<F> {
    pub fn zero(n_actions: usize, orders: Orders) -> Self {
        Self { n_actions, orders, terms: BTreeMap::new() }
    }

    pub fn constant(n_actions: usize, orders: Orders, c: F) -> Self {
        let mut s = Self::zero(n_actions, orders);
        accumulate(&mut s.terms, MultiIndex::zero(n_actions), c);
        s
    }

    pub fn one(n_actions: usize, orders: Orders) -> Self {
        Self::constant(n_actions, orders, F::one())
    }

    /// `c` times a single monomial. Monomials outside the box give the zero series.
    pub fn monomial(n_actions: usize, orders: Orders, idx: MultiIndex, c: F) -> Result<Self, SeriesError> {
        check_len(&idx, n_actions)?;
        let mut s = Self::zero(n_actions, orders);
        if idx.fits(&orders) {
            accumulate(&mut s.terms, idx, c);
        }
        Ok(s)
    }

    pub fn variable(n_actions: usize, orders: Orders, var: Var) -> Result<Self, SeriesError> {
        let mut idx = MultiIndex::zero(n_actions);
        match var {
            Var::Iota(j) if j < n_actions => idx.iota[j] = 1,
            Var::Iota(_) => return Err(SeriesError::UnknownVariable(var)),
            Var::Z => idx.z = 1,
            Var::H => idx.h = 1,
        }
        Self::monomial(n_actions, orders, idx, F::one())
    }

    /// Strict constructor: every index must fit the box and appear once.
    pub fn from_terms<I>(n_actions: usize, orders: Orders, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (MultiIndex, F)>,
    {
        let mut map = BTreeMap::new();
        for (idx, c) in terms {
            check_len(&idx, n_actions)?;
            if !idx.fits(&orders) {
                return Err(SeriesError::OutOfBounds { iota: idx.iota, z: idx.z, h: idx.h, orders });
            }
            if map.contains_key(&idx) {
                return Err(SeriesError::Duplicate { iota: idx.iota, z: idx.z, h: idx.h });
            }
            if !c.is_zero() {
                map.insert(idx, c);
            }
        }
        Ok(Self { n_actions, orders, terms: map })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn orders(&self) -> Orders {
        self.orders
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &F)> {
        self.terms.iter()
    }

    pub fn get(&self, idx: &MultiIndex) -> Option<&F> {
        self.terms.get(idx)
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> F {
        self.terms.get(idx).cloned().unwrap_or_else(F::zero)
    }

    pub fn constant_term(&self) -> F {
        self.coefficient(&MultiIndex::zero(self.n_actions))
    }

    /// Adds `c·ι^α z^q h^j` in place; ignored when outside the box.
    pub fn add_term(&mut self, idx: MultiIndex, c: F) -> Result<(), SeriesError> {
        check_len(&idx, self.n_actions)?;
        if idx.fits(&self.orders) {
            accumulate(&mut self.terms, idx, c);
        }
        Ok(())
    }

    fn check_dims(&self, other: &Self) -> Result<(), SeriesError> {
        if self.n_actions != other.n_actions {
            return Err(SeriesError::DimensionMismatch { left: self.n_actions, right: other.n_actions });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_dims(other)?;
        let mut out = self.truncate(other.orders);
        for (idx, c) in other.terms() {
            if idx.fits(&out.orders) {
                accumulate(&mut out.terms, idx.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(|c| -c.clone())
    }

    pub fn scale(&self, s: &F) -> Self {
        self.map_coefficients(|c| c.clone() * s.clone())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_dims(other)?;
        let orders = self.orders.min(other.orders);
        let mut terms = BTreeMap::new();
        for (ia, ca) in self.terms() {
            if !ia.fits(&orders) {
                continue;
            }
            for (ib, cb) in other.terms() {
                let idx = ia.plus(ib);
                if idx.fits(&orders) {
                    accumulate(&mut terms, idx, ca.clone() * cb.clone());
                }
            }
        }
        Ok(Self { n_actions: self.n_actions, orders, terms })
    }

    /// `Σ s^m / m!` for a series with zero constant term.
    pub fn exp_series(&self) -> Result<Self, SeriesError> {
        if !self.constant_term().is_zero() {
            return Err(SeriesError::NonzeroConstant);
        }
        let mut result = Self::one(self.n_actions, self.orders);
        let mut power = result.clone();
        let mut m: i64 = 0;
        loop {
            m += 1;
            power = power.mul(self)?.scale(&F::from_ratio(1, m));
            if power.is_zero() {
                return Ok(result);
            }
            result = result.add(&power)?;
        }
    }

    pub fn derive(&self, var: Var) -> Result<Self, SeriesError> {
        if let Var::Iota(j) = var {
            if j >= self.n_actions {
                return Err(SeriesError::UnknownVariable(var));
            }
        }
        let mut orders = self.orders;
        match var {
            Var::Iota(_) => orders.iota = orders.iota.saturating_sub(1),
            Var::Z => orders.z = orders.z.saturating_sub(1),
            Var::H => orders.h = orders.h.saturating_sub(1),
        }
        let mut terms = BTreeMap::new();
        for (idx, c) in self.terms() {
            let mut lowered = idx.clone();
            let e = match var {
                Var::Iota(j) => &mut lowered.iota[j],
                Var::Z => &mut lowered.z,
                Var::H => &mut lowered.h,
            };
            if *e == 0 {
                continue;
            }
            let factor = F::from_int(*e as i64);
            *e -= 1;
            if lowered.fits(&orders) {
                accumulate(&mut terms, lowered, c.clone() * factor);
            }
        }
        Ok(Self { n_actions: self.n_actions, orders, terms })
    }

    /// Drops terms outside `orders`; the new box is the minimum of both.
    pub fn truncate(&self, orders: Orders) -> Self {
        let orders = self.orders.min(orders);
        let terms =
            self.terms.iter().filter(|(idx, _)| idx.fits(&orders)).map(|(idx, c)| (idx.clone(), c.clone())).collect();
        Self { n_actions: self.n_actions, orders, terms }
    }

    /// Enlarges (or shrinks) the truncation box without touching stored terms
    /// that still fit.
    pub fn with_orders(&self, orders: Orders) -> Self {
        let terms =
            self.terms.iter().filter(|(idx, _)| idx.fits(&orders)).map(|(idx, c)| (idx.clone(), c.clone())).collect();
        Self { n_actions: self.n_actions, orders, terms }
    }

    /// Sets one variable to zero.
    pub fn at_zero(&self, var: Var) -> Result<Self, SeriesError> {
        if let Var::Iota(j) = var {
            if j >= self.n_actions {
                return Err(SeriesError::UnknownVariable(var));
            }
        }
        let terms = self
            .terms
            .iter()
            .filter(|(idx, _)| match var {
                Var::Iota(j) => idx.iota[j] == 0,
                Var::Z => idx.z == 0,
                Var::H => idx.h == 0,
            })
            .map(|(idx, c)| (idx.clone(), c.clone()))
            .collect();
        Ok(Self { n_actions: self.n_actions, orders: self.orders, terms })
    }

    pub fn map_coefficients<G: Scalar>(&self, f: impl Fn(&F) -> G) -> MultiSeries<G> {
        let mut terms = BTreeMap::new();
        for (idx, c) in self.terms() {
            accumulate(&mut terms, idx.clone(), f(c));
        }
        MultiSeries { n_actions: self.n_actions, orders: self.orders, terms }
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(Scalar::abs).fold(0.0, f64::max)
    }

    /// Largest coefficientwise distance over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (idx, c) in self.terms() {
            worst = worst.max(c.distance(&other.coefficient(idx)));
        }
        for (idx, c) in other.terms() {
            if !self.terms.contains_key(idx) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }
}

fn check_len(idx: &MultiIndex, n: usize) -> Result<(), SeriesError> {
    if idx.iota.len() != n {
        return Err(SeriesError::IndexLength { index: idx.iota.clone(), found: idx.iota.len(), expected: n });
    }
    Ok(())
}

impl<F: Scalar> fmt::Display for MultiSeries<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (idx, c) in self.terms() {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (j, e) in idx.iota.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·ι{}", j + 1)?,
                    _ => write!(f, "·ι{}^{e}", j + 1)?,
                }
            }
            match idx.z {
                0 => {}
                1 => f.write_str("·z")?,
                e => write!(f, "·z^{e}")?,
            }
            match idx.h {
                0 => {}
                1 => f.write_str("·h")?,
                e => write!(f, "·h^{e}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = ExactRationalComplex;

    fn q(s: &str) -> Q {
        Q::parse_parts(s, "0").unwrap()
    }

    fn zpoly(coeffs: &[&str], order: u32) -> MultiSeries<Q> {
        let orders = Orders::new(0, order, 0);
        let mut s = MultiSeries::zero(0, orders);
        for (j, c) in coeffs.iter().enumerate() {
            s.add_term(MultiIndex::new(vec![], j as u32, 0), q(c)).unwrap();
        }
        s
    }

    #[test]
    fn add_polynomials() {
        let a = zpoly(&["1", "1"], 3);
        let b = zpoly(&["0", "0", "1"], 3);
        assert_eq!(a.add(&b).unwrap(), zpoly(&["1", "1", "1"], 3));
        assert_eq!(a.add(&MultiSeries::zero(0, a.orders())).unwrap(), a);
    }

    #[test]
    fn exact_thirds() {
        let a = zpoly(&["0", "1/3"], 2);
        let b = zpoly(&["0", "2/3"], 2);
        assert_eq!(a.add(&b).unwrap(), zpoly(&["0", "1"], 2));
    }

    #[test]
    fn mul_difference_of_squares() {
        let a = zpoly(&["1", "1"], 2);
        let b = zpoly(&["1", "-1"], 2);
        assert_eq!(a.mul(&b).unwrap(), zpoly(&["1", "0", "-1"], 2));
    }

    #[test]
    fn mul_truncates_iota() {
        let orders = Orders::new(1, 0, 0);
        let iota = MultiSeries::<Q>::variable(1, orders, Var::Iota(0)).unwrap();
        assert!(iota.mul(&iota).unwrap().is_zero());
    }

    #[test]
    fn exp_squared_is_exp_of_double() {
        let e = zpoly(&["1", "1", "1/2", "1/6"], 3);
        let e2 = zpoly(&["1", "2", "2", "4/3"], 3);
        assert_eq!(e.mul(&e).unwrap(), e2);
    }

    #[test]
    fn exp_of_z() {
        let z = zpoly(&["0", "1"], 3);
        assert_eq!(z.exp_series().unwrap(), zpoly(&["1", "1", "1/2", "1/6"], 3));
        let zero = MultiSeries::<Q>::zero(0, Orders::new(0, 3, 0));
        assert_eq!(zero.exp_series().unwrap(), zpoly(&["1"], 3));
        assert_eq!(zpoly(&["1", "1"], 3).exp_series(), Err(SeriesError::NonzeroConstant));
    }

    #[test]
    fn exp_cross_term() {
        let orders = Orders::new(0, 2, 2);
        let z = MultiSeries::<Q>::variable(0, orders, Var::Z).unwrap();
        let h = MultiSeries::<Q>::variable(0, orders, Var::H).unwrap();
        let e = z.add(&h).unwrap().exp_series().unwrap();
        assert_eq!(e.coefficient(&MultiIndex::new(vec![], 1, 1)), q("1"));
        assert_eq!(e.coefficient(&MultiIndex::new(vec![], 2, 2)), q("1/4"));
    }

    #[test]
    fn derive_examples() {
        let z2 = zpoly(&["0", "0", "1"], 2);
        let d = z2.derive(Var::Z).unwrap();
        assert_eq!(d, zpoly(&["0", "2"], 1));

        let orders = Orders::new(2, 0, 0);
        let i1 = MultiSeries::<Q>::variable(2, orders, Var::Iota(0)).unwrap();
        let i2 = MultiSeries::<Q>::variable(2, orders, Var::Iota(1)).unwrap();
        let d = i1.mul(&i2).unwrap().derive(Var::Iota(0)).unwrap();
        assert_eq!(d, i2.truncate(Orders::new(1, 0, 0)));
        assert_eq!(i1.derive(Var::Iota(5)), Err(SeriesError::UnknownVariable(Var::Iota(5))));

        let orders = Orders::new(0, 3, 3);
        let z = MultiSeries::<Q>::variable(0, orders, Var::Z).unwrap();
        let h = MultiSeries::<Q>::variable(0, orders, Var::H).unwrap();
        let e = z.mul(&h).unwrap().exp_series().unwrap();
        let d = e.derive(Var::H).unwrap().at_zero(Var::H).unwrap();
        assert_eq!(d, z.truncate(d.orders()));
    }

    #[test]
    fn dimension_mismatch() {
        let a = MultiSeries::<Q>::one(1, Orders::new(2, 0, 0));
        let b = MultiSeries::<Q>::one(2, Orders::new(2, 0, 0));
        assert!(matches!(a.add(&b), Err(SeriesError::DimensionMismatch { .. })));
        assert!(matches!(a.mul(&b), Err(SeriesError::DimensionMismatch { .. })));
    }

    #[test]
    fn strict_constructor_rejects_out_of_box() {
        let orders = Orders::new(1, 1, 1);
        let err = MultiSeries::from_terms(1, orders, [(MultiIndex::new(vec![2], 0, 0), q("1"))]);
        assert!(matches!(err, Err(SeriesError::OutOfBounds { .. })));
        let dup = MultiSeries::from_terms(
            1,
            orders,
            [(MultiIndex::new(vec![1], 0, 0), q("1")), (MultiIndex::new(vec![1], 0, 0), q("2"))],
        );
        assert!(matches!(dup, Err(SeriesError::Duplicate { .. })));
    }
}
