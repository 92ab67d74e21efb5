//! Complex coefficient fields: exact Gaussian rationals and 64-bit floats.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Tag naming a coefficient backend in serialized files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Rational,
    Float,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Rational => "rational",
            FieldKind::Float => "float",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldKind {
    type Err = ScalarParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rational" => Ok(FieldKind::Rational),
            "float" => Ok(FieldKind::Float),
            other => Err(ScalarParseError::UnknownField(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarParseError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("non-finite value `{0}`")]
    NonFinite(String),
    #[error("exponent out of range in `{0}`")]
    ExponentRange(String),
    #[error("unknown field `{0}` (expected \"rational\" or \"float\")")]
    UnknownField(String),
    #[error("{found} data cannot be read by the {expected} backend")]
    FieldMismatch { expected: FieldKind, found: FieldKind },
}

/// A field of complex scalars.
///
/// `is_zero` is exact for both backends: the series algebra prunes only true zeros.
/// Approximate comparisons go through [`Scalar::distance`].
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const KIND: FieldKind;

    fn zero() -> Self;
    fn one() -> Self;
    /// The imaginary unit.
    fn i() -> Self;
    /// `num/den` as a real scalar. Panics when `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Option<Self>;
    fn conj(&self) -> Self;
    fn to_c64(&self) -> Complex64;
    /// Float backend: the value itself. Exact backend: `None`.
    fn from_c64(v: Complex64) -> Option<Self>;
    /// Best representation of a numerically computed value. The exact backend
    /// reconstructs a small-denominator rational and returns `None` if none fits.
    fn reconstruct(v: Complex64) -> Option<Self>;
    /// `exp(i x)`. The exact backend only supports `x = 0`.
    fn exp_i(x: &Self) -> Option<Self>;
    fn parse_parts(re: &str, im: &str) -> Result<Self, ScalarParseError>;
    fn format_parts(&self) -> (String, String);

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }

    fn abs(&self) -> f64 {
        self.to_c64().norm()
    }

    fn distance(&self, other: &Self) -> f64 {
        (self.to_c64() - other.to_c64()).norm()
    }

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|inv| self.clone() * inv)
    }

    /// Integer power; negative exponents invert.
    fn powi(&self, e: i64) -> Option<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq.clone();
            }
            e >>= 1;
            if e > 0 {
                sq = sq.clone() * sq;
            }
        }
        Some(acc)
    }

    /// Real part, as a field element.
    fn real_part(&self) -> Self {
        let two = Self::from_int(2);
        (self.clone() + self.conj()).div(&two).expect("2 is invertible")
    }

    /// Imaginary part, as a (real) field element.
    fn imag_part(&self) -> Self {
        let two_i = Self::from_int(2) * Self::i();
        (self.clone() - self.conj()).div(&two_i).expect("2i is invertible")
    }
}

/// Gaussian rationals `re + i·im` with arbitrary-precision parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactRationalComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactRationalComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Self { re, im: BigRational::zero() }
    }
}

impl Add for ExactRationalComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for ExactRationalComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Mul for ExactRationalComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Self::real(self.re * rhs.re);
        }
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        Self { re, im }
    }
}

impl Neg for ExactRationalComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}

impl fmt::Display for ExactRationalComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// Continued-fraction reconstruction of a rational with denominator at most `max_den`.
fn reconstruct_real(v: f64, max_den: i64, tol: f64) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    if v.abs() <= tol {
        return Some(BigRational::zero());
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - v).abs() <= tol * v.abs().max(1.0) {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = x - a;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Parses "p/q", an integer, or an exact decimal such as "-1.25e-3".
pub fn parse_rational(s: &str) -> Result<BigRational, ScalarParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ScalarParseError::Empty);
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_bigint(p.trim(), s)?;
        let q = parse_bigint(q.trim(), s)?;
        if q.is_zero() {
            return Err(ScalarParseError::ZeroDenominator(s.to_string()));
        }
        return Ok(BigRational::new(p, q));
    }
    parse_decimal(s)
}

fn parse_bigint(part: &str, whole: &str) -> Result<BigInt, ScalarParseError> {
    let digits = part.strip_prefix(['+', '-']).unwrap_or(part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ScalarParseError::Invalid(whole.to_string()));
    }
    part.parse::<BigInt>().map_err(|_| ScalarParseError::Invalid(whole.to_string()))
}

fn parse_decimal(s: &str) -> Result<BigRational, ScalarParseError> {
    let invalid = || ScalarParseError::Invalid(s.to_string());
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| invalid())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(invalid());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(invalid());
    }
    let scale = exponent - frac_part.len() as i64;
    if scale.abs() > 4096 {
        return Err(ScalarParseError::ExponentRange(s.to_string()));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| invalid())? };
    if negative {
        num = -num;
    }
    let ten = BigInt::from(10u32);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 { BigRational::from_integer(num * pow) } else { BigRational::new(num, pow) })
}

fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Scalar for ExactRationalComplex {
    const KIND: FieldKind = FieldKind::Rational;

    fn zero() -> Self {
        Self::real(BigRational::zero())
    }

    fn one() -> Self {
        Self::real(BigRational::one())
    }

    fn i() -> Self {
        Self { re: BigRational::zero(), im: BigRational::one() }
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::real(BigRational::new(num.into(), den.into()))
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(Self::real(self.re.recip()));
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(Self { re: &self.re / &norm, im: -(&self.im / &norm) })
    }

    fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    fn from_c64(_v: Complex64) -> Option<Self> {
        None
    }

    fn reconstruct(v: Complex64) -> Option<Self> {
        const MAX_DEN: i64 = 1_000_000;
        const TOL: f64 = 5e-13;
        Some(Self { re: reconstruct_real(v.re, MAX_DEN, TOL)?, im: reconstruct_real(v.im, MAX_DEN, TOL)? })
    }

    fn exp_i(x: &Self) -> Option<Self> {
        x.is_zero().then(Self::one)
    }

    fn parse_parts(re: &str, im: &str) -> Result<Self, ScalarParseError> {
        Ok(Self { re: parse_rational(re)?, im: parse_rational(im)? })
    }

    fn format_parts(&self) -> (String, String) {
        (format_rational(&self.re), format_rational(&self.im))
    }

    fn real_part(&self) -> Self {
        Self::real(self.re.clone())
    }

    fn imag_part(&self) -> Self {
        Self::real(self.im.clone())
    }
}

/// Double-precision complex scalars.
#[derive(Clone, Copy, Debug, Default)]
pub struct FloatComplex(pub Complex64);

impl FloatComplex {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }
}

impl From<Complex64> for FloatComplex {
    fn from(v: Complex64) -> Self {
        Self(v)
    }
}

impl Add for FloatComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for FloatComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Mul for FloatComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Neg for FloatComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl fmt::Display for FloatComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Complex64 { re, im } = self.0;
        if im == 0.0 {
            write!(f, "{re:?}")
        } else if im < 0.0 {
            write!(f, "{re:?}-{:?}i", -im)
        } else {
            write!(f, "{re:?}+{im:?}i")
        }
    }
}

fn parse_float(s: &str) -> Result<f64, ScalarParseError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ScalarParseError::Empty);
    }
    let v = if t.contains('/') {
        rational_to_f64(&parse_rational(t)?)
    } else {
        let digits_ok = t.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'));
        if !digits_ok {
            return Err(ScalarParseError::Invalid(s.to_string()));
        }
        t.parse::<f64>().map_err(|_| ScalarParseError::Invalid(s.to_string()))?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ScalarParseError::NonFinite(s.to_string()))
    }
}

impl Scalar for FloatComplex {
    const KIND: FieldKind = FieldKind::Float;

    fn zero() -> Self {
        Self(Complex64::new(0.0, 0.0))
    }

    fn one() -> Self {
        Self(Complex64::new(1.0, 0.0))
    }

    fn i() -> Self {
        Self(Complex64::new(0.0, 1.0))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self(Complex64::new(num as f64 / den as f64, 0.0))
    }

    fn is_zero(&self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Self(self.0.inv()))
        }
    }

    fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    fn to_c64(&self) -> Complex64 {
        self.0
    }

    fn from_c64(v: Complex64) -> Option<Self> {
        Some(Self(v))
    }

    fn reconstruct(v: Complex64) -> Option<Self> {
        Some(Self(v))
    }

    fn exp_i(x: &Self) -> Option<Self> {
        Some(Self((Complex64::i() * x.0).exp()))
    }

    fn parse_parts(re: &str, im: &str) -> Result<Self, ScalarParseError> {
        Ok(Self(Complex64::new(parse_float(re)?, parse_float(im)?)))
    }

    fn format_parts(&self) -> (String, String) {
        (format!("{:?}", self.0.re), format!("{:?}", self.0.im))
    }

    fn real_part(&self) -> Self {
        Self(Complex64::new(self.0.re, 0.0))
    }

    fn imag_part(&self) -> Self {
        Self(Complex64::new(self.0.im, 0.0))
    }
}

/// Converts a parsed scalar from a document tagged `found` into backend `F`.
pub fn parse_tagged<F: Scalar>(found: FieldKind, re: &str, im: &str) -> Result<F, ScalarParseError> {
    if found == FieldKind::Float && F::KIND == FieldKind::Rational {
        return Err(ScalarParseError::FieldMismatch { expected: F::KIND, found });
    }
    F::parse_parts(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> ExactRationalComplex {
        ExactRationalComplex::parse_parts(s, "0").unwrap()
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-1.25e-1").unwrap(), BigRational::new((-1).into(), 8.into()));
        assert_eq!(parse_rational("7").unwrap(), BigRational::from_integer(7.into()));
        assert!(matches!(parse_rational("1/0"), Err(ScalarParseError::ZeroDenominator(_))));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/+").is_err());
        assert!(parse_rational(".").is_err());
        assert!(parse_rational("1e99999").is_err());
    }

    #[test]
    fn exact_thirds_sum_to_one() {
        assert_eq!(q("1/3") + q("2/3"), ExactRationalComplex::one());
    }

    #[test]
    fn exact_inverse_of_gaussian() {
        let z = ExactRationalComplex::parse_parts("3/5", "4/5").unwrap();
        assert_eq!(z.clone() * z.inv().unwrap(), ExactRationalComplex::one());
        assert_eq!(z.inv().unwrap(), z.conj());
        assert!(ExactRationalComplex::zero().inv().is_none());
    }

    #[test]
    fn powi_negative() {
        let two = q("2");
        assert_eq!(two.powi(-3).unwrap(), q("1/8"));
        assert_eq!(two.powi(0).unwrap(), q("1"));
    }

    #[test]
    fn format_round_trip() {
        let z = ExactRationalComplex::parse_parts("-22/7", "5").unwrap();
        let (re, im) = z.format_parts();
        assert_eq!(ExactRationalComplex::parse_parts(&re, &im).unwrap(), z);
        let f = FloatComplex::new(0.1, -2.5e-300);
        let (re, im) = f.format_parts();
        let g = FloatComplex::parse_parts(&re, &im).unwrap();
        assert_eq!(g.0, f.0);
    }

    #[test]
    fn reconstruct_small_rationals() {
        let v = ExactRationalComplex::reconstruct(Complex64::new(1.0 / 7.0, -0.6)).unwrap();
        assert_eq!(v, ExactRationalComplex::parse_parts("1/7", "-3/5").unwrap());
        assert!(ExactRationalComplex::reconstruct(Complex64::new(std::f64::consts::PI, 0.0)).is_none());
    }

    #[test]
    fn float_rejected_by_exact_backend() {
        let err = parse_tagged::<ExactRationalComplex>(FieldKind::Float, "1", "0").unwrap_err();
        assert!(matches!(err, ScalarParseError::FieldMismatch { .. }));
        let ok = parse_tagged::<FloatComplex>(FieldKind::Rational, "1/4", "0").unwrap();
        assert_eq!(ok.0.re, 0.25);
    }

    #[test]
    fn real_and_imag_parts() {
        let z = ExactRationalComplex::parse_parts("1/2", "-3").unwrap();
        assert_eq!(z.real_part(), q("1/2"));
        assert_eq!(z.imag_part(), q("-3"));
        let f = FloatComplex::new(0.5, -3.0);
        assert_eq!(f.imag_part().0.re, -3.0);
    }
}
