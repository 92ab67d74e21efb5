use bnftrace::classical::{map_to_json, TaylorMap};
use bnftrace::hypcalc::{Exponent, ExponentSeries};
use bnftrace::qbnf::json::bnf_to_json;
use bnftrace::qbnf::QuantumBnf;
use bnftrace::recover::monomials_up_to;
use bnftrace::series::{ExactRationalComplex, FloatComplex, MultiIndex, MultiSeries, Orders, Scalar};
use clap::ValueEnum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::failure::{CmdResult, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    /// n = 1, μ(z) = 2 ln 2 + z, F = ι²/7 + h(ι/3 + 1/5), exact.
    Rt1,
    /// n = 2, μ = (i, ln 3), random F of degree ≤ 3 in orders (3,2,2); uses --seed.
    FloatMixed,
    /// Rotation by angle 1 as a degree-7 Taylor map.
    RotationMap,
    /// Time-one flow of p = -ι + ι²/10 to degree 7.
    TwistFlowMap,
}

pub fn run(cfg: &RunConfig, kind: FixtureKind) -> CmdResult {
    let text = match kind {
        FixtureKind::Rt1 => bnf_to_json(&rt1()?),
        FixtureKind::FloatMixed => bnf_to_json(&float_mixed(cfg.seed)?),
        FixtureKind::RotationMap => map_to_json(&rotation_map()?),
        FixtureKind::TwistFlowMap => map_to_json(&twist_flow_map()?),
    };
    cfg.emit(&text)
}

fn schema<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Schema(e.to_string())
}

fn rt1() -> Result<QuantumBnf<ExactRationalComplex>, Failure> {
    type Q = ExactRationalComplex;
    let mu = ExponentSeries { base: Exponent::from_half_exp(Q::from_int(2)).map_err(schema)?, taylor: vec![Q::one()] };
    let f = MultiSeries::from_terms(
        1,
        Orders::new(4, 3, 3),
        [
            (MultiIndex::new(vec![2], 0, 0), Q::from_ratio(1, 7)),
            (MultiIndex::new(vec![1], 0, 1), Q::from_ratio(1, 3)),
            (MultiIndex::new(vec![0], 0, 1), Q::from_ratio(1, 5)),
        ],
    )
    .map_err(schema)?;
    QuantumBnf::new(vec![mu], f, 1e-9).map_err(schema)
}

fn float_mixed(seed: u64) -> Result<QuantumBnf<FloatComplex>, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders = Orders::new(3, 2, 2);
    let mus = [Complex64::new(0.0, 1.0), Complex64::new(3f64.ln(), 0.0)];
    let mu = mus
        .iter()
        .map(|&m| {
            let taylor = (0..orders.z)
                .map(|_| {
                    let c = rng.gen_range(-0.3..0.3);
                    if m.re == 0.0 {
                        FloatComplex::new(0.0, c)
                    } else {
                        FloatComplex::new(c, 0.0)
                    }
                })
                .collect();
            ExponentSeries { base: Exponent::float(m), taylor }
        })
        .collect();
    let mut terms = Vec::new();
    for alpha in monomials_up_to(2, orders.iota) {
        let a: u32 = alpha.iter().sum();
        for l in 0..=orders.h {
            if l + a > 3 || (l == 0 && a < 2) {
                continue;
            }
            for z in 0..=orders.z {
                let c = FloatComplex::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.2..0.2));
                terms.push((MultiIndex::new(alpha.clone(), z, l), c));
            }
        }
    }
    let f = MultiSeries::from_terms(2, orders, terms).map_err(schema)?;
    QuantumBnf::new(mu, f, 1e-9).map_err(schema)
}

fn var(o: Orders, e: [u32; 2]) -> MultiSeries<FloatComplex> {
    MultiSeries::monomial(2, o, MultiIndex::new(e.to_vec(), 0, 0), FloatComplex::new(1.0, 0.0)).expect("in box")
}

fn rotation_map() -> Result<TaylorMap<FloatComplex>, Failure> {
    let o = Orders::new(7, 0, 0);
    let (c, s) = (FloatComplex::new(1f64.cos(), 0.0), FloatComplex::new(1f64.sin(), 0.0));
    let (x, xi) = (var(o, [1, 0]), var(o, [0, 1]));
    let xn = x.scale(&c).sub(&xi.scale(&s)).map_err(schema)?;
    let xin = x.scale(&s).add(&xi.scale(&c)).map_err(schema)?;
    TaylorMap::new(1, 7, vec![xn, xin]).map_err(schema)
}

/// Rotation by `ω(ι) = 1 − ι/5` with `ι = (x² + ξ²)/2`.
fn twist_flow_map() -> Result<TaylorMap<FloatComplex>, Failure> {
    let o = Orders::new(7, 0, 0);
    let (x, xi) = (var(o, [1, 0]), var(o, [0, 1]));
    let iota = var(o, [2, 0]).add(&var(o, [0, 2])).map_err(schema)?.scale(&FloatComplex::new(0.5, 0.0));
    let rot = |sign: f64| -> Result<MultiSeries<FloatComplex>, Failure> {
        let e = iota.scale(&FloatComplex::new(0.0, -0.2 * sign)).exp_series().map_err(schema)?;
        Ok(e.scale(&FloatComplex(Complex64::new(0.0, sign).exp())))
    };
    let (plus, minus) = (rot(1.0)?, rot(-1.0)?);
    let cos = plus.add(&minus).map_err(schema)?.scale(&FloatComplex::new(0.5, 0.0));
    let sin = plus.sub(&minus).map_err(schema)?.scale(&FloatComplex::new(0.0, -0.5));
    let xn = cos.mul(&x).map_err(schema)?.sub(&sin.mul(&xi).map_err(schema)?).map_err(schema)?;
    let xin = sin.mul(&x).map_err(schema)?.add(&cos.mul(&xi).map_err(schema)?).map_err(schema)?;
    // the exponentials leave rounding-level imaginary parts
    let real = |s: &MultiSeries<FloatComplex>| s.map_coefficients(|c| FloatComplex::new(c.0.re, 0.0));
    TaylorMap::new(1, 7, vec![real(&xn), real(&xin)]).map_err(schema)
}
