//! Quantum Birkhoff normal form data and the forward trace engine.
//!
//! The normal form is `G = ⟨ι, μ(z)⟩ + F(ι, z; h)` with `F = Σ_l h^l F_l(ι, z)`.
//! The trace of the k-th power is
//! `e^{-ik f₀₀} · exp(-ik Σ_j h^j f_j(z, (i/k)∂_μ)) ∏_j (1/2)csch(kμ_j/2) |_{μ = μ(z)}`
//! where `f_j(z, y) = Σ_{l + |α| = j + 1} F_{l,α}(z) y^α` and `f₀₀ = F_{1,0}(0)`.

mod blocks;
pub mod json;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

pub use blocks::{BlockKind, SpectrumBlocks};

use crate::classical::resonance::{check_nonresonance, ResonanceWitness, DEFAULT_RESONANCE_TOL};
use crate::hypcalc::{CschExpression, ExponentSeries, HypError, SeriesEvaluator, DEFAULT_POLE_TOL};
use crate::series::{MultiIndex, MultiSeries, Orders, Scalar, SeriesError, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QbnfError {
    #[error(transparent)]
    Hyp(#[from] HypError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("malformed normal form: {0}")]
    Malformed(String),
    #[error("invalid spectrum: {0}")]
    InvalidBlocks(String),
    #[error("resonant exponents: Σ k_j μ_j = 2πi·m with {witness} (order ≤ {order})")]
    Resonant { witness: ResonanceWitness, order: u32 },
    #[error("requested orders (z≤{req_z}, h≤{req_h}) exceed the available (z≤{have_z}, h≤{have_h})")]
    OrderOverflow { req_z: u32, req_h: u32, have_z: u32, have_h: u32 },
    #[error("degenerate orbit: |2 sinh({k}·μ_{index}/2)| = {modulus:e}", index = .index + 1)]
    Degenerate { index: usize, k: i64, modulus: f64 },
    #[error("k_max must be at least 1")]
    ZeroKmax,
}

impl QbnfError {
    /// True for failures of the mathematics rather than of the input's shape.
    pub fn is_math(&self) -> bool {
        matches!(
            self,
            QbnfError::Hyp(HypError::Pole { .. } | HypError::Nonconvergent { .. })
                | QbnfError::Resonant { .. }
                | QbnfError::Degenerate { .. }
        )
    }
}

/// Tolerances shared by the forward engine.
#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    pub pole_tol: f64,
    pub resonance_tol: f64,
    pub parallel: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { pole_tol: DEFAULT_POLE_TOL, resonance_tol: DEFAULT_RESONANCE_TOL, parallel: false }
    }
}

/// The data `(μ(z), F(ι, z; h))`.
#[derive(Clone, Debug)]
pub struct QuantumBnf<F> {
    mu: Vec<ExponentSeries<F>>,
    f: MultiSeries<F>,
    blocks: SpectrumBlocks,
}

impl<F: Scalar> QuantumBnf<F> {
    pub fn new(mu: Vec<ExponentSeries<F>>, f: MultiSeries<F>, tol: f64) -> Result<Self, QbnfError> {
        if mu.is_empty() {
            return Err(QbnfError::Malformed("at least one exponent is required".into()));
        }
        if f.n_actions() != mu.len() {
            return Err(QbnfError::Malformed(format!(
                "F has {} action variables but {} exponents were given",
                f.n_actions(),
                mu.len()
            )));
        }
        for (j, m) in mu.iter().enumerate() {
            if m.taylor.len() > f.orders().z as usize {
                return Err(QbnfError::Malformed(format!(
                    "μ_{} has {} Taylor coefficients, more than N_z = {}",
                    j + 1,
                    m.taylor.len(),
                    f.orders().z
                )));
            }
        }
        for (idx, _) in f.terms() {
            if idx.h == 0 && idx.iota_degree() <= 1 {
                return Err(QbnfError::Malformed(format!(
                    "F has a constant or linear term at h⁰ (ι^{:?} z^{}); F₀ must be O(ι²)",
                    idx.iota, idx.z
                )));
            }
        }
        let values: Vec<Complex64> = mu.iter().map(|m| m.base.mu()).collect();
        let blocks = SpectrumBlocks::classify(&values, tol)?;
        Ok(Self { mu, f, blocks })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[ExponentSeries<F>] {
        &self.mu
    }

    pub fn f(&self) -> &MultiSeries<F> {
        &self.f
    }

    pub fn blocks(&self) -> &SpectrumBlocks {
        &self.blocks
    }

    /// `f₀₀ = F_1(0, 0)`, the constant phase.
    pub fn f00(&self) -> F {
        self.f.coefficient(&MultiIndex::new(vec![0; self.n()], 0, 1))
    }

    /// Reorders the variables into the canonical block order.
    pub fn canonicalize(&self) -> Self {
        let perm = self.blocks.canonical_permutation();
        let mu = perm.iter().map(|&j| self.mu[j].clone()).collect();
        let mut terms = Vec::with_capacity(self.f.len());
        for (idx, c) in self.f.terms() {
            let iota = perm.iter().map(|&j| idx.iota[j]).collect();
            terms.push((MultiIndex::new(iota, idx.z, idx.h), c.clone()));
        }
        let f = MultiSeries::from_terms(self.n(), self.f.orders(), terms).expect("permutation keeps the box");
        Self { mu, f, blocks: self.blocks.permuted(&perm) }
    }

    pub fn check_nonresonance(&self, order: u32, tol: f64) -> Result<(), QbnfError> {
        let r = check_nonresonance(self.blocks.mu(), order, tol);
        match r.witness {
            Some(witness) => Err(QbnfError::Resonant { witness, order }),
            None => Ok(()),
        }
    }

    /// Structural equality: same exponents, jets and F (exact for the
    /// rational backend, within `tol` for floats).
    pub fn distance(&self, other: &Self) -> f64 {
        if self.n() != other.n() {
            return f64::INFINITY;
        }
        let mut worst = self.f.max_abs_diff(&other.f);
        for (a, b) in self.mu.iter().zip(&other.mu) {
            worst = worst.max(a.base.half_exp().distance(b.base.half_exp()));
            let len = a.taylor.len().max(b.taylor.len());
            for q in 1..=len {
                worst = worst.max(a.coefficient(q).distance(&b.coefficient(q)));
            }
        }
        worst
    }
}

impl<F: Scalar> QuantumBnf<F> {
    /// Largest coefficientwise relative error against `reference`; terms
    /// absent from `reference` count with their absolute size.
    pub fn relative_error(&self, reference: &Self) -> f64 {
        if self.n() != reference.n() {
            return f64::INFINITY;
        }
        let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for (idx, c) in reference.f.terms() {
            worst = worst.max(rel(self.f.coefficient(idx).to_c64(), c.to_c64()));
        }
        for (idx, c) in self.f.terms() {
            if reference.f.get(idx).is_none() {
                worst = worst.max(c.abs());
            }
        }
        for (a, b) in self.mu.iter().zip(&reference.mu) {
            worst = worst.max(rel(a.base.mu(), b.base.mu()));
            for q in 1..=a.taylor.len().max(b.taylor.len()) {
                worst = worst.max(rel(a.coefficient(q).to_c64(), b.coefficient(q).to_c64()));
            }
        }
        worst
    }
}

/// Exact equality; trailing zero Taylor coefficients of `μ(z)` are ignored.
impl<F: Scalar + PartialEq> PartialEq for QuantumBnf<F> {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n()
            && self.f == other.f
            && self.mu.iter().zip(&other.mu).all(|(a, b)| {
                let len = a.taylor.len().max(b.taylor.len());
                a.base.half_exp() == b.base.half_exp() && (1..=len).all(|q| a.coefficient(q) == b.coefficient(q))
            })
    }
}

/// Trace of one power: `tr U^k = e^{-ik·phase} Σ_{j,q} coefficients[z^q h^j]`.
#[derive(Clone, Debug)]
pub struct TracePower<F> {
    pub k: u32,
    pub coefficients: MultiSeries<F>,
    pub phase: F,
}

/// Expansion of `tr U^k` through `z^{n_z} h^{n_h}`.
pub fn trace_power<F: Scalar>(
    b: &QuantumBnf<F>,
    k: u32,
    n_z: u32,
    n_h: u32,
    opts: &TraceOptions,
) -> Result<TracePower<F>, QbnfError> {
    if k == 0 {
        return Err(QbnfError::ZeroKmax);
    }
    let have = b.f.orders();
    if n_z > have.z || n_h > have.h {
        return Err(QbnfError::OrderOverflow { req_z: n_z, req_h: n_h, have_z: have.z, have_h: have.h });
    }
    b.check_nonresonance(k, opts.resonance_tol)?;
    trace_power_unchecked(b, k, n_z, n_h, opts.pole_tol)
}

pub(crate) fn trace_power_unchecked<F: Scalar>(
    b: &QuantumBnf<F>,
    k: u32,
    n_z: u32,
    n_h: u32,
    pole_tol: f64,
) -> Result<TracePower<F>, QbnfError> {
    let n = b.n();
    let s_orders = Orders::new(2 * n_h, n_z, n_h);
    let minus_ik = -(F::i() * F::from_int(k as i64));
    let i_over_k = F::i() * F::from_ratio(1, k as i64);
    let mut s = MultiSeries::zero(n, s_orders);
    for (idx, c) in b.f.terms() {
        let (l, a, q) = (idx.h, idx.iota_degree(), idx.z);
        if q > n_z {
            continue;
        }
        match l + a {
            0 => unreachable!("rejected at construction"),
            1 if l == 0 => {
                return Err(QbnfError::Malformed("f₀ depends on y: F₀ has a linear term".into()));
            }
            1 if q == 0 => {}
            1 => s.add_term(MultiIndex::new(vec![0; n], q, 0), minus_ik.clone() * c.clone())?,
            _ => {
                let j = l + a - 1;
                if j > n_h {
                    continue;
                }
                let coeff = minus_ik.clone() * c.clone() * i_over_k.powi(a as i64).expect("power");
                s.add_term(MultiIndex::new(idx.iota.clone(), q, j), coeff)?;
            }
        }
    }
    let e = s.exp_series()?;
    let mut evaluator = SeriesEvaluator::new(&b.mu, k, n_z, pole_tol)?;
    let base = CschExpression::<F>::csch_product(n, k)?;
    let mut cache: BTreeMap<Vec<u32>, CschExpression<F>> = BTreeMap::new();
    let mut out = MultiSeries::zero(0, Orders::new(0, n_z, n_h));
    for (idx, c) in e.terms() {
        let expr = derivative_cached(&mut cache, &base, &idx.iota)?;
        let values = evaluator.eval_coefficients(&expr)?;
        for (q2, v) in values.into_iter().enumerate() {
            let q = idx.z + q2 as u32;
            if q <= n_z {
                out.add_term(MultiIndex::new(vec![], q, idx.h), c.clone() * v)?;
            }
        }
    }
    Ok(TracePower { k, coefficients: out, phase: b.f00() })
}

fn derivative_cached<F: Scalar>(
    cache: &mut BTreeMap<Vec<u32>, CschExpression<F>>,
    base: &CschExpression<F>,
    alpha: &[u32],
) -> Result<CschExpression<F>, HypError> {
    if let Some(e) = cache.get(alpha) {
        return Ok(e.clone());
    }
    let out = match alpha.iter().position(|&a| a > 0) {
        None => base.clone(),
        Some(j) => {
            let mut lower = alpha.to_vec();
            lower[j] -= 1;
            derivative_cached(cache, base, &lower)?.apply_derivative(j)?
        }
    };
    cache.insert(alpha.to_vec(), out.clone());
    Ok(out)
}

/// The geometric leading term `I'(z) e^{iνπ/2} / ∏_j |2 sinh(kμ_j(z)/2)|`,
/// with the oscillating factor `e^{ikI(z)/h}` kept symbolic.
#[derive(Clone, Debug)]
pub struct LeadingTerm<F> {
    pub k: i64,
    pub maslov: u8,
    pub amplitude: MultiSeries<F>,
    /// Phase function: the full term is `e^{i·k·action(z)/h}·amplitude(z)`.
    pub action: MultiSeries<F>,
}

pub fn leading_term<F: Scalar>(
    action: &MultiSeries<F>,
    maslov: u8,
    mu_of_z: &[ExponentSeries<F>],
    blocks: &SpectrumBlocks,
    k: i64,
    n_z: u32,
    tol: f64,
) -> Result<LeadingTerm<F>, QbnfError> {
    if k == 0 {
        return Err(QbnfError::Malformed("leading term needs k ≠ 0".into()));
    }
    if action.n_actions() != 0 {
        return Err(QbnfError::Malformed("action must be a z-series".into()));
    }
    if mu_of_z.len() != blocks.n() {
        return Err(QbnfError::Malformed("exponent series and blocks disagree in length".into()));
    }
    if action.orders().z < n_z + 1 {
        return Err(QbnfError::OrderOverflow { req_z: n_z + 1, req_h: 0, have_z: action.orders().z, have_h: 0 });
    }
    let kk = k.unsigned_abs() as u32;
    check_jet_reality(mu_of_z, blocks, tol)?;
    let mut unit = F::one();
    for (j, m) in mu_of_z.iter().enumerate() {
        let mu0 = m.base.mu();
        let modulus = 2.0 * (mu0 * (kk as f64 / 2.0)).sinh().norm();
        if modulus < tol {
            return Err(QbnfError::Degenerate { index: j, k, modulus });
        }
        if blocks.kinds()[j] == BlockKind::Elliptic {
            let s = (kk as f64 * mu0.im / 2.0).sin();
            unit = unit * if s > 0.0 { F::i() } else { -F::i() };
        }
    }
    let base = CschExpression::<F>::csch_product(blocks.n(), kk)?;
    let product = base.eval_series_in_z(mu_of_z, n_z, tol)?;
    let derivative = action.derive(Var::Z)?.truncate(Orders::new(0, n_z, 0));
    let phase = F::i().powi(maslov as i64 % 4).expect("power");
    let amplitude = derivative.mul(&product)?.scale(&(unit * phase));
    let action_k = action.scale(&F::from_int(k));
    Ok(LeadingTerm { k, maslov: maslov % 4, amplitude, action: action_k })
}

/// Elliptic jets must be imaginary, real hyperbolic jets real and complex
/// pairs conjugate, so that `|2 sinh(kμ(z)/2)|` is analytic in z.
fn check_jet_reality<F: Scalar>(mu: &[ExponentSeries<F>], blocks: &SpectrumBlocks, tol: f64) -> Result<(), QbnfError> {
    for (j, m) in mu.iter().enumerate() {
        for (q, c) in m.taylor.iter().enumerate() {
            let bad = match blocks.kinds()[j] {
                BlockKind::Elliptic => c.real_part().abs() > tol,
                BlockKind::RealHyperbolic => c.imag_part().abs() > tol,
                BlockKind::ComplexHyperbolic => {
                    let p = blocks.partner(j).expect("paired");
                    c.conj().distance(&mu[p].coefficient(q + 1)) > tol
                }
            };
            if bad {
                return Err(QbnfError::Malformed(format!(
                    "Taylor coefficient z^{} of μ_{} = {c} is inconsistent with its {} block",
                    q + 1,
                    j + 1,
                    blocks.kinds()[j].as_str()
                )));
            }
        }
    }
    Ok(())
}

/// Trace expansions for `k = 1..k_max` together with action and Maslov data.
///
/// True traces are `e^{ik·S(z)/h} e^{-ik·phase} Σ_{j,q} a_{j,k,q} z^q h^j`.
#[derive(Clone, Debug)]
pub struct TraceData<F> {
    n_z: u32,
    n_h: u32,
    action: MultiSeries<F>,
    maslov: BTreeMap<u32, u8>,
    phase: F,
    coefficients: BTreeMap<u32, MultiSeries<F>>,
}

impl<F: Scalar> TraceData<F> {
    pub fn new(
        action: MultiSeries<F>,
        maslov: BTreeMap<u32, u8>,
        phase: F,
        coefficients: BTreeMap<u32, MultiSeries<F>>,
        n_z: u32,
        n_h: u32,
        tol: f64,
    ) -> Result<Self, QbnfError> {
        if action.n_actions() != 0 {
            return Err(QbnfError::Malformed("action must be a z-series".into()));
        }
        for (idx, c) in action.terms() {
            if idx.h != 0 || c.imag_part().abs() > tol {
                return Err(QbnfError::Malformed(format!("action coefficient at z^{} is not real: {c}", idx.z)));
            }
        }
        if coefficients.is_empty() {
            return Err(QbnfError::ZeroKmax);
        }
        for (pos, (&k, s)) in coefficients.iter().enumerate() {
            if k != pos as u32 + 1 {
                return Err(QbnfError::Malformed(format!("trace powers must be 1..k_max; k = {} is missing", pos + 1)));
            }
            if s.n_actions() != 0 || s.orders().z < n_z || s.orders().h < n_h {
                return Err(QbnfError::Malformed(format!("trace k = {k} does not cover orders (z≤{n_z}, h≤{n_h})")));
            }
        }
        let maslov = maslov.into_iter().map(|(k, v)| (k, v % 4)).collect();
        let coefficients = coefficients.into_iter().map(|(k, s)| (k, s.truncate(Orders::new(0, n_z, n_h)))).collect();
        Ok(Self { n_z, n_h, action, maslov, phase, coefficients })
    }

    pub fn k_max(&self) -> u32 {
        self.coefficients.len() as u32
    }

    pub fn n_z(&self) -> u32 {
        self.n_z
    }

    pub fn n_h(&self) -> u32 {
        self.n_h
    }

    pub fn action(&self) -> &MultiSeries<F> {
        &self.action
    }

    pub fn maslov(&self, k: u32) -> u8 {
        self.maslov.get(&k).copied().unwrap_or(0)
    }

    pub fn maslov_map(&self) -> &BTreeMap<u32, u8> {
        &self.maslov
    }

    pub fn phase(&self) -> &F {
        &self.phase
    }

    pub fn trace(&self, k: u32) -> Option<&MultiSeries<F>> {
        self.coefficients.get(&k)
    }

    pub fn traces(&self) -> impl Iterator<Item = (u32, &MultiSeries<F>)> {
        self.coefficients.iter().map(|(&k, s)| (k, s))
    }

    /// `a_{j,k}` at `z^q`.
    pub fn coefficient(&self, k: u32, j: u32, q: u32) -> F {
        self.coefficients.get(&k).map(|s| s.coefficient(&MultiIndex::new(vec![], q, j))).unwrap_or_else(F::zero)
    }

    /// Multiplies `e^{-ik·phase}` into the coefficients when the backend can
    /// represent it, leaving phase zero.
    pub fn fold_phase(mut self) -> Self {
        if self.phase.is_zero() {
            return self;
        }
        if let Some(rho) = F::exp_i(&(-self.phase.clone())) {
            for (&k, s) in self.coefficients.iter_mut() {
                *s = s.scale(&rho.powi(k as i64).expect("power"));
            }
            self.phase = F::zero();
        }
        self
    }

    /// Largest coefficient distance to another trace set with the same phase convention.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = self.phase.distance(&other.phase);
        for (k, s) in &self.coefficients {
            match other.coefficients.get(k) {
                Some(t) => worst = worst.max(s.max_abs_diff(t)),
                None => return f64::INFINITY,
            }
        }
        if other.coefficients.len() != self.coefficients.len() {
            return f64::INFINITY;
        }
        worst
    }
}

impl<F: Scalar + PartialEq> PartialEq for TraceData<F> {
    fn eq(&self, other: &Self) -> bool {
        self.n_z == other.n_z
            && self.n_h == other.n_h
            && self.action == other.action
            && self.maslov == other.maslov
            && self.phase == other.phase
            && self.coefficients == other.coefficients
    }
}

/// Runs the forward engine for `k = 1..k_max`.
pub fn make_trace_data<F: Scalar>(
    b: &QuantumBnf<F>,
    action: &MultiSeries<F>,
    maslov: &BTreeMap<u32, u8>,
    k_max: u32,
    n_z: u32,
    n_h: u32,
    opts: &TraceOptions,
) -> Result<TraceData<F>, QbnfError> {
    if k_max == 0 {
        return Err(QbnfError::ZeroKmax);
    }
    let have = b.f.orders();
    if n_z > have.z || n_h > have.h {
        return Err(QbnfError::OrderOverflow { req_z: n_z, req_h: n_h, have_z: have.z, have_h: have.h });
    }
    b.check_nonresonance(k_max, opts.resonance_tol)?;
    let run = |k: u32| trace_power_unchecked(b, k, n_z, n_h, opts.pole_tol);
    let powers: Vec<TracePower<F>> = if opts.parallel {
        (1..=k_max).into_par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        (1..=k_max).map(run).collect::<Result<_, _>>()?
    };
    let coefficients = powers.into_iter().map(|p| (p.k, p.coefficients)).collect();
    let maslov = (1..=k_max).map(|k| (k, maslov.get(&k).copied().unwrap_or(0) % 4)).collect();
    let data = TraceData::new(action.clone(), maslov, b.f00(), coefficients, n_z, n_h, opts.resonance_tol)?;
    Ok(data.fold_phase())
}
