//! Pairings of oscillatory orbit expansions `u(z,h) = e^{iI(z)/h} Σ_j a_j(z) h^j`
//! with test functions, and their inversion.
//!
//! With `ĝ(ζ) = ∫ e^{-itζ} g(t) dt`, the smeared pairing
//! `h⁻¹ ∫ ĝ(z/h) u(z,h) dz = e^{iI₀/h} Σ_p h^p b_p(g)` has
//! `b_p = Σ_m T[p,m] ∫ ĝ(ζ) ζ^m e^{iI₁ζ} dζ`, where `T[p,m]` is the coefficient
//! of `h^p ζ^m` in `exp(i Σ_{k≥1} I_{k+1} h^k ζ^{k+1}) · Σ a_{jl} h^{j+l} ζ^l`, and
//! the moments equal `2π (-i)^m g^{(m)}(I₁)`.
//!
//! Pairing values are stored divided by `2π` so that rational data stays exact.

pub mod json;

use std::collections::BTreeMap;

use crate::linalg::{solve_overdetermined, LinearSolveError, SolveOptions};
use crate::qbnf::{QbnfError, TraceData};
use crate::series::{FieldKind, MultiIndex, MultiSeries, Orders, Scalar, SeriesError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OscillatoryError {
    #[error("{0}")]
    Shape(String),
    #[error("{what} is not real (imaginary part {imag:e})")]
    NotReal { what: String, imag: f64 },
    #[error("leading amplitude a₀(0) vanishes")]
    ZeroLeadingAmplitude,
    #[error("test jet has {have} derivatives, order {order} needs {need}")]
    InsufficientJet { order: u32, need: usize, have: usize },
    #[error("order {requested} exceeds the expansion order {available}")]
    OrderTooHigh { requested: u32, available: u32 },
    #[error("test jet is based at {jet}, the orbit needs I₁ = {orbit}")]
    BasePointMismatch { jet: String, orbit: String },
    #[error("test-jet basis spans only {rank} of the {need} moments needed")]
    BasisDeficient { rank: usize, need: usize },
    #[error("inconsistent pairings: {what} (residual {residual:e})")]
    Inconsistent { what: String, residual: f64 },
    #[error("trace label k = {0} appears more than once")]
    DuplicateLabel(u32),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Trace(#[from] QbnfError),
}

impl OscillatoryError {
    /// False for malformed input, true for data that is well formed but
    /// mathematically unusable.
    pub fn is_math(&self) -> bool {
        !matches!(self, Self::Shape(_) | Self::NotReal { .. } | Self::Series(_))
    }
}

/// Values `g^{(m)}(I₁)`, `m = 0..jet.len()`, of a test function at its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TestJet<F> {
    base_point: F,
    jet: Vec<F>,
}

impl<F: Scalar> TestJet<F> {
    pub fn new(base_point: F, jet: Vec<F>) -> Result<Self, OscillatoryError> {
        if jet.is_empty() {
            return Err(OscillatoryError::Shape("a test jet needs at least g(I₁)".into()));
        }
        let imag = base_point.imag_part().abs();
        if !is_negligible::<F>(imag, 0.0, 1e-12) {
            return Err(OscillatoryError::NotReal { what: "test jet base point".into(), imag });
        }
        Ok(Self { base_point, jet })
    }

    pub fn base_point(&self) -> &F {
        &self.base_point
    }

    pub fn jet(&self) -> &[F] {
        &self.jet
    }

    /// `(-i)^m g^{(m)}(I₁)`, the moments divided by `2π`.
    fn reduced_moments(&self, count: usize) -> Vec<F> {
        let minus_i = -F::i();
        let mut pow = F::one();
        let mut out = Vec::with_capacity(count);
        for m in 0..count {
            out.push(pow.clone() * self.jet[m].clone());
            pow = pow * minus_i.clone();
        }
        out
    }
}

/// Orbit data through total order `P`: the action jets `I₀..I_{P+1}` and the
/// amplitude coefficients `a_{jl}` (at `h^j z^l`) with `j + l ≤ P`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitExpansion<F> {
    action: Vec<F>,
    amplitude: MultiSeries<F>,
}

impl<F: Scalar> OrbitExpansion<F> {
    /// `action[q]` is the coefficient of `z^q` in `I(z)`; its length fixes the
    /// order as `action.len() - 2`. Amplitude terms are indexed `(z = l, h = j)`.
    pub fn new(action: Vec<F>, amplitude: MultiSeries<F>, tol: f64) -> Result<Self, OscillatoryError> {
        if action.len() < 2 {
            return Err(OscillatoryError::Shape("action jets need at least I₀ and I₁".into()));
        }
        if amplitude.n_actions() != 0 {
            return Err(OscillatoryError::Shape("amplitude must be a (z, h) series".into()));
        }
        let order = action.len() as u32 - 2;
        for (q, c) in action.iter().enumerate() {
            let imag = c.imag_part().abs();
            if !is_negligible::<F>(imag, c.abs(), tol) {
                return Err(OscillatoryError::NotReal { what: format!("action jet I_{q}"), imag });
            }
        }
        if let Some((idx, _)) = amplitude.terms().find(|(idx, c)| idx.z + idx.h > order && !c.is_zero()) {
            return Err(OscillatoryError::Shape(format!(
                "amplitude term h^{} z^{} exceeds total order {order}",
                idx.h, idx.z
            )));
        }
        if amplitude.constant_term().is_zero() {
            return Err(OscillatoryError::ZeroLeadingAmplitude);
        }
        let mut kept = MultiSeries::zero(0, Orders::new(0, order, order));
        for (idx, c) in amplitude.terms() {
            if !c.is_zero() {
                kept.add_term(idx.clone(), c.clone())?;
            }
        }
        Ok(Self { action, amplitude: kept })
    }

    /// Orbit `k` of a trace data set: `I(z) = k S(z)` and the trace
    /// coefficients as amplitude, kept through total order `order`.
    pub fn from_trace(data: &TraceData<F>, k: u32, order: u32) -> Result<Self, OscillatoryError> {
        let trace = data.trace(k).ok_or_else(|| OscillatoryError::Shape(format!("trace data has no power k = {k}")))?;
        let kk = F::from_int(k as i64);
        let action =
            (0..=order + 1).map(|q| kk.clone() * data.action().coefficient(&MultiIndex::new(vec![], q, 0))).collect();
        let amplitude = MultiSeries::from_terms(
            0,
            Orders::new(0, order, order),
            trace.terms().filter(|(idx, _)| idx.z + idx.h <= order).map(|(idx, c)| (idx.clone(), c.clone())),
        )?;
        Self::new(action, amplitude, f64::INFINITY)
    }

    pub fn order(&self) -> u32 {
        self.action.len() as u32 - 2
    }

    pub fn action(&self) -> &[F] {
        &self.action
    }

    pub fn amplitude(&self) -> &MultiSeries<F> {
        &self.amplitude
    }

    /// `a_{jl}`, the coefficient of `h^j z^l`.
    pub fn a(&self, j: u32, l: u32) -> F {
        self.amplitude.coefficient(&MultiIndex::new(vec![], l, j))
    }

    /// Largest coefficient difference over action and amplitude.
    pub fn distance(&self, other: &Self) -> f64 {
        let n = self.action.len().max(other.action.len());
        let at = |v: &[F], q: usize| v.get(q).cloned().unwrap_or_else(F::zero);
        let da = (0..n).map(|q| at(&self.action, q).distance(&at(&other.action, q))).fold(0.0, f64::max);
        da.max(self.amplitude.max_abs_diff(&other.amplitude))
    }
}

/// Coefficients `T[p,m]` at `h^p ζ^m` for `p ≤ p_max`.
fn moment_table<F: Scalar>(
    action: &[F],
    amplitude: &MultiSeries<F>,
    p_max: u32,
) -> Result<MultiSeries<F>, SeriesError> {
    let o = Orders::new(0, 2 * p_max, p_max);
    let mut phase = MultiSeries::zero(0, o);
    for k in 1..=p_max {
        if let Some(c) = action.get(k as usize + 1).filter(|c| !c.is_zero()) {
            phase.add_term(MultiIndex::new(vec![], k + 1, k), F::i() * c.clone())?;
        }
    }
    let mut a = MultiSeries::zero(0, o);
    for (idx, c) in amplitude.terms() {
        if idx.z + idx.h <= p_max {
            a.add_term(MultiIndex::new(vec![], idx.z, idx.z + idx.h), c.clone())?;
        }
    }
    phase.exp_series()?.mul(&a)
}

fn table_entry<F: Scalar>(t: &MultiSeries<F>, p: u32, m: u32) -> F {
    t.coefficient(&MultiIndex::new(vec![], m, p))
}

/// `b_0(g)/2π, ..., b_P(g)/2π`.
pub fn forward_pairing<F: Scalar>(
    u: &OrbitExpansion<F>,
    g: &TestJet<F>,
    order: u32,
) -> Result<Vec<F>, OscillatoryError> {
    if order > u.order() {
        return Err(OscillatoryError::OrderTooHigh { requested: order, available: u.order() });
    }
    let need = 2 * order as usize + 1;
    if g.jet.len() < need {
        return Err(OscillatoryError::InsufficientJet { order, need, have: g.jet.len() });
    }
    check_base_point(&u.action[1], &g.base_point)?;
    let table = moment_table(&u.action, &u.amplitude, order)?;
    let moments = g.reduced_moments(need);
    Ok((0..=order)
        .map(|p| (0..=2 * p).fold(F::zero(), |acc, m| acc + table_entry(&table, p, m) * moments[m as usize].clone()))
        .collect())
}

fn check_base_point<F: Scalar>(orbit: &F, jet: &F) -> Result<(), OscillatoryError> {
    let d = orbit.distance(jet);
    if is_negligible::<F>(d, orbit.abs(), 1e-12) {
        Ok(())
    } else {
        Err(OscillatoryError::BasePointMismatch { jet: jet.to_string(), orbit: orbit.to_string() })
    }
}

/// Exact zero on the rational backend, `≤ tol·max(1, scale)` on floats.
fn is_negligible<F: Scalar>(value: f64, scale: f64, tol: f64) -> bool {
    match F::KIND {
        FieldKind::Rational => value == 0.0,
        FieldKind::Float => value <= tol * scale.max(1.0),
    }
}

/// Reduced pairing values `b_p(g)/2π` for a set of test jets, with the phase
/// `I₀` carried symbolically.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingBundle<F> {
    pub order: u32,
    pub phase: F,
    pub entries: Vec<(TestJet<F>, Vec<F>)>,
}

impl<F: Scalar> PairingBundle<F> {
    pub fn new(order: u32, phase: F, entries: Vec<(TestJet<F>, Vec<F>)>) -> Result<Self, OscillatoryError> {
        if entries.is_empty() {
            return Err(OscillatoryError::Shape("pairing bundle has no entries".into()));
        }
        for (i, (_, v)) in entries.iter().enumerate() {
            if v.len() != order as usize + 1 {
                return Err(OscillatoryError::Shape(format!(
                    "entry {i} has {} values, order {order} needs {}",
                    v.len(),
                    order + 1
                )));
            }
        }
        Ok(Self { order, phase, entries })
    }

    fn scaled(&self, s: &F) -> Self {
        let entries =
            self.entries.iter().map(|(g, v)| (g.clone(), v.iter().map(|x| x.clone() * s.clone()).collect())).collect();
        Self { order: self.order, phase: self.phase.clone(), entries }
    }
}

/// Pairs `u` with every jet of `basis`.
pub fn pair_all<F: Scalar>(
    u: &OrbitExpansion<F>,
    basis: &[TestJet<F>],
    order: u32,
) -> Result<PairingBundle<F>, OscillatoryError> {
    let entries =
        basis.iter().map(|g| forward_pairing(u, g, order).map(|v| (g.clone(), v))).collect::<Result<_, _>>()?;
    PairingBundle::new(order, u.action[0].clone(), entries)
}

#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions {
    /// Relative tolerance for consistency checks (float backend).
    pub tol: f64,
    pub solve: SolveOptions,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { tol: 1e-9, solve: SolveOptions { max_condition: 1e10, residual_tol: 1e-9 } }
    }
}

/// Recovers the orbit expansion from pairings against a basis of test jets
/// sharing the base point `I₁`.
pub fn extract_jets<F: Scalar>(
    bundle: &PairingBundle<F>,
    opts: &ExtractOptions,
) -> Result<OrbitExpansion<F>, OscillatoryError> {
    let order = bundle.order;
    let need = 2 * order as usize + 1;
    let base = bundle.entries[0].0.base_point.clone();
    for (g, _) in &bundle.entries {
        check_base_point(&base, &g.base_point)?;
        if g.jet.len() < need {
            return Err(OscillatoryError::InsufficientJet { order, need, have: g.jet.len() });
        }
    }
    if bundle.entries.len() < need {
        return Err(OscillatoryError::BasisDeficient { rank: bundle.entries.len(), need });
    }
    let rows: Vec<Vec<F>> = bundle.entries.iter().map(|(g, _)| g.reduced_moments(need)).collect();
    // c[p][m] = T[p,m]
    let mut c: Vec<Vec<F>> = Vec::with_capacity(order as usize + 1);
    for p in 0..=order as usize {
        let rhs: Vec<F> = bundle.entries.iter().map(|(_, v)| v[p].clone()).collect();
        let sol = solve_overdetermined(&rows, &rhs, &opts.solve).map_err(|e| match e {
            LinearSolveError::RankDeficient { rank, .. } => OscillatoryError::BasisDeficient { rank, need },
            LinearSolveError::Underdetermined { equations, .. } => {
                OscillatoryError::BasisDeficient { rank: equations, need }
            }
            LinearSolveError::Inconsistent { residual } => {
                OscillatoryError::Inconsistent { what: format!("level {p} pairings"), residual }
            }
            LinearSolveError::IllConditioned { condition, .. } => {
                OscillatoryError::Inconsistent { what: format!("basis conditioning {condition:e}"), residual: f64::NAN }
            }
        })?;
        c.push(sol.x);
    }
    let scale = c.iter().flatten().map(Scalar::abs).fold(0.0, f64::max);

    let a00 = c[0][0].clone();
    if is_negligible::<F>(a00.abs(), scale, opts.tol) {
        return Err(OscillatoryError::ZeroLeadingAmplitude);
    }
    let mut action = vec![bundle.phase.clone(), base];
    action.resize(order as usize + 2, F::zero());
    let o = Orders::new(0, order, order);
    let mut amplitude = MultiSeries::constant(0, o, a00.clone());
    let ia00 = F::i() * a00;
    for p in 0..=order {
        let pred = moment_table(&action, &amplitude, order)?;
        let resid = |m: u32| c[p as usize][m as usize].clone() - table_entry(&pred, p, m);
        if p > 0 {
            for l in 0..=p {
                amplitude.add_term(MultiIndex::new(vec![], l, p - l), resid(l))?;
            }
            let i_next = resid(p + 1).div(&ia00).expect("a₀₀ is nonzero");
            let imag = i_next.imag_part().abs();
            if !is_negligible::<F>(imag, scale / ia00.abs(), opts.tol) {
                return Err(OscillatoryError::NotReal { what: format!("recovered action jet I_{}", p + 1), imag });
            }
            action[p as usize + 1] = i_next.real_part();
        }
        let first_free = if p == 0 { 1 } else { p + 2 };
        for m in first_free..=2 * order {
            let r = resid(m).abs();
            if !is_negligible::<F>(r, scale, opts.tol) {
                return Err(OscillatoryError::Inconsistent {
                    what: format!("moment ζ^{m} at level {p}"), residual: r
                });
            }
        }
    }
    OrbitExpansion::new(action, amplitude, f64::INFINITY)
}

/// Pairing data for label `k`: the bundle values are the coefficients of
/// `h^{p-1}` in `h⁻¹ (k+1)⁻¹ J(f', tr M^{k+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmearedPairing<F> {
    pub k: u32,
    pub bundle: PairingBundle<F>,
}

/// The smeared data that [`traces_from_pairings`] inverts.
pub fn smeared_pairing<F: Scalar>(
    k: u32,
    next_power: &OrbitExpansion<F>,
    basis: &[TestJet<F>],
    order: u32,
) -> Result<SmearedPairing<F>, OscillatoryError> {
    let bundle = pair_all(next_power, basis, order)?;
    let inv = F::from_ratio(1, k as i64 + 1);
    Ok(SmearedPairing { k, bundle: bundle.scaled(&inv) })
}

/// Undoes the `(k+1)⁻¹` factor and extracts each `tr M^{k+1}` expansion,
/// keyed by its power `k + 1`.
pub fn traces_from_pairings<F: Scalar>(
    data: &[SmearedPairing<F>],
    opts: &ExtractOptions,
) -> Result<BTreeMap<u32, OrbitExpansion<F>>, OscillatoryError> {
    let mut out = BTreeMap::new();
    for s in data {
        if out.contains_key(&(s.k + 1)) {
            return Err(OscillatoryError::DuplicateLabel(s.k));
        }
        let bundle = s.bundle.scaled(&F::from_int(s.k as i64 + 1));
        out.insert(s.k + 1, extract_jets(&bundle, opts)?);
    }
    Ok(out)
}

/// Assembles per-power orbit expansions into trace data, checking that every
/// power `k` carries the action `k S(z)`. `S` is kept through `z^{action_order}`.
pub fn orbits_to_trace_data<F: Scalar>(
    orbits: &BTreeMap<u32, OrbitExpansion<F>>,
    maslov: &BTreeMap<u32, u8>,
    phase: F,
    action_order: u32,
    n_z: u32,
    n_h: u32,
    tol: f64,
) -> Result<TraceData<F>, OscillatoryError> {
    let first = orbits.get(&1).ok_or_else(|| OscillatoryError::Shape("orbit data must start at k = 1".into()))?;
    let s = first.action();
    let scale = s.iter().map(Scalar::abs).fold(0.0, f64::max);
    for (&k, o) in orbits {
        let kk = F::from_int(k as i64);
        let n = s.len().max(o.action.len());
        for q in 0..n {
            let want = kk.clone() * s.get(q).cloned().unwrap_or_else(F::zero);
            let have = o.action.get(q).cloned().unwrap_or_else(F::zero);
            let d = want.distance(&have);
            if !is_negligible::<F>(d, scale * k as f64, tol) {
                return Err(OscillatoryError::Inconsistent {
                    what: format!("action of power {k} at z^{q}"),
                    residual: d,
                });
            }
        }
    }
    if let Some((q, c)) = s.iter().enumerate().skip(action_order as usize + 1).find(|(_, c)| !c.is_zero()) {
        return Err(OscillatoryError::Shape(format!("action has a z^{q} term {c} beyond order {action_order}")));
    }
    let action = MultiSeries::from_terms(
        0,
        Orders::new(0, action_order, 0),
        s.iter()
            .enumerate()
            .take(action_order as usize + 1)
            .filter(|(_, c)| !c.is_zero())
            .map(|(q, c)| (MultiIndex::new(vec![], q as u32, 0), c.clone())),
    )?;
    let box_orders = Orders::new(0, n_z, n_h);
    let coefficients =
        orbits.iter().map(|(&k, o)| (k, o.amplitude.truncate(box_orders).with_orders(box_orders))).collect();
    Ok(TraceData::new(action, maslov.clone(), phase, coefficients, n_z, n_h, tol)?)
}
