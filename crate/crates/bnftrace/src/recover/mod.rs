//! Inversion of trace data back to `(μ(z), F)`.
//!
//! With `ρ = e^{i(f₀₀ - phase)}` the data satisfy `a_k = ρ^{-k} P_k` where
//! `P_k` is the forward expansion. Stage 0 fits `μ(0)` and `ρ` to `1/a₀(k)`.
//! Every later stage `(h^m, z^l)` is linear: subtracting the forward
//! prediction of the partially recovered form leaves
//! `-ik ρ^{-k} Σ_α c_α (i/k)^{|α|} ∂^α ∏(1/2)csch(kμ_j/2)` at `μ(0)`, where
//! the `c_α` are the `F_{l',α}` at `z^l` with `l' + |α| = m + 1`.
//! At `m = 0` the unknowns are `f₀ at z^l` (α = 0) and `μ_j`'s `z^l`
//! coefficient (α = e_j).

pub mod json;
pub mod prony;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

pub use prony::{annihilating_roots, recover_frequencies, required_samples, FrequencyFit, PronyOptions};

use crate::hypcalc::{CschExpression, Exponent, ExponentSeries, HypError, DEFAULT_POLE_TOL};
use crate::linalg::{solve_weighted, LinearSolveError, SolveOptions};
use crate::qbnf::{trace_power_unchecked, QbnfError, QuantumBnf, TraceData};
use crate::series::{FieldKind, MultiIndex, MultiSeries, Orders, Scalar, SeriesError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecoverError {
    #[error("{stage} needs trace powers k = 1..{required}, but only {available} are available")]
    TooFewSamples { stage: String, required: usize, available: usize },
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("root matching failed: {0}")]
    RootMatching(String),
    #[error("ambiguous exponent assignment: {0}")]
    Ambiguous(String),
    #[error("samples do not fit the exponential model (relative residual {residual:e})")]
    InconsistentSamples { residual: f64 },
    #[error("not exactly representable: {0}")]
    NotExact(String),
    #[error("stage {stage}: {source}")]
    Linear {
        stage: String,
        #[source]
        source: LinearSolveError,
    },
    #[error(transparent)]
    Qbnf(#[from] QbnfError),
    #[error(transparent)]
    Hyp(#[from] HypError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid orders: {0}")]
    Orders(String),
}

impl RecoverError {
    pub fn is_math(&self) -> bool {
        match self {
            RecoverError::Qbnf(e) => e.is_math(),
            RecoverError::Orders(_) => false,
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RecoverOptions {
    pub prony: PronyOptions,
    pub solve: SolveOptions,
    pub pole_tol: f64,
    /// Relative self-check tolerance for the float backend.
    pub residual_tol: f64,
    pub parallel: bool,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        Self {
            prony: PronyOptions::default(),
            solve: SolveOptions { max_condition: 1e8, residual_tol: 1e-8 },
            pole_tol: DEFAULT_POLE_TOL,
            residual_tol: 1e-8,
            parallel: false,
        }
    }
}

/// All `α ∈ ℕ^n` with `|α| ≤ max_degree`, graded.
pub fn monomials_up_to(n: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        let mut alpha = vec![0u32; n];
        compositions(&mut alpha, 0, d, &mut out);
    }
    out
}

fn compositions(alpha: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == alpha.len() {
        alpha[pos] = left;
        out.push(alpha.clone());
        alpha[pos] = 0;
        return;
    }
    for a in (0..=left).rev() {
        alpha[pos] = a;
        compositions(alpha, pos + 1, left - a, out);
    }
    alpha[pos] = 0;
}

/// `(i/k)^{|α|} ∂^α ∏_j (1/2)csch(kμ_j/2)` at fixed `μ`, cached per `(α, k)`.
struct DesignCache<'a, F> {
    mu: &'a [Exponent<F>],
    pole_tol: f64,
    entries: BTreeMap<(Vec<u32>, u32), F>,
}

impl<'a, F: Scalar> DesignCache<'a, F> {
    fn new(mu: &'a [Exponent<F>], pole_tol: f64) -> Self {
        Self { mu, pole_tol, entries: BTreeMap::new() }
    }

    fn get(&mut self, alpha: &[u32], k: u32) -> Result<F, RecoverError> {
        if let Some(v) = self.entries.get(&(alpha.to_vec(), k)) {
            return Ok(v.clone());
        }
        let expr = CschExpression::<F>::csch_product(self.mu.len(), k)?.derivative(alpha)?;
        let d: u32 = alpha.iter().sum();
        let i_over_k = F::i() * F::from_ratio(1, k as i64);
        let v = expr.eval(self.mu, self.pole_tol)? * i_over_k.powi(d as i64).expect("power");
        self.entries.insert((alpha.to_vec(), k), v.clone());
        Ok(v)
    }
}

#[derive(Clone, Debug)]
pub struct PolynomialFit<F> {
    /// `(α, a_α)` in the order of the requested monomials.
    pub coefficients: Vec<(Vec<u32>, F)>,
    pub condition: f64,
    pub residual: f64,
}

/// Solves `values[k] = p((i/k)∂_μ) ∏_j (1/2)csch(kμ_j/2)` for the
/// coefficients of `p` on the given monomials.
pub fn recover_polynomial<F: Scalar>(
    values: &BTreeMap<u32, F>,
    mu: &[Exponent<F>],
    monomials: &[Vec<u32>],
    opts: &RecoverOptions,
) -> Result<PolynomialFit<F>, RecoverError> {
    let mut cache = DesignCache::new(mu, opts.pole_tol);
    solve_stage(&mut cache, values, None, monomials, opts, "polynomial")
}

fn solve_stage<F: Scalar>(
    cache: &mut DesignCache<'_, F>,
    values: &BTreeMap<u32, F>,
    magnitudes: Option<&BTreeMap<u32, f64>>,
    monomials: &[Vec<u32>],
    opts: &RecoverOptions,
    stage: &str,
) -> Result<PolynomialFit<F>, RecoverError> {
    if values.len() < monomials.len() {
        return Err(RecoverError::TooFewSamples {
            stage: format!("stage {stage}"),
            required: monomials.len(),
            available: values.len(),
        });
    }
    let mut rows = Vec::with_capacity(values.len());
    let mut rhs = Vec::with_capacity(values.len());
    for (&k, v) in values {
        if k == 0 {
            return Err(RecoverError::Orders("trace power k = 0".into()));
        }
        let row = monomials.iter().map(|a| cache.get(a, k)).collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
        rhs.push(v.clone());
    }
    let floor: Vec<f64> = values.keys().map(|k| magnitudes.and_then(|m| m.get(k)).copied().unwrap_or(0.0)).collect();
    let sol = solve_weighted(&rows, &rhs, &floor, &opts.solve)
        .map_err(|source| RecoverError::Linear { stage: stage.to_string(), source })?;
    Ok(PolynomialFit {
        coefficients: monomials.iter().cloned().zip(sol.x).collect(),
        condition: sol.condition,
        residual: sol.residual,
    })
}

/// Conditioning of one linear stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageConditioning {
    pub h: u32,
    pub z: u32,
    pub unknowns: usize,
    pub equations: usize,
    pub condition: f64,
}

/// `|a_{j,k} - predicted|` at `z^q`, relative to the largest coefficient of
/// power `k` on the float backend and absolute on the exact backend.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub k: u32,
    pub j: u32,
    pub q: u32,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryReport<F> {
    pub recovered: QuantumBnf<F>,
    pub phi: Complex64,
    pub prony_residual: f64,
    pub residuals: Vec<ResidualEntry>,
    pub conditioning: Vec<StageConditioning>,
    pub normalization_notes: Vec<String>,
    pub passed: bool,
}

impl<F: Scalar> RecoveryReport<F> {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn max_condition(&self) -> f64 {
        self.conditioning.iter().map(|c| c.condition).fold(0.0, f64::max)
    }
}

enum Target {
    F(MultiIndex),
    Mu(usize, usize),
}

/// Unknowns of stage `(h^m, z^l)` whose F indices lie inside `orders`.
fn stage_unknowns(n: usize, m: u32, l: u32, orders: Orders) -> Vec<(Vec<u32>, Target)> {
    if m == 0 {
        let mut out = Vec::new();
        if orders.h >= 1 {
            out.push((vec![0; n], Target::F(MultiIndex::new(vec![0; n], l, 1))));
        }
        for j in 0..n {
            let mut e = vec![0; n];
            e[j] = 1;
            out.push((e, Target::Mu(j, l as usize)));
        }
        return out;
    }
    monomials_up_to(n, (m + 1).min(orders.iota))
        .into_iter()
        .filter_map(|alpha| {
            let lp = m + 1 - alpha.iter().sum::<u32>();
            (lp <= orders.h).then(|| (alpha.clone(), Target::F(MultiIndex::new(alpha, l, lp))))
        })
        .collect()
}

/// Number of trace powers needed to recover `n` exponents and `F` within
/// `orders` from data through `h^{n_h}`.
pub fn required_k(n: usize, n_h: u32, orders: Orders) -> usize {
    let linear = (0..=n_h).map(|m| stage_unknowns(n, m, 0, orders).len()).max().unwrap_or(0);
    required_samples(n).max(linear)
}

fn predict<F: Scalar>(
    b: &QuantumBnf<F>,
    k_max: u32,
    n_z: u32,
    n_h: u32,
    opts: &RecoverOptions,
) -> Result<Vec<MultiSeries<F>>, RecoverError> {
    let run = |k: u32| trace_power_unchecked(b, k, n_z, n_h, opts.pole_tol).map(|t| t.coefficients);
    let out: Result<Vec<_>, QbnfError> =
        if opts.parallel { (1..=k_max).into_par_iter().map(run).collect() } else { (1..=k_max).map(run).collect() };
    Ok(out?)
}

/// Recovers `(μ(z), F)` with `F` inside `orders`; coefficients outside are
/// taken to vanish.
///
/// Data is used through `z^{orders.z}` and `h^{n_h}`. Coefficients with
/// `l + |α| > n_h + 1` do not influence those traces and are left at zero.
pub fn recover_qbnf<F: Scalar>(
    t: &TraceData<F>,
    n: usize,
    orders: Orders,
    opts: &RecoverOptions,
) -> Result<RecoveryReport<F>, RecoverError> {
    let n_h = t.n_h();
    if n == 0 {
        return Err(RecoverError::Orders("n must be at least 1".into()));
    }
    if orders.z > t.n_z() {
        return Err(RecoverError::Orders(format!("z order {} exceeds the trace data's {}", orders.z, t.n_z())));
    }
    let k_max = t.k_max();
    let n_z = orders.z;
    let work = Orders::new(orders.iota, n_z, orders.h.max(n_h));
    let need = required_k(n, n_h, orders);
    if (k_max as usize) < need {
        return Err(RecoverError::TooFewSamples {
            stage: format!("recovery of n = {n} exponents through h^{n_h}"),
            required: need,
            available: k_max as usize,
        });
    }
    let mut notes = vec![
        "exponents ordered elliptic (θ ascending), real hyperbolic, complex hyperbolic pairs".to_string(),
        "elliptic μ = iθ with θ ∈ (0, π); hyperbolic Re μ > 0".to_string(),
    ];

    let a0: Vec<F> = (1..=k_max).map(|k| t.coefficient(k, 0, 0)).collect();
    let fit = recover_frequencies(&a0, n, &opts.prony)?;
    let f00 = match F::KIND {
        FieldKind::Rational => {
            if !(fit.rho.clone() - F::one()).is_zero() {
                return Err(RecoverError::NotExact(format!(
                    "phase factor e^{{iφ}} = {} cannot be folded into f₀₀ exactly",
                    fit.rho
                )));
            }
            t.phase().clone()
        }
        FieldKind::Float => {
            notes.push(format!("common phase φ = {} folded into f₀₀ (mod 2π)", fit.phi));
            t.phase().clone() + F::from_c64(fit.phi).expect("float backend")
        }
    };
    let rho_inv = fit.rho.inv().ok_or_else(|| RecoverError::RankDeficient("zero phase factor".into()))?;
    let rho_pows: Vec<F> = (1..=k_max).map(|k| rho_inv.powi(k as i64).expect("power")).collect();

    let mut mu: Vec<ExponentSeries<F>> = fit.exponents.iter().cloned().map(ExponentSeries::constant).collect();
    let mut f = MultiSeries::zero(n, work);
    f.add_term(MultiIndex::new(vec![0; n], 0, 1), f00)?;
    let mut cache = DesignCache::new(&fit.exponents, opts.pole_tol);
    let mut conditioning = Vec::new();

    for m in 0..=n_h {
        for l in 0..=n_z {
            if m == 0 && l == 0 {
                continue;
            }
            let partial = QuantumBnf::new(mu.clone(), f.clone(), opts.prony.block_tol)?;
            let pred = predict(&partial, k_max, l, m, opts)?;
            let at = MultiIndex::new(vec![], l, m);
            let mut values = BTreeMap::new();
            let mut magnitudes = BTreeMap::new();
            for k in 1..=k_max {
                let data = t.coefficient(k, m, l);
                let r = pred[k as usize - 1].coefficient(&at) * rho_pows[k as usize - 1].clone();
                // rounding in the subtraction scales with the operands, not the difference
                let size = (data.to_c64().norm() + r.to_c64().norm()) / k as f64;
                let residual = data - r;
                let scale = -(F::i() * F::from_int(k as i64)) * rho_pows[k as usize - 1].clone();
                let value = residual.div(&scale).expect("nonzero");
                magnitudes.insert(k, size / rho_pows[k as usize - 1].to_c64().norm());
                values.insert(k, value);
            }
            let unknowns = stage_unknowns(n, m, l, orders);
            let monomials: Vec<Vec<u32>> = unknowns.iter().map(|(a, _)| a.clone()).collect();
            let sol =
                solve_stage(&mut cache, &values, Some(&magnitudes), &monomials, opts, &format!("(h^{m}, z^{l})"))?;
            conditioning.push(StageConditioning {
                h: m,
                z: l,
                unknowns: monomials.len(),
                equations: values.len(),
                condition: sol.condition,
            });
            for ((_, target), (_, c)) in unknowns.into_iter().zip(sol.coefficients) {
                match target {
                    Target::F(idx) => f.add_term(idx, c)?,
                    Target::Mu(j, q) => {
                        // -ik·(i/k)·c·∂ = c·∂, so the y_j coefficient is μ_j's z^q coefficient
                        let taylor = &mut mu[j].taylor;
                        if taylor.len() < q {
                            taylor.resize(q, F::zero());
                        }
                        taylor[q - 1] = c;
                    }
                }
            }
        }
    }

    for m in &mut mu {
        while m.taylor.last().is_some_and(Scalar::is_zero) {
            m.taylor.pop();
        }
    }
    if orders.z < t.n_z() {
        notes.push(format!("trace data above z^{} not used", orders.z));
    }
    if orders.iota + orders.h > n_h + 1 {
        notes.push(format!(
            "coefficients with l + |α| > {} are not determined by traces through h^{n_h}; set to zero",
            n_h + 1
        ));
    }
    let recovered = QuantumBnf::new(mu, f.truncate(orders), opts.prony.block_tol)?;

    // self-check with the returned normal form
    let check = QuantumBnf::new(recovered.mu().to_vec(), recovered.f().with_orders(work), opts.prony.block_tol)?;
    let pred = predict(&check, k_max, n_z, n_h, opts)?;
    let mut residuals = Vec::new();
    let exact = F::KIND == FieldKind::Rational;
    let mut passed = true;
    for k in 1..=k_max {
        let data = t.trace(k).expect("k in range");
        let scale = if exact { 1.0 } else { data.max_abs().max(f64::MIN_POSITIVE) };
        for j in 0..=n_h {
            for q in 0..=n_z {
                let predicted =
                    pred[k as usize - 1].coefficient(&MultiIndex::new(vec![], q, j)) * rho_pows[k as usize - 1].clone();
                let diff = t.coefficient(k, j, q) - predicted;
                let value = diff.abs() / scale;
                if (exact && !diff.is_zero()) || (!exact && !(value <= opts.residual_tol)) {
                    passed = false;
                }
                residuals.push(ResidualEntry { k, j, q, value });
            }
        }
    }
    Ok(RecoveryReport {
        recovered,
        phi: fit.phi,
        prony_residual: fit.residual,
        residuals,
        conditioning,
        normalization_notes: notes,
        passed,
    })
}
