//! Derivatives of `∏_j (1/2)csch(kμ_j/2)`, carried as polynomials in `t_j = coth(kμ_j/2)`.
//!
//! With `c_j = (1/2)csch(kμ_j/2)` the two rules
//! `∂_j t_j = (k/2)(1 - t_j²)` and `∂_j c_j = -(k/2) t_j c_j`
//! close on the ring `F[t_1..t_n]·∏c_j`, so any mixed derivative of the product
//! is a polynomial in the `t_j` times the bare product.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::series::{FloatComplex, MultiIndex, MultiSeries, Orders, Scalar};

/// Default modulus below which `sinh(kμ_j/2)` counts as a pole.
pub const DEFAULT_POLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HypError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("variable index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("expected {expected} exponents, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pole: |sinh({k}·μ_{index}/2)| = {modulus:e} (k·μ_{index} lies in 2πiℤ)", index = .index + 1)]
    Pole { index: usize, k: u32, modulus: f64 },
    #[error("nonconvergent lattice sum: Re μ_{index} = {re} is not positive", index = .index + 1)]
    Nonconvergent { index: usize, re: f64 },
}

/// A Floquet exponent `μ`, stored through its half exponential `w = e^{μ/2}`.
///
/// The field value `w` drives all arithmetic so that the exact backend stays
/// exact when `μ ∈ 2 ln(ℚ(i))`; `mu` keeps the chosen logarithm branch.
#[derive(Clone, Debug)]
pub struct Exponent<F> {
    mu: Complex64,
    half_exp: F,
}

impl<F: Scalar> Exponent<F> {
    /// `μ = 2 Log w` on the principal branch.
    pub fn from_half_exp(w: F) -> Result<Self, HypError> {
        if w.is_zero() {
            return Err(HypError::InvalidArgument("half exponential must be nonzero".into()));
        }
        let mu = 2.0 * w.to_c64().ln();
        Ok(Self { mu, half_exp: w })
    }

    /// Uses the given branch of `μ`; requires a float-capable backend.
    pub fn from_mu(mu: Complex64) -> Option<Self> {
        let w = F::from_c64((mu / 2.0).exp())?;
        Some(Self { mu, half_exp: w })
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    pub fn half_exp(&self) -> &F {
        &self.half_exp
    }

    /// `λ = e^μ`.
    pub fn eigenvalue(&self) -> F {
        self.half_exp.clone() * self.half_exp.clone()
    }

    /// `(coth(kμ/2), (1/2)csch(kμ/2))`, after checking for a pole.
    pub fn coth_csch(&self, index: usize, k: u32, pole_tol: f64) -> Result<(F, F), HypError> {
        let modulus = (self.mu * (k as f64 / 2.0)).sinh().norm();
        let wk = self.half_exp.powi(k as i64).expect("nonnegative power");
        let lk = wk.clone() * wk.clone();
        let den = (lk.clone() - F::one()).inv();
        match den {
            Some(den) if modulus >= pole_tol => Ok(((lk + F::one()) * den.clone(), wk * den)),
            _ => Err(HypError::Pole { index, k, modulus }),
        }
    }
}

impl Exponent<FloatComplex> {
    pub fn float(mu: Complex64) -> Self {
        Self { mu, half_exp: FloatComplex((mu / 2.0).exp()) }
    }
}

/// A z-dependent exponent `μ(z) = μ(0) + Σ_{q≥1} m_q z^q`.
#[derive(Clone, Debug)]
pub struct ExponentSeries<F> {
    pub base: Exponent<F>,
    /// `taylor[q-1] = m_q`.
    pub taylor: Vec<F>,
}

impl<F: Scalar> ExponentSeries<F> {
    pub fn constant(base: Exponent<F>) -> Self {
        Self { base, taylor: Vec::new() }
    }

    /// Coefficient of `z^q` for `q ≥ 1`.
    pub fn coefficient(&self, q: usize) -> F {
        self.taylor.get(q.wrapping_sub(1)).cloned().unwrap_or_else(F::zero)
    }
}

/// Polynomial in `t_1..t_n` standing for `p(t)·∏_j (1/2)csch(kμ_j/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CschExpression<F> {
    n: usize,
    k: u32,
    poly: BTreeMap<Vec<u32>, F>,
}

impl<F: Scalar> CschExpression<F> {
    /// The bare product `∏_j (1/2)csch(kμ_j/2)`.
    pub fn csch_product(n: usize, k: u32) -> Result<Self, HypError> {
        if n == 0 || k == 0 {
            return Err(HypError::InvalidArgument(format!("csch_product needs n ≥ 1 and k ≥ 1, got n={n}, k={k}")));
        }
        let mut poly = BTreeMap::new();
        poly.insert(vec![0; n], F::one());
        Ok(Self { n, k, poly })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn poly(&self) -> &BTreeMap<Vec<u32>, F> {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty()
    }

    pub fn scale(&self, s: &F) -> Self {
        let mut poly = BTreeMap::new();
        for (e, c) in &self.poly {
            add_coeff(&mut poly, e.clone(), c.clone() * s.clone());
        }
        Self { n: self.n, k: self.k, poly }
    }

    /// `∂/∂μ_j`: `p ↦ (k/2)[(1 - t_j²)∂_{t_j}p - t_j p]`.
    pub fn apply_derivative(&self, j: usize) -> Result<Self, HypError> {
        if j >= self.n {
            return Err(HypError::IndexOutOfRange { index: j, n: self.n });
        }
        let half_k = F::from_ratio(self.k as i64, 2);
        let mut poly = BTreeMap::new();
        for (e, c) in &self.poly {
            let d = e[j];
            let c = c.clone() * half_k.clone();
            if d > 0 {
                let dc = c.clone() * F::from_int(d as i64);
                let mut lower = e.clone();
                lower[j] -= 1;
                add_coeff(&mut poly, lower, dc.clone());
                let mut upper = e.clone();
                upper[j] += 1;
                add_coeff(&mut poly, upper, -dc);
            }
            let mut up = e.clone();
            up[j] += 1;
            add_coeff(&mut poly, up, -c);
        }
        Ok(Self { n: self.n, k: self.k, poly })
    }

    /// `∂^α` applied component by component.
    pub fn derivative(&self, alpha: &[u32]) -> Result<Self, HypError> {
        if alpha.len() != self.n {
            return Err(HypError::DimensionMismatch { expected: self.n, found: alpha.len() });
        }
        let mut out = self.clone();
        for (j, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                out = out.apply_derivative(j)?;
            }
        }
        Ok(out)
    }

    pub fn eval(&self, mu: &[Exponent<F>], pole_tol: f64) -> Result<F, HypError> {
        if mu.len() != self.n {
            return Err(HypError::DimensionMismatch { expected: self.n, found: mu.len() });
        }
        let mut t = Vec::with_capacity(self.n);
        let mut base = F::one();
        for (j, m) in mu.iter().enumerate() {
            let (tj, cj) = m.coth_csch(j, self.k, pole_tol)?;
            t.push(tj);
            base = base * cj;
        }
        let mut acc = F::zero();
        for (e, c) in &self.poly {
            let mut term = c.clone();
            for (tj, &ej) in t.iter().zip(e) {
                term = term * tj.powi(ej as i64).expect("nonnegative power");
            }
            acc = acc + term;
        }
        Ok(acc * base)
    }

    /// Taylor expansion in z of `eval(self, μ(z))` through `z^{n_z}`.
    pub fn eval_series_in_z(
        &self,
        mu_of_z: &[ExponentSeries<F>],
        n_z: u32,
        pole_tol: f64,
    ) -> Result<MultiSeries<F>, HypError> {
        SeriesEvaluator::new(mu_of_z, self.k, n_z, pole_tol)?.eval(self)
    }
}

fn add_coeff<F: Scalar>(poly: &mut BTreeMap<Vec<u32>, F>, e: Vec<u32>, c: F) {
    if c.is_zero() {
        return;
    }
    let sum = match poly.remove(&e) {
        Some(old) => old + c,
        None => c,
    };
    if !sum.is_zero() {
        poly.insert(e, sum);
    }
}

fn vmul<F: Scalar>(a: &[F], b: &[F], len: usize) -> Vec<F> {
    let mut out = vec![F::zero(); len];
    for (i, ai) in a.iter().enumerate().take(len) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].clone() + ai.clone() * bj.clone();
        }
    }
    out
}

/// Cached `t_j(z)` and `c_j(z)` series for one power `k`, reused across many
/// coth-polynomials.
pub struct SeriesEvaluator<F> {
    k: u32,
    len: usize,
    /// `t_pows[j][e]` is the series of `t_j(z)^e`.
    t_pows: Vec<Vec<Vec<F>>>,
    base: Vec<F>,
}

impl<F: Scalar> SeriesEvaluator<F> {
    pub fn new(mu_of_z: &[ExponentSeries<F>], k: u32, n_z: u32, pole_tol: f64) -> Result<Self, HypError> {
        let len = n_z as usize + 1;
        let half_k = F::from_ratio(k as i64, 2);
        let mut t_pows = Vec::with_capacity(mu_of_z.len());
        let mut base = vec![F::zero(); len];
        base[0] = F::one();
        for (j, m) in mu_of_z.iter().enumerate() {
            let (t0, c0) = m.base.coth_csch(j, k, pole_tol)?;
            // μ'(z) coefficients
            let dmu: Vec<F> = (0..len).map(|q| m.coefficient(q + 1) * F::from_int(q as i64 + 1)).collect();
            let mut t = vec![F::zero(); len];
            let mut c = vec![F::zero(); len];
            t[0] = t0;
            c[0] = c0;
            for q in 0..len.saturating_sub(1) {
                let tt = vmul(&t, &t, q + 1);
                let mut one_minus = tt.iter().map(|x| -x.clone()).collect::<Vec<_>>();
                one_minus[0] = one_minus[0].clone() + F::one();
                let a = vmul(&one_minus, &dmu, q + 1);
                let tc = vmul(&t, &c, q + 1);
                let b = vmul(&tc, &dmu, q + 1);
                let inv = F::from_ratio(1, q as i64 + 1);
                t[q + 1] = half_k.clone() * a[q].clone() * inv.clone();
                c[q + 1] = -(half_k.clone() * b[q].clone() * inv);
            }
            base = vmul(&base, &c, len);
            t_pows.push(vec![
                {
                    let mut one = vec![F::zero(); len];
                    one[0] = F::one();
                    one
                },
                t,
            ]);
        }
        Ok(Self { k, len, t_pows, base })
    }

    fn t_power(&mut self, j: usize, e: usize) -> &[F] {
        while self.t_pows[j].len() <= e {
            let last = self.t_pows[j].last().expect("nonempty").clone();
            let next = vmul(&last, &self.t_pows[j][1], self.len);
            self.t_pows[j].push(next);
        }
        &self.t_pows[j][e]
    }

    /// Coefficients `[z^0..z^{n_z}]` of the expression along `μ(z)`.
    pub fn eval_coefficients(&mut self, e: &CschExpression<F>) -> Result<Vec<F>, HypError> {
        if e.n != self.t_pows.len() {
            return Err(HypError::DimensionMismatch { expected: e.n, found: self.t_pows.len() });
        }
        if e.k != self.k {
            return Err(HypError::InvalidArgument(format!("expression has k={}, evaluator has k={}", e.k, self.k)));
        }
        let mut acc = vec![F::zero(); self.len];
        for (exps, c) in &e.poly {
            let mut term = vec![F::zero(); self.len];
            term[0] = c.clone();
            for (j, &ej) in exps.iter().enumerate() {
                if ej > 0 {
                    let len = self.len;
                    let tp = self.t_power(j, ej as usize).to_vec();
                    term = vmul(&term, &tp, len);
                }
            }
            for (a, t) in acc.iter_mut().zip(term) {
                *a = a.clone() + t;
            }
        }
        Ok(vmul(&acc, &self.base, self.len))
    }

    pub fn eval(&mut self, e: &CschExpression<F>) -> Result<MultiSeries<F>, HypError> {
        let coeffs = self.eval_coefficients(e)?;
        let orders = Orders::new(0, self.len as u32 - 1, 0);
        let mut s = MultiSeries::zero(0, orders);
        for (q, c) in coeffs.into_iter().enumerate() {
            s.add_term(MultiIndex::new(vec![], q as u32, 0), c).expect("z-series index");
        }
        Ok(s)
    }
}

/// Partial lattice sum with a rigorous bound on the omitted tail.
#[derive(Clone, Debug)]
pub struct LatticeSum<F> {
    pub value: F,
    /// Upper bound on the modulus of the terms with some `m_j > M`.
    pub tail_bound: f64,
}

/// `Σ_{m ∈ [0,M]^n} p((m + 1/2)/i) e^{-⟨m + 1/2, kμ⟩}` for a polynomial `p`
/// given as `(exponents, coefficient)` pairs.
pub fn lattice_sum_oracle<F: Scalar>(
    p: &[(Vec<u32>, F)],
    mu: &[Exponent<F>],
    k: u32,
    m_max: u32,
) -> Result<LatticeSum<F>, HypError> {
    let n = mu.len();
    if n == 0 || k == 0 {
        return Err(HypError::InvalidArgument("lattice sum needs n ≥ 1 and k ≥ 1".into()));
    }
    for (j, m) in mu.iter().enumerate() {
        if !(m.mu().re > 0.0) {
            return Err(HypError::Nonconvergent { index: j, re: m.mu().re });
        }
    }
    let mut max_deg = vec![0u32; n];
    for (e, _) in p {
        if e.len() != n {
            return Err(HypError::DimensionMismatch { expected: n, found: e.len() });
        }
        for (d, &x) in max_deg.iter_mut().zip(e) {
            *d = (*d).max(x);
        }
    }
    let side = m_max as usize + 1;
    // weights[j][m] = w_j^{-k(2m+1)},  ypow[j][m][d] = (-i(m + 1/2))^d
    let mut weights = Vec::with_capacity(n);
    let mut ypow = Vec::with_capacity(n);
    for (j, m) in mu.iter().enumerate() {
        let winv = m.half_exp().inv().ok_or(HypError::Pole { index: j, k, modulus: 0.0 })?;
        let step = winv.powi(2 * k as i64).expect("power");
        let mut w = winv.powi(k as i64).expect("power");
        let mut wj = Vec::with_capacity(side);
        let mut yj = Vec::with_capacity(side);
        for mm in 0..side {
            wj.push(w.clone());
            w = w * step.clone();
            let y = -(F::i() * F::from_ratio(2 * mm as i64 + 1, 2));
            let mut pw = vec![F::one()];
            for d in 0..max_deg[j] as usize {
                pw.push(pw[d].clone() * y.clone());
            }
            yj.push(pw);
        }
        weights.push(wj);
        ypow.push(yj);
    }
    let mut value = F::zero();
    let mut idx = vec![0usize; n];
    loop {
        let mut weight = F::one();
        for j in 0..n {
            weight = weight * weights[j][idx[j]].clone();
        }
        let mut pv = F::zero();
        for (e, c) in p {
            let mut term = c.clone();
            for j in 0..n {
                term = term * ypow[j][idx[j]][e[j] as usize].clone();
            }
            pv = pv + term;
        }
        value = value + pv * weight;
        let mut j = 0;
        loop {
            if j == n {
                let tail_bound = tail_bound(p, mu, k, m_max);
                return Ok(LatticeSum { value, tail_bound });
            }
            idx[j] += 1;
            if idx[j] < side {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Union bound over the coordinates that leave the box.
fn tail_bound<F: Scalar>(p: &[(Vec<u32>, F)], mu: &[Exponent<F>], k: u32, m_max: u32) -> f64 {
    let one_dim = |re: f64, d: u32, start: u32| -> f64 {
        let q = (-(k as f64) * re).exp();
        let mut sum = 0.0;
        let mut m = start as f64;
        loop {
            let term = (m + 0.5).powi(d as i32) * q.powf(m + 0.5);
            sum += term;
            if term < 1e-300 || (m > start as f64 + 10.0 && term < sum * 1e-18) || m > 1e7 {
                return sum;
            }
            m += 1.0;
        }
    };
    let mut bound = 0.0;
    for (e, c) in p {
        for j in 0..mu.len() {
            let mut prod = c.abs() * one_dim(mu[j].mu().re, e[j], m_max + 1);
            for (i, m) in mu.iter().enumerate() {
                if i != j {
                    prod *= one_dim(m.mu().re, e[i], 0);
                }
            }
            bound += prod;
        }
    }
    bound
}

/// Lattice sum with every exponent shifted by `ε > 0`, the explicit
/// regularization for elliptic exponents.
pub fn lattice_sum_regularized(
    p: &[(Vec<u32>, FloatComplex)],
    mu: &[Complex64],
    k: u32,
    m_max: u32,
    epsilon: f64,
) -> Result<LatticeSum<FloatComplex>, HypError> {
    if !(epsilon > 0.0) {
        return Err(HypError::InvalidArgument(format!("regularization ε must be positive, got {epsilon}")));
    }
    let shifted: Vec<_> = mu.iter().map(|&m| Exponent::float(m + epsilon)).collect();
    lattice_sum_oracle(p, &shifted, k, m_max)
}
