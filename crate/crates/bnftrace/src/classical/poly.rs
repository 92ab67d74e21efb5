//! Dense truncated polynomials over `Complex64` in canonical variables
//! `(q₁..q_n, p₁..p_n)`, with Poisson brackets, composition and Lie series.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

/// Monomials of total degree at most `degree` in `nvars` variables, with a
/// precomputed product table.
#[derive(Debug)]
pub struct Basis {
    nvars: usize,
    degree: u32,
    monos: Vec<Vec<u32>>,
    degrees: Vec<u32>,
    index: HashMap<Vec<u32>, usize>,
    product: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl Basis {
    pub fn new(nvars: usize, degree: u32) -> Arc<Self> {
        let mut monos = Vec::new();
        for d in 0..=degree {
            let mut cur = vec![0u32; nvars];
            push_degree(&mut monos, &mut cur, 0, d);
        }
        let degrees: Vec<u32> = monos.iter().map(|m| m.iter().sum()).collect();
        let index: HashMap<Vec<u32>, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let len = monos.len();
        let mut product = vec![NONE; len * len];
        for a in 0..len {
            for b in 0..len {
                if degrees[a] + degrees[b] > degree {
                    continue;
                }
                let sum: Vec<u32> = monos[a].iter().zip(&monos[b]).map(|(x, y)| x + y).collect();
                product[a * len + b] = index[&sum] as u32;
            }
        }
        Arc::new(Self { nvars, degree, monos, degrees, index, product })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn monomial(&self, i: usize) -> &[u32] {
        &self.monos[i]
    }

    pub fn degree_of(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

fn push_degree(out: &mut Vec<Vec<u32>>, cur: &mut [u32], pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.to_vec());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        push_degree(out, cur, pos + 1, left - e);
    }
    cur[pos] = 0;
}

#[derive(Clone, Debug)]
pub struct Poly {
    basis: Arc<Basis>,
    c: Vec<Complex64>,
}

impl Poly {
    pub fn zero(basis: &Arc<Basis>) -> Self {
        Self { basis: basis.clone(), c: vec![Complex64::new(0.0, 0.0); basis.len()] }
    }

    pub fn var(basis: &Arc<Basis>, i: usize) -> Self {
        let mut e = vec![0; basis.nvars];
        e[i] = 1;
        let mut p = Self::zero(basis);
        if let Some(k) = basis.index_of(&e) {
            p.c[k] = Complex64::new(1.0, 0.0);
        }
        p
    }

    pub fn constant(basis: &Arc<Basis>, v: Complex64) -> Self {
        let mut p = Self::zero(basis);
        p.c[0] = v;
        p
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn get(&self, exps: &[u32]) -> Complex64 {
        self.basis.index_of(exps).map_or(Complex64::new(0.0, 0.0), |k| self.c[k])
    }

    pub fn set(&mut self, exps: &[u32], v: Complex64) {
        if let Some(k) = self.basis.index_of(exps) {
            self.c[k] = v;
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Complex64)> {
        self.c
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
            .map(|(k, v)| (self.basis.monomial(k), *v))
    }

    pub fn add(&self, o: &Self) -> Self {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect();
        Self { basis: self.basis.clone(), c }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect();
        Self { basis: self.basis.clone(), c }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { basis: self.basis.clone(), c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn add_scaled(&mut self, o: &Self, s: Complex64) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += b * s;
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let len = self.basis.len();
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (a, ca) in self.c.iter().enumerate() {
            if ca.re == 0.0 && ca.im == 0.0 {
                continue;
            }
            let row = &self.basis.product[a * len..(a + 1) * len];
            for (b, cb) in o.c.iter().enumerate() {
                let k = row[b];
                if k == NONE || (cb.re == 0.0 && cb.im == 0.0) {
                    continue;
                }
                out[k as usize] += ca * cb;
            }
        }
        Self { basis: self.basis.clone(), c: out }
    }

    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.basis);
        let mut e = vec![0; self.basis.nvars];
        for (k, v) in self.c.iter().enumerate() {
            let m = self.basis.monomial(k);
            if m[i] == 0 || (v.re == 0.0 && v.im == 0.0) {
                continue;
            }
            e.copy_from_slice(m);
            e[i] -= 1;
            let t = self.basis.index_of(&e).expect("lower monomial");
            out.c[t] += v * m[i] as f64;
        }
        out
    }

    /// Homogeneous part of degree `d`.
    pub fn part(&self, d: u32) -> Self {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(k, v)| if self.basis.degree_of(k) == d { *v } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self { basis: self.basis.clone(), c }
    }

    /// Terms of degree at most `d`.
    pub fn up_to(&self, d: u32) -> Self {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(k, v)| if self.basis.degree_of(k) <= d { *v } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self { basis: self.basis.clone(), c }
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Lowest degree carrying a nonzero coefficient.
    pub fn low_degree(&self) -> Option<u32> {
        self.c
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.re == 0.0 && v.im == 0.0))
            .map(|(k, _)| self.basis.degree_of(k))
            .min()
    }

    /// `{f, g} = Σ ∂_{q_i} f ∂_{p_i} g − ∂_{p_i} f ∂_{q_i} g`.
    pub fn bracket(&self, g: &Self) -> Self {
        let n = self.basis.nvars / 2;
        let mut out = Self::zero(&self.basis);
        for i in 0..n {
            let a = self.deriv(i).mul(&g.deriv(n + i));
            let b = self.deriv(n + i).mul(&g.deriv(i));
            out = out.add(&a).sub(&b);
        }
        out
    }

    /// `exp(s)` for `s` without constant term.
    pub fn exp_nilpotent(&self) -> Self {
        assert!(self.c[0].norm() == 0.0, "exp_nilpotent needs a zero constant term");
        let mut result = Self::constant(&self.basis, Complex64::new(1.0, 0.0));
        let mut term = result.clone();
        for m in 1..=self.basis.degree as usize {
            term = term.mul(self).scale(Complex64::new(1.0 / m as f64, 0.0));
            if term.is_zero() {
                break;
            }
            result = result.add(&term);
        }
        result
    }

    /// `self(args)`; each argument must have a zero constant term.
    pub fn compose(&self, args: &[Poly]) -> Self {
        compose_many(std::slice::from_ref(self), args).pop().expect("one output")
    }
}

/// Evaluates every `fs[i]` at the polynomial arguments `args`, sharing the
/// table of monomial values.
pub fn compose_many(fs: &[Poly], args: &[Poly]) -> Vec<Poly> {
    let Some(first) = fs.first() else { return Vec::new() };
    let src = first.basis.clone();
    let dst = args[0].basis.clone();
    assert_eq!(args.len(), src.nvars, "argument count");
    for a in args {
        assert!(a.c[0].norm() == 0.0, "composition arguments need zero constant terms");
    }
    let used: Vec<bool> = (0..src.len()).map(|k| fs.iter().any(|f| f.c[k].norm() != 0.0)).collect();
    let mut values: Vec<Option<Poly>> = vec![None; src.len()];
    values[0] = Some(Poly::constant(&dst, Complex64::new(1.0, 0.0)));
    let mut out: Vec<Poly> = fs.iter().map(|_| Poly::zero(&dst)).collect();
    for k in 0..src.len() {
        if !used[k] {
            continue;
        }
        let v = monomial_value(&src, args, &mut values, k);
        for (o, f) in out.iter_mut().zip(fs) {
            if f.c[k].norm() != 0.0 {
                o.add_scaled(&v, f.c[k]);
            }
        }
    }
    out
}

fn monomial_value(src: &Basis, args: &[Poly], values: &mut Vec<Option<Poly>>, k: usize) -> Poly {
    if let Some(v) = &values[k] {
        return v.clone();
    }
    let m = src.monomial(k);
    let i = m.iter().position(|&e| e > 0).expect("nonconstant monomial");
    let mut lower = m.to_vec();
    lower[i] -= 1;
    let lk = src.index_of(&lower).expect("lower monomial");
    let v = monomial_value(src, args, values, lk).mul(&args[i]);
    values[k] = Some(v.clone());
    v
}

/// `exp(L_f) u = Σ_m {…{u, f}, …, f}/m!`, the pullback of `u` under the
/// time-one flow of the Hamiltonian `f`. `f` must have no terms below degree 3.
pub fn lie_exp(f: &Poly, u: &Poly) -> Poly {
    debug_assert!(f.low_degree().is_none_or(|d| d >= 3));
    let mut result = u.clone();
    let mut term = u.clone();
    for m in 1..=(f.basis.degree as usize + 1) {
        term = term.bracket(f).scale(Complex64::new(1.0 / m as f64, 0.0));
        if term.is_zero() {
            break;
        }
        result = result.add(&term);
    }
    result
}

/// Time-one flow of `f` as a map: component `i` is `exp(L_f) c_i`.
pub fn flow_map(f: &Poly) -> Vec<Poly> {
    (0..f.basis.nvars).map(|i| lie_exp(f, &Poly::var(&f.basis, i))).collect()
}
