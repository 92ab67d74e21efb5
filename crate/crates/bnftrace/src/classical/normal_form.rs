//! Degree-by-degree Birkhoff normalization of symplectic maps.
//!
//! Work happens in the complex coordinates of [`linear::complex_coordinates`]
//! where the linear part is `Λ = diag(e^{μ̃}, e^{-μ̃})`. At map degree `d` the
//! map reads `Λ ∘ exp H_R ∘ (id + X_g + …)` with `g` homogeneous of degree
//! `d + 1`. Conjugating by the time-one flow of `χ` replaces `g` by
//! `g + χ − χ∘Λ`, so a monomial `q^a p^b` is removed with
//! `χ = g / (e^{⟨a−b, μ̃⟩} − 1)` and kept in `R` when `a = b`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linear::{complex_coordinates, linear_conjugate, linear_normalize, DEFAULT_CLASSIFY_TOL};
use super::poly::{compose_many, flow_map, Basis, Poly};
use super::resonance::{check_nonresonance, DEFAULT_RESONANCE_TOL};
use super::{BlockDoc, ClassicalError, TaylorMap};
use crate::qbnf::{BlockKind, SpectrumBlocks};
use crate::series::json::SeriesDoc;
use crate::series::{FloatComplex, MultiIndex, MultiSeries, Orders, Scalar};

#[derive(Clone, Copy, Debug)]
pub struct BnfOptions {
    /// Smallest accepted `|e^{⟨k, μ⟩} − 1|`.
    pub small_denominator: f64,
    pub classify_tol: f64,
    pub symplectic_tol: f64,
    pub resonance_tol: f64,
}

impl Default for BnfOptions {
    fn default() -> Self {
        Self {
            small_denominator: 1e-8,
            classify_tol: DEFAULT_CLASSIFY_TOL,
            symplectic_tol: 1e-9,
            resonance_tol: DEFAULT_RESONANCE_TOL,
        }
    }
}

/// Generator `χ` removed at one Hamiltonian degree, in the complex coordinates.
#[derive(Clone, Debug)]
pub struct Generator {
    pub degree: u32,
    pub chi: MultiSeries<FloatComplex>,
}

#[derive(Clone, Debug)]
pub struct BnfResult {
    pub blocks: SpectrumBlocks,
    /// `S` with `w = S w'` bringing the linear part to block form.
    pub transform: DMatrix<f64>,
    /// Diagonal exponents `μ̃` (see [`super::LinearNormalization`]).
    pub exponents: Vec<Complex64>,
    /// Normal form `p(ι)` in real actions: `(x² + ξ²)/2` for elliptic slots,
    /// `xξ` for real hyperbolic ones, and `zζ`, `wω` for a complex pair.
    pub p: MultiSeries<FloatComplex>,
    /// Same polynomial in the complex actions `ι̃_j = q_j p_j`.
    pub p_complex: MultiSeries<FloatComplex>,
    pub generators: Vec<Generator>,
    /// Smallest `|e^{⟨a−b, μ̃⟩} − 1|` divided by.
    pub conditioning: f64,
    /// Largest coefficient left in the map after normalization, through the
    /// working degree; zero up to rounding.
    pub remainder: f64,
    /// Largest imaginary part (or conjugate asymmetry) removed when making `p` real.
    pub imaginary_discarded: f64,
}

impl BnfResult {
    /// `p` without its linear part.
    pub fn r(&self) -> MultiSeries<FloatComplex> {
        let terms = self.p.terms().filter(|(i, _)| i.iota_degree() >= 2).map(|(i, c)| (i.clone(), *c));
        MultiSeries::from_terms(self.p.n_actions(), self.p.orders(), terms).expect("same box")
    }

    /// Signed rotation angle of each elliptic slot (`p = -θι + …`).
    pub fn rotation_angles(&self) -> Vec<Option<f64>> {
        self.blocks
            .kinds()
            .iter()
            .zip(&self.exponents)
            .map(|(k, m)| (*k == BlockKind::Elliptic).then_some(m.im))
            .collect()
    }

    /// The twist map `exp H_p` in the normalized real coordinates, through
    /// polynomial degree `degree`.
    pub fn twist_map(&self, degree: u32) -> TaylorMap<FloatComplex> {
        let n = self.blocks.n();
        let basis = Basis::new(2 * n, degree);
        let iotas: Vec<Poly> = (0..n).map(|j| Poly::var(&basis, j).mul(&Poly::var(&basis, n + j))).collect();
        let ibasis = Basis::new(n, self.p_complex.orders().iota);
        let mut comps = vec![Poly::zero(&basis); 2 * n];
        for j in 0..n {
            let omega = self.p_complex.derive(crate::series::Var::Iota(j)).expect("variable in range");
            let mut w = Poly::zero(&ibasis);
            for (idx, c) in omega.terms() {
                if idx.iota_degree() > 0 {
                    w.set(&idx.iota, c.0);
                }
            }
            let s = if w.is_zero() { Poly::zero(&basis) } else { w.compose(&iotas) };
            let mu = self.exponents[j];
            comps[j] = Poly::var(&basis, j).mul(&s.exp_nilpotent()).scale(mu.exp());
            comps[n + j] =
                Poly::var(&basis, n + j).mul(&s.scale(Complex64::new(-1.0, 0.0)).exp_nilpotent()).scale((-mu).exp());
        }
        let c = complex_coordinates(self.blocks.kinds());
        let cinv = c.clone().try_inverse().expect("invertible coordinates");
        let real = linear_conjugate(&comps, &cinv, &c);
        TaylorMap::from_polys(n, degree, &real)
    }
}

/// Normal form through total ι-degree `iota_degree`; needs the map through
/// polynomial degree `2·iota_degree − 1`.
pub fn birkhoff_normal_form<F: Scalar>(
    map: &TaylorMap<F>,
    iota_degree: u32,
    opts: &BnfOptions,
) -> Result<BnfResult, ClassicalError> {
    if iota_degree == 0 {
        return Err(ClassicalError::Shape("iota_degree must be at least 1".into()));
    }
    let top = 2 * iota_degree - 1;
    if map.degree() < top {
        return Err(ClassicalError::InsufficientDegree { have: map.degree(), need: top });
    }
    map.validate_symplectic(opts.symplectic_tol)?;
    let lin = linear_normalize(map, opts.classify_tol)?;
    let check = check_nonresonance(lin.blocks.mu(), 2 * iota_degree, opts.resonance_tol);
    if let Some(w) = check.witness {
        return Err(ClassicalError::Resonant(w));
    }
    let n = map.n();
    let kinds = lin.blocks.kinds().to_vec();
    let mu = lin.exponents.clone();
    // one extra degree holds the Hamiltonians of the top map degree
    let basis = Basis::new(2 * n, top + 1);

    // κ in complex coordinates: N = C S⁻¹ ∘ κ ∘ S C⁻¹
    let c = complex_coordinates(&kinds);
    let cinv = c.clone().try_inverse().expect("invertible coordinates");
    let sc = lin.transform.map(|v| Complex64::new(v, 0.0));
    let sinv = lin.inverse.map(|v| Complex64::new(v, 0.0));
    let mut nmap = linear_conjugate(&map.to_polys(&basis), &(&c * &sinv), &(&sc * &cinv));

    let lam: Vec<Complex64> = (0..2 * n).map(|i| if i < n { mu[i].exp() } else { (-mu[i - n]).exp() }).collect();
    let mut resonant = Poly::zero(&basis);
    let mut generators = Vec::new();
    let mut conditioning = f64::INFINITY;
    for d in 2..=top {
        let w = unwind(&nmap, &lam, &resonant);
        let g = hamiltonian_part(&w, d);
        let mut chi = Poly::zero(&basis);
        for (e, v) in g.terms().map(|(e, v)| (e.to_vec(), v)).collect::<Vec<_>>() {
            let (a, b) = e.split_at(n);
            if a == b {
                resonant.set(&e, resonant.get(&e) + v);
                continue;
            }
            let delta: Complex64 = (0..n).map(|j| mu[j] * (a[j] as f64 - b[j] as f64)).sum();
            let den = delta.exp() - 1.0;
            conditioning = conditioning.min(den.norm());
            if den.norm() < opts.small_denominator {
                let k = (0..n).map(|j| a[j] as i64 - b[j] as i64).collect();
                return Err(ClassicalError::SmallDenominator { k, value: den.norm() });
            }
            chi.set(&e, v / den);
        }
        if chi.is_zero() {
            continue;
        }
        let forward = flow_map(&chi);
        let backward = flow_map(&chi.scale(Complex64::new(-1.0, 0.0)));
        let inner = compose_many(&nmap, &forward);
        nmap = compose_many(&backward, &inner);
        generators.push(Generator { degree: d + 1, chi: to_series(&chi, top) });
    }
    let w = unwind(&nmap, &lam, &resonant);
    let remainder = (0..2 * n).map(|i| w[i].sub(&Poly::var(&basis, i)).up_to(top).max_abs()).fold(0.0, f64::max);

    let orders = Orders::new(iota_degree, 0, 0);
    let mut p_complex = MultiSeries::zero(n, orders);
    for (j, m) in mu.iter().enumerate() {
        let mut e = vec![0; n];
        e[j] = 1;
        p_complex.add_term(MultiIndex::new(e, 0, 0), FloatComplex(*m)).expect("in box");
    }
    for (e, v) in resonant.terms() {
        let a = e[..n].to_vec();
        if a.iter().sum::<u32>() <= iota_degree {
            p_complex.add_term(MultiIndex::new(a, 0, 0), FloatComplex(v)).expect("in box");
        }
    }
    let (p, imaginary_discarded) = real_actions(&p_complex, &kinds);
    Ok(BnfResult {
        blocks: lin.blocks,
        transform: lin.transform,
        exponents: mu,
        p,
        p_complex,
        generators,
        conditioning,
        remainder,
        imaginary_discarded,
    })
}

/// `exp H_{-R} ∘ Λ⁻¹ ∘ N`.
fn unwind(nmap: &[Poly], lam: &[Complex64], resonant: &Poly) -> Vec<Poly> {
    let scaled: Vec<Poly> = nmap.iter().zip(lam).map(|(p, l)| p.scale(1.0 / l)).collect();
    if resonant.is_zero() {
        return scaled;
    }
    compose_many(&flow_map(&resonant.scale(Complex64::new(-1.0, 0.0))), &scaled)
}

/// The degree-`d + 1` Hamiltonian of the degree-`d` part of `w − id`, via
/// Euler's identity `(d+1) g = Σ p_i V_{q_i} − q_i V_{p_i}`.
fn hamiltonian_part(w: &[Poly], d: u32) -> Poly {
    let basis = w[0].basis().clone();
    let n = w.len() / 2;
    let mut g = Poly::zero(&basis);
    for i in 0..n {
        let vq = w[i].part(d);
        let vp = w[n + i].part(d);
        g = g.add(&Poly::var(&basis, n + i).mul(&vq)).sub(&Poly::var(&basis, i).mul(&vp));
    }
    g.scale(Complex64::new(1.0 / (d as f64 + 1.0), 0.0))
}

fn to_series(p: &Poly, degree: u32) -> MultiSeries<FloatComplex> {
    let nv = p.basis().nvars();
    let terms = p.terms().map(|(e, v)| (MultiIndex::new(e.to_vec(), 0, 0), FloatComplex(v)));
    MultiSeries::from_terms(nv, Orders::new(degree + 1, 0, 0), terms).expect("inside the box")
}

/// Rewrites `p(ι̃)` in real actions (`ι̃ = iι` on elliptic slots) and enforces
/// reality: real coefficients, and conjugate symmetry across complex pairs.
fn real_actions(p: &MultiSeries<FloatComplex>, kinds: &[BlockKind]) -> (MultiSeries<FloatComplex>, f64) {
    let n = kinds.len();
    let mut converted = std::collections::BTreeMap::new();
    for (idx, c) in p.terms() {
        let ell: u32 = idx.iota.iter().zip(kinds).filter(|(_, k)| **k == BlockKind::Elliptic).map(|(e, _)| *e).sum();
        converted.insert(idx.iota.clone(), c.0 * Complex64::new(0.0, 1.0).powu(ell));
    }
    let swap = |e: &[u32]| -> Vec<u32> {
        let mut s = e.to_vec();
        let mut j = 0;
        while j < n {
            if kinds[j] == BlockKind::ComplexHyperbolic {
                s.swap(j, j + 1);
                j += 2;
            } else {
                j += 1;
            }
        }
        s
    };
    let mut discarded: f64 = 0.0;
    let mut terms = Vec::new();
    let zero = Complex64::new(0.0, 0.0);
    let keys: std::collections::BTreeSet<Vec<u32>> =
        converted.keys().cloned().chain(converted.keys().map(|k| swap(k))).collect();
    for e in keys {
        let c = converted.get(&e).copied().unwrap_or(zero);
        let partner = converted.get(&swap(&e)).copied().unwrap_or(zero);
        let sym = (c + partner.conj()) / 2.0;
        discarded = discarded.max((c - sym).norm());
        terms.push((MultiIndex::new(e, 0, 0), FloatComplex(sym)));
    }
    let out = MultiSeries::from_terms(n, p.orders(), terms).expect("same box");
    (out, discarded)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnfReportDoc {
    pub blocks: Vec<BlockDoc>,
    pub rotation_angles: Vec<Option<f64>>,
    pub p: SeriesDoc,
    pub generator_degrees: Vec<u32>,
    pub conditioning: f64,
    pub remainder: f64,
    pub imaginary_discarded: f64,
    pub transform: Vec<Vec<f64>>,
}

impl BnfReportDoc {
    pub fn from_result(r: &BnfResult) -> Self {
        Self {
            blocks: BlockDoc::from_blocks(&r.blocks),
            rotation_angles: r.rotation_angles(),
            p: SeriesDoc::from_series(&r.p),
            generator_degrees: r.generators.iter().map(|g| g.degree).collect(),
            conditioning: r.conditioning,
            remainder: r.remainder,
            imaginary_discarded: r.imaginary_discarded,
            transform: r.transform.row_iter().map(|row| row.iter().copied().collect()).collect(),
        }
    }
}

pub fn bnf_report_to_json(r: &BnfResult) -> String {
    serde_json::to_string_pretty(&BnfReportDoc::from_result(r)).expect("serializable")
}

pub fn bnf_report_to_text(r: &BnfResult) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let (ne, nrh, nch) = r.blocks.counts();
    let _ = writeln!(out, "blocks: {ne} elliptic, {nrh} real hyperbolic, {nch} complex hyperbolic");
    for (j, (m, k)) in r.blocks.mu().iter().zip(r.blocks.kinds()).enumerate() {
        let _ = write!(out, "  μ_{} = {:.15} [{}]", j + 1, m, k.as_str());
        if let Some(t) = r.rotation_angles()[j] {
            let _ = write!(out, "  signed angle {t:.15}");
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "p = {}", r.p);
    let _ = writeln!(out, "r = {}", r.r());
    let _ = writeln!(out, "smallest denominator {:.3e}", r.conditioning);
    let _ = writeln!(out, "remainder {:.3e}, imaginary part discarded {:.3e}", r.remainder, r.imaginary_discarded);
    out
}
