//! Exponential analysis of the reciprocal leading coefficients.
//!
//! `s_k = 1/a₀(k) = e^{ikφ} ∏_j 2 sinh(kμ_j/2)` is a sum of `2^n` exponentials
//! `±e^{ikφ} e^{k⟨ε,μ⟩/2}`. A Hankel least-squares fit gives the annihilating
//! polynomial; its roots seed a Levenberg-Marquardt refinement on `(φ, μ)`.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use super::RecoverError;
use crate::hypcalc::Exponent;
use crate::qbnf::SpectrumBlocks;
use crate::series::{FieldKind, Scalar};

#[derive(Clone, Copy, Debug)]
pub struct PronyOptions {
    /// Largest accepted `max_k |model_k/s_k - 1|`.
    pub residual_tol: f64,
    /// Tolerance for snapping exponents onto the imaginary or real axis.
    pub block_tol: f64,
}

impl Default for PronyOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-8, block_tol: 1e-9 }
    }
}

/// `μ(0)` in canonical block order and the common phase `ρ = e^{iφ}`.
#[derive(Clone, Debug)]
pub struct FrequencyFit<F> {
    pub exponents: Vec<Exponent<F>>,
    pub rho: F,
    /// `φ` with real part in `(-π, π]`.
    pub phi: Complex64,
    pub residual: f64,
}

/// Samples needed to recover `n` exponents.
pub fn required_samples(n: usize) -> usize {
    (1usize << (n + 1)) + 2
}

/// Roots of the monic degree-`r` polynomial annihilating `s_1, s_2, ...`.
pub fn annihilating_roots(s: &[Complex64], r: usize) -> Result<Vec<Complex64>, RecoverError> {
    let rows = s.len().saturating_sub(r);
    if rows < r {
        return Err(RecoverError::TooFewSamples {
            stage: "exponential fit".into(),
            required: 2 * r,
            available: s.len(),
        });
    }
    let mut h = DMatrix::from_fn(rows, r, |i, j| s[i + j]);
    let b = DMatrix::from_fn(rows, 1, |i, _| -s[i + r]);
    let scale: Vec<f64> = (0..r).map(|j| h.column(j).norm()).collect();
    if scale.iter().any(|&c| c == 0.0 || !c.is_finite()) {
        return Err(RecoverError::RankDeficient("Hankel matrix has a zero column".into()));
    }
    for (j, c) in scale.iter().enumerate() {
        h.column_mut(j).unscale_mut(*c);
    }
    let svd = h.svd(true, true);
    let sv = svd.singular_values.as_slice();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= smax * 1e-14 {
        return Err(RecoverError::RankDeficient(format!(
            "Hankel matrix is numerically singular (σ_min/σ_max = {:e}); frequencies coalesce or are resonant",
            smin / smax
        )));
    }
    let p = svd.solve(&b, 0.0).expect("vectors computed");
    let coeffs: Vec<Complex64> = (0..r).map(|j| p[(j, 0)] / scale[j]).collect();
    poly_roots(&coeffs)
}

/// Roots of `z^r + Σ_{j<r} c_j z^j` from the companion matrix, polished by Newton steps.
fn poly_roots(c: &[Complex64]) -> Result<Vec<Complex64>, RecoverError> {
    let r = c.len();
    let companion = DMatrix::from_fn(r, r, |i, j| {
        if j == r - 1 {
            -c[i]
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000)
        .ok_or_else(|| RecoverError::RootMatching("companion eigenvalues did not converge".into()))?;
    let (_, t) = schur.unpack();
    let eval = |z: Complex64| {
        let mut p = Complex64::new(1.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for j in (0..r).rev() {
            dp = dp * z + p;
            p = p * z + c[j];
        }
        (p, dp)
    };
    let mut roots = Vec::with_capacity(r);
    for i in 0..r {
        let mut z = t[(i, i)];
        for _ in 0..3 {
            let (p, dp) = eval(z);
            if dp.norm() == 0.0 {
                break;
            }
            let next = z - p / dp;
            if !(next.re.is_finite() && next.im.is_finite()) || eval(next).0.norm() >= p.norm() {
                break;
            }
            z = next;
        }
        roots.push(z);
    }
    Ok(roots)
}

fn model(phi: Complex64, mu: &[Complex64], k: f64) -> Complex64 {
    let mut m = (Complex64::i() * k * phi).exp();
    for &mj in mu {
        m *= 2.0 * (mj * (k / 2.0)).sinh();
    }
    m
}

fn cost(phi: Complex64, mu: &[Complex64], s: &[Complex64]) -> f64 {
    s.iter().enumerate().map(|(i, &sk)| (model(phi, mu, (i + 1) as f64) / sk - 1.0).norm_sqr()).sum()
}

fn max_rel_residual(phi: Complex64, mu: &[Complex64], s: &[Complex64]) -> f64 {
    s.iter().enumerate().map(|(i, &sk)| (model(phi, mu, (i + 1) as f64) / sk - 1.0).norm()).fold(0.0, f64::max)
}

/// Damped Gauss-Newton on `x = (φ, μ_1..μ_n)`.
fn refine(x0: Vec<Complex64>, s: &[Complex64]) -> (Vec<Complex64>, f64) {
    let dim = x0.len();
    let mut x = x0;
    let mut c = cost(x[0], &x[1..], s);
    if !c.is_finite() {
        return (x, c);
    }
    let mut lambda = 1e-3;
    for _ in 0..200 {
        if c < 1e-30 {
            break;
        }
        let mut jac = DMatrix::<Complex64>::zeros(s.len(), dim);
        let mut res = DVector::<Complex64>::zeros(s.len());
        for (i, &sk) in s.iter().enumerate() {
            let k = (i + 1) as f64;
            let m = model(x[0], &x[1..], k) / sk;
            res[i] = m - 1.0;
            jac[(i, 0)] = Complex64::i() * k * m;
            for j in 1..dim {
                let half = x[j] * (k / 2.0);
                jac[(i, j)] = (k / 2.0) * half.cosh() / half.sinh() * m;
            }
        }
        let a = jac.adjoint() * &jac;
        let g = jac.adjoint() * &res;
        loop {
            let mut damped = a.clone();
            for d in 0..dim {
                damped[(d, d)] += lambda * a[(d, d)].re.max(f64::MIN_POSITIVE);
            }
            let Some(dx) = damped.lu().solve(&(-&g)) else {
                return (x, c);
            };
            let trial: Vec<Complex64> = x.iter().zip(dx.iter()).map(|(a, b)| a + b).collect();
            let tc = cost(trial[0], &trial[1..], s);
            if tc.is_finite() && tc < c {
                x = trial;
                c = tc;
                lambda = (lambda / 10.0).max(1e-15);
                break;
            }
            lambda *= 10.0;
            if lambda > 1e10 {
                return (x, c);
            }
        }
    }
    (x, c)
}

/// Picks `μ` over `-μ` so that `|e^μ| > 1`, or `Im e^μ > 0` on the unit circle,
/// then snaps near-axis values onto the axis.
fn normalize(mu: Complex64, tol: f64) -> Complex64 {
    let lambda = mu.exp();
    let flip = if (lambda.norm() - 1.0).abs() <= tol { lambda.im < 0.0 } else { lambda.norm() < 1.0 };
    let mut m = (if flip { 1.0 / lambda } else { lambda }).ln();
    if m.re.abs() <= tol {
        m.re = 0.0;
    }
    if m.im.abs() <= tol {
        m.im = 0.0;
    }
    m
}

fn symmetrize_pairs(mu: &mut [Complex64], tol: f64) {
    for i in 0..mu.len() {
        if mu[i].im <= 0.0 || mu[i].re == 0.0 {
            continue;
        }
        if let Some(j) = (0..mu.len()).find(|&j| j != i && (mu[j] - mu[i].conj()).norm() <= tol.sqrt()) {
            let avg = (mu[i] + mu[j].conj()) / 2.0;
            mu[i] = avg;
            mu[j] = avg.conj();
        }
    }
}

fn combinations(items: &[usize], n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (pos, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[pos + 1..], n - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Float fit of `(φ, μ)` to samples `s_k`, `k = 1..len`.
fn fit_float(s: &[Complex64], n: usize, opts: &PronyOptions) -> Result<(Vec<Complex64>, Complex64, f64), RecoverError> {
    let roots = annihilating_roots(s, 1 << n)?;
    let mut candidates: Vec<(f64, Vec<Complex64>)> = Vec::new();
    let all: Vec<usize> = (0..roots.len()).collect();
    for &top in &all {
        let others: Vec<usize> = all.iter().copied().filter(|&i| i != top).collect();
        for subset in combinations(&others, n) {
            let mu: Vec<Complex64> = subset.iter().map(|&i| (roots[top] / roots[i]).ln()).collect();
            let w: Complex64 = mu.iter().map(|m| (m / 2.0).exp()).product();
            let phi = -Complex64::i() * (roots[top] / w).ln();
            let c = cost(phi, &mu, s);
            if c.is_finite() {
                let mut x = vec![phi];
                x.extend(mu);
                candidates.push((c, x));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut solutions: Vec<(f64, Vec<Complex64>, Complex64)> = Vec::new();
    for (_, x0) in candidates.into_iter().take(10) {
        let (x, _) = refine(x0, s);
        let mut mu: Vec<Complex64> = x[1..].iter().map(|&m| normalize(m, opts.block_tol)).collect();
        symmetrize_pairs(&mut mu, opts.block_tol);
        let blocks = match SpectrumBlocks::classify(&mu, opts.block_tol) {
            Ok(b) => b,
            Err(_) => continue,
        };
        let perm = blocks.canonical_permutation();
        let mu: Vec<Complex64> = perm.iter().map(|&j| mu[j]).collect();
        let prod: Complex64 = mu.iter().map(|&m| 2.0 * (m / 2.0).sinh()).product();
        let rho = s[0] / prod;
        let phi = -Complex64::i() * rho.ln();
        let residual = max_rel_residual(phi, &mu, s);
        if residual.is_finite() {
            solutions.push((residual, mu, phi));
        }
    }
    solutions.sort_by(|a, b| a.0.total_cmp(&b.0));
    let Some((residual, mu, phi)) = solutions.first().cloned() else {
        return Err(RecoverError::RootMatching("no assignment of roots to sign patterns fits the samples".into()));
    };
    if residual > opts.residual_tol {
        return Err(RecoverError::InconsistentSamples { residual });
    }
    for (other_res, other_mu, _) in &solutions[1..] {
        if *other_res <= opts.residual_tol {
            let gap = mu.iter().zip(other_mu).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if gap > 1e-6 {
                return Err(RecoverError::Ambiguous(format!(
                    "two exponent sets fit the samples: {mu:?} and {other_mu:?}"
                )));
            }
        }
    }
    Ok((mu, phi, residual))
}

/// Recovers `μ(0)` and `φ` from `a0[k-1] = a₀(k)`, `k = 1..len`.
///
/// The exact backend reconstructs `w_j = e^{μ_j/2}` and `ρ` as Gaussian
/// rationals and verifies every sample exactly.
pub fn recover_frequencies<F: Scalar>(
    a0: &[F],
    n: usize,
    opts: &PronyOptions,
) -> Result<FrequencyFit<F>, RecoverError> {
    if n == 0 {
        return Err(RecoverError::RootMatching("n must be at least 1".into()));
    }
    let need = required_samples(n);
    if a0.len() < need {
        return Err(RecoverError::TooFewSamples {
            stage: "exponent recovery".into(),
            required: need,
            available: a0.len(),
        });
    }
    let mut s = Vec::with_capacity(a0.len());
    for (i, a) in a0.iter().enumerate() {
        match a.inv() {
            Some(v) => s.push(v),
            None => {
                return Err(RecoverError::RankDeficient(format!("leading coefficient a₀({}) vanishes", i + 1)));
            }
        }
    }
    let sf: Vec<Complex64> = s.iter().map(Scalar::to_c64).collect();
    let (mu, phi, residual) = fit_float(&sf, n, opts)?;
    match F::KIND {
        FieldKind::Float => {
            let exponents = mu.iter().map(|&m| Exponent::from_mu(m).expect("float backend")).collect();
            let rho = F::from_c64((Complex64::i() * phi).exp()).expect("float backend");
            Ok(FrequencyFit { exponents, rho, phi, residual })
        }
        FieldKind::Rational => {
            let not_exact = |what: String| RecoverError::NotExact(what);
            let mut exponents = Vec::with_capacity(n);
            for &m in &mu {
                let w = F::reconstruct((m / 2.0).exp()).ok_or_else(|| {
                    not_exact(format!("e^{{μ/2}} = {} is not a small Gaussian rational", (m / 2.0).exp()))
                })?;
                exponents.push(Exponent::from_half_exp(w).map_err(|e| not_exact(e.to_string()))?);
            }
            let rho_f = (Complex64::i() * phi).exp();
            let rho = F::reconstruct(rho_f).ok_or_else(|| {
                not_exact(format!("phase factor e^{{iφ}} = {rho_f} is not a small Gaussian rational"))
            })?;
            for (i, sk) in s.iter().enumerate() {
                let k = (i + 1) as i64;
                let mut m = rho.powi(k).expect("power");
                for e in &exponents {
                    let wk = e.half_exp().powi(k).expect("power");
                    m = m * (wk.clone() - wk.inv().expect("nonzero"));
                }
                if (m.clone() - sk.clone()).is_zero() {
                    continue;
                }
                return Err(RecoverError::InconsistentSamples { residual: m.distance(sk) / sk.abs() });
            }
            Ok(FrequencyFit { exponents, rho, phi, residual: 0.0 })
        }
    }
}
