//! Eigenvalue classification and linear symplectic normalization.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::poly::{compose_many, Basis, Poly};
use super::{ClassicalError, TaylorMap};
use crate::qbnf::{BlockKind, SpectrumBlocks};
use crate::series::{FloatComplex, Scalar};

/// Default tolerance for eigenvalue classification.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

/// `J = [[0, I], [-I, 0]]`.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `max |Mᵀ J M − J|`.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let j = standard_j(m.nrows() / 2);
    (m.transpose() * &j * m - j).amax()
}

fn check_square_even(m: &DMatrix<f64>) -> Result<usize, ClassicalError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 || m.nrows() % 2 != 0 {
        return Err(ClassicalError::Shape(format!("expected a 2n×2n matrix, got {}×{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows() / 2)
}

/// Floquet exponents of a real symplectic matrix, in canonical block order.
///
/// Each pair `λ, 1/λ` contributes one exponent `μ` with `λ = e^μ`; an
/// off-circle complex quadruple contributes `μ` and `μ̄`.
pub fn classify_eigenvalues(m: &DMatrix<f64>, tol: f64) -> Result<SpectrumBlocks, ClassicalError> {
    let (blocks, _) = classify_with_eigenvalues(m, tol)?;
    Ok(blocks)
}

fn classify_with_eigenvalues(m: &DMatrix<f64>, tol: f64) -> Result<(SpectrumBlocks, Vec<Complex64>), ClassicalError> {
    let n = check_square_even(m)?;
    let scale = m.amax().max(1.0);
    let defect = symplectic_defect(m);
    if defect > tol * scale * scale {
        return Err(ClassicalError::NonSymplectic { residual: defect });
    }
    let eig: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    let mut mu = Vec::with_capacity(n);
    for &l in &eig {
        let r = l.norm();
        if (l - 1.0).norm() <= tol {
            return Err(ClassicalError::Excluded(format!("eigenvalue {l} equals 1")));
        }
        if (l + 1.0).norm() <= tol {
            return Err(ClassicalError::Excluded(format!("eigenvalue {l} equals -1")));
        }
        if l.im.abs() <= tol * r && l.re < 0.0 {
            return Err(ClassicalError::Excluded(format!("negative real eigenvalue {l}")));
        }
        if (r - 1.0).abs() <= tol {
            if l.im > 0.0 {
                mu.push(Complex64::new(0.0, l.arg()));
            }
        } else if l.im.abs() <= tol * r {
            if l.re > 1.0 {
                mu.push(Complex64::new(l.re.ln(), 0.0));
            }
        } else if r > 1.0 && l.im > 0.0 {
            let m = l.ln();
            mu.push(m);
            mu.push(m.conj());
        }
    }
    // every eigenvalue must be accounted for by some e^{±μ}
    let mut expected: Vec<Complex64> = mu.iter().flat_map(|m| [m.exp(), (-m).exp()]).collect();
    if expected.len() != eig.len() {
        return Err(ClassicalError::NonSymplectic { residual: defect });
    }
    for &l in &eig {
        let pos = expected
            .iter()
            .position(|e| (e - l).norm() <= 1e3 * tol * (1.0 + l.norm()))
            .ok_or(ClassicalError::NonSymplectic { residual: defect })?;
        expected.swap_remove(pos);
    }
    for a in 0..mu.len() {
        for b in (a + 1)..mu.len() {
            if (mu[a] - mu[b]).norm() <= tol.sqrt() {
                return Err(repeated(m, mu[a]));
            }
        }
    }
    let blocks = SpectrumBlocks::classify(&mu, tol)?;
    let perm = blocks.canonical_permutation();
    Ok((blocks.permuted(&perm), eig))
}

fn repeated(m: &DMatrix<f64>, mu: Complex64) -> ClassicalError {
    let lam = mu.exp();
    let shifted = complex(m) - DMatrix::identity(m.nrows(), m.ncols()) * lam;
    let sv = shifted.singular_values();
    let smax = sv.max().max(1.0);
    let nullity = sv.iter().filter(|&&s| s <= 1e-7 * smax).count();
    if nullity < 2 {
        ClassicalError::Defective(format!("eigenvalue {lam} is not semisimple"))
    } else {
        ClassicalError::Defective(format!("repeated eigenvalue {lam} is not supported"))
    }
}

fn complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Unit null vector of `M − λI`, phased so its largest entry (first on ties)
/// is real and positive.
fn eigenvector(m: &DMatrix<f64>, lam: Complex64) -> Vec<Complex64> {
    let d = m.nrows();
    let shifted = complex(m) - DMatrix::identity(d, d) * lam;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let v: Vec<Complex64> = (0..d).map(|i| vt[(k, i)].conj()).collect();
    let big = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let lead = v.iter().find(|x| x.norm() >= big * (1.0 - 1e-9)).copied().expect("nonzero vector");
    let phase = lead.conj() / lead.norm();
    v.into_iter().map(|x| x * phase).collect()
}

fn omega(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let n = a.len() / 2;
    (0..n).map(|i| a[i] * b[n + i] - a[n + i] * b[i]).sum()
}

/// Result of bringing the linear part to block form.
#[derive(Clone, Debug)]
pub struct LinearNormalization {
    pub blocks: SpectrumBlocks,
    /// `S` with `w = S w'`; symplectic.
    pub transform: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// Diagonal exponents in the complex coordinates: `iθ` (signed,
    /// counterclockwise positive) for elliptic slots, `μ` for real hyperbolic,
    /// `μ, μ̄` for complex pairs.
    pub exponents: Vec<Complex64>,
    /// `S⁻¹ ∘ κ ∘ S`.
    pub conjugated: TaylorMap<FloatComplex>,
}

impl LinearNormalization {
    /// Signed rotation angle of each elliptic slot, `None` elsewhere.
    pub fn rotation_angles(&self) -> Vec<Option<f64>> {
        self.blocks
            .kinds()
            .iter()
            .zip(&self.exponents)
            .map(|(k, m)| (*k == BlockKind::Elliptic).then_some(m.im))
            .collect()
    }

    /// Linear part in block form, `S⁻¹ Dκ(0) S`.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        self.conjugated.linear_part()
    }
}

/// Finds a real symplectic `S` putting `Dκ(0)` into block form: rotations for
/// elliptic slots, `diag(e^μ, e^{-μ})` for real hyperbolic ones and
/// `x ↦ e^α R(β) x, ξ ↦ e^{-α} R(β) ξ` for a complex pair `μ = α + iβ`.
pub fn linear_normalize<F: Scalar>(map: &TaylorMap<F>, tol: f64) -> Result<LinearNormalization, ClassicalError> {
    let m = map.linear_part();
    let n = map.n();
    let (blocks, _) = classify_with_eigenvalues(&m, tol)?;
    let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut exponents = Vec::with_capacity(n);
    let mut j = 0;
    while j < n {
        let mu = blocks.mu()[j];
        match blocks.kinds()[j] {
            BlockKind::Elliptic => {
                let v = eigenvector(&m, mu.exp());
                let a: Vec<f64> = v.iter().map(|x| x.re).collect();
                let b: Vec<f64> = v.iter().map(|x| x.im).collect();
                let c = omega(&to_c(&a), &to_c(&b)).re;
                let (sign, theta) = if c > 0.0 { (1.0, -mu.im) } else { (-1.0, mu.im) };
                let r = c.abs().sqrt();
                for i in 0..2 * n {
                    s[(i, j)] = a[i] / r;
                    s[(i, n + j)] = sign * b[i] / r;
                }
                exponents.push(Complex64::new(0.0, theta));
                j += 1;
            }
            BlockKind::RealHyperbolic => {
                let u = eigenvector(&m, mu.exp());
                let v = eigenvector(&m, (-mu).exp());
                let c = omega(&u, &v).re;
                for i in 0..2 * n {
                    s[(i, j)] = u[i].re;
                    s[(i, n + j)] = v[i].re / c;
                }
                exponents.push(mu);
                j += 1;
            }
            BlockKind::ComplexHyperbolic => {
                let ez = eigenvector(&m, mu.exp());
                let u = eigenvector(&m, (-mu).exp());
                let c = omega(&ez, &u);
                let ezeta: Vec<Complex64> = u.iter().map(|x| x / c).collect();
                let r2 = std::f64::consts::SQRT_2;
                for i in 0..2 * n {
                    s[(i, j)] = r2 * ez[i].re;
                    s[(i, j + 1)] = r2 * ez[i].im;
                    s[(i, n + j)] = r2 * ezeta[i].re;
                    s[(i, n + j + 1)] = -r2 * ezeta[i].im;
                }
                exponents.push(mu);
                exponents.push(mu.conj());
                j += 2;
            }
        }
    }
    let defect = symplectic_defect(&s);
    if defect > 1e3 * tol.max(1e-12) * s.amax().powi(2).max(1.0) {
        return Err(ClassicalError::Defective(format!("normalizing basis is not symplectic (defect {defect:e})")));
    }
    let inverse =
        s.clone().try_inverse().ok_or_else(|| ClassicalError::Defective("singular normalizing basis".into()))?;
    let basis = Basis::new(2 * n, map.degree());
    let comps = map.to_polys(&basis);
    let conj = linear_conjugate(&comps, &inverse.map(|v| Complex64::new(v, 0.0)), &s.map(|v| Complex64::new(v, 0.0)));
    let conjugated = TaylorMap::from_polys(n, map.degree(), &conj);
    Ok(LinearNormalization { blocks, transform: s, inverse, exponents, conjugated })
}

fn to_c(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// `B ∘ κ ∘ A` for linear maps `A`, `B`.
pub(crate) fn linear_conjugate(comps: &[Poly], b: &DMatrix<Complex64>, a: &DMatrix<Complex64>) -> Vec<Poly> {
    let basis = comps[0].basis().clone();
    let d = comps.len();
    let args: Vec<Poly> = (0..d)
        .map(|i| {
            let mut p = Poly::zero(&basis);
            for k in 0..d {
                p.add_scaled(&Poly::var(&basis, k), a[(i, k)]);
            }
            p
        })
        .collect();
    let inner = compose_many(comps, &args);
    (0..d)
        .map(|i| {
            let mut p = Poly::zero(&basis);
            for (k, c) in inner.iter().enumerate() {
                if b[(i, k)].norm() != 0.0 {
                    p.add_scaled(c, b[(i, k)]);
                }
            }
            p
        })
        .collect()
}

/// `c = C w'`: complex canonical coordinates in which the block-form linear
/// map is diagonal, `q_j ↦ e^{μ̃_j} q_j`, `p_j ↦ e^{-μ̃_j} p_j`.
pub(crate) fn complex_coordinates(kinds: &[BlockKind]) -> DMatrix<Complex64> {
    let n = kinds.len();
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let ih = Complex64::new(0.0, FRAC_1_SQRT_2);
    let mut c = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    let mut j = 0;
    while j < n {
        match kinds[j] {
            BlockKind::Elliptic => {
                // q = (x + iξ)/√2, p = (ix + ξ)/√2
                c[(j, j)] = h;
                c[(j, n + j)] = ih;
                c[(n + j, j)] = ih;
                c[(n + j, n + j)] = h;
                j += 1;
            }
            BlockKind::RealHyperbolic => {
                c[(j, j)] = Complex64::new(1.0, 0.0);
                c[(n + j, n + j)] = Complex64::new(1.0, 0.0);
                j += 1;
            }
            BlockKind::ComplexHyperbolic => {
                let k = j + 1;
                c[(j, j)] = h;
                c[(j, k)] = -ih;
                c[(n + j, n + j)] = h;
                c[(n + j, n + k)] = ih;
                c[(k, j)] = h;
                c[(k, k)] = ih;
                c[(n + k, n + j)] = h;
                c[(n + k, n + k)] = -ih;
                j += 2;
            }
        }
    }
    c
}
