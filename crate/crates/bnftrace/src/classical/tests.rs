use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::{compose_many, flow_map, Basis, Poly};
use super::*;
use crate::qbnf::BlockKind;
use crate::series::{FloatComplex, MultiIndex, MultiSeries, Orders};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

/// Linear map with matrix `m` as a Taylor map of the given degree.
fn linear_map(m: &DMatrix<f64>, degree: u32) -> TaylorMap<FloatComplex> {
    let d = m.nrows();
    let comps = (0..d)
        .map(|i| {
            let terms = (0..d).filter(|&j| m[(i, j)] != 0.0).map(|j| {
                let mut e = vec![0; d];
                e[j] = 1;
                (MultiIndex::new(e, 0, 0), FloatComplex::new(m[(i, j)], 0.0))
            });
            MultiSeries::from_terms(d, Orders::new(degree, 0, 0), terms).unwrap()
        })
        .collect();
    TaylorMap::new(d / 2, degree, comps).unwrap()
}

fn map_from_polys(n: usize, degree: u32, polys: &[Poly]) -> TaylorMap<FloatComplex> {
    TaylorMap::from_polys(n, degree, polys)
}

/// Product of random symplectic shears and a dilation.
fn random_symplectic(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let sym = |rng: &mut ChaCha8Rng| {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.8..0.8));
        (&a + a.transpose()) * 0.5
    };
    let mut upper = DMatrix::identity(2 * n, 2 * n);
    upper.view_mut((0, n), (n, n)).copy_from(&sym(rng));
    let mut lower = DMatrix::identity(2 * n, 2 * n);
    lower.view_mut((n, 0), (n, n)).copy_from(&sym(rng));
    let mut dil = DMatrix::identity(2 * n, 2 * n);
    for i in 0..n {
        let s: f64 = rng.gen_range(0.5..2.0);
        dil[(i, i)] = s;
        dil[(n + i, n + i)] = 1.0 / s;
    }
    upper * dil * lower
}

/// Flow of the quadratic Hamiltonian `α(x₁ξ₁ + x₂ξ₂) − β(x₁ξ₂ − x₂ξ₁)`,
/// exponentiated from its Hamiltonian matrix.
fn complex_block(alpha: f64, beta: f64) -> DMatrix<f64> {
    #[rustfmt::skip]
    let hess = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, alpha, -beta,
        0.0, 0.0, beta, alpha,
        alpha, beta, 0.0, 0.0,
        -beta, alpha, 0.0, 0.0,
    ]);
    (standard_j(2) * hess).exp()
}

fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    // each block is 2m×2m in (x, ξ) layout; interleave into the global layout
    let n: usize = blocks.iter().map(|b| b.nrows() / 2).sum();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    let mut off = 0;
    for b in blocks {
        let m = b.nrows() / 2;
        for i in 0..2 * m {
            for j in 0..2 * m {
                let gi = if i < m { off + i } else { n + off + i - m };
                let gj = if j < m { off + j } else { n + off + j - m };
                out[(gi, gj)] = b[(i, j)];
            }
        }
        off += m;
    }
    out
}

#[test]
fn classify_rotation() {
    let b = classify_eigenvalues(&rotation(1.0), 1e-8).unwrap();
    assert_eq!(b.counts(), (1, 0, 0));
    assert!((b.mu()[0] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    // clockwise rotation has the same exponent
    let b = classify_eigenvalues(&rotation(-1.0), 1e-8).unwrap();
    assert!((b.mu()[0] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
}

#[test]
fn classify_hyperbolic() {
    let b = classify_eigenvalues(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]), 1e-8).unwrap();
    assert_eq!(b.counts(), (0, 1, 0));
    assert!((b.mu()[0].re - 2f64.ln()).abs() < 1e-14);
}

#[test]
fn classify_complex_quadruple() {
    let b = classify_eigenvalues(&complex_block(1.0, 1.0), 1e-8).unwrap();
    assert_eq!(b.counts(), (0, 0, 1));
    assert!((b.mu()[0] - Complex64::new(1.0, 1.0)).norm() < 1e-12);
    assert!((b.mu()[1] - Complex64::new(1.0, -1.0)).norm() < 1e-12);
}

#[test]
fn classify_rejections() {
    let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    assert!(matches!(classify_eigenvalues(&shear, 1e-8), Err(ClassicalError::Excluded(_))));
    let flip = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -0.5]);
    assert!(matches!(classify_eigenvalues(&flip, 1e-8), Err(ClassicalError::Excluded(_))));
    let squash = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
    assert!(matches!(classify_eigenvalues(&squash, 1e-8), Err(ClassicalError::NonSymplectic { .. })));
    let twice = block_diag(&[rotation(1.0), rotation(1.0)]);
    assert!(matches!(classify_eigenvalues(&twice, 1e-8), Err(ClassicalError::Defective(_))));
}

#[test]
fn block_form_needs_no_transform() {
    for m in [rotation(1.0), rotation(-0.7), DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0 / 3.0])] {
        let lin = linear_normalize(&linear_map(&m, 1), 1e-8).unwrap();
        assert!((&lin.transform - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12, "{}", lin.transform);
    }
    let lin = linear_normalize(&linear_map(&complex_block(0.4, 0.9), 1), 1e-8).unwrap();
    assert!((&lin.transform - DMatrix::<f64>::identity(4, 4)).amax() < 1e-12, "{}", lin.transform);
}

#[test]
fn conjugated_rotation_is_normalized_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for theta in [1.0, -2.0] {
        let t = random_symplectic(1, &mut rng);
        let m = t.clone().try_inverse().unwrap() * rotation(theta) * &t;
        let lin = linear_normalize(&linear_map(&m, 1), 1e-8).unwrap();
        assert!(symplectic_defect(&lin.transform) < 1e-12);
        assert!((lin.block_matrix() - rotation(theta)).amax() < 1e-12, "{}", lin.block_matrix());
        let angle = lin.rotation_angles()[0].unwrap();
        assert!((angle - theta).abs() < 1e-12, "{angle}");
    }
}

#[test]
fn mixed_hyperbolic_axes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = block_diag(&[DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 4.0]), rotation(0.6)]);
    let t = random_symplectic(2, &mut rng);
    let m = t.clone().try_inverse().unwrap() * base * &t;
    let lin = linear_normalize(&linear_map(&m, 1), 1e-8).unwrap();
    assert!(symplectic_defect(&lin.transform) < 1e-12);
    assert_eq!(lin.blocks.kinds(), &[BlockKind::Elliptic, BlockKind::RealHyperbolic]);
    let expect = block_diag(&[rotation(0.6), DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.25])]);
    assert!((lin.block_matrix() - expect).amax() < 1e-11, "{}", lin.block_matrix());
}

#[test]
fn determinant_bridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = random_symplectic(3, &mut rng);
    let mixed =
        block_diag(&[rotation(1.3), DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.0 / 1.5]), rotation(-0.4)]);
    let fixtures = vec![
        rotation(1.0),
        DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
        complex_block(1.0, 1.0),
        complex_block(0.3, 2.5),
        t.clone().try_inverse().unwrap() * mixed * &t,
    ];
    for m in fixtures {
        let b = classify_eigenvalues(&m, 1e-8).unwrap();
        let d = m.nrows();
        let mut mk = DMatrix::identity(d, d);
        for k in 1..=6 {
            mk = &mk * &m;
            let lhs: f64 = b.mu().iter().map(|mu| (2.0 * (mu * (k as f64) / 2.0).sinh()).norm()).product();
            let rhs = (&mk - DMatrix::identity(d, d)).determinant().abs().sqrt();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "k={k}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn pure_rotation_has_no_twist() {
    let r = birkhoff_normal_form(&linear_map(&rotation(1.0), 7), 4, &BnfOptions::default()).unwrap();
    assert!(r.r().max_abs() <= 1e-12, "{}", r.r());
    assert!((r.p.coefficient(&MultiIndex::new(vec![1], 0, 0)).0 - c(-1.0)).norm() < 1e-14);
    assert_eq!(r.rotation_angles(), vec![Some(1.0)]);
}

/// Time-one flow of `p = −ι + ι²/10`: rotation by `ω(ι) = 1 − ι/5`, expanded
/// with series arithmetic.
fn twist_flow_fixture() -> TaylorMap<FloatComplex> {
    let o = Orders::new(7, 0, 0);
    let var = |e: [u32; 2]| {
        MultiSeries::monomial(2, o, MultiIndex::new(e.to_vec(), 0, 0), FloatComplex::new(1.0, 0.0)).unwrap()
    };
    let x = var([1, 0]);
    let xi = var([0, 1]);
    let iota = var([2, 0]).add(&var([0, 2])).unwrap().scale(&FloatComplex::new(0.5, 0.0));
    let e_plus = iota
        .scale(&FloatComplex::new(0.0, -0.2))
        .exp_series()
        .unwrap()
        .scale(&FloatComplex(Complex64::new(0.0, 1.0).exp()));
    let e_minus = iota
        .scale(&FloatComplex::new(0.0, 0.2))
        .exp_series()
        .unwrap()
        .scale(&FloatComplex(Complex64::new(0.0, -1.0).exp()));
    let cos = e_plus.add(&e_minus).unwrap().scale(&FloatComplex::new(0.5, 0.0));
    let sin = e_plus.sub(&e_minus).unwrap().scale(&FloatComplex::new(0.0, -0.5));
    let xn = cos.mul(&x).unwrap().sub(&sin.mul(&xi).unwrap()).unwrap();
    let xin = sin.mul(&x).unwrap().add(&cos.mul(&xi).unwrap()).unwrap();
    TaylorMap::new(1, 7, vec![xn, xin]).unwrap()
}

#[test]
fn flow_fixture_recovers_twist() {
    let map = twist_flow_fixture();
    assert!(map.symplecticity_residual() < 1e-14);
    let r = birkhoff_normal_form(&map, 4, &BnfOptions::default()).unwrap();
    let coef = |k: u32| r.p.coefficient(&MultiIndex::new(vec![k], 0, 0)).0;
    assert!((coef(1) - c(-1.0)).norm() < 1e-12);
    assert!((coef(2) - c(0.1)).norm() < 1e-10, "{}", r.p);
    assert!(coef(3).norm() < 1e-10 && coef(4).norm() < 1e-10, "{}", r.p);
    assert!(r.remainder < 1e-12);
}

/// `R(θ) ∘ (x, ξ) ↦ (x, ξ + a x² + b x³)`.
fn kicked_rotation(theta: f64, a: f64, b: f64, degree: u32) -> TaylorMap<FloatComplex> {
    let basis = Basis::new(2, degree.max(3));
    let x = Poly::var(&basis, 0);
    let xi = Poly::var(&basis, 1);
    let kicked = xi.add(&x.mul(&x).scale(c(a))).add(&x.mul(&x).mul(&x).scale(c(b)));
    let (co, si) = (c(theta.cos()), c(theta.sin()));
    let xn = x.scale(co).sub(&kicked.scale(si));
    let xin = x.scale(si).add(&kicked.scale(co));
    map_from_polys(1, degree, &[xn, xin])
}

fn apply_kicked(theta: f64, a: f64, b: f64, w: (f64, f64)) -> (f64, f64) {
    let (x, xi) = w;
    let k = xi + a * x * x + b * x * x * x;
    (theta.cos() * x - theta.sin() * k, theta.sin() * x + theta.cos() * k)
}

/// Rotation number by weighted Birkhoff averaging of angle increments, and
/// the enclosed action by the shoelace formula over angle-sorted points.
fn orbit_rotation_and_action(theta: f64, a: f64, b: f64, amp: f64, iterates: usize) -> (f64, f64) {
    let mut w = (amp, 0.0);
    let mut pts = Vec::with_capacity(iterates);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..iterates {
        let next = apply_kicked(theta, a, b, w);
        let mut dphi = next.1.atan2(next.0) - w.1.atan2(w.0);
        dphi = (dphi + PI).rem_euclid(2.0 * PI) - PI;
        let t = (k as f64 + 0.5) / iterates as f64;
        let weight = (-1.0 / (t * (1.0 - t))).exp();
        num += weight * dphi;
        den += weight;
        pts.push(w);
        w = next;
    }
    pts.sort_by(|p, q| p.1.atan2(p.0).total_cmp(&q.1.atan2(q.0)));
    let mut area = 0.0;
    for i in 0..pts.len() {
        let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
        area += p.0 * q.1 - q.0 * p.1;
    }
    (num / den, area.abs() / 2.0 / (2.0 * PI))
}

/// Least squares `ν ≈ c₀ + c₁ ι + c₂ ι²`.
fn quadratic_fit(xs: &[f64], ys: &[f64]) -> [f64; 3] {
    let a = DMatrix::from_fn(xs.len(), 3, |i, j| xs[i].powi(j as i32));
    let y = DMatrix::from_column_slice(ys.len(), 1, ys);
    let sol = a.svd(true, true).solve(&y, 1e-14).unwrap();
    [sol[0], sol[1], sol[2]]
}

#[test]
fn kicked_rotation_twist_matches_orbits() {
    let (theta, a, b) = (1.0, 0.6, 0.9);
    let map = kicked_rotation(theta, a, b, 3);
    let r = birkhoff_normal_form(&map, 2, &BnfOptions::default()).unwrap();
    let twist = r.p.coefficient(&MultiIndex::new(vec![2], 0, 0)).0;
    assert!(twist.im.abs() < 1e-12);
    let mut iotas = Vec::new();
    let mut nus = Vec::new();
    for i in 0..10 {
        let amp = 1e-3 + (1e-2 - 1e-3) * i as f64 / 9.0;
        let (nu, iota) = orbit_rotation_and_action(theta, a, b, amp, 10_000);
        iotas.push(iota);
        nus.push(nu);
    }
    let [c0, c1, _] = quadratic_fit(&iotas, &nus);
    assert!((c0 - theta).abs() < 1e-9, "c0 = {c0}");
    // ν(ι) = −∂p/∂ι = θ − 2 r₂ ι − …
    let oracle = -c1 / 2.0;
    assert!((oracle - twist.re).abs() < 1e-4, "oracle {oracle} vs normal form {}", twist.re);
}

#[test]
fn conjugation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let degree = 5;
    let kappa = kicked_rotation(1.0, 0.6, 0.9, degree);
    let base = birkhoff_normal_form(&kappa, 3, &BnfOptions::default()).unwrap();
    let basis = Basis::new(2, degree);
    for _ in 0..3 {
        let mut h = Poly::zero(&basis);
        for e in [[3, 0], [2, 1], [1, 2], [0, 3], [4, 0], [2, 2], [1, 3]] {
            h.set(&e, c(rng.gen_range(-0.5..0.5)));
        }
        let lin = random_symplectic(1, &mut rng);
        let lin_inv = lin.clone().try_inverse().unwrap();
        let linear = |m: &DMatrix<f64>| -> Vec<Poly> {
            (0..2)
                .map(|i| Poly::var(&basis, 0).scale(c(m[(i, 0)])).add(&Poly::var(&basis, 1).scale(c(m[(i, 1)]))))
                .collect()
        };
        // T = L ∘ E_h, T⁻¹ = E_{−h} ∘ L⁻¹
        let t = compose_many(&linear(&lin), &flow_map(&h));
        let t_inv = compose_many(&flow_map(&h.scale(c(-1.0))), &linear(&lin_inv));
        let k = kappa.to_polys(&basis);
        let conj = compose_many(&t_inv, &compose_many(&k, &t));
        let conj_map = map_from_polys(1, degree, &conj);
        assert!(conj_map.symplecticity_residual() < 1e-10);
        let r = birkhoff_normal_form(&conj_map, 3, &BnfOptions::default()).unwrap();
        let diff = r.p.max_abs_diff(&base.p);
        assert!(diff <= 1e-9, "{diff:e}\n{}\n{}", r.p, base.p);
    }
}

#[test]
fn normal_form_is_reproduced_from_its_twist_map() {
    let kappa = kicked_rotation(1.0, 0.6, 0.9, 5);
    let r = birkhoff_normal_form(&kappa, 3, &BnfOptions::default()).unwrap();
    let again = birkhoff_normal_form(&r.twist_map(5), 3, &BnfOptions::default()).unwrap();
    assert!(again.p.max_abs_diff(&r.p) < 1e-12, "{}\n{}", again.p, r.p);
    assert!(again.generators.iter().all(|g| g.chi.max_abs() < 1e-12));
}

#[test]
fn generator_flows_are_symplectic() {
    let kappa = kicked_rotation(1.0, 0.6, 0.9, 5);
    let r = birkhoff_normal_form(&kappa, 3, &BnfOptions::default()).unwrap();
    assert!(!r.generators.is_empty());
    let basis = Basis::new(2, 5);
    for g in &r.generators {
        let mut chi = Poly::zero(&basis);
        for (idx, v) in g.chi.terms() {
            chi.set(&idx.iota, v.0);
        }
        let f = flow_map(&chi);
        // {F_q, F_p} = 1 through degree 4 in the complex canonical coordinates
        let br = f[0].bracket(&f[1]).up_to(3);
        let one = Poly::constant(&basis, c(1.0));
        assert!(br.sub(&one).max_abs() < 1e-12);
    }
}

#[test]
fn hyperbolic_kick_gives_real_form() {
    let basis = Basis::new(2, 5);
    let x = Poly::var(&basis, 0);
    let xi = Poly::var(&basis, 1);
    let kicked = xi.add(&x.mul(&x).scale(c(0.4))).add(&x.mul(&x).mul(&x).scale(c(-0.3)));
    // diag(2, 1/2) after the kick, then conjugated coordinates stay hyperbolic
    let map = map_from_polys(1, 5, &[x.scale(c(2.0)), kicked.scale(c(0.5))]);
    let r = birkhoff_normal_form(&map, 3, &BnfOptions::default()).unwrap();
    assert_eq!(r.blocks.kinds(), &[BlockKind::RealHyperbolic]);
    assert!((r.p.coefficient(&MultiIndex::new(vec![1], 0, 0)).0 - c(2f64.ln())).norm() < 1e-14);
    assert!(r.imaginary_discarded < 1e-12);
    assert!(r.remainder < 1e-12);
}

#[test]
fn complex_pair_normal_form_is_real() {
    let basis = Basis::new(4, 3);
    let lin = complex_block(0.5, 1.2);
    let kick: Vec<Poly> = (0..4)
        .map(|i| {
            let mut p = Poly::zero(&basis);
            for j in 0..4 {
                p.add_scaled(&Poly::var(&basis, j), c(lin[(i, j)]));
            }
            p
        })
        .collect();
    // compose with the time-one flow of a cubic to get nonlinear terms
    let mut h = Poly::zero(&basis);
    h.set(&[3, 0, 0, 0], c(0.2));
    h.set(&[1, 1, 1, 0], c(-0.3));
    h.set(&[0, 1, 0, 2], c(0.1));
    let map = map_from_polys(2, 3, &compose_many(&kick, &flow_map(&h)));
    let r = birkhoff_normal_form(&map, 2, &BnfOptions::default()).unwrap();
    assert_eq!(r.blocks.counts(), (0, 0, 1));
    assert!(r.imaginary_discarded < 1e-10, "{}", r.imaginary_discarded);
    assert!(r.remainder < 1e-10);
    let lin1 = r.p.coefficient(&MultiIndex::new(vec![1, 0], 0, 0)).0;
    assert!((lin1 - Complex64::new(0.5, 1.2)).norm() < 1e-12);
}

#[test]
fn resonant_rotation_is_refused() {
    let map = linear_map(&rotation(2.0 * PI / 3.0), 3);
    match birkhoff_normal_form(&map, 2, &BnfOptions::default()) {
        Err(ClassicalError::Resonant(w)) => assert_eq!(w.k, vec![3]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn degree_and_symplecticity_checks() {
    let map = linear_map(&rotation(1.0), 2);
    assert!(matches!(
        birkhoff_normal_form(&map, 2, &BnfOptions::default()),
        Err(ClassicalError::InsufficientDegree { have: 2, need: 3 })
    ));
    let squash = linear_map(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]), 3);
    let err = birkhoff_normal_form(&squash, 2, &BnfOptions::default()).unwrap_err();
    assert!(matches!(err, ClassicalError::NonSymplectic { .. }));
    assert!(!err.is_math());
}
