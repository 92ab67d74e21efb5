//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! Expected values come from oracles written here: lattice sums, direct
//! orbit iteration, determinants and quadrature. The library supplies only
//! the code under test and the series container.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use bnftrace::classical::{
    birkhoff_normal_form, check_nonresonance, classify_eigenvalues, standard_j, BnfOptions, ClassicalError, TaylorMap,
};
use bnftrace::hypcalc::{Exponent, ExponentSeries};
use bnftrace::oscillatory::{extract_jets, forward_pairing, pair_all, ExtractOptions, OrbitExpansion, TestJet};
use bnftrace::qbnf::json::bnf_from_json;
use bnftrace::qbnf::{make_trace_data, trace_power, QuantumBnf, TraceOptions};
use bnftrace::recover::{recover_frequencies, recover_qbnf, required_samples, PronyOptions, RecoverOptions};
use bnftrace::series::{ExactRationalComplex, FloatComplex, MultiIndex, MultiSeries, Orders, Scalar};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = ExactRationalComplex;
type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture present")
}

fn no_action<F: Scalar>() -> MultiSeries<F> {
    MultiSeries::zero(0, Orders::new(0, 0, 0))
}

// ---- 1: trace coefficients against lattice sums ----

type Terms = Vec<(u32, Vec<u32>, Complex64)>;

fn random_f(rng: &mut ChaCha8Rng, n: usize) -> Terms {
    let mut out = Vec::new();
    for l in 0..=2u32 {
        for a0 in 0..=3u32 {
            for a1 in 0..=(if n == 2 { 3 - a0 } else { 0 }) {
                let alpha: Vec<u32> = if n == 2 { vec![a0, a1] } else { vec![a0] };
                let deg: u32 = alpha.iter().sum();
                if (l == 0 && deg < 2) || l + deg > 3 {
                    continue;
                }
                out.push((l, alpha, Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.2..0.2))));
            }
        }
    }
    out
}

/// `Σ_m e^{-ik Σ_j h^{j-1} g_j(y_m)} e^{-⟨m+1/2, kμ⟩}` expanded to h²,
/// with `y_m = (m + 1/2)/i` and `g_j` the part of F of total degree `j`.
fn lattice_oracle(terms: &Terms, mu: &[Complex64], k: u32, m_max: usize) -> [Complex64; 3] {
    let n = mu.len();
    let kf = k as f64;
    let mut acc = [Complex64::new(0.0, 0.0); 3];
    let mut m = vec![0usize; n];
    loop {
        let y: Vec<Complex64> = m.iter().map(|&mj| Complex64::new(0.0, -(mj as f64 + 0.5))).collect();
        let mut g = [Complex64::new(0.0, 0.0); 3];
        for (l, alpha, c) in terms {
            let j = (*l + alpha.iter().sum::<u32>()) as usize - 1;
            g[j] += y.iter().zip(alpha).fold(*c, |v, (yj, &aj)| v * yj.powu(aj));
        }
        let a = Complex64::new(0.0, -kf);
        let e0 = (a * g[0]).exp();
        let e1 = a * g[1];
        let e2 = a * g[2] + e1 * e1 / 2.0;
        let w: Complex64 = m.iter().zip(mu).map(|(&mj, &muj)| (-(mj as f64 + 0.5) * kf * muj).exp()).product();
        acc[0] += e0 * w;
        acc[1] += e0 * e1 * w;
        acc[2] += e0 * e2 * w;
        let mut pos = 0;
        loop {
            if pos == n {
                return acc;
            }
            m[pos] += 1;
            if m[pos] <= m_max {
                break;
            }
            m[pos] = 0;
            pos += 1;
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let mut worst: f64 = 0.0;
    for n in 1..=2usize {
        for _ in 0..3 {
            let mu: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(0.5..2.0), 0.0)).collect();
            let terms = random_f(&mut rng, n);
            let f = MultiSeries::from_terms(
                n,
                Orders::new(3, 0, 2),
                terms.iter().map(|(l, a, c)| (MultiIndex::new(a.clone(), 0, *l), FloatComplex(*c))),
            )
            .map_err(|e| e.to_string())?;
            let exps = mu.iter().map(|&m| ExponentSeries::constant(Exponent::float(m))).collect();
            let b = QuantumBnf::new(exps, f, 1e-9).map_err(|e| e.to_string())?;
            for k in 1..=4u32 {
                let t = trace_power(&b, k, 0, 2, &TraceOptions::default()).map_err(|e| e.to_string())?;
                let phase = (Complex64::new(0.0, -(k as f64)) * t.phase.0).exp();
                let want = lattice_oracle(&terms, &mu, k, 80);
                for j in 0..3u32 {
                    let got = t.coefficients.coefficient(&MultiIndex::new(vec![], 0, j)).0 * phase;
                    let rel = (got - want[j as usize]).norm() / want[j as usize].norm();
                    worst = worst.max(rel);
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-10, || format!("worst relative deviation {worst:e}"))?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("worst relative deviation {worst:.2e} in {secs:.2} s"))
}

// ---- 2, 3: round trips ----

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let b: QuantumBnf<Q> = bnf_from_json(&read_fixture("rt1.json"), 1e-9).map_err(|e| e.to_string())?;
    let t = make_trace_data(&b, &no_action(), &BTreeMap::new(), 8, 3, 3, &TraceOptions::default())
        .map_err(|e| e.to_string())?;
    let r = recover_qbnf(&t, 1, Orders::new(4, 3, 3), &RecoverOptions::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(r.passed, || "self-check failed".into())?;
    ensure(r.recovered == b, || format!("recovered {:?}", r.recovered))?;
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("exact equality with k_max 8 in {secs:.2} s"))
}

fn criterion_3() -> Outcome {
    let b: QuantumBnf<FloatComplex> =
        bnf_from_json(&read_fixture("float_mixed.json"), 1e-9).map_err(|e| e.to_string())?;
    ensure(b.mu()[0].base.mu() == Complex64::new(0.0, 1.0), || "fixture θ₁ is not 1".into())?;
    ensure((b.mu()[1].base.mu() - Complex64::new(3f64.ln(), 0.0)).norm() < 1e-15, || "fixture μ₂ is not ln 3".into())?;
    let orders = Orders::new(3, 2, 2);
    ensure(b.f().orders() == orders, || "fixture orders differ from (3,2,2)".into())?;
    let t = make_trace_data(&b, &no_action(), &BTreeMap::new(), 12, 2, 2, &TraceOptions::default())
        .map_err(|e| e.to_string())?;
    let r = recover_qbnf(&t, 2, orders, &RecoverOptions::default()).map_err(|e| e.to_string())?;
    let err = r.recovered.relative_error(&b.canonicalize());
    let cond = r.max_condition();
    ensure(r.passed, || "self-check failed".into())?;
    ensure(err <= 1e-8, || format!("relative error {err:e}"))?;
    ensure(cond <= 1e6, || format!("condition {cond:e}"))?;
    Ok(format!("relative error {err:.2e}, condition {cond:.2e}"))
}

// ---- 4: exponent recovery ----

/// Representative of `±μ` with `Re μ > 0`, or `Im μ > 0` on the imaginary axis.
fn normalize(mu: Complex64) -> Complex64 {
    if mu.re < -1e-12 || (mu.re.abs() <= 1e-12 && mu.im < 0.0) {
        -mu
    } else {
        mu
    }
}

fn random_spectrum(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    loop {
        let mut mu = Vec::new();
        while mu.len() < n {
            match rng.gen_range(0..3) {
                0 => mu.push(Complex64::new(0.0, rng.gen_range(0.3..PI - 0.3))),
                1 => mu.push(Complex64::new(rng.gen_range(0.3..2.0), 0.0)),
                _ if mu.len() + 2 <= n => {
                    let z = Complex64::new(rng.gen_range(0.3..1.5), rng.gen_range(0.3..PI - 0.3));
                    mu.push(z);
                    mu.push(z.conj());
                }
                _ => {}
            }
        }
        let gaps_ok = mu
            .iter()
            .enumerate()
            .all(|(i, a)| mu[i + 1..].iter().all(|b| (a - b).norm() >= 0.3 && (a + b).norm() >= 0.3));
        if gaps_ok {
            return mu;
        }
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=3usize {
        for _ in 0..6 {
            let mu = random_spectrum(&mut rng, n);
            let phi = rng.gen_range(-1.0..1.0);
            let count = required_samples(n);
            ensure(count == (1 << (n + 1)) + 2, || format!("n = {n} asks for {count} samples"))?;
            let a0: Vec<FloatComplex> = (1..=count)
                .map(|k| {
                    let k = k as f64;
                    let d: Complex64 = mu.iter().map(|&m| 2.0 * (m * k / 2.0).sinh()).product();
                    FloatComplex(Complex64::new(0.0, -k * phi).exp() / d)
                })
                .collect();
            let fit = recover_frequencies(&a0, n, &PronyOptions::default()).map_err(|e| format!("μ = {mu:?}: {e}"))?;
            let mut want: Vec<Complex64> = mu.iter().map(|&m| normalize(m)).collect();
            let mut got: Vec<Complex64> = fit.exponents.iter().map(|e| normalize(e.mu())).collect();
            let key = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
            want.sort_by(key);
            got.sort_by(key);
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).norm());
            }
            worst = worst.max((fit.phi.re - phi).abs());
            ensure(worst <= 1e-8, || format!("μ = {want:?}: recovered {got:?}, φ {} vs {phi}", fit.phi))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} spectra, worst deviation {worst:.2e}"))
}

// ---- 5: classical normal form ----

fn var(o: Orders, e: [u32; 2]) -> MultiSeries<FloatComplex> {
    MultiSeries::monomial(2, o, MultiIndex::new(e.to_vec(), 0, 0), FloatComplex::new(1.0, 0.0)).unwrap()
}

fn cst(v: f64) -> FloatComplex {
    FloatComplex::new(v, 0.0)
}

/// `R(θ) ∘ (x, ξ) ↦ (x, ξ + a x² + b x³)` as a Taylor map.
fn kicked_rotation(theta: f64, a: f64, b: f64, degree: u32) -> TaylorMap<FloatComplex> {
    let o = Orders::new(degree, 0, 0);
    let (x, xi) = (var(o, [1, 0]), var(o, [0, 1]));
    let kicked = xi.add(&var(o, [2, 0]).scale(&cst(a))).unwrap().add(&var(o, [3, 0]).scale(&cst(b))).unwrap();
    let (c, s) = (cst(theta.cos()), cst(theta.sin()));
    let xn = x.scale(&c).sub(&kicked.scale(&s)).unwrap();
    let xin = x.scale(&s).add(&kicked.scale(&c)).unwrap();
    TaylorMap::new(1, degree, vec![xn, xin]).unwrap()
}

/// Rotation number by weighted Birkhoff averaging of angle increments, and
/// the enclosed action by the shoelace formula over angle-sorted points.
fn orbit_rotation_and_action(theta: f64, a: f64, b: f64, amp: f64, iterates: usize) -> (f64, f64) {
    let step = |(x, xi): (f64, f64)| {
        let k = xi + a * x * x + b * x * x * x;
        (theta.cos() * x - theta.sin() * k, theta.sin() * x + theta.cos() * k)
    };
    let mut w = (amp, 0.0);
    let mut pts = Vec::with_capacity(iterates);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..iterates {
        let next = step(w);
        let dphi = (next.1.atan2(next.0) - w.1.atan2(w.0) + PI).rem_euclid(2.0 * PI) - PI;
        let t = (k as f64 + 0.5) / iterates as f64;
        let bump = (-1.0 / (t * (1.0 - t))).exp();
        num += bump * dphi;
        den += bump;
        pts.push(w);
        w = next;
    }
    pts.sort_by(|p, q| p.1.atan2(p.0).total_cmp(&q.1.atan2(q.0)));
    let mut area = 0.0;
    for i in 0..pts.len() {
        let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
        area += p.0 * q.1 - q.0 * p.1;
    }
    // the enclosed area is 2π ι
    (num / den, area.abs() / 2.0 / (2.0 * PI))
}

fn quadratic_fit(x: &[f64], y: &[f64]) -> [f64; 3] {
    let a = DMatrix::from_fn(x.len(), 3, |i, j| x[i].powi(j as i32));
    let rhs = DMatrix::from_column_slice(y.len(), 1, y);
    let sol = a.svd(true, true).solve(&rhs, 1e-14).unwrap();
    [sol[0], sol[1], sol[2]]
}

fn criterion_5() -> Outcome {
    let o = Orders::new(7, 0, 0);
    // (a) rotation by 1
    let (c, s) = (cst(1f64.cos()), cst(1f64.sin()));
    let (x, xi) = (var(o, [1, 0]), var(o, [0, 1]));
    let rot =
        TaylorMap::new(1, 7, vec![x.scale(&c).sub(&xi.scale(&s)).unwrap(), x.scale(&s).add(&xi.scale(&c)).unwrap()])
            .unwrap();
    let r = birkhoff_normal_form(&rot, 4, &BnfOptions::default()).map_err(|e| e.to_string())?;
    let r_rot = r.r().max_abs();
    ensure(r_rot <= 1e-12, || format!("rotation remainder r = {r_rot:e}"))?;

    // (b) time-one flow of p = −ι + ι²/10 read from the checked-in fixture
    let flow = bnftrace::classical::map_from_json::<FloatComplex>(&read_fixture("twist_flow_map.json"))
        .map_err(|e| e.to_string())?;
    let r = birkhoff_normal_form(&flow, 4, &BnfOptions::default()).map_err(|e| e.to_string())?;
    let twist = r.p.coefficient(&MultiIndex::new(vec![2], 0, 0)).0;
    let dev_b = (twist - Complex64::new(0.1, 0.0)).norm();
    ensure(dev_b <= 1e-10, || format!("flow ι² coefficient {twist}"))?;

    // (c) twist from orbit statistics; ν(ι) = θ − 2 r₂ ι + …
    let (theta, a, b) = (1.0, 0.6, 0.9);
    let r =
        birkhoff_normal_form(&kicked_rotation(theta, a, b, 3), 2, &BnfOptions::default()).map_err(|e| e.to_string())?;
    let r2 = r.p.coefficient(&MultiIndex::new(vec![2], 0, 0)).0;
    let (mut iotas, mut nus) = (Vec::new(), Vec::new());
    for i in 0..10 {
        let amp = 1e-3 + (1e-2 - 1e-3) * i as f64 / 9.0;
        let (nu, iota) = orbit_rotation_and_action(theta, a, b, amp, 10_000);
        iotas.push(iota);
        nus.push(nu);
    }
    let fit = quadratic_fit(&iotas, &nus);
    let oracle = -fit[1] / 2.0;
    let dev_c = (oracle - r2.re).abs();
    ensure(r2.im.abs() < 1e-12 && dev_c < 1e-4, || format!("orbit oracle {oracle} vs normal form {r2}"))?;
    Ok(format!("r = {r_rot:.1e}; flow twist off by {dev_b:.1e}; orbit fit off by {dev_c:.1e}"))
}

// ---- 6: determinant bridge ----

fn rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

fn criterion_6() -> Outcome {
    #[rustfmt::skip]
    let hess = |alpha: f64, beta: f64| DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, alpha, -beta,
        0.0, 0.0, beta, alpha,
        alpha, beta, 0.0, 0.0,
        -beta, alpha, 0.0, 0.0,
    ]);
    // rotation ⊕ hyperbolic in (x₁, x₂, ξ₁, ξ₂) layout, conjugated by a shear
    let (c, s) = (0.8f64.cos(), 0.8f64.sin());
    #[rustfmt::skip]
    let mixed = DMatrix::from_row_slice(4, 4, &[
        c, 0.0, -s, 0.0,
        0.0, 1.7, 0.0, 0.0,
        s, 0.0, c, 0.0,
        0.0, 0.0, 0.0, 1.0 / 1.7,
    ]);
    let mut shear = DMatrix::<f64>::identity(4, 4);
    shear[(0, 2)] = 0.3;
    shear[(0, 3)] = -0.4;
    shear[(1, 2)] = -0.4;
    shear[(1, 3)] = 0.6;
    let fixtures = vec![
        rotation(1.0),
        rotation(2.5),
        DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
        (standard_j(2) * hess(1.0, 1.0)).exp(),
        (standard_j(2) * hess(0.3, 2.5)).exp(),
        shear.clone().try_inverse().unwrap() * mixed * shear,
    ];
    let mut worst: f64 = 0.0;
    for m in &fixtures {
        let blocks = classify_eigenvalues(m, 1e-8).map_err(|e| e.to_string())?;
        let d = m.nrows();
        let mut mk = DMatrix::<f64>::identity(d, d);
        for k in 1..=6 {
            mk = &mk * m;
            let lhs: f64 = blocks.mu().iter().map(|mu| (2.0 * (mu * k as f64 / 2.0).sinh()).norm()).product();
            let rhs = (&mk - DMatrix::<f64>::identity(d, d)).determinant().abs().sqrt();
            worst = worst.max((lhs - rhs).abs() / rhs.max(1.0));
        }
    }
    ensure(worst <= 1e-12, || format!("worst deviation {worst:e}"))?;
    Ok(format!("{} matrices, k ≤ 6, worst deviation {worst:.1e}", fixtures.len()))
}

// ---- 7: oscillatory pairings ----

fn rational(rng: &mut ChaCha8Rng) -> Q {
    Q::from_ratio(rng.gen_range(-9..=9), rng.gen_range(1..=7))
}

fn random_orbit(rng: &mut ChaCha8Rng, order: u32) -> OrbitExpansion<Q> {
    let action: Vec<Q> = (0..order + 2).map(|_| rational(rng)).collect();
    let mut terms = vec![(MultiIndex::new(vec![], 0, 0), Q::from_ratio(rng.gen_range(1..=5), rng.gen_range(1..=4)))];
    for p in 1..=order {
        for l in 0..=p {
            terms.push((MultiIndex::new(vec![], l, p - l), rational(rng) + Q::i() * rational(rng)));
        }
    }
    let amp = MultiSeries::from_terms(0, Orders::new(0, order, order), terms).unwrap();
    OrbitExpansion::new(action, amp, 0.0).unwrap()
}

/// Jets of `exp(-(t-c)²/2)` from the Hermite recurrence.
fn gaussian_jets(c: f64, t: f64, count: usize) -> Vec<f64> {
    let x = t - c;
    let w = (-x * x / 2.0).exp();
    let mut he = vec![1.0, x];
    for m in 1..count {
        he.push(x * he[m] - m as f64 * he[m - 1]);
    }
    (0..count).map(|m| if m % 2 == 0 { 1.0 } else { -1.0 } * he[m] * w).collect()
}

/// `e^{-iI₀/h} h⁻¹ ∫ ĝ(z/h) u(z,h) dz` by the trapezoid rule, with
/// `ĝ(ζ) = √(2π) e^{-ζ²/2} e^{-icζ}`.
fn smeared_by_quadrature(action: &[f64], amps: &[Vec<f64>], c: f64, h: f64) -> Complex64 {
    let (lo, hi, n) = (-14.0, 14.0, 40_000);
    let step = (hi - lo) / n as f64;
    let poly = |coeffs: &[f64], z: f64| coeffs.iter().rev().fold(0.0, |acc, &a| acc * z + a);
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let zeta: f64 = lo + i as f64 * step;
        let z = h * zeta;
        let ghat = (2.0 * PI).sqrt() * (-zeta * zeta / 2.0).exp() * Complex64::new(0.0, -c * zeta).exp();
        let phase = (poly(action, z) - action[0]) / h;
        let amp: f64 = amps.iter().enumerate().map(|(j, a)| poly(a, z) * h.powi(j as i32)).sum();
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += ghat * Complex64::new(0.0, phase).exp() * amp * w;
    }
    sum * step
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..3 {
        let u = random_orbit(&mut rng, 5);
        let base = u.action()[1].clone();
        let mut basis: Vec<TestJet<Q>> = (0..11)
            .map(|n| {
                let fact = (1..=n as i64).product::<i64>();
                TestJet::new(
                    base.clone(),
                    (0..11).map(|m| if m == n { Q::from_int(fact) } else { Q::zero() }).collect(),
                )
                .unwrap()
            })
            .collect();
        for _ in 0..3 {
            basis.push(TestJet::new(base.clone(), (0..11).map(|_| rational(&mut rng)).collect()).unwrap());
        }
        let bundle = pair_all(&u, &basis, 5).map_err(|e| e.to_string())?;
        let back = extract_jets(&bundle, &ExtractOptions::default()).map_err(|e| e.to_string())?;
        ensure(back == u, || "order-5 round trip is not exact".into())?;
    }
    let action = [0.3, 0.7, 0.5, -0.2];
    let amps = [vec![1.0, 0.4, -0.3], vec![0.25, 0.1], vec![0.05]];
    let c = 0.2;
    let mut rates = Vec::new();
    for order in [1u32, 2] {
        let mut terms = Vec::new();
        for (j, a) in amps.iter().enumerate() {
            for (l, &v) in a.iter().enumerate() {
                if j + l <= order as usize {
                    terms.push((MultiIndex::new(vec![], l as u32, j as u32), cst(v)));
                }
            }
        }
        let acts: Vec<FloatComplex> = action[..order as usize + 2].iter().map(|&v| cst(v)).collect();
        let amp = MultiSeries::from_terms(0, Orders::new(0, order, order), terms).unwrap();
        let u = OrbitExpansion::new(acts, amp, 0.0).map_err(|e| e.to_string())?;
        let jets = gaussian_jets(c, action[1], 2 * order as usize + 1);
        let g = TestJet::new(cst(action[1]), jets.iter().map(|&v| cst(v)).collect()).map_err(|e| e.to_string())?;
        let b = forward_pairing(&u, &g, order).map_err(|e| e.to_string())?;
        let err = |h: f64| {
            let series: Complex64 = b.iter().enumerate().map(|(p, v)| v.0 * 2.0 * PI * h.powi(p as i32)).sum();
            (smeared_by_quadrature(&action, &amps, c, h) - series).norm()
        };
        let rate = (err(1e-2) / err(1e-3)).log10();
        ensure((rate - (order + 1) as f64).abs() < 0.2, || format!("order {order}: observed rate {rate:.3}"))?;
        rates.push(format!("{rate:.2}"));
    }
    Ok(format!("exact through order 5; quadrature rates {} for orders 1, 2", rates.join(", ")))
}

// ---- 8: resonance ----

fn criterion_8() -> Outcome {
    let check = check_nonresonance(&[Complex64::new(0.0, 2.0 * PI / 3.0)], 10, 1e-9);
    let w = check.witness.ok_or("θ = 2π/3 not flagged")?;
    ensure(w.k.iter().map(|k| k.abs()).sum::<i64>() == 3, || format!("witness k = {:?}", w.k))?;
    let map = TaylorMap::new(1, 3, {
        let o = Orders::new(3, 0, 0);
        let r = rotation(2.0 * PI / 3.0);
        let (x, xi) = (var(o, [1, 0]), var(o, [0, 1]));
        vec![
            x.scale(&cst(r[(0, 0)])).add(&xi.scale(&cst(r[(0, 1)]))).unwrap(),
            x.scale(&cst(r[(1, 0)])).add(&xi.scale(&cst(r[(1, 1)]))).unwrap(),
        ]
    })
    .unwrap();
    match birkhoff_normal_form(&map, 2, &BnfOptions::default()) {
        Err(ClassicalError::Resonant(w)) if w.k == vec![3] => {}
        other => return Err(format!("normal form of the 2π/3 rotation: {other:?}")),
    }
    let pair = [Complex64::new(0.0, 1.0), Complex64::new(0.0, 2f64.sqrt())];
    let check = check_nonresonance(&pair, 10, 1e-9);
    ensure(check.nonresonant, || format!("θ = (1, √2) flagged: {:?}", check.witness))?;
    Ok(format!("2π/3 flagged with k = {:?}, m = {}; (1, √2) clear through order 10", w.k, w.m))
}

// ---- 9: command line ----

fn run_cli(args: &[&str]) -> (Option<i32>, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bnftrace")).args(args).output().expect("binary runs");
    (out.status.code(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn criterion_9() -> Outcome {
    let rt1 = fixture("rt1.json");
    let (code, stdout, stderr) = run_cli(&["roundtrip", "--bnf", rt1.to_str().unwrap(), "--kmax", "8"]);
    ensure(code == Some(0) && stdout.contains("roundtrip OK"), || format!("RT1 roundtrip exit {code:?}: {stderr}"))?;
    let mut schema = 0;
    for entry in std::fs::read_dir(fixture("schema")).unwrap() {
        let path = entry.unwrap().path();
        let p = path.to_str().unwrap();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let args: Vec<&str> = if name.contains("component") {
            vec!["classical-bnf", "--map", p, "--degree", "3"]
        } else if name.starts_with("trace") {
            vec!["recover", "--traces", p, "--n", "1", "--orders", "2,1,1"]
        } else {
            vec!["roundtrip", "--bnf", p]
        };
        let (code, _, stderr) = run_cli(&args);
        ensure(code == Some(2), || format!("{name}: exit {code:?}, {stderr}"))?;
        schema += 1;
    }
    let resonant = fixture("resonant.json");
    let (code, _, stderr) = run_cli(&["forward", "--bnf", resonant.to_str().unwrap()]);
    ensure(code == Some(3) && stderr.contains("k = (3)"), || format!("resonant fixture exit {code:?}: {stderr}"))?;
    Ok(format!("RT1 exit 0; {schema} schema fixtures exit 2; resonant fixture exit 3 with witness k = (3)"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "trace coefficients vs lattice sums", criterion_1),
        (2, "exact round trip", criterion_2),
        (3, "float round trip", criterion_3),
        (4, "exponent recovery", criterion_4),
        (5, "classical normal form", criterion_5),
        (6, "determinant bridge", criterion_6),
        (7, "oscillatory pairings", criterion_7),
        (8, "resonance detection", criterion_8),
        (9, "command line", criterion_9),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(why) => {
                println!("FAIL {id} {name}: {why}");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria {failed:?}");
        std::process::exit(1);
    }
}
