//! Exhaustive search for integer relations `Σ k_j μ_j ∈ 2πiℤ`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Default tolerance on `|Σ k_j μ_j - 2πi m|`.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;

/// A violated non-resonance condition: `Σ k_j μ_j ≈ 2πi·m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResonanceWitness {
    pub k: Vec<i64>,
    pub m: i64,
}

impl std::fmt::Display for ResonanceWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ks: Vec<String> = self.k.iter().map(i64::to_string).collect();
        write!(f, "k = ({}), m = {}", ks.join(", "), self.m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonresonanceCheck {
    pub nonresonant: bool,
    pub witness: Option<ResonanceWitness>,
}

/// Searches all `k ≠ 0` with `Σ|k_j| ≤ max_order`, lowest order first, and
/// reports the first relation found.
pub fn check_nonresonance(mu: &[Complex64], max_order: u32, tol: f64) -> NonresonanceCheck {
    let n = mu.len();
    for order in 1..=max_order as i64 {
        let mut k = vec![0i64; n];
        if let Some(w) = search(mu, &mut k, 0, order, tol) {
            return NonresonanceCheck { nonresonant: false, witness: Some(w) };
        }
    }
    NonresonanceCheck { nonresonant: true, witness: None }
}

fn search(mu: &[Complex64], k: &mut [i64], pos: usize, remaining: i64, tol: f64) -> Option<ResonanceWitness> {
    if pos == k.len() {
        if remaining != 0 {
            return None;
        }
        // one representative per ±k
        let first = k.iter().find(|&&x| x != 0)?;
        if *first < 0 {
            return None;
        }
        let s: Complex64 = k.iter().zip(mu).map(|(&kj, &m)| m * kj as f64).sum();
        let m = (s.im / (2.0 * PI)).round();
        let r = s - Complex64::new(0.0, 2.0 * PI * m);
        return (r.norm() < tol).then(|| ResonanceWitness { k: k.to_vec(), m: m as i64 });
    }
    if pos + 1 == k.len() {
        for v in [remaining, -remaining] {
            k[pos] = v;
            if let Some(w) = search(mu, k, pos + 1, 0, tol) {
                return Some(w);
            }
            if remaining == 0 {
                break;
            }
        }
        k[pos] = 0;
        return None;
    }
    for a in 0..=remaining {
        for v in [a, -a] {
            k[pos] = v;
            if let Some(w) = search(mu, k, pos + 1, remaining - a, tol) {
                return Some(w);
            }
            if a == 0 {
                break;
            }
        }
    }
    k[pos] = 0;
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_root_of_unity() {
        let r = check_nonresonance(&[Complex64::new(0.0, 2.0 * PI / 3.0)], 3, DEFAULT_RESONANCE_TOL);
        assert!(!r.nonresonant);
        assert_eq!(r.witness, Some(ResonanceWitness { k: vec![3], m: 1 }));
        assert!(check_nonresonance(&[Complex64::new(0.0, 2.0 * PI / 3.0)], 2, DEFAULT_RESONANCE_TOL).nonresonant);
    }

    #[test]
    fn one_and_root_two() {
        let mu = [Complex64::new(0.0, 1.0), Complex64::new(0.0, 2f64.sqrt())];
        assert!(check_nonresonance(&mu, 10, DEFAULT_RESONANCE_TOL).nonresonant);
    }

    #[test]
    fn hyperbolic_never_resonant() {
        assert!(check_nonresonance(&[Complex64::new(2f64.ln(), 0.0)], 40, DEFAULT_RESONANCE_TOL).nonresonant);
    }

    #[test]
    fn cross_resonance_found() {
        let mu = [Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0)];
        let r = check_nonresonance(&mu, 5, DEFAULT_RESONANCE_TOL);
        assert_eq!(r.witness, Some(ResonanceWitness { k: vec![2, -1], m: 0 }));
    }

    #[test]
    fn conjugate_pair_is_nonresonant() {
        let mu = [Complex64::new(0.3, 1.1), Complex64::new(0.3, -1.1)];
        assert!(check_nonresonance(&mu, 8, DEFAULT_RESONANCE_TOL).nonresonant);
    }
}
