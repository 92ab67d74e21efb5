//! Classified Floquet exponents.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::QbnfError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Elliptic,
    RealHyperbolic,
    ComplexHyperbolic,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Elliptic => "elliptic",
            BlockKind::RealHyperbolic => "real_hyperbolic",
            BlockKind::ComplexHyperbolic => "complex_hyperbolic",
        }
    }
}

/// Exponents `μ_j` in variable order, each tagged with its block type.
///
/// Elliptic: `μ = iθ`, `0 < θ < π`. Real hyperbolic: `μ > 0`. Complex
/// hyperbolic: `Re μ > 0`, occurring together with `μ̄`; the member with
/// `Im μ ∈ (0, π)` is the leading one of the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumBlocks {
    mu: Vec<Complex64>,
    kinds: Vec<BlockKind>,
    partner: Vec<Option<usize>>,
}

impl SpectrumBlocks {
    /// Infers block types from the exponents and checks the normalization.
    pub fn classify(mu: &[Complex64], tol: f64) -> Result<Self, QbnfError> {
        let invalid = |j: usize, why: &str| QbnfError::InvalidBlocks(format!("μ_{} = {}: {why}", j + 1, mu[j]));
        let mut kinds = Vec::with_capacity(mu.len());
        for (j, m) in mu.iter().enumerate() {
            if !(m.re.is_finite() && m.im.is_finite()) {
                return Err(invalid(j, "not finite"));
            }
            let kind = if m.re.abs() <= tol {
                if !(m.im > tol && m.im < PI - tol) {
                    return Err(invalid(j, "elliptic exponents need θ ∈ (0, π)"));
                }
                BlockKind::Elliptic
            } else if m.im.abs() <= tol {
                if m.re <= 0.0 {
                    return Err(invalid(j, "hyperbolic exponents need a positive real part"));
                }
                BlockKind::RealHyperbolic
            } else {
                if m.re <= 0.0 {
                    return Err(invalid(j, "hyperbolic exponents need a positive real part"));
                }
                if m.im.abs() >= PI - tol {
                    return Err(invalid(j, "complex hyperbolic exponents need |Im μ| < π"));
                }
                BlockKind::ComplexHyperbolic
            };
            kinds.push(kind);
        }
        let mut partner = vec![None; mu.len()];
        for j in 0..mu.len() {
            if kinds[j] != BlockKind::ComplexHyperbolic || partner[j].is_some() {
                continue;
            }
            let found = (0..mu.len()).find(|&i| {
                i != j
                    && kinds[i] == BlockKind::ComplexHyperbolic
                    && partner[i].is_none()
                    && (mu[i] - mu[j].conj()).norm() <= tol.max(1e-12) * (1.0 + mu[j].norm())
            });
            match found {
                Some(i) => {
                    partner[j] = Some(i);
                    partner[i] = Some(j);
                }
                None => return Err(invalid(j, "complex hyperbolic exponent without its conjugate")),
            }
        }
        Ok(Self { mu: mu.to_vec(), kinds, partner })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[Complex64] {
        &self.mu
    }

    pub fn kinds(&self) -> &[BlockKind] {
        &self.kinds
    }

    /// Index of the conjugate partner of a complex hyperbolic exponent.
    pub fn partner(&self, j: usize) -> Option<usize> {
        self.partner[j]
    }

    /// `(n_e, n_rh, n_ch)` with `n_e + n_rh + 2 n_ch = n`.
    pub fn counts(&self) -> (usize, usize, usize) {
        let count = |k| self.kinds.iter().filter(|&&x| x == k).count();
        (count(BlockKind::Elliptic), count(BlockKind::RealHyperbolic), count(BlockKind::ComplexHyperbolic) / 2)
    }

    /// Variable order putting elliptic blocks first (θ ascending), then real
    /// hyperbolic (μ ascending), then complex pairs ordered by `(Re μ, Im μ)`
    /// with the `Im μ > 0` member first.
    pub fn canonical_permutation(&self) -> Vec<usize> {
        let rank = |k: BlockKind| match k {
            BlockKind::Elliptic => 0,
            BlockKind::RealHyperbolic => 1,
            BlockKind::ComplexHyperbolic => 2,
        };
        let key = |j: usize| -> (u8, f64, f64, u8) {
            let m = self.mu[j];
            match self.kinds[j] {
                BlockKind::Elliptic => (0, m.im, 0.0, 0),
                BlockKind::RealHyperbolic => (1, m.re, 0.0, 0),
                BlockKind::ComplexHyperbolic => (2, m.re, m.im.abs(), u8::from(m.im < 0.0)),
            }
        };
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| {
            let (ka, kb) = (key(a), key(b));
            rank(self.kinds[a])
                .cmp(&rank(self.kinds[b]))
                .then(ka.1.partial_cmp(&kb.1).unwrap_or(Ordering::Equal))
                .then(ka.2.partial_cmp(&kb.2).unwrap_or(Ordering::Equal))
                .then(ka.3.cmp(&kb.3))
        });
        order
    }

    /// Reorders exponents: position `i` of the result holds old index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mu: Vec<_> = perm.iter().map(|&j| self.mu[j]).collect();
        let kinds = perm.iter().map(|&j| self.kinds[j]).collect();
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let partner = perm.iter().map(|&j| self.partner[j].map(|p| inverse[p])).collect();
        Self { mu, kinds, partner }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical_permutation().iter().enumerate().all(|(i, &j)| i == j)
    }
}
