//! Overdetermined linear systems over either coefficient backend.
//!
//! The exact backend uses Gaussian elimination and demands that every row is
//! satisfied exactly. The float backend equilibrates rows and columns and
//! solves by SVD least squares.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::series::{FieldKind, Scalar};

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Largest accepted condition number of the equilibrated matrix (float only).
    pub max_condition: f64,
    /// Largest accepted relative residual (float only).
    pub residual_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_condition: 1e10, residual_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinearSolveError {
    #[error("need at least {unknowns} equations, got {equations}")]
    Underdetermined { unknowns: usize, equations: usize },
    #[error("rank deficient: rank {rank} < {unknowns} unknowns")]
    RankDeficient { rank: usize, unknowns: usize },
    #[error("inconsistent equations (relative residual {residual:e})")]
    Inconsistent { residual: f64 },
    #[error("ill-conditioned: condition number {condition:e} exceeds {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },
}

#[derive(Clone, Debug)]
pub struct LstsqSolution<F> {
    pub x: Vec<F>,
    /// Condition number of the equilibrated matrix.
    pub condition: f64,
    /// `max_i |(Ax - b)_i| / max(max_i |b_i|, row scale)`; zero on exact solves.
    pub residual: f64,
}

/// Solves `a x = b` where `a` has at least as many rows as columns.
pub fn solve_overdetermined<F: Scalar>(
    a: &[Vec<F>],
    b: &[F],
    opts: &SolveOptions,
) -> Result<LstsqSolution<F>, LinearSolveError> {
    solve_weighted(a, b, &vec![0.0; a.len()], opts)
}

/// Like [`solve_overdetermined`], but row `i` is scaled by
/// `1 / max(max_j |a_ij|, row_floor[i])` instead of its largest entry alone.
/// A row whose right-hand side carries rounding error of size `ε·row_floor[i]`
/// is then weighted by its noise level.
pub fn solve_weighted<F: Scalar>(
    a: &[Vec<F>],
    b: &[F],
    row_floor: &[f64],
    opts: &SolveOptions,
) -> Result<LstsqSolution<F>, LinearSolveError> {
    assert_eq!(a.len(), row_floor.len(), "row count");
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    assert_eq!(rows, b.len(), "row count");
    if cols == 0 {
        return Ok(LstsqSolution { x: Vec::new(), condition: 1.0, residual: 0.0 });
    }
    if rows < cols {
        return Err(LinearSolveError::Underdetermined { unknowns: cols, equations: rows });
    }
    let af: Vec<Vec<Complex64>> = a.iter().map(|r| r.iter().map(Scalar::to_c64).collect()).collect();
    let bf: Vec<Complex64> = b.iter().map(Scalar::to_c64).collect();
    let eq = Equilibrated::new(&af, &bf, row_floor);
    let svd = eq.matrix.clone().svd(true, true);
    let sv = svd.singular_values.as_slice();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    match F::KIND {
        FieldKind::Rational => {
            let x = gauss_exact(a, b)?;
            Ok(LstsqSolution { x, condition, residual: 0.0 })
        }
        FieldKind::Float => {
            if smin <= smax * 1e-15 * rows.max(cols) as f64 || !condition.is_finite() {
                let rank = sv.iter().filter(|&&s| s > smax * 1e-15 * rows.max(cols) as f64).count();
                return Err(LinearSolveError::RankDeficient { rank, unknowns: cols });
            }
            if condition > opts.max_condition {
                return Err(LinearSolveError::IllConditioned { condition, limit: opts.max_condition });
            }
            let y = svd.solve(&eq.rhs, 0.0).expect("vectors computed");
            let x: Vec<Complex64> = (0..cols).map(|j| y[(j, 0)] * eq.col_scale[j]).collect();
            let residual = relative_residual(&af, &bf, &x, &eq.row_scale);
            if residual > opts.residual_tol {
                return Err(LinearSolveError::Inconsistent { residual });
            }
            let x = x.into_iter().map(|v| F::from_c64(v).expect("float backend")).collect();
            Ok(LstsqSolution { x, condition, residual })
        }
    }
}

struct Equilibrated {
    matrix: DMatrix<Complex64>,
    rhs: DMatrix<Complex64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

impl Equilibrated {
    /// Rows divided by their largest entry (or floor), then columns by their norm.
    fn new(a: &[Vec<Complex64>], b: &[Complex64], floor: &[f64]) -> Self {
        let rows = a.len();
        let cols = a[0].len();
        let row_scale: Vec<f64> = a
            .iter()
            .zip(floor)
            .map(|(r, &fl)| {
                let m = r.iter().map(|v| v.norm()).fold(fl, f64::max);
                if m > 0.0 {
                    1.0 / m
                } else {
                    1.0
                }
            })
            .collect();
        let mut m = DMatrix::from_fn(rows, cols, |i, j| a[i][j] * row_scale[i]);
        let col_scale: Vec<f64> = (0..cols)
            .map(|j| {
                let nrm = m.column(j).norm();
                if nrm > 0.0 {
                    1.0 / nrm
                } else {
                    1.0
                }
            })
            .collect();
        for j in 0..cols {
            m.column_mut(j).scale_mut(col_scale[j]);
        }
        let rhs = DMatrix::from_fn(rows, 1, |i, _| b[i] * row_scale[i]);
        Self { matrix: m, rhs, row_scale, col_scale }
    }
}

fn relative_residual(a: &[Vec<Complex64>], b: &[Complex64], x: &[Complex64], row_scale: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for ((row, bi), s) in a.iter().zip(b).zip(row_scale) {
        let ax: Complex64 = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum();
        // scaled rows have max entry at most 1, so compare against the scaled rhs and 1
        let scale = (bi.norm() * s).max(1.0);
        worst = worst.max((ax - bi).norm() * s / scale);
    }
    worst
}

fn gauss_exact<F: Scalar>(a: &[Vec<F>], b: &[F]) -> Result<Vec<F>, LinearSolveError> {
    let rows = a.len();
    let cols = a[0].len();
    let mut m: Vec<Vec<F>> = a.iter().zip(b).map(|(r, bi)| r.iter().cloned().chain([bi.clone()]).collect()).collect();
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(p) = (pivot_row..rows).find(|&r| !m[r][col].is_zero()) else {
            return Err(LinearSolveError::RankDeficient { rank: pivot_row, unknowns: cols });
        };
        m.swap(pivot_row, p);
        let inv = m[pivot_row][col].inv().expect("nonzero pivot");
        for v in m[pivot_row].iter_mut().skip(col) {
            *v = v.clone() * inv.clone();
        }
        for r in 0..rows {
            if r == pivot_row || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in col..=cols {
                let delta = factor.clone() * m[pivot_row][c].clone();
                m[r][c] = m[r][c].clone() - delta;
            }
        }
        pivot_row += 1;
    }
    for row in m.iter().skip(cols) {
        if !row[cols].is_zero() {
            let scale = b.iter().map(Scalar::abs).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            return Err(LinearSolveError::Inconsistent { residual: row[cols].abs() / scale });
        }
    }
    Ok(m.into_iter().take(cols).map(|r| r[cols].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{ExactRationalComplex, FloatComplex};

    type Q = ExactRationalComplex;

    #[test]
    fn exact_overdetermined() {
        // x + y = 3, x - y = 1, 2x + y = 5
        let a: Vec<Vec<Q>> = vec![
            vec![Q::from_int(1), Q::from_int(1)],
            vec![Q::from_int(1), Q::from_int(-1)],
            vec![Q::from_int(2), Q::from_int(1)],
        ];
        let b = vec![Q::from_int(3), Q::from_int(1), Q::from_int(5)];
        let s = solve_overdetermined(&a, &b, &SolveOptions::default()).unwrap();
        assert_eq!(s.x, vec![Q::from_int(2), Q::from_int(1)]);
        let bad = vec![Q::from_int(3), Q::from_int(1), Q::from_int(6)];
        assert!(matches!(
            solve_overdetermined(&a, &bad, &SolveOptions::default()),
            Err(LinearSolveError::Inconsistent { .. })
        ));
    }

    #[test]
    fn exact_rank_deficient() {
        let a: Vec<Vec<Q>> = vec![vec![Q::from_int(1), Q::from_int(2)], vec![Q::from_int(2), Q::from_int(4)]];
        let b = vec![Q::from_int(1), Q::from_int(2)];
        assert!(matches!(
            solve_overdetermined(&a, &b, &SolveOptions::default()),
            Err(LinearSolveError::RankDeficient { rank: 1, .. })
        ));
    }

    #[test]
    fn float_scaled_rows() {
        let a: Vec<Vec<FloatComplex>> = (1..=6)
            .map(|k| {
                let s = 10f64.powi(-k);
                vec![FloatComplex::new(s, 0.0), FloatComplex::new(s * k as f64, 0.0)]
            })
            .collect();
        let b: Vec<FloatComplex> =
            a.iter().map(|r| r[0] * FloatComplex::new(0.5, 0.0) + r[1] * FloatComplex::new(0.0, -2.0)).collect();
        let s = solve_overdetermined(&a, &b, &SolveOptions::default()).unwrap();
        assert!((s.x[0].0 - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((s.x[1].0 - Complex64::new(0.0, -2.0)).norm() < 1e-12);
        assert!(s.condition < 100.0);
        let tight = SolveOptions { max_condition: 1.0, ..Default::default() };
        assert!(matches!(solve_overdetermined(&a, &b, &tight), Err(LinearSolveError::IllConditioned { .. })));
    }

    #[test]
    fn underdetermined() {
        let a = vec![vec![FloatComplex::new(1.0, 0.0), FloatComplex::new(1.0, 0.0)]];
        let b = vec![FloatComplex::new(1.0, 0.0)];
        assert!(matches!(
            solve_overdetermined(&a, &b, &SolveOptions::default()),
            Err(LinearSolveError::Underdetermined { unknowns: 2, equations: 1 })
        ));
    }
}
