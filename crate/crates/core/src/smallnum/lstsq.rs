use num_complex::Complex64 as C64;

use super::{norm2, svd, SmallMatrix};
use crate::error::{invalid, Result};

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;
/// Condition number beyond which a solve is flagged.
const ILL_CONDITIONED: f64 = 1e10;

/// Minimum-norm least-squares solution with diagnostics.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<C64>,
    /// `‖Ax − b‖₂`.
    pub residual: f64,
    pub rank: usize,
    /// Set when `A` is rank deficient or its condition number exceeds 1e10.
    pub ill_conditioned: bool,
}

/// Solves a square system with pseudo-inverse semantics.
pub fn solve_linear(a: &SmallMatrix, b: &[C64]) -> Result<LinearSolution> {
    if !a.is_square() {
        return invalid(format!("solve_linear needs a square matrix, got {}x{}", a.rows(), a.cols()));
    }
    pinv_solve(a, b)
}

/// Solves an overdetermined system `min ‖Ax − b‖₂`.
pub fn least_squares(a: &SmallMatrix, b: &[C64]) -> Result<LinearSolution> {
    if a.rows() < a.cols() {
        return invalid(format!("least_squares needs rows >= cols, got {}x{}", a.rows(), a.cols()));
    }
    pinv_solve(a, b)
}

fn pinv_solve(a: &SmallMatrix, b: &[C64]) -> Result<LinearSolution> {
    if b.len() != a.rows() {
        return invalid(format!("right-hand side has length {}, expected {}", b.len(), a.rows()));
    }
    let s = svd(a);
    let top = s.sigma.first().copied().unwrap_or(0.0);
    let mut x = vec![C64::new(0.0, 0.0); a.cols()];
    let mut rank = 0;
    for (j, &sj) in s.sigma.iter().enumerate() {
        if top == 0.0 || sj <= RANK_TOL * top {
            continue;
        }
        rank += 1;
        let coef: C64 = (0..a.rows()).map(|r| s.u[(r, j)].conj() * b[r]).sum::<C64>() / sj;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += coef * s.v[(r, j)];
        }
    }
    let smallest = s.sigma.last().copied().unwrap_or(0.0);
    let ill_conditioned = rank < a.cols() || smallest * ILL_CONDITIONED < top;
    let ax = a.mul_vec(&x);
    let residual = norm2(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    Ok(LinearSolution { x, residual, rank, ill_conditioned })
}

/// Moore–Penrose pseudo-inverse.
pub fn pseudo_inverse(a: &SmallMatrix) -> SmallMatrix {
    let s = svd(a);
    let top = s.sigma.first().copied().unwrap_or(0.0);
    SmallMatrix::from_fn(a.cols(), a.rows(), |r, c| {
        s.sigma
            .iter()
            .enumerate()
            .filter(|(_, &sj)| top > 0.0 && sj > RANK_TOL * top)
            .map(|(j, &sj)| s.v[(r, j)] * s.u[(c, j)].conj() / sj)
            .sum()
    })
}
