use num_complex::Complex64 as C64;

use super::{eigenvalues, pseudo_inverse, svd, SmallMatrix};
use crate::error::{invalid, Result};

/// Numerical-rank threshold relative to the largest singular value of Y.
const PENCIL_RANK_TOL: f64 = 1e-9;

/// Generalized eigenvalues of a matrix pencil.
#[derive(Debug, Clone)]
pub struct PencilEigen {
    pub values: Vec<C64>,
    /// The requested rank exceeded the numerical rank and was reduced.
    pub truncated: bool,
}

/// Generalized eigenvalues λ of `Y2 − λ·Y1`, where `Y1` and `Y2` are the
/// (a+1)×a left and right column blocks of a square matrix `Y`.
///
/// `Y` is reassembled from the two blocks, projected onto its top-`rank`
/// right singular subspace `Q`, and the eigenvalues of `Q2·Q1⁺` returned.
/// For moment data `Y[r][c] = m_{r−c}` with `m_k = Σ p_j z_j^k`, these
/// eigenvalues are the reciprocals `1/z_j`.
pub fn pencil_eigenvalues(y1: &SmallMatrix, y2: &SmallMatrix, rank: usize) -> Result<PencilEigen> {
    let a = y1.cols();
    if y1.rows() != a + 1 || y2.rows() != a + 1 || y2.cols() != a {
        return invalid(format!(
            "pencil blocks must both be (a+1)x a, got {}x{} and {}x{}",
            y1.rows(),
            y1.cols(),
            y2.rows(),
            y2.cols()
        ));
    }
    if rank == 0 || rank > a {
        return invalid(format!("pencil rank {rank} outside 1..={a}"));
    }
    let y = SmallMatrix::from_fn(a + 1, a + 1, |r, c| if c < a { y1[(r, c)] } else { y2[(r, a - 1)] });
    let s = svd(&y);
    let numerical = s.rank(PENCIL_RANK_TOL);
    let truncated = numerical < rank;
    let r = rank.min(numerical);
    if r == 0 {
        return Ok(PencilEigen { values: Vec::new(), truncated });
    }
    // Rows of Q span the row space of Y.
    let q = SmallMatrix::from_fn(r, a + 1, |i, c| s.v[(c, i)].conj());
    let q1 = q.submatrix(0, r, 0, a);
    let q2 = q.submatrix(0, r, 1, a + 1);
    let m = &q2 * &pseudo_inverse(&q1);
    Ok(PencilEigen { values: eigenvalues(&m), truncated })
}
