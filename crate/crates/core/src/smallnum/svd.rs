use num_complex::Complex64 as C64;

use super::SmallMatrix;

/// Thin SVD `A = U diag(sigma) V*` with `k = min(rows, cols)` columns in U and V.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: SmallMatrix,
    pub sigma: Vec<f64>,
    pub v: SmallMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> SmallMatrix {
        let k = self.sigma.len();
        SmallMatrix::from_fn(self.u.rows(), self.v.rows(), |r, c| {
            (0..k).map(|j| self.u[(r, j)] * self.sigma[j] * self.v[(c, j)].conj()).sum()
        })
    }

    /// Number of singular values above `rel_tol * sigma[0]`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > rel_tol * top).count()
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &SmallMatrix) -> SvdResult {
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint());
        return SvdResult { u: t.v, sigma: t.sigma, v: t.u };
    }
    let (m, n) = (a.rows(), a.cols());
    // Work column-wise: cols[j] is column j of the rotated A.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // Phase that makes the (p, q) inner product real.
                let phase = (gamma / g).conj();
                rotate(&mut cols, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> =
        cols.iter().enumerate().map(|(j, col)| (col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut u = SmallMatrix::zeros(m, n);
    let mut vm = SmallMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let floor = order.first().map_or(0.0, |o| o.0) * 1e-13;
    let mut filled = vec![false; n];
    for (k, &(s, j)) in order.iter().enumerate() {
        sigma.push(s);
        for r in 0..n {
            vm[(r, k)] = v[j][r];
        }
        if s > floor && s > 0.0 {
            filled[k] = true;
            for r in 0..m {
                u[(r, k)] = cols[j][r] / s;
            }
        }
    }
    complete_orthonormal(&mut u, &filled);
    SvdResult { u, sigma, v: vm }
}

/// `col_p ← c·col_p − s·e·col_q`, `col_q ← s·col_p + c·e·col_q`.
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, e: C64) {
    let (left, right) = cols.split_at_mut(q);
    let (xp, xq) = (&mut left[p], &mut right[0]);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let bq = *b * e;
        let na = *a * c - bq * s;
        let nb = *a * s + bq * c;
        *a = na;
        *b = nb;
    }
}

/// Fills U columns belonging to (numerically) zero singular values with orthonormal
/// vectors, so U always has orthonormal columns.
fn complete_orthonormal(u: &mut SmallMatrix, filled: &[bool]) {
    let m = u.rows();
    let mut next_basis = 0;
    for k in 0..filled.len() {
        if filled[k] {
            continue;
        }
        while next_basis < m {
            let mut cand: Vec<C64> =
                (0..m).map(|r| if r == next_basis { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
            next_basis += 1;
            for j in 0..u.cols() {
                if j == k {
                    continue;
                }
                let dot: C64 = (0..m).map(|r| u[(r, j)].conj() * cand[r]).sum();
                for (r, z) in cand.iter_mut().enumerate() {
                    *z -= dot * u[(r, j)];
                }
            }
            let nrm = super::norm2(&cand);
            if nrm > 1e-8 {
                for (r, z) in cand.iter().enumerate() {
                    u[(r, k)] = z / nrm;
                }
                break;
            }
        }
    }
}
