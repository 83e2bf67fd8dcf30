use num_complex::Complex64 as C64;

use super::SmallMatrix;

const MAX_ITERS_PER_EIGENVALUE: usize = 200;

/// All eigenvalues of a square matrix, via Hessenberg reduction and
/// Wilkinson-shifted complex QR. Order is unspecified.
///
/// # Panics
/// If `a` is not square.
pub fn eigenvalues(a: &SmallMatrix) -> Vec<C64> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    let n = a.rows();
    let mut h = a.clone();
    hessenberg(&mut h);
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut out = Vec::with_capacity(n);
    let mut hi = n;
    let mut iters = 0;
    while hi > 0 {
        if hi == 1 {
            out.push(h[(0, 0)]);
            break;
        }
        // Find the start of the trailing unreduced block.
        let mut lo = hi - 1;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            out.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            iters = 0;
            continue;
        }
        iters += 1;
        if iters > MAX_ITERS_PER_EIGENVALUE {
            // Give up on convergence; the diagonal is the best estimate left.
            for k in (0..hi).rev() {
                out.push(h[(k, k)]);
            }
            break;
        }
        let mu = if iters % 11 == 10 {
            h[(hi - 1, hi - 1)] + h[(hi - 1, hi - 2)].norm()
        } else {
            wilkinson(h[(hi - 2, hi - 2)], h[(hi - 2, hi - 1)], h[(hi - 1, hi - 2)], h[(hi - 1, hi - 1)])
        };
        qr_step(&mut h, lo, hi, mu);
    }
    out
}

/// Eigenvalue of [[a, b], [c, d]] closest to `d`.
fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (l1, l2) = (mid + disc, mid - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Givens rotation `G = [[c, s], [-s̄, c]]` with `G·[x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let rho = (ax * ax + y.norm_sqr()).sqrt();
    if rho == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    (ax / rho, (x / ax) * y.conj() / rho)
}

fn qr_step(h: &mut SmallMatrix, lo: usize, hi: usize, mu: C64) {
    for k in lo..hi {
        h[(k, k)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo - 1);
    for k in lo..hi - 1 {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..hi {
            let (x, y) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        for i in lo..(k + 2).min(hi) {
            let (x, y) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
    }
    for k in lo..hi {
        h[(k, k)] += mu;
    }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(h: &mut SmallMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|r| h[(r, k)]).collect();
        let xnorm = super::norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { C64::new(1.0, 0.0) };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm = super::norm2(&v);
        for z in &mut v {
            *z /= vnorm;
        }
        // H ← (I − 2vv*) H
        for c in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[(k + 1 + i, c)]).sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, c)] -= vi * dot * 2.0;
            }
        }
        // H ← H (I − 2vv*)
        for r in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(i, vi)| h[(r, k + 1 + i)] * vi).sum();
            for (i, vi) in v.iter().enumerate() {
                h[(r, k + 1 + i)] -= dot * vi.conj() * 2.0;
            }
        }
    }
}
