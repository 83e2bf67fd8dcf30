use num_complex::Complex64 as C64;

use super::{eigenvalues, SmallMatrix};
use crate::error::{invalid, Result};

/// Evaluates the monic polynomial `z^a + c[a-1] z^(a-1) + … + c[0]`.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(1.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_deriv(coeffs: &[C64], z: C64) -> C64 {
    let a = coeffs.len();
    let mut acc = C64::new(a as f64, 0.0);
    for k in (1..a).rev() {
        acc = acc * z + coeffs[k] * k as f64;
    }
    acc
}

/// Roots of the monic polynomial with lower coefficients `coeffs = [c0, …, c_{a-1}]`.
///
/// Degrees 1 and 2 use closed forms; degrees 3 and 4 take the eigenvalues of
/// the companion matrix and polish each root with a few Newton steps.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    match coeffs.len() {
        1 => Ok(vec![-coeffs[0]]),
        2 => {
            let (c0, c1) = (coeffs[0], coeffs[1]);
            let d = (c1 * c1 - c0 * 4.0).sqrt();
            Ok(vec![(-c1 - d) / 2.0, (-c1 + d) / 2.0])
        }
        3 | 4 => {
            let a = coeffs.len();
            let companion = SmallMatrix::from_fn(a, a, |r, c| {
                if c == a - 1 {
                    -coeffs[r]
                } else if r == c + 1 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            Ok(eigenvalues(&companion).into_iter().map(|z| polish(coeffs, z)).collect())
        }
        d => invalid(format!("polynomial degree {d} outside 1..=4")),
    }
}

fn polish(coeffs: &[C64], mut z: C64) -> C64 {
    for _ in 0..3 {
        let d = poly_deriv(coeffs, z);
        if d.norm() == 0.0 {
            break;
        }
        let step = poly_eval(coeffs, z) / d;
        if !step.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_and_two() {
        let r = poly_roots(&[C64::new(0.3, -0.2)]).unwrap();
        assert_eq!(r, vec![C64::new(-0.3, 0.2)]);
        // (z - 1)(z - 2) = z² − 3z + 2
        let r = poly_roots(&[C64::new(2.0, 0.0), C64::new(-3.0, 0.0)]).unwrap();
        assert!((r[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - C64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn degree_bounds() {
        assert!(poly_roots(&[]).is_err());
        assert!(poly_roots(&[C64::new(1.0, 0.0); 5]).is_err());
    }
}
