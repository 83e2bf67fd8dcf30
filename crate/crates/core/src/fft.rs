//! Unnormalized FFT plans of arbitrary length.
//!
//! Powers of two use an iterative radix-2 kernel; every other length goes
//! through Bluestein's chirp-z reformulation on a padded power-of-two
//! convolution. Plans are immutable and can be shared across threads.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

/// A reusable forward/inverse DFT of fixed length, without normalization.
///
/// `forward` computes `sum_j x[j] exp(-2πi·kj/n)` and `inverse` the same sum
/// with `+`. Callers apply whatever scaling their convention needs.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Radix2 { twiddles: Vec<C64>, rev: Vec<usize> },
    Bluestein { chirp: Vec<C64>, kernel: Vec<C64>, inner: Box<FftPlan> },
}

impl FftPlan {
    /// Builds a plan for length `len` (`len >= 1`).
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "FFT length must be positive");
        if len == 1 {
            return Self { len, kind: Kind::Trivial };
        }
        if len.is_power_of_two() {
            let bits = len.trailing_zeros();
            let rev = (0..len).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
            let twiddles = (0..len / 2).map(|k| unit(-(k as f64) / len as f64)).collect();
            return Self { len, kind: Kind::Radix2 { twiddles, rev } };
        }

        // exp(-πi j²/n), with j² reduced mod 2n to keep the angle small.
        let two_n = 2 * len as u64;
        let chirp: Vec<C64> = (0..len as u64).map(|j| unit(-(((j * j) % two_n) as f64) / two_n as f64)).collect();
        let m = (2 * len - 1).next_power_of_two();
        let inner = FftPlan::new(m);
        let mut kernel = vec![C64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for t in 1..len {
            kernel[t] = chirp[t].conj();
            kernel[m - t] = chirp[t].conj();
        }
        inner.forward_in_place(&mut kernel);
        Self { len, kind: Kind::Bluestein { chirp, kernel, inner: Box::new(inner) } }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Forward transform (negative exponent), unnormalized.
    pub fn forward(&self, input: &[C64]) -> Vec<C64> {
        let mut buf = input.to_vec();
        self.forward_in_place(&mut buf);
        buf
    }

    /// Inverse transform (positive exponent), unnormalized.
    pub fn inverse(&self, input: &[C64]) -> Vec<C64> {
        let mut buf: Vec<C64> = input.iter().map(|z| z.conj()).collect();
        self.forward_in_place(&mut buf);
        for z in &mut buf {
            *z = z.conj();
        }
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2 { twiddles, rev } => radix2(buf, twiddles, rev),
            Kind::Bluestein { chirp, kernel, inner } => {
                let m = kernel.len();
                let mut a = vec![C64::new(0.0, 0.0); m];
                for (j, (x, c)) in buf.iter().zip(chirp).enumerate() {
                    a[j] = x * c;
                }
                inner.forward_in_place(&mut a);
                for (z, k) in a.iter_mut().zip(kernel) {
                    *z = z.conj() * k.conj();
                }
                // conj(FFT(conj(·))) is the unnormalized inverse.
                inner.forward_in_place(&mut a);
                let scale = 1.0 / m as f64;
                for (k, out) in buf.iter_mut().enumerate() {
                    *out = a[k].conj() * scale * chirp[k];
                }
            }
        }
    }
}

fn radix2(buf: &mut [C64], twiddles: &[C64], rev: &[usize]) {
    let n = buf.len();
    for (i, &j) in rev.iter().enumerate() {
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let stride = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let u = buf[start + k];
                let v = buf[start + k + half] * w;
                buf[start + k] = u + v;
                buf[start + k + half] = u - v;
            }
        }
        half *= 2;
    }
}

/// `exp(2πi·turns)`.
pub(crate) fn unit(turns: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * turns)
}

/// `ω_n^{e} = exp(-2πi·e/n)` with the exponent reduced exactly in integers.
pub(crate) fn omega_pow(n: usize, e: i128) -> C64 {
    let r = e.rem_euclid(n as i128) as f64;
    unit(-r / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n).map(|k| (0..n).map(|j| x[j] * omega_pow(n, (j * k) as i128)).sum()).collect()
    }

    fn ramp(n: usize) -> Vec<C64> {
        (0..n).map(|j| C64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos())).collect()
    }

    #[test]
    fn matches_naive_for_mixed_lengths() {
        for n in [1, 2, 3, 4, 5, 7, 8, 9, 12, 15, 16, 17, 20, 31, 64, 100] {
            let x = ramp(n);
            let fast = FftPlan::new(n).forward(&x);
            let slow = naive(&x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-9 * n as f64, "n={n}");
            }
        }
    }

    #[test]
    fn inverse_undoes_forward() {
        for n in [6, 16, 17, 255] {
            let x = ramp(n);
            let plan = FftPlan::new(n);
            let back = plan.inverse(&plan.forward(&x));
            for (a, b) in back.iter().zip(&x) {
                assert!((a / n as f64 - b).norm() < 1e-10);
            }
        }
    }
}
