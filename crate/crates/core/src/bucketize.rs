//! Aliasing-filter bucketization: circular shift, subsample, small DFT.
//!
//! With `L = N/B`, a shift `τ` and the 1/B-normalized size-B DFT,
//!
//! ```text
//! y[i] = (1/B) Σ_j x[(jL - τ) mod N] ω_B^{ij} = Σ_{f ≡ i (mod B)} X[f] ω_N^{τf}
//! ```
//!
//! so every frequency `f` lands in bucket `f mod B`, multiplied by the
//! shift phase `ω^{τf}`.

use std::collections::HashSet;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::fft::FftPlan;
use crate::signals::Signal;

/// Ordered list of time shifts; entries are reduced mod N when sampled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftSet {
    taus: Vec<i64>,
}

impl ShiftSet {
    pub fn new(taus: Vec<i64>) -> Result<Self> {
        if taus.is_empty() {
            return invalid("shift set must be nonempty");
        }
        Ok(Self { taus })
    }

    pub fn taus(&self) -> &[i64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// One shifted bucket vector `ŷ_{B,τ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSpectrum {
    pub b: usize,
    pub tau: i64,
    pub values: Vec<C64>,
}

/// Records every time-domain read made by an algorithm.
#[derive(Debug, Clone, Default)]
pub struct SampleLedger {
    touched: HashSet<usize>,
    count: u64,
}

impl SampleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, index: usize) {
        self.count += 1;
        self.touched.insert(index);
    }

    /// Total reads, repeats included.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Number of distinct indices read.
    pub fn unique(&self) -> usize {
        self.touched.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.touched.contains(&index)
    }

    pub fn touched_sorted(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.touched.iter().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Circularly rotated copy: `out[i] = x[(i - τ) mod N]`.
pub fn shift(x: &Signal, tau: i64) -> Signal {
    let n = x.len() as i64;
    let samples = (0..n).map(|i| x.at(i - tau)).collect();
    Signal::new(samples).expect("shift preserves length")
}

/// `out[j] = x[jL]`, recording the B reads.
pub fn downsample(x: &Signal, l: usize, ledger: &mut SampleLedger) -> Result<Signal> {
    let n = x.len();
    if l == 0 || !n.is_multiple_of(l) {
        return invalid(format!("subsampling factor {l} does not divide {n}"));
    }
    let samples = (0..n / l)
        .map(|j| {
            ledger.record(j * l);
            x.samples()[j * l]
        })
        .collect();
    Signal::new(samples)
}

/// A bucketizer for fixed `(N, B)` that reuses its size-B FFT plan.
#[derive(Debug, Clone)]
pub struct Bucketizer {
    n: usize,
    b: usize,
    plan: FftPlan,
}

impl Bucketizer {
    pub fn new(n: usize, b: usize) -> Result<Self> {
        if b == 0 || n == 0 || !n.is_multiple_of(b) {
            return invalid(format!("bucket count {b} does not divide signal size {n}"));
        }
        Ok(Self { n, b, plan: FftPlan::new(b) })
    }

    pub fn buckets(&self) -> usize {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn filter(&self, x: &Signal, tau: i64, ledger: &mut SampleLedger) -> Result<FilteredSpectrum> {
        if x.len() != self.n {
            return invalid(format!("signal has length {}, bucketizer expects {}", x.len(), self.n));
        }
        let l = (self.n / self.b) as i64;
        let n = self.n as i64;
        let mut buf: Vec<C64> = (0..self.b as i64)
            .map(|j| {
                let idx = (j * l - tau).rem_euclid(n) as usize;
                ledger.record(idx);
                x.samples()[idx]
            })
            .collect();
        self.plan.forward_in_place(&mut buf);
        let scale = 1.0 / self.b as f64;
        for z in &mut buf {
            *z *= scale;
        }
        Ok(FilteredSpectrum { b: self.b, tau, values: buf })
    }
}

/// `ŷ_{B,τ}`: shift by τ, keep every L-th sample, then a 1/B-scaled size-B DFT.
pub fn bucketize(x: &Signal, b: usize, tau: i64, ledger: &mut SampleLedger) -> Result<FilteredSpectrum> {
    Bucketizer::new(x.len(), b)?.filter(x, tau, ledger)
}

/// [`bucketize`] for each shift in order.
pub fn bucketize_set(
    x: &Signal,
    b: usize,
    shifts: &ShiftSet,
    ledger: &mut SampleLedger,
) -> Result<Vec<FilteredSpectrum>> {
    let bz = Bucketizer::new(x.len(), b)?;
    shifts.taus().iter().map(|&t| bz.filter(x, t, ledger)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.iter().map(|&r| C64::new(r, 0.0)).collect()).unwrap()
    }

    #[test]
    fn shift_examples() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(shift(&x, 0), x);
        assert_eq!(shift(&x, 1), sig(&[4.0, 1.0, 2.0, 3.0]));
        assert_eq!(shift(&x, 4), x);
        assert_eq!(shift(&x, -1), sig(&[2.0, 3.0, 4.0, 1.0]));
    }

    #[test]
    fn downsample_examples() {
        let mut ledger = SampleLedger::new();
        let x = sig(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(downsample(&x, 1, &mut ledger).unwrap(), x);
        assert_eq!(downsample(&x, 3, &mut ledger).unwrap(), sig(&[1.0, 4.0]));
        assert_eq!(ledger.count(), 8);
        assert!(downsample(&x, 4, &mut ledger).is_err());

        let y = sig(&(0..20).map(f64::from).collect::<Vec<_>>());
        assert_eq!(downsample(&y, 5, &mut ledger).unwrap(), sig(&[0.0, 5.0, 10.0, 15.0]));
    }

    #[test]
    fn bad_bucket_count() {
        let x = sig(&[1.0; 6]);
        assert!(bucketize(&x, 4, 0, &mut SampleLedger::new()).is_err());
        assert!(ShiftSet::new(vec![]).is_err());
    }

    #[test]
    fn ledger_counts_repeats_once_in_touched() {
        let x = sig(&[1.0; 8]);
        let mut ledger = SampleLedger::new();
        let shifts = ShiftSet::new(vec![0, 8, 1]).unwrap();
        bucketize_set(&x, 4, &shifts, &mut ledger).unwrap();
        assert_eq!(ledger.count(), 12);
        // τ=0 and τ=8 read the same four indices; τ=1 reads {7,1,3,5}.
        assert_eq!(ledger.touched_sorted(), (0..8).collect::<Vec<_>>());
    }
}
