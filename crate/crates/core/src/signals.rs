//! Signals, sparse spectra, the dense DFT oracle and synthetic test cases.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::fft::{omega_pow, unit, FftPlan};

/// A length-N complex time-domain signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<C64>,
}

impl Signal {
    pub fn new(samples: Vec<C64>) -> Result<Self> {
        if samples.is_empty() {
            return invalid("signal must have at least one sample");
        }
        Ok(Self { samples })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![C64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    /// Sample at `i mod N` (negative indices wrap).
    pub fn at(&self, i: i64) -> C64 {
        self.samples[i.rem_euclid(self.len() as i64) as usize]
    }
}

/// Map from frequency position in `[0, n)` to coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseSpectrum {
    n: usize,
    entries: BTreeMap<usize, C64>,
}

impl SparseSpectrum {
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, C64)>) -> Result<Self> {
        let mut s = Self::new(n);
        for (f, v) in pairs {
            s.insert(f, v)?;
        }
        Ok(s)
    }

    /// Builds a spectrum from the nonzero entries of a dense vector.
    pub fn from_dense(dense: &[C64]) -> Self {
        let entries = dense.iter().enumerate().filter(|(_, v)| v.norm() > 0.0).map(|(f, v)| (f, *v)).collect();
        Self { n: dense.len(), entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or overwrites the coefficient at `f`.
    pub fn insert(&mut self, f: usize, v: C64) -> Result<()> {
        if f >= self.n {
            return invalid(format!("frequency {f} outside [0, {})", self.n));
        }
        self.entries.insert(f, v);
        Ok(())
    }

    pub fn get(&self, f: usize) -> Option<C64> {
        self.entries.get(&f).copied()
    }

    pub fn contains(&self, f: usize) -> bool {
        self.entries.contains_key(&f)
    }

    pub fn remove(&mut self, f: usize) -> Option<C64> {
        self.entries.remove(&f)
    }

    /// Entries in increasing frequency order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.entries.iter().map(|(f, v)| (*f, *v))
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for (f, v) in self.iter() {
            out[f] = v;
        }
        out
    }

    /// Keeps the `k` largest-magnitude entries (ties broken toward lower frequency).
    pub fn truncate_to(&mut self, k: usize) {
        if self.entries.len() <= k {
            return;
        }
        let mut ranked: Vec<(usize, C64)> = self.iter().collect();
        ranked.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then(a.0.cmp(&b.0)));
        self.entries = ranked.into_iter().take(k).collect();
    }
}

/// Requested signal-to-noise ratio of a test case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Exact,
    Db(f64),
}

impl Snr {
    pub fn db(self) -> Option<f64> {
        match self {
            Snr::Exact => None,
            Snr::Db(d) => Some(d),
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Exact => f.write_str("exact"),
            Snr::Db(d) => write!(f, "{d}"),
        }
    }
}

/// A synthetic signal together with its ground-truth spectrum.
#[derive(Debug, Clone)]
pub struct TestCase {
    pub signal: Signal,
    pub truth: SparseSpectrum,
    pub snr: Snr,
    pub seed: u64,
}

/// Recovery error between a ground truth and an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorMetrics {
    pub l0: usize,
    pub l1: f64,
    pub l2: f64,
}

/// Default magnitude tolerance for counting mismatched positions in `l0`.
pub const DEFAULT_L0_TOL: f64 = 0.1;

/// Direct O(N²) evaluation of `X[i] = (1/N) Σ_j x_j ω^{ij}`.
///
/// This is the reference transform the faster paths are tested against.
pub fn dense_dft(signal: &Signal) -> Vec<C64> {
    let n = signal.len();
    let table: Vec<C64> = (0..n).map(|e| unit(-(e as f64) / n as f64)).collect();
    let scale = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            let mut e = 0usize;
            for x in signal.samples() {
                acc += x * table[e];
                e += i;
                if e >= n {
                    e -= n;
                }
            }
            acc * scale
        })
        .collect()
}

/// Same transform as [`dense_dft`], computed with an FFT.
pub fn fast_dft(signal: &Signal) -> Vec<C64> {
    let n = signal.len();
    let mut out = FftPlan::new(n).forward(signal.samples());
    let scale = 1.0 / n as f64;
    for z in &mut out {
        *z *= scale;
    }
    out
}

/// `x_j = Σ_i X[i] ω^{-ij}` for a dense spectrum.
pub fn inverse_dft(spectrum: &[C64]) -> Result<Signal> {
    if spectrum.is_empty() {
        return invalid("spectrum must have at least one entry");
    }
    Signal::new(FftPlan::new(spectrum.len()).inverse(spectrum))
}

/// `x_j = Σ_f X[f] ω^{-fj}` summed over the support only, O(N·K).
pub fn inverse_sparse_dft(spectrum: &SparseSpectrum) -> Result<Signal> {
    let n = spectrum.n();
    let mut samples = vec![C64::new(0.0, 0.0); n];
    for (f, v) in spectrum.iter() {
        for (j, s) in samples.iter_mut().enumerate() {
            *s += v * omega_pow(n, -((f as i128) * j as i128));
        }
    }
    Signal::new(samples)
}

/// Draws a K-sparse unit-magnitude test case with uniformly random support.
///
/// Positions and phases come from a ChaCha8 stream seeded with `seed`, so the
/// result is identical across platforms for fixed arguments.
pub fn generate_test_case(n: usize, k: usize, snr: Snr, seed: u64) -> Result<TestCase> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got k={k}, n={n}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = index::sample(&mut rng, n, k).into_vec();
    positions.sort_unstable();
    build_case(n, &positions, snr, seed, &mut rng)
}

/// Like [`generate_test_case`] but with caller-chosen positions.
pub fn generate_test_case_at(n: usize, positions: &[usize], snr: Snr, seed: u64) -> Result<TestCase> {
    if n == 0 {
        return invalid("n must be positive");
    }
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != positions.len() {
        return invalid("positions must be distinct");
    }
    if sorted.last().is_some_and(|&f| f >= n) {
        return invalid("position outside [0, n)");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_case(n, &sorted, snr, seed, &mut rng)
}

fn build_case(n: usize, positions: &[usize], snr: Snr, seed: u64, rng: &mut ChaCha8Rng) -> Result<TestCase> {
    let mut truth = SparseSpectrum::new(n);
    for &f in positions {
        let turns: f64 = rng.random();
        truth.insert(f, unit(turns))?;
    }
    let clean = inverse_sparse_dft(&truth)?;
    let signal = match snr {
        Snr::Exact => clean,
        Snr::Db(db) => {
            let p_sig = clean.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            let sigma = (p_sig / 10f64.powf(db / 10.0) / 2.0).sqrt();
            let noisy = clean
                .into_samples()
                .into_iter()
                .map(|z| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    z + C64::new(re, im) * sigma
                })
                .collect();
            Signal::new(noisy)?
        }
    };
    Ok(TestCase { signal, truth, snr, seed })
}

/// L0/L1/L2 error over the union of supports.
pub fn evaluate(truth: &SparseSpectrum, estimate: &SparseSpectrum, tol: f64) -> Result<ErrorMetrics> {
    if truth.n() != estimate.n() {
        return invalid(format!("size mismatch: {} vs {}", truth.n(), estimate.n()));
    }
    let mut keys: Vec<usize> = truth.support();
    keys.extend(estimate.support());
    keys.sort_unstable();
    keys.dedup();
    let mut m = ErrorMetrics::default();
    let mut sq = 0.0;
    for f in keys {
        let zero = C64::new(0.0, 0.0);
        let d = (truth.get(f).unwrap_or(zero) - estimate.get(f).unwrap_or(zero)).norm();
        m.l1 += d;
        sq += d * d;
        if d > tol {
            m.l0 += 1;
        }
    }
    m.l2 = sq.sqrt();
    Ok(m)
}
