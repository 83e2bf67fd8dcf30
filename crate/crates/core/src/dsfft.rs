//! Binary-tree DSFFT for power-of-two N.
//!
//! Layer d holds the τ=0 bucket values `ŷ_{2^d}[i]`. Since bucket i of
//! layer d−1 is the sum of buckets i and i+2^{d−1} of layer d, only the
//! children of non-empty parents can be non-empty. The search descends
//! until the number of non-empty buckets reaches `θ·K`, then resolves each
//! leaf: single-tons by three-shift phase decoding (or the noisy singleton
//! search), the rest by the matrix-pencil one-shot path.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::bucketize::{bucketize, bucketize_set, SampleLedger, ShiftSet};
use crate::error::{invalid, Error, Result};
use crate::fft::omega_pow;
use crate::oneshot::{collect_moments, estimate_values, locate, OneShotConfig, Variant, MAX_ALIASING};
use crate::peeling::{classify_exact, classify_noisy, rounds_for_snr, BucketNode, BucketState, SearchPlan, Thresholds};
use crate::signals::{Signal, SparseSpectrum};
use crate::smallnum::{least_squares, svd, SmallMatrix};

/// Minimum magnitude for a bucket to count as non-empty.
const ACTIVITY_FLOOR: f64 = 1e-6;
/// Random shifts used by the noisy aliased-bucket pursuit.
const MAX_PURSUIT_SHIFTS: usize = 64;

/// One depth of the search tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLayer {
    pub depth: usize,
    /// Computed bucket values; every bucket when `full`, else only candidates.
    pub values: BTreeMap<usize, C64>,
    /// Non-empty buckets, ascending.
    pub active: Vec<usize>,
    pub full: bool,
}

impl TreeLayer {
    pub fn buckets(&self) -> usize {
        1 << self.depth
    }

    /// `m_d`, the number of non-empty buckets.
    pub fn count(&self) -> usize {
        self.active.len()
    }
}

/// DSFFT parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DsfftConfig {
    /// Stop once `m_d >= stop_ratio · K`.
    pub stop_ratio: f64,
    /// Starting depth; `None` means `⌈log₂ K⌉`, deeper at low SNR.
    pub start_depth: Option<usize>,
    /// Expected SNR in dB; `None` treats the input as noiseless.
    pub snr_hint: Option<f64>,
    pub seed: u64,
}

impl Default for DsfftConfig {
    fn default() -> Self {
        Self { stop_ratio: 0.75, start_depth: None, snr_hint: None, seed: 0 }
    }
}

/// Full-layer computation via a size-2^d bucketization at τ = 0.
pub fn initial_layer(x: &Signal, depth: usize, threshold: f64, ledger: &mut SampleLedger) -> Result<TreeLayer> {
    check_depth(x.len(), depth)?;
    let f = bucketize(x, 1 << depth, 0, ledger)?;
    let values: BTreeMap<usize, C64> = f.values.into_iter().enumerate().collect();
    let active = values.iter().filter(|(_, v)| v.norm() > threshold).map(|(i, _)| *i).collect();
    Ok(TreeLayer { depth, values, active, full: true })
}

/// Computes layer `prev.depth + 1`.
///
/// When the parent layer is sparse enough (`2·m ≤ d`) only the two children
/// of each active parent are evaluated by direct summation over the 2^d
/// subsampled points; otherwise the whole layer is bucketized.
pub fn expand_layer(x: &Signal, prev: &TreeLayer, threshold: f64, ledger: &mut SampleLedger) -> Result<TreeLayer> {
    let depth = prev.depth + 1;
    check_depth(x.len(), depth)?;
    let half = 1usize << prev.depth;
    if 2 * prev.count() > depth {
        let mut layer = initial_layer(x, depth, threshold, ledger)?;
        layer.depth = depth;
        return Ok(layer);
    }
    let n = x.len();
    let b = 1usize << depth;
    let l = n / b;
    let mut values = BTreeMap::new();
    for &p in &prev.active {
        for c in [p, p + half] {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..b {
                ledger.record(j * l);
                acc += x.samples()[j * l] * omega_pow(b, (c * j) as i128);
            }
            values.insert(c, acc / b as f64);
        }
    }
    let active = values.iter().filter(|(_, v)| v.norm() > threshold).map(|(i, _)| *i).collect();
    Ok(TreeLayer { depth, values, active, full: false })
}

fn check_depth(n: usize, depth: usize) -> Result<()> {
    if !n.is_power_of_two() {
        return Err(Error::UnsupportedSize { n, reason: "DSFFT needs a power-of-two size".into() });
    }
    if depth > n.trailing_zeros() as usize {
        return invalid(format!("depth {depth} exceeds log2({n})"));
    }
    Ok(())
}

/// Everything [`dsfft_report`] learned along the way.
#[derive(Debug, Clone)]
pub struct DsfftReport {
    pub spectrum: SparseSpectrum,
    /// Layers visited, starting depth first.
    pub layers: Vec<TreeLayer>,
    /// Leaf buckets that needed the one-shot fallback.
    pub fallback_buckets: Vec<usize>,
}

impl DsfftReport {
    pub fn stop_depth(&self) -> usize {
        self.layers.last().map_or(0, |l| l.depth)
    }
}

pub fn dsfft(x: &Signal, k: usize, config: &DsfftConfig, ledger: &mut SampleLedger) -> Result<SparseSpectrum> {
    Ok(dsfft_report(x, k, config, ledger)?.spectrum)
}

pub fn dsfft_report(x: &Signal, k: usize, config: &DsfftConfig, ledger: &mut SampleLedger) -> Result<DsfftReport> {
    let n = x.len();
    check_depth(n, 0)?;
    let max_depth = n.trailing_zeros() as usize;
    let start = config.start_depth.unwrap_or_else(|| default_start_depth(k, config.snr_hint)).min(max_depth);

    // The starting layer is always fully bucketized, which also yields the
    // mean sample power used to scale the noise level.
    let first = bucketize(x, 1 << start, 0, ledger)?;
    let power: f64 = first.values.iter().map(|v| v.norm_sqr()).sum();
    let time_var = config.snr_hint.map_or(0.0, |db| power / (1.0 + 10f64.powf(db / 10.0)));
    let threshold = |d: usize| ACTIVITY_FLOOR.max(3.0 * (time_var / (1u64 << d) as f64).sqrt());

    let values: BTreeMap<usize, C64> = first.values.into_iter().enumerate().collect();
    let active = values.iter().filter(|(_, v)| v.norm() > threshold(start)).map(|(i, _)| *i).collect();
    let mut layers = vec![TreeLayer { depth: start, values, active, full: true }];
    loop {
        let last = layers.last().expect("at least one layer");
        if last.count() as f64 >= config.stop_ratio * k as f64 || last.depth == max_depth {
            break;
        }
        let next = expand_layer(x, last, threshold(last.depth + 1), ledger)?;
        layers.push(next);
    }

    let leaf = layers.last().expect("at least one layer");
    let (spectrum, fallback_buckets) = resolve_leaves(x, k, leaf, config, time_var, ledger)?;
    Ok(DsfftReport { spectrum, layers, fallback_buckets })
}

/// `⌈log₂ K⌉`, deepened under noise until a typical tone of power
/// `P_sig/K` is four times the 3σ activity threshold: `2^d ≥ 144·K/snr`.
fn default_start_depth(k: usize, snr_hint: Option<f64>) -> usize {
    let k = k.max(1) as f64;
    let base = k.log2().ceil() as usize;
    match snr_hint {
        Some(db) => base.max((144.0 * k / 10f64.powf(db / 10.0)).log2().ceil().max(0.0) as usize),
        None => base,
    }
}

fn resolve_leaves(
    x: &Signal,
    k: usize,
    leaf: &TreeLayer,
    config: &DsfftConfig,
    time_var: f64,
    ledger: &mut SampleLedger,
) -> Result<(SparseSpectrum, Vec<usize>)> {
    let n = x.len();
    let b = leaf.buckets();
    let mut spectrum = SparseSpectrum::new(n);
    let mut multi = Vec::new();
    if leaf.active.is_empty() {
        return Ok((spectrum, multi));
    }

    match config.snr_hint {
        None => {
            let extra = bucketize_set(x, b, &ShiftSet::new(vec![1, 2])?, ledger)?;
            let rms = extra[0].values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let th = Thresholds::exact(rms);
            for &i in &leaf.active {
                let node = BucketNode::new(0, i, b, vec![leaf.values[&i], extra[0].values[i], extra[1].values[i]]);
                match classify_exact(&node, &[0, 1, 2], n, &th) {
                    BucketState::SingleTon { f, v } => spectrum.insert(f, v)?,
                    BucketState::ZeroTon => {}
                    _ => multi.push(i),
                }
            }
        }
        Some(db) => {
            let base = SearchPlan::for_size(n, config.seed)?;
            let rho = b as f64 * 10f64.powf(db / 10.0) / k.max(1) as f64;
            let plan = base.with_rounds(rounds_for_snr(rho, base.rounds));
            let shifts = plan.shifts();
            let taus = shifts.taus().to_vec();
            let meas = bucketize_set(x, b, &shifts, ledger)?;
            let floor = Thresholds::exact(meas[0].values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).zero;
            let th = Thresholds::noisy(time_var / b as f64, plan.len(), floor);
            for &i in &leaf.active {
                let node = BucketNode::new(0, i, b, meas.iter().map(|m| m.values[i]).collect());
                match classify_noisy(&node, &plan, &taus, n, &th)? {
                    BucketState::SingleTon { f, v } => spectrum.insert(f, v)?,
                    BucketState::ZeroTon => {}
                    _ => multi.push(i),
                }
            }
        }
    }

    if !multi.is_empty() {
        resolve_aliased(x, &multi, b, config, time_var, &mut spectrum, ledger)?;
    }
    spectrum.truncate_to(k);
    Ok((spectrum, multi))
}

/// Recovery for leaf buckets holding several tones: matrix pencil plus
/// subspace pursuit on exact data, greedy pursuit over the bucket's whole
/// frequency grid on noisy data (pencil roots are too noise-sensitive when
/// candidates sit only `2π/L` apart).
fn resolve_aliased(
    x: &Signal,
    buckets: &[usize],
    b: usize,
    config: &DsfftConfig,
    time_var: f64,
    spectrum: &mut SparseSpectrum,
    ledger: &mut SampleLedger,
) -> Result<()> {
    let n = x.len();
    let l = (n / b) as f64;
    let random_shifts = if time_var > 0.0 {
        (2.0 * MAX_ALIASING as f64 * l.log2().ceil()).clamp((3 * MAX_ALIASING) as f64, MAX_PURSUIT_SHIFTS as f64)
            as usize
    } else {
        (3 * MAX_ALIASING).max((MAX_ALIASING as f64 * l.log10()).ceil() as usize)
    };
    let cfg =
        OneShotConfig { a_max: MAX_ALIASING, buckets: b, random_shifts, variant: Variant::Dt3, seed: config.seed };
    let table = collect_moments(x, &cfg, ledger)?;
    let noise = 6.0 * (time_var / b as f64).sqrt();
    for &i in buckets {
        let bm = &table.moments[i];
        let found = if time_var > 0.0 {
            let stop = Thresholds::noisy(time_var / b as f64, random_shifts, ACTIVITY_FLOOR).single;
            greedy_pursuit(i, &bm.random, &table.random_taus, b, n, stop)?
        } else {
            let sigma = svd(&bm.hankel(MAX_ALIASING)).sigma;
            let cut = (1e-6 * sigma[0]).max(noise);
            let a = sigma.iter().filter(|&&s| s > cut).count().clamp(1, MAX_ALIASING);
            let Some(cands) = locate(bm, a, Variant::Dt3, b, n)? else { continue };
            let sol = estimate_values(i, &bm.random, &table.random_taus, &cands, b, n)?;
            sol.positions.into_iter().zip(sol.values).collect()
        };
        for (f, v) in found {
            if !spectrum.contains(f) {
                spectrum.insert(f, v)?;
            }
        }
    }
    Ok(())
}

/// Orthogonal matching pursuit over `f ≡ i (mod B)`: add the grid atom
/// best correlated with the residual and refit, until the residual norm
/// drops to `stop` or `MAX_ALIASING` atoms are in.
fn greedy_pursuit(i: usize, y: &[C64], taus: &[i64], b: usize, n: usize, stop: f64) -> Result<Vec<(usize, C64)>> {
    let atom = |f: usize| -> Vec<C64> { taus.iter().map(|&t| omega_pow(n, t as i128 * f as i128)).collect() };
    let mut chosen: Vec<usize> = Vec::new();
    let mut values: Vec<C64> = Vec::new();
    let mut residual = y.to_vec();
    while chosen.len() < MAX_ALIASING && norm(&residual) > stop {
        let best = (i..n)
            .step_by(b)
            .filter(|f| !chosen.contains(f))
            .map(|f| (atom(f).iter().zip(&residual).map(|(a, r)| a.conj() * r).sum::<C64>().norm(), f))
            .max_by(|p, q| p.0.total_cmp(&q.0));
        let Some((_, f)) = best else { break };
        chosen.push(f);
        let cols: Vec<Vec<C64>> = chosen.iter().map(|&g| atom(g)).collect();
        let a = SmallMatrix::from_fn(y.len(), chosen.len(), |r, c| cols[c][r]);
        values = least_squares(&a, y)?.x;
        let fit = a.mul_vec(&values);
        residual = y.iter().zip(&fit).map(|(p, q)| p - q).collect();
    }
    Ok(chosen.into_iter().zip(values).collect())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Probability that K uniformly placed frequencies fall in K distinct
/// buckets of B (with `L = N/B` frequencies per bucket):
/// `Π_{j=1}^{K-1} (N − jL)/(N − j)`.
pub fn non_aliasing_probability(n: usize, k: usize, b: usize) -> Result<f64> {
    if b == 0 || !n.is_multiple_of(b) {
        return invalid(format!("bucket count {b} does not divide {n}"));
    }
    if k > b {
        return Ok(0.0);
    }
    let l = (n / b) as f64;
    let nf = n as f64;
    Ok((1..k).map(|j| (nf - j as f64 * l) / (nf - j as f64)).product())
}

/// Large-N limit of [`non_aliasing_probability`]: `Π_{j=1}^{K-1} (1 − j/B)`.
pub fn non_aliasing_probability_limit(k: usize, b: usize) -> f64 {
    if k > b {
        return 0.0;
    }
    (1..k).map(|j| 1.0 - j as f64 / b as f64).product()
}
