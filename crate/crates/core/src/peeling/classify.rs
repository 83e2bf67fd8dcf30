use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;

use super::plan::SearchPlan;
use crate::error::{invalid, Result};
use crate::fft::omega_pow;

/// Classification of a bucket node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BucketState {
    ZeroTon,
    SingleTon {
        f: usize,
        v: C64,
    },
    MultiTon,
    /// Its single tone has been peeled off.
    Resolved,
}

/// One bucket of one cycle: its measurements across all shifts and the
/// residual left after subtracting recovered tones.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketNode {
    pub cycle: usize,
    pub index: usize,
    /// Bucket count of the node's cycle.
    pub modulus: usize,
    pub vec: Vec<C64>,
    pub residual: Vec<C64>,
    pub state: BucketState,
}

impl BucketNode {
    pub fn new(cycle: usize, index: usize, modulus: usize, vec: Vec<C64>) -> Self {
        Self { cycle, index, modulus, residual: vec.clone(), vec, state: BucketState::MultiTon }
    }

    pub fn residual_norm(&self) -> f64 {
        norm(&self.residual)
    }
}

/// Decision thresholds: `zero` bounds the norm of a zero-ton, `single` the
/// residual of a single-ton after its tone is fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub zero: f64,
    pub single: f64,
}

impl Thresholds {
    /// Both thresholds at `1e-6 · rms`, for noiseless data.
    pub fn exact(rms: f64) -> Self {
        let e = 1e-6 * rms;
        Self { zero: e, single: e }
    }

    /// Chi-square style bounds for complex noise of per-measurement variance
    /// `var` over `r` measurements: `r·var + 3·var·√r` and `r·var + 4·var·√r`
    /// (as squared norms), floored at `floor`.
    pub fn noisy(var: f64, r: usize, floor: f64) -> Self {
        let rf = r as f64;
        let zero = (var * (rf + 3.0 * rf.sqrt())).sqrt().max(floor);
        let single = (var * (rf + 4.0 * rf.sqrt())).sqrt().max(floor);
        Self { zero, single }
    }
}

/// A fitted single tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingletonEstimate {
    pub f: usize,
    pub v: C64,
    /// `‖residual − v·[ω^{τ_k f}]‖₂`.
    pub residual: f64,
}

/// Noiseless classification from three consecutive shifts `τ0, τ0+1, τ0+2`.
///
/// A single tone makes the measurements a geometric sequence with ratio
/// `ω^f`; two or more tones cannot pass the ratio test.
pub fn classify_exact(node: &BucketNode, taus: &[i64], n: usize, th: &Thresholds) -> BucketState {
    debug_assert!(taus.len() >= 3 && taus[1] == taus[0] + 1 && taus[2] == taus[1] + 1);
    let r = &node.residual;
    let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if norm(r) <= th.zero {
        return BucketState::ZeroTon;
    }
    if r[0].norm() <= th.zero || (r[1] * r[1] - r[0] * r[2]).norm() > th.zero * scale {
        return BucketState::MultiTon;
    }
    let f = phase_to_frequency(r[1] / r[0], n);
    if f % node.modulus != node.index {
        return BucketState::MultiTon;
    }
    let v = r[0] * omega_pow(n, -(taus[0] as i128) * f as i128);
    if fit_residual(r, taus, n, f, v) > th.single.max(th.zero) {
        return BucketState::MultiTon;
    }
    BucketState::SingleTon { f, v }
}

/// `round(angle·(−N/2π)) mod N`, with the angle taken in `[0, 2π)`.
pub fn phase_to_frequency(ratio: C64, n: usize) -> usize {
    let ang = ratio.arg().rem_euclid(TAU);
    let f = (-ang * n as f64 / TAU).round() as i64;
    f.rem_euclid(n as i64) as usize
}

/// Weighted phase-difference estimate of the per-step rotation of `y`,
/// returned in `[0, 2π)`.
pub fn kay_estimate(y: &[C64], weights: &[f64]) -> f64 {
    let diffs: Vec<C64> = y.windows(2).map(|w| w[1] * w[0].conj()).collect();
    let reference = diffs.iter().sum::<C64>().arg();
    let mut est = 0.0;
    for (d, w) in diffs.iter().zip(weights) {
        est += w * (reference + wrap(d.arg() - reference));
    }
    est.rem_euclid(TAU)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// Locates a single tone in a noisy node of bucket `node.index` (mod `node.modulus`).
///
/// Each iteration j yields a phase estimate of `ω^{2^j f}`; the candidate
/// `f ≡ i (mod B)` whose predicted phases are nearest in the wrapped
/// least-squares sense wins. With noiseless phases this is the candidate
/// that survives successive halving. `v` is the least-squares amplitude.
pub fn singleton_search_noisy(
    node: &BucketNode,
    plan: &SearchPlan,
    taus: &[i64],
    n: usize,
) -> Result<Option<SingletonEstimate>> {
    if node.residual.len() != plan.len() || taus.len() != plan.len() {
        return invalid(format!("node has {} measurements, search plan expects {}", node.residual.len(), plan.len()));
    }
    let r = &node.residual;
    if norm(r) == 0.0 {
        return Ok(None);
    }
    let theta: Vec<f64> = (0..plan.iterations)
        .map(|j| kay_estimate(&r[plan.slot(j, 0)..plan.slot(j, 0) + plan.rounds], &plan.weights))
        .collect();
    let steps: Vec<u64> = (0..plan.iterations).map(|j| (1u64 << j) % n as u64).collect();

    let (b, i) = (node.modulus, node.index);
    let mut best = (f64::INFINITY, i);
    for f in (i..n).step_by(b) {
        let mut score = 0.0;
        for (th, &s) in theta.iter().zip(&steps) {
            let q = (s * f as u64) % n as u64;
            let predicted = ((n as u64 - q) % n as u64) as f64 / n as f64 * TAU;
            let d = wrap(th - predicted);
            score += d * d;
            if score >= best.0 {
                break;
            }
        }
        if score < best.0 {
            best = (score, f);
        }
    }
    let f = best.1;
    let v = taus.iter().zip(r).map(|(&t, y)| y * omega_pow(n, -(t as i128) * f as i128)).sum::<C64>() / r.len() as f64;
    Ok(Some(SingletonEstimate { f, v, residual: fit_residual(r, taus, n, f, v) }))
}

/// Zero-ton below `T0`, single-ton when the fitted tone leaves less than `T1`.
pub fn classify_noisy(
    node: &BucketNode,
    plan: &SearchPlan,
    taus: &[i64],
    n: usize,
    th: &Thresholds,
) -> Result<BucketState> {
    if node.residual_norm() <= th.zero {
        return Ok(BucketState::ZeroTon);
    }
    Ok(match singleton_search_noisy(node, plan, taus, n)? {
        Some(est) if est.residual <= th.single => BucketState::SingleTon { f: est.f, v: est.v },
        _ => BucketState::MultiTon,
    })
}

/// Removes tone `(f, v)` from the node's residual.
pub fn subtract(node: &mut BucketNode, taus: &[i64], n: usize, f: usize, v: C64) -> Result<()> {
    if f % node.modulus != node.index {
        return invalid(format!("frequency {f} does not belong to bucket {} mod {}", node.index, node.modulus));
    }
    if taus.len() != node.residual.len() {
        return invalid("shift count does not match node measurements");
    }
    for (y, &t) in node.residual.iter_mut().zip(taus) {
        *y -= v * omega_pow(n, t as i128 * f as i128);
    }
    Ok(())
}

fn fit_residual(r: &[C64], taus: &[i64], n: usize, f: usize, v: C64) -> f64 {
    r.iter().zip(taus).map(|(y, &t)| (y - v * omega_pow(n, t as i128 * f as i128)).norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
