use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bucketize::ShiftSet;
use crate::error::{Error, Result};

/// Exact (noiseless) or noisy decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Noisy,
}

/// Pairwise co-prime bucket counts and the shift set shared by all cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePlan {
    pub factors: Vec<usize>,
    pub shifts: ShiftSet,
    /// K is large relative to the bucket counts; decoding may stall.
    pub overloaded: bool,
}

impl CyclePlan {
    /// Shift count R.
    pub fn r(&self) -> usize {
        self.shifts.len()
    }

    /// Σ B_j, the number of bucket nodes.
    pub fn total_buckets(&self) -> usize {
        self.factors.iter().sum()
    }
}

/// Shift layout and phase-averaging weights for the noisy singleton search.
///
/// Measurements come in `iterations` groups of `rounds` shifts
/// `anchor_j + 2^j·t`; group j pins down the phase of `ω^{2^j f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchPlan {
    pub iterations: usize,
    pub rounds: usize,
    pub anchors: Vec<i64>,
    pub weights: Vec<f64>,
}

impl SearchPlan {
    /// `iterations` seeded anchors in `[0, n)`.
    pub fn new(n: usize, iterations: usize, rounds: usize, seed: u64) -> Result<Self> {
        if rounds < 2 || iterations == 0 {
            return Err(Error::InvalidArgument(format!(
                "search needs at least one iteration and two rounds, got {iterations}x{rounds}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a11a5);
        let anchors = (0..iterations).map(|_| rng.random_range(0..n as i64)).collect();
        Ok(Self { iterations, rounds, anchors, weights: kay_weights(rounds) })
    }

    /// Default plan for size n: `C = ⌈log₂ n⌉`, `m = max(2, ⌈(log₂ n)^{1/3}⌉)`.
    pub fn for_size(n: usize, seed: u64) -> Result<Self> {
        let log = (n as f64).log2();
        let c = (log.ceil() as usize).max(1);
        let m = (log.cbrt().ceil() as usize).max(2);
        Self::new(n, c, m, seed)
    }

    /// Same anchors with a different number of rounds per iteration.
    pub fn with_rounds(&self, rounds: usize) -> Self {
        let rounds = rounds.max(2);
        Self { rounds, weights: kay_weights(rounds), ..self.clone() }
    }

    /// Measurement index of round `t` in iteration `j`.
    pub fn slot(&self, j: usize, t: usize) -> usize {
        j * self.rounds + t
    }

    pub fn shifts(&self) -> ShiftSet {
        let taus = (0..self.iterations)
            .flat_map(|j| (0..self.rounds).map(move |t| (j, t)))
            .map(|(j, t)| self.anchors[j] + (1i64 << j) * t as i64)
            .collect();
        ShiftSet::new(taus).expect("search plan has at least one shift")
    }

    pub fn len(&self) -> usize {
        self.iterations * self.rounds
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Kay's phase-difference weights for `m` equally spaced samples:
/// `w_t = 3m / (2(m²−1)) · (1 − ((2t − m + 2)/m)²)`, `t = 0 … m−2`.
pub fn kay_weights(m: usize) -> Vec<f64> {
    let mf = m as f64;
    (0..m.saturating_sub(1))
        .map(|t| {
            let u = (2.0 * t as f64 - mf + 2.0) / mf;
            1.5 * mf / (mf * mf - 1.0) * (1.0 - u * u)
        })
        .collect()
}

/// Smallest rounds-per-iteration whose phase estimate reaches ~0.15 rad
/// standard deviation at per-measurement SNR `rho` (linear).
pub fn rounds_for_snr(rho: f64, base: usize) -> usize {
    const TARGET_VAR: f64 = 0.15 * 0.15;
    let mut m = base.max(2);
    while m < 64 && 6.0 / (rho * m as f64 * ((m * m) as f64 - 1.0)) > TARGET_VAR {
        m += 1;
    }
    m
}

/// Chooses co-prime cycles for `n` and, in noisy mode, a search plan.
///
/// The prime-power factors of n are grouped into three cycles when every
/// cycle can still hold about K buckets, otherwise into two; among the
/// groupings the one with the largest smallest cycle wins.
pub fn plan_cycles(n: usize, k: usize, mode: Mode, seed: u64) -> Result<(CyclePlan, Option<SearchPlan>)> {
    let powers = prime_powers(n);
    if powers.len() < 2 {
        return Err(Error::UnsupportedSize { n, reason: "needs at least two co-prime factors".into() });
    }
    let three = (powers.len() >= 3).then(|| best_grouping(&powers, 3)).flatten();
    let factors = match three {
        Some(g) if g[0] >= k => g,
        _ => best_grouping(&powers, 2).expect("two prime powers always split in two"),
    };
    let overloaded = (k as f64) >= (n as f64).cbrt() || factors[0] < k;
    let (shifts, search) = match mode {
        Mode::Exact => (ShiftSet::new(vec![0, 1, 2])?, None),
        Mode::Noisy => {
            let sp = SearchPlan::for_size(n, seed)?;
            (sp.shifts(), Some(sp))
        }
    };
    Ok((CyclePlan { factors, shifts, overloaded }, search))
}

fn prime_powers(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut q = 1;
            while n.is_multiple_of(p) {
                n /= p;
                q *= p;
            }
            out.push(q);
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Splits the prime powers into `d` nonempty groups maximizing the smallest
/// product (then minimizing the total). Returned ascending.
fn best_grouping(powers: &[usize], d: usize) -> Option<Vec<usize>> {
    let t = powers.len();
    if t < d || t > 16 {
        return None;
    }
    let mut best: Option<Vec<usize>> = None;
    let total = d.pow(t as u32);
    for code in 0..total {
        let mut groups = vec![1usize; d];
        let mut used = vec![false; d];
        let mut c = code;
        for &p in powers {
            groups[c % d] *= p;
            used[c % d] = true;
            c /= d;
        }
        if used.iter().any(|u| !u) {
            continue;
        }
        groups.sort_unstable();
        let better = match &best {
            None => true,
            Some(b) => {
                groups[0] > b[0] || (groups[0] == b[0] && groups.iter().sum::<usize>() < b.iter().sum::<usize>())
            }
        };
        if better {
            best = Some(groups);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorizations() {
        assert_eq!(plan_cycles(20, 5, Mode::Exact, 0).unwrap().0.factors, vec![4, 5]);
        assert_eq!(plan_cycles(504, 6, Mode::Exact, 0).unwrap().0.factors, vec![7, 8, 9]);
        assert_eq!(plan_cycles(4080, 8, Mode::Noisy, 0).unwrap().0.factors, vec![15, 16, 17]);
        assert!(matches!(plan_cycles(97, 1, Mode::Exact, 0), Err(Error::UnsupportedSize { .. })));
        assert!(plan_cycles(1024, 1, Mode::Exact, 0).is_err());
    }

    #[test]
    fn heavy_load_falls_back_to_two_cycles() {
        // 504 split in three has a smallest cycle of 7 < 10.
        let (p, _) = plan_cycles(504, 10, Mode::Exact, 0).unwrap();
        assert_eq!(p.factors.len(), 2);
        assert!(p.overloaded);
    }

    #[test]
    fn exact_and_noisy_shift_sets() {
        let (p, s) = plan_cycles(20, 5, Mode::Exact, 0).unwrap();
        assert_eq!(p.shifts.taus(), &[0, 1, 2]);
        assert!(s.is_none());
        let (p, s) = plan_cycles(4080, 8, Mode::Noisy, 3).unwrap();
        let s = s.unwrap();
        assert_eq!((s.iterations, s.rounds), (12, 3));
        assert_eq!(p.r(), 36);
        let taus = p.shifts.taus();
        assert_eq!(taus[s.slot(4, 2)] - taus[s.slot(4, 0)], 32);
    }

    #[test]
    fn kay_weights_small_cases() {
        assert_eq!(kay_weights(2), vec![1.0]);
        let w = kay_weights(3);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rounds_grow_as_snr_drops() {
        assert_eq!(rounds_for_snr(1000.0, 3), 3);
        assert!(rounds_for_snr(1.0, 3) > rounds_for_snr(10.0, 3));
    }
}
