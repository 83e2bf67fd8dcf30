//! Moment-based one-shot recovery: sFFT-DT1 (polynomial roots), DT2
//! (grid enumeration) and DT3 (matrix pencil).
//!
//! Every bucket `i` sees the moment sequence
//! `m_τ = Σ_{f ≡ i (mod B)} X[f] ω^{τf}`, a power sum in `z_f = ω^f`.
//! The pipeline reads `3·a_m` consecutive shifts plus `P` random ones,
//! votes per-bucket sparsity from Hankel singular values, locates the
//! tones, and refines values with subspace pursuit on the random shifts.

use num_complex::Complex64 as C64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bucketize::{Bucketizer, SampleLedger};
use crate::error::{invalid, Result};
use crate::fft::omega_pow;
use crate::signals::{Signal, SparseSpectrum};
use crate::smallnum::{least_squares, pencil_eigenvalues, poly_eval, poly_roots, solve_linear, svd, SmallMatrix};

/// Localization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Roots of the moment polynomial.
    Dt1,
    /// Evaluate the moment polynomial on every grid candidate.
    Dt2,
    /// Matrix-pencil eigenvalues.
    Dt3,
}

/// Largest supported per-bucket aliasing.
pub const MAX_ALIASING: usize = 4;
/// Subsampling factors above this force more buckets.
pub const MAX_SUBSAMPLING: usize = 1000;
const PURSUIT_MAX_ITERS: usize = 10;
const VOTE_TIE: f64 = 1e-12;
/// Pooled singular values below this fraction of the largest are numerical zeros.
const VOTE_FLOOR: f64 = 1e-10;

/// Parameters of a one-shot run.
#[derive(Debug, Clone, PartialEq)]
pub struct OneShotConfig {
    /// Maximum tones resolved per bucket (`a_m`).
    pub a_max: usize,
    /// Bucket count `B`; must divide N.
    pub buckets: usize,
    /// Number of random shifts `P` used for value estimation.
    pub random_shifts: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl OneShotConfig {
    /// Default configuration: `a_m = 4`, `P = 12`, and B the smallest divisor
    /// of N that is at least 32K and leaves `N/B <= 1000` (B = N if none).
    pub fn for_signal(n: usize, k: usize, variant: Variant, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("n must be positive");
        }
        let target = 32 * k.max(1);
        let buckets = (1..=n).find(|&b| n.is_multiple_of(b) && b >= target && n / b <= MAX_SUBSAMPLING).unwrap_or(n);
        let cfg = Self { a_max: MAX_ALIASING, buckets, random_shifts: 3 * MAX_ALIASING, variant, seed };
        cfg.validate(n)?;
        Ok(cfg)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(1..=MAX_ALIASING).contains(&self.a_max) {
            return invalid(format!("a_max {} outside 1..={MAX_ALIASING}", self.a_max));
        }
        if self.buckets == 0 || !n.is_multiple_of(self.buckets) {
            return invalid(format!("bucket count {} does not divide {n}", self.buckets));
        }
        let l = (n / self.buckets) as f64;
        if (self.random_shifts as f64) < self.a_max as f64 * l.log10() || self.random_shifts < 2 * self.a_max {
            return invalid(format!(
                "{} random shifts are too few for a_max={} and L={}",
                self.random_shifts, self.a_max, l
            ));
        }
        Ok(())
    }

    /// Shift rounds per bucket: `3·a_m + P`.
    pub fn rounds(&self) -> usize {
        3 * self.a_max + self.random_shifts
    }
}

/// One bucket's moments.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketMoments {
    pub bucket: usize,
    /// `m_τ` for `τ = -a_m, …, 2a_m - 1` (index `τ + a_m`).
    pub structured: Vec<C64>,
    /// Moments at the random shifts, aligned with [`MomentTable::random_taus`].
    pub random: Vec<C64>,
}

impl BucketMoments {
    /// Structured moment `m_k`, `-a_m <= k < 2a_m`.
    pub fn m(&self, k: i64) -> C64 {
        let a_max = (self.structured.len() / 3) as i64;
        self.structured[(k + a_max) as usize]
    }

    pub fn a_max(&self) -> usize {
        self.structured.len() / 3
    }

    /// Hankel matrix `H[r][c] = m_{r+c}` of size `a × a`.
    pub fn hankel(&self, a: usize) -> SmallMatrix {
        SmallMatrix::from_fn(a, a, |r, c| self.m((r + c) as i64))
    }
}

/// Moments for every bucket plus the shared random shift set.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub n: usize,
    pub buckets: usize,
    pub a_max: usize,
    pub random_taus: Vec<i64>,
    pub moments: Vec<BucketMoments>,
}

/// Coefficients `c_0 … c_{a-1}` of the monic moment polynomial whose roots
/// are the tone locations `z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCoefficients(pub Vec<C64>);

impl MomentCoefficients {
    /// Solves `M_a C = -[m_a … m_{2a-1}]`; `None` if `M_a` is rank deficient.
    pub fn solve(moments: &BucketMoments, a: usize) -> Option<Self> {
        let rhs: Vec<C64> = (0..a).map(|r| -moments.m((a + r) as i64)).collect();
        let sol = solve_linear(&moments.hankel(a), &rhs).ok()?;
        (sol.rank == a).then_some(Self(sol.x))
    }

    pub fn eval(&self, z: C64) -> C64 {
        poly_eval(&self.0, z)
    }
}

/// Per-bucket recovery result.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSolution {
    pub bucket: usize,
    pub positions: Vec<usize>,
    pub values: Vec<C64>,
}

impl BucketSolution {
    pub fn a(&self) -> usize {
        self.positions.len()
    }
}

/// Bucketizes over the structured and random shift sets.
pub fn collect_moments(x: &Signal, config: &OneShotConfig, ledger: &mut SampleLedger) -> Result<MomentTable> {
    let n = x.len();
    config.validate(n)?;
    let am = config.a_max as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let random_taus: Vec<i64> = if config.random_shifts <= n {
        index::sample(&mut rng, n, config.random_shifts).into_iter().map(|t| t as i64).collect()
    } else {
        (0..config.random_shifts).map(|_| rng.random_range(0..n as i64)).collect()
    };

    let bz = Bucketizer::new(n, config.buckets)?;
    let structured: Vec<Vec<C64>> =
        (-am..2 * am).map(|t| bz.filter(x, t, ledger).map(|f| f.values)).collect::<Result<_>>()?;
    let random: Vec<Vec<C64>> =
        random_taus.iter().map(|&t| bz.filter(x, t, ledger).map(|f| f.values)).collect::<Result<_>>()?;

    let moments = (0..config.buckets)
        .map(|i| BucketMoments {
            bucket: i,
            structured: structured.iter().map(|v| v[i]).collect(),
            random: random.iter().map(|v| v[i]).collect(),
        })
        .collect();
    Ok(MomentTable { n, buckets: config.buckets, a_max: config.a_max, random_taus, moments })
}

/// Votes per-bucket sparsity: the K largest Hankel singular values across all
/// buckets are marked, and each bucket's count of marked values is its `a`.
pub fn detect_sparsity(table: &MomentTable, k: usize) -> Vec<usize> {
    let am = table.a_max;
    let mut pool: Vec<(f64, usize)> = Vec::with_capacity(table.buckets * am);
    for bm in &table.moments {
        for s in svd(&bm.hankel(am)).sigma {
            pool.push((s, bm.bucket));
        }
    }
    let top = pool.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut counts = vec![0; table.buckets];
    if top == 0.0 || k == 0 {
        return counts;
    }
    pool.retain(|p| p.0 > VOTE_FLOOR * top);
    pool.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let k = k.min(pool.len());
    if k == 0 {
        return counts;
    }
    let kth = pool[k - 1].0;
    // Clear winners first, then fill ties at the boundary by bucket index.
    let mut chosen: Vec<usize> = pool.iter().filter(|p| p.0 > kth + VOTE_TIE).map(|p| p.1).collect();
    let mut tied: Vec<usize> = pool.iter().filter(|p| (p.0 - kth).abs() <= VOTE_TIE).map(|p| p.1).collect();
    tied.sort_unstable();
    let need = k - chosen.len().min(k);
    chosen.extend(tied.into_iter().take(need));
    for b in chosen {
        counts[b] += 1;
    }
    counts
}

/// Finds `a` tone positions in bucket `moments.bucket`. `None` marks a
/// degenerate bucket (rank-deficient moment or pencil matrix).
pub fn locate(moments: &BucketMoments, a: usize, variant: Variant, b: usize, n: usize) -> Result<Option<Vec<usize>>> {
    if a == 0 || a > moments.a_max() {
        return invalid(format!("aliasing {a} outside 1..={}", moments.a_max()));
    }
    if b == 0 || !n.is_multiple_of(b) || moments.bucket >= b {
        return invalid(format!("bucket {} with B={b} does not fit N={n}", moments.bucket));
    }
    let i = moments.bucket;
    let positions = match variant {
        Variant::Dt1 => {
            let Some(coef) = MomentCoefficients::solve(moments, a) else { return Ok(None) };
            snap_all(&poly_roots(&coef.0)?, i, b, n)
        }
        Variant::Dt2 => {
            let Some(coef) = MomentCoefficients::solve(moments, a) else { return Ok(None) };
            let mut scored: Vec<(f64, usize)> =
                (i..n).step_by(b).map(|f| (coef.eval(omega_pow(n, f as i128)).norm(), f)).collect();
            scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            scored.into_iter().take(a).map(|s| s.1).collect()
        }
        Variant::Dt3 => {
            let y = SmallMatrix::from_fn(a + 1, a + 1, |r, c| moments.m(r as i64 - c as i64));
            let pe = pencil_eigenvalues(&y.submatrix(0, a + 1, 0, a), &y.submatrix(0, a + 1, 1, a + 1), a)?;
            if pe.truncated || pe.values.iter().any(|l| l.norm() == 0.0) {
                return Ok(None);
            }
            // Pencil eigenvalues are 1/z.
            let roots: Vec<C64> = pe.values.iter().map(|l| l.inv()).collect();
            snap_all(&roots, i, b, n)
        }
    };
    Ok(Some(positions))
}

/// Grid position `f ≡ i (mod B)` whose phase `-2πf/N` is nearest to `arg z`.
pub fn snap_to_grid(z: C64, i: usize, b: usize, n: usize) -> usize {
    let l = n / b;
    let fc = (-z.arg() / (2.0 * std::f64::consts::PI) * n as f64).rem_euclid(n as f64);
    let sc = (fc - i as f64) / b as f64;
    let lo = sc.floor();
    let cands = [lo, lo + 1.0].map(|s| (s.rem_euclid(l as f64) as usize) % l);
    let dist = |s: usize| circ_dist(fc, (i + s * b) as f64, n as f64);
    let best = if dist(cands[1]) < dist(cands[0]) || (dist(cands[1]) == dist(cands[0]) && cands[1] < cands[0]) {
        cands[1]
    } else {
        cands[0]
    };
    i + best * b
}

fn circ_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Snaps each root, moving later collisions to the nearest free grid point.
fn snap_all(roots: &[C64], i: usize, b: usize, n: usize) -> Vec<usize> {
    let l = n / b;
    let mut taken: Vec<usize> = Vec::with_capacity(roots.len());
    for &z in roots {
        let f = snap_to_grid(z, i, b, n);
        if !taken.contains(&f) {
            taken.push(f);
            continue;
        }
        let fc = (-z.arg() / (2.0 * std::f64::consts::PI) * n as f64).rem_euclid(n as f64);
        let free = (0..l).map(|s| i + s * b).filter(|f| !taken.contains(f)).min_by(|&x, &y| {
            circ_dist(fc, x as f64, n as f64).total_cmp(&circ_dist(fc, y as f64, n as f64)).then(x.cmp(&y))
        });
        if let Some(f) = free {
            taken.push(f);
        }
    }
    taken
}

/// Subspace pursuit over the atoms `{f, f+B, f-B}` of each candidate,
/// measured at the random shifts.
pub fn estimate_values(
    bucket: usize,
    random: &[C64],
    random_taus: &[i64],
    candidates: &[usize],
    b: usize,
    n: usize,
) -> Result<BucketSolution> {
    if random.len() != random_taus.len() {
        return invalid("random moments and shifts differ in length");
    }
    let empty = BucketSolution { bucket, positions: Vec::new(), values: Vec::new() };
    let y_norm = norm(random);
    if candidates.is_empty() || y_norm == 0.0 {
        return Ok(empty);
    }
    let a = candidates.len().min(random.len());
    let mut atoms: Vec<usize> = Vec::with_capacity(3 * candidates.len());
    for &f in candidates {
        for g in [f, (f + b) % n, (f + n - b % n) % n] {
            if !atoms.contains(&g) {
                atoms.push(g);
            }
        }
    }
    let column = |f: usize| -> Vec<C64> { random_taus.iter().map(|&t| omega_pow(n, t as i128 * f as i128)).collect() };
    let columns: Vec<Vec<C64>> = atoms.iter().map(|&f| column(f)).collect();
    let fit = |set: &[usize]| -> Result<(Vec<C64>, Vec<C64>)> {
        let phi = SmallMatrix::from_fn(random.len(), set.len(), |r, c| columns[set[c]][r]);
        let sol = least_squares(&phi, random)?;
        let fitted = phi.mul_vec(&sol.x);
        let resid = random.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        Ok((sol.x, resid))
    };
    let top_by_correlation = |r: &[C64], exclude: &[usize], count: usize| -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = (0..atoms.len())
            .filter(|j| !exclude.contains(j))
            .map(|j| (columns[j].iter().zip(r).map(|(p, y)| p.conj() * y).sum::<C64>().norm(), j))
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        scored.into_iter().take(count).map(|s| s.1).collect()
    };

    let mut support = top_by_correlation(random, &[], a);
    let (mut coef, mut resid) = fit(&support)?;
    for _ in 0..PURSUIT_MAX_ITERS {
        if norm(&resid) <= 1e-12 * y_norm {
            break;
        }
        let room = random.len().saturating_sub(support.len()).min(a);
        let mut merged = support.clone();
        merged.extend(top_by_correlation(&resid, &support, room));
        let (wide, _) = fit(&merged)?;
        let mut ranked: Vec<(f64, usize)> = wide.iter().zip(&merged).map(|(v, &j)| (v.norm(), j)).collect();
        ranked.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        let pruned: Vec<usize> = ranked.into_iter().take(a).map(|r| r.1).collect();
        let (c2, r2) = fit(&pruned)?;
        if norm(&r2) >= norm(&resid) {
            break;
        }
        support = pruned;
        coef = c2;
        resid = r2;
    }
    let mut pairs: Vec<(usize, C64)> = support.iter().map(|&j| atoms[j]).zip(coef).collect();
    pairs.sort_by_key(|p| p.0);
    Ok(BucketSolution {
        bucket,
        positions: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
    })
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Full one-shot result with per-bucket diagnostics.
#[derive(Debug, Clone)]
pub struct OneShotReport {
    pub spectrum: SparseSpectrum,
    /// Voted sparsity per bucket.
    pub sparsity: Vec<usize>,
    /// Buckets whose moment matrices were degenerate and were skipped.
    pub degenerate: Vec<usize>,
}

/// Runs collect → detect → locate → estimate and keeps the K largest values.
pub fn sfft_dt(x: &Signal, k: usize, config: &OneShotConfig, ledger: &mut SampleLedger) -> Result<SparseSpectrum> {
    Ok(sfft_dt_report(x, k, config, ledger)?.spectrum)
}

pub fn sfft_dt_report(
    x: &Signal,
    k: usize,
    config: &OneShotConfig,
    ledger: &mut SampleLedger,
) -> Result<OneShotReport> {
    let n = x.len();
    let table = collect_moments(x, config, ledger)?;
    let sparsity = detect_sparsity(&table, k);
    let mut spectrum = SparseSpectrum::new(n);
    let mut degenerate = Vec::new();
    for (bm, &a) in table.moments.iter().zip(&sparsity) {
        if a == 0 {
            continue;
        }
        let Some(cands) = locate(bm, a, config.variant, config.buckets, n)? else {
            degenerate.push(bm.bucket);
            continue;
        };
        let sol = estimate_values(bm.bucket, &bm.random, &table.random_taus, &cands, config.buckets, n)?;
        for (f, v) in sol.positions.into_iter().zip(sol.values) {
            spectrum.insert(f, v)?;
        }
    }
    spectrum.truncate_to(k);
    Ok(OneShotReport { spectrum, sparsity, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{generate_test_case_at, inverse_sparse_dft, Snr};

    fn tone_signal(n: usize, tones: &[(usize, C64)]) -> Signal {
        inverse_sparse_dft(&SparseSpectrum::from_pairs(n, tones.iter().copied()).unwrap()).unwrap()
    }

    fn cfg(b: usize, variant: Variant) -> OneShotConfig {
        OneShotConfig { a_max: 4, buckets: b, random_shifts: 12, variant, seed: 5 }
    }

    #[test]
    fn default_bucket_rule() {
        let c = OneShotConfig::for_signal(1 << 14, 16, Variant::Dt3, 0).unwrap();
        assert_eq!(c.buckets, 512);
        assert_eq!(c.rounds(), 24);
        // 2^22 / 32 > 1000 forces more buckets; 2^22 / 2^13 = 512 is the first fit.
        let c = OneShotConfig::for_signal(1 << 22, 1, Variant::Dt3, 0).unwrap();
        assert_eq!(c.buckets, 1 << 13);
        let c = OneShotConfig::for_signal(64, 5, Variant::Dt1, 0).unwrap();
        assert_eq!(c.buckets, 64);
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(8, Variant::Dt1);
        c.a_max = 5;
        assert!(c.validate(64).is_err());
        c.a_max = 4;
        c.buckets = 7;
        assert!(c.validate(64).is_err());
        c.buckets = 8;
        c.random_shifts = 4;
        assert!(c.validate(64).is_err());
    }

    #[test]
    fn zero_signal_moments_vanish() {
        let x = Signal::zeros(256).unwrap();
        let mut ledger = SampleLedger::new();
        let t = collect_moments(&x, &cfg(32, Variant::Dt1), &mut ledger).unwrap();
        assert!(t.moments.iter().all(|m| m.structured.iter().chain(&m.random).all(|z| z.norm() == 0.0)));
        assert_eq!(ledger.count(), 24 * 32);
        assert!(detect_sparsity(&t, 3).iter().all(|&a| a == 0));
        let out = sfft_dt(&x, 0, &cfg(32, Variant::Dt3), &mut SampleLedger::new()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn single_tone_moments() {
        let n = 256;
        let f = 77;
        let x = tone_signal(n, &[(f, C64::new(1.0, 0.0))]);
        let t = collect_moments(&x, &cfg(32, Variant::Dt1), &mut SampleLedger::new()).unwrap();
        for bm in &t.moments {
            for tau in -4..8i64 {
                let want = if bm.bucket == f % 32 { omega_pow(n, tau as i128 * f as i128) } else { C64::new(0.0, 0.0) };
                assert!((bm.m(tau) - want).norm() < 1e-12);
            }
        }
        let a = detect_sparsity(&t, 1);
        assert_eq!(a.iter().sum::<usize>(), 1);
        assert_eq!(a[f % 32], 1);
    }

    #[test]
    fn aliased_pair_detected_and_located() {
        let n = 1024;
        let b = 32;
        let (f0, f1) = (45, 45 + 7 * b);
        let x = tone_signal(n, &[(f0, C64::new(0.6, 0.8)), (f1, C64::new(-1.0, 0.0))]);
        let t = collect_moments(&x, &cfg(b, Variant::Dt1), &mut SampleLedger::new()).unwrap();
        let a = detect_sparsity(&t, 2);
        assert_eq!(a[f0 % b], 2);
        for v in [Variant::Dt1, Variant::Dt2, Variant::Dt3] {
            let mut pos = locate(&t.moments[f0 % b], 2, v, b, n).unwrap().unwrap();
            pos.sort_unstable();
            assert_eq!(pos, vec![f0, f1], "{v:?}");
        }
    }

    #[test]
    fn pursuit_corrects_offset_candidate() {
        let n = 1024;
        let b = 32;
        let f = 300;
        let taus: Vec<i64> = (0..12).map(|j| 37 * j + 11).collect();
        let y: Vec<C64> = taus.iter().map(|&t| omega_pow(n, t as i128 * f as i128) * C64::new(0.0, 2.0)).collect();
        let sol = estimate_values(f % b, &y, &taus, &[f + b], b, n).unwrap();
        assert_eq!(sol.positions, vec![f]);
        assert!((sol.values[0] - C64::new(0.0, 2.0)).norm() < 1e-9);
        let none = estimate_values(0, &[C64::new(0.0, 0.0); 12], &taus, &[f], b, n).unwrap();
        assert_eq!(none.a(), 0);
    }

    #[test]
    fn exact_recovery_small() {
        let case = generate_test_case_at(4096, &[3, 100, 100 + 128, 2000, 4095], Snr::Exact, 9).unwrap();
        for v in [Variant::Dt1, Variant::Dt2, Variant::Dt3] {
            let c = OneShotConfig::for_signal(4096, 5, v, 1).unwrap();
            let got = sfft_dt(&case.signal, 5, &c, &mut SampleLedger::new()).unwrap();
            let m = crate::signals::evaluate(&case.truth, &got, 0.1).unwrap();
            assert!(m.l2 < 1e-9, "{v:?} {m:?}");
        }
    }

    #[test]
    fn locate_rejects_bad_aliasing() {
        let bm = BucketMoments { bucket: 0, structured: vec![C64::new(0.0, 0.0); 12], random: vec![] };
        assert!(locate(&bm, 0, Variant::Dt1, 4, 16).is_err());
        assert!(locate(&bm, 5, Variant::Dt1, 4, 16).is_err());
        assert_eq!(locate(&bm, 1, Variant::Dt1, 4, 16).unwrap(), None);
        assert_eq!(locate(&bm, 1, Variant::Dt3, 4, 16).unwrap(), None);
    }
}
