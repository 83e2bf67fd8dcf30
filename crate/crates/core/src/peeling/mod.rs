//! Peeling decoders over co-prime subsampling cycles: FFAST for noiseless
//! signals and R-FFAST for noisy ones.
//!
//! Each cycle j bucketizes the signal into `B_j` buckets at the same shift
//! set. A frequency f lands in bucket `f mod B_j` of every cycle, and
//! because the `B_j` are co-prime, two distinct frequencies can share a
//! bucket in some cycles but (for `f < N`) never in all of them. The
//! decoder repeatedly harvests single-ton buckets and subtracts what it
//! learns from every cycle, which tends to expose new single-tons.

mod classify;
mod plan;

use num_complex::Complex64 as C64;

pub use classify::{
    classify_exact, classify_noisy, kay_estimate, phase_to_frequency, singleton_search_noisy, subtract, BucketNode,
    BucketState, SingletonEstimate, Thresholds,
};
pub use plan::{kay_weights, plan_cycles, rounds_for_snr, CyclePlan, Mode, SearchPlan};

use crate::bucketize::{Bucketizer, SampleLedger};
use crate::error::{invalid, Result};
use crate::signals::{Signal, SparseSpectrum};

/// All bucket nodes of all cycles.
#[derive(Debug, Clone)]
pub struct PeelingGraph {
    pub n: usize,
    pub taus: Vec<i64>,
    pub cycles: Vec<Vec<BucketNode>>,
    pub recovered: SparseSpectrum,
}

impl PeelingGraph {
    /// Bucketizes `x` for every cycle at every shift of `plan`.
    pub fn build(x: &Signal, plan: &CyclePlan, ledger: &mut SampleLedger) -> Result<Self> {
        let n = x.len();
        let taus = plan.shifts.taus().to_vec();
        let mut cycles = Vec::with_capacity(plan.factors.len());
        for (j, &b) in plan.factors.iter().enumerate() {
            let bz = Bucketizer::new(n, b)?;
            let per_shift: Vec<Vec<C64>> =
                taus.iter().map(|&t| bz.filter(x, t, ledger).map(|f| f.values)).collect::<Result<_>>()?;
            cycles.push((0..b).map(|i| BucketNode::new(j, i, b, per_shift.iter().map(|v| v[i]).collect())).collect());
        }
        Ok(Self { n, taus, cycles, recovered: SparseSpectrum::new(n) })
    }

    pub fn node_count(&self) -> usize {
        self.cycles.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &BucketNode> {
        self.cycles.iter().flatten()
    }

    /// Mean per-sample power seen by the measurements (Parseval per bucket vector).
    pub fn mean_sample_power(&self) -> f64 {
        let r = self.taus.len() as f64;
        let per_cycle: Vec<f64> = self
            .cycles
            .iter()
            .map(|c| c.iter().map(|nd| nd.vec.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / r)
            .collect();
        per_cycle.iter().sum::<f64>() / per_cycle.len().max(1) as f64
    }

    /// Classifies every node against its current residual, without peeling.
    pub fn classify_all(&mut self, classifier: &Classifier) -> Result<()> {
        let (n, taus) = (self.n, self.taus.clone());
        for node in self.cycles.iter_mut().flatten() {
            node.state = classifier.classify(node, &taus, n)?;
        }
        Ok(())
    }
}

/// How nodes are classified.
#[derive(Debug, Clone)]
pub enum Classifier {
    Exact(Thresholds),
    /// Search plan plus one threshold pair per cycle.
    Noisy {
        plan: SearchPlan,
        thresholds: Vec<Thresholds>,
    },
}

impl Classifier {
    fn classify(&self, node: &BucketNode, taus: &[i64], n: usize) -> Result<BucketState> {
        match self {
            Classifier::Exact(th) => Ok(classify_exact(node, taus, n, th)),
            Classifier::Noisy { plan, thresholds } => classify_noisy(node, plan, taus, n, &thresholds[node.cycle]),
        }
    }
}

/// Result of [`peel_decode`].
#[derive(Debug, Clone)]
pub struct PeelOutcome {
    pub spectrum: SparseSpectrum,
    /// Rounds run, including the final round that found nothing new.
    pub rounds: usize,
    pub unresolved_multitons: usize,
}

/// Synchronous peeling: classify every live node, collect the single-tons
/// found this round, then subtract each from its node in every cycle.
pub fn peel_decode(graph: &mut PeelingGraph, classifier: &Classifier, max_rounds: usize) -> Result<PeelOutcome> {
    let n = graph.n;
    let taus = graph.taus.clone();
    let mut dirty: Vec<Vec<bool>> = graph.cycles.iter().map(|c| vec![true; c.len()]).collect();
    let mut rounds = 0;
    while rounds < max_rounds {
        rounds += 1;
        let mut found: Vec<(usize, C64)> = Vec::new();
        for (j, cycle) in graph.cycles.iter_mut().enumerate() {
            for (i, node) in cycle.iter_mut().enumerate() {
                if !dirty[j][i] {
                    continue;
                }
                dirty[j][i] = false;
                node.state = classifier.classify(node, &taus, n)?;
                if let BucketState::SingleTon { f, v } = node.state {
                    if !graph.recovered.contains(f) && !found.iter().any(|p| p.0 == f) {
                        found.push((f, v));
                    }
                }
            }
        }
        if found.is_empty() {
            break;
        }
        for &(f, v) in &found {
            graph.recovered.insert(f, v)?;
            for (j, cycle) in graph.cycles.iter_mut().enumerate() {
                let i = f % cycle.len();
                let node = &mut cycle[i];
                subtract(node, &taus, n, f, v)?;
                if node.state == (BucketState::SingleTon { f, v }) {
                    node.state = BucketState::Resolved;
                } else {
                    dirty[j][i] = true;
                }
            }
        }
        // A node resolved by one tone but hit by another in the same round is live again.
        for (j, cycle) in graph.cycles.iter_mut().enumerate() {
            for (i, node) in cycle.iter_mut().enumerate() {
                if node.state == BucketState::Resolved && dirty[j][i] {
                    node.state = BucketState::MultiTon;
                }
            }
        }
    }
    let unresolved_multitons = graph.nodes().filter(|nd| nd.state == BucketState::MultiTon).count();
    Ok(PeelOutcome { spectrum: graph.recovered.clone(), rounds, unresolved_multitons })
}

/// Default round cap, `K + 4`.
pub fn default_max_rounds(k: usize) -> usize {
    k + 4
}

/// Noiseless FFAST with three consecutive shifts per cycle.
pub fn ffast(x: &Signal, k: usize, ledger: &mut SampleLedger) -> Result<SparseSpectrum> {
    Ok(ffast_report(x, k, ledger)?.spectrum)
}

pub fn ffast_report(x: &Signal, k: usize, ledger: &mut SampleLedger) -> Result<PeelOutcome> {
    let (plan, _) = plan_cycles(x.len(), k, Mode::Exact, 0)?;
    let mut graph = PeelingGraph::build(x, &plan, ledger)?;
    let rms = graph.mean_sample_power().sqrt();
    let mut out = peel_decode(&mut graph, &Classifier::Exact(Thresholds::exact(rms)), default_max_rounds(k))?;
    out.spectrum.truncate_to(k);
    Ok(out)
}

/// Noisy R-FFAST.
///
/// With an SNR hint the per-bucket noise level is derived from the
/// measured signal power, and the rounds per search iteration are raised
/// until the phase estimates are accurate enough for that SNR. Without a
/// hint the noise level is the median node energy.
pub fn r_ffast(
    x: &Signal,
    k: usize,
    snr_hint: Option<f64>,
    seed: u64,
    ledger: &mut SampleLedger,
) -> Result<SparseSpectrum> {
    Ok(r_ffast_report(x, k, snr_hint, seed, ledger)?.spectrum)
}

pub fn r_ffast_report(
    x: &Signal,
    k: usize,
    snr_hint: Option<f64>,
    seed: u64,
    ledger: &mut SampleLedger,
) -> Result<PeelOutcome> {
    let n = x.len();
    let (mut plan, search) = plan_cycles(n, k, Mode::Noisy, seed)?;
    let mut search = search.expect("noisy plan carries a search plan");
    if let Some(db) = snr_hint {
        if !db.is_finite() {
            return invalid("SNR hint must be finite");
        }
        let smallest = plan.factors[0] as f64;
        let rho = smallest * 10f64.powf(db / 10.0) / k.max(1) as f64;
        search = search.with_rounds(rounds_for_snr(rho, search.rounds));
        plan.shifts = search.shifts();
    }
    let mut graph = PeelingGraph::build(x, &plan, ledger)?;
    let power = graph.mean_sample_power();
    let floor = Thresholds::exact(power.sqrt()).zero;
    let time_var = match snr_hint {
        Some(db) => power / (1.0 + 10f64.powf(db / 10.0)),
        None => median_time_variance(&graph),
    };
    let r = plan.r();
    let thresholds = plan.factors.iter().map(|&b| Thresholds::noisy(time_var / b as f64, r, floor)).collect();
    let classifier = Classifier::Noisy { plan: search, thresholds };
    let mut out = peel_decode(&mut graph, &classifier, default_max_rounds(k))?;
    out.spectrum.truncate_to(k);
    Ok(out)
}

/// Median over all nodes of the per-measurement energy, rescaled to a
/// time-domain variance (a bucket averages B samples).
fn median_time_variance(graph: &PeelingGraph) -> f64 {
    let r = graph.taus.len() as f64;
    let mut e: Vec<f64> =
        graph.nodes().map(|nd| nd.vec.iter().map(|z| z.norm_sqr()).sum::<f64>() / r * nd.modulus as f64).collect();
    e.sort_by(f64::total_cmp);
    e.get(e.len() / 2).copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{evaluate, generate_test_case, generate_test_case_at, Snr};

    fn fig3() -> crate::signals::TestCase {
        generate_test_case_at(20, &[1, 3, 5, 10, 13], Snr::Exact, 0).unwrap()
    }

    #[test]
    fn fixture_classification_counts() {
        let case = fig3();
        let (plan, _) = plan_cycles(20, 5, Mode::Exact, 0).unwrap();
        let mut ledger = SampleLedger::new();
        let mut g = PeelingGraph::build(&case.signal, &plan, &mut ledger).unwrap();
        assert_eq!(ledger.count(), 27);
        assert_eq!(g.node_count(), 9);
        g.classify_all(&Classifier::Exact(Thresholds::exact(g.mean_sample_power().sqrt()))).unwrap();
        let count = |pred: fn(&BucketState) -> bool| g.nodes().filter(|n| pred(&n.state)).count();
        assert_eq!(count(|s| *s == BucketState::ZeroTon), 3);
        assert_eq!(count(|s| matches!(s, BucketState::SingleTon { .. })), 3);
        assert_eq!(count(|s| *s == BucketState::MultiTon), 3);
        assert_eq!(g.cycles[0][0].state, BucketState::ZeroTon);
        assert!(matches!(g.cycles[0][2].state, BucketState::SingleTon { f: 10, .. }));
        assert!(matches!(g.cycles[0][3].state, BucketState::SingleTon { f: 3, .. }));
        assert_eq!(g.cycles[0][1].state, BucketState::MultiTon);
    }

    #[test]
    fn fixture_peels_in_three_rounds() {
        let case = fig3();
        let out = ffast_report(&case.signal, 5, &mut SampleLedger::new()).unwrap();
        assert_eq!(out.rounds, 3);
        assert_eq!(out.unresolved_multitons, 0);
        assert!(evaluate(&case.truth, &out.spectrum, 0.1).unwrap().l2 < 1e-9);
    }

    #[test]
    fn zero_signal_single_round() {
        let x = Signal::zeros(504).unwrap();
        let out = ffast_report(&x, 0, &mut SampleLedger::new()).unwrap();
        assert!(out.spectrum.is_empty());
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn pair_sharing_one_cycle_resolves_elsewhere() {
        // 7 and 11 collide mod 4 only.
        let case = generate_test_case_at(60, &[7, 11], Snr::Exact, 2).unwrap();
        let (plan, _) = plan_cycles(60, 2, Mode::Exact, 0).unwrap();
        assert_eq!(plan.factors, vec![3, 4, 5]);
        let mut g = PeelingGraph::build(&case.signal, &plan, &mut SampleLedger::new()).unwrap();
        let th = Thresholds::exact(g.mean_sample_power().sqrt());
        let out = peel_decode(&mut g, &Classifier::Exact(th), 6).unwrap();
        assert!(out.rounds <= 2);
        assert!(evaluate(&case.truth, &out.spectrum, 0.1).unwrap().l2 < 1e-9);
    }

    #[test]
    fn conservation_holds_after_peeling() {
        let case = generate_test_case(504, 6, Snr::Exact, 21).unwrap();
        let (plan, _) = plan_cycles(504, 6, Mode::Exact, 0).unwrap();
        let mut g = PeelingGraph::build(&case.signal, &plan, &mut SampleLedger::new()).unwrap();
        let th = Thresholds::exact(g.mean_sample_power().sqrt());
        peel_decode(&mut g, &Classifier::Exact(th), 10).unwrap();
        for node in g.nodes() {
            let mut expect = node.vec.clone();
            for (f, v) in g.recovered.iter().filter(|(f, _)| f % node.modulus == node.index) {
                for (y, &t) in expect.iter_mut().zip(&g.taus) {
                    *y -= v * crate::fft::omega_pow(504, t as i128 * f as i128);
                }
            }
            assert!(expect.iter().zip(&node.residual).all(|(a, b)| (a - b).norm() < 1e-8));
        }
    }

    #[test]
    fn r_ffast_high_snr() {
        let case = generate_test_case(4080, 8, Snr::Db(20.0), 5).unwrap();
        let mut ledger = SampleLedger::new();
        let got = r_ffast(&case.signal, 8, Some(20.0), 1, &mut ledger).unwrap();
        assert_eq!(got.support(), case.truth.support());
        let got = r_ffast(&case.signal, 8, None, 1, &mut SampleLedger::new()).unwrap();
        assert_eq!(got.support(), case.truth.support());
    }
}
