use std::f64::consts::PI;

use aliasfft::dsfft::{expand_layer, initial_layer};
use aliasfft::peeling::kay_weights;
use aliasfft::smallnum::{least_squares, pencil_eigenvalues, poly_eval, poly_roots, svd, SmallMatrix};
use aliasfft::{
    bucketize, dense_dft, fast_dft, generate_test_case, inverse_dft, inverse_sparse_dft, shift, SampleLedger, Signal,
    Snr, C64,
};
use proptest::prelude::*;

fn unit_turns(t: f64) -> C64 {
    C64::from_polar(1.0, -2.0 * PI * t)
}

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn signal(max_len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(), 1..=max_len)
}

fn pow2_signal(max_log: u32) -> impl Strategy<Value = Vec<C64>> {
    (0..=max_log).prop_flat_map(|p| prop::collection::vec(complex(), 1usize << p))
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn matrix(max: usize) -> impl Strategy<Value = SmallMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(complex(), r * c).prop_map(move |v| SmallMatrix::from_fn(r, c, |i, j| v[i * c + j]))
    })
}

/// Largest distance from a point in one set to the nearest point in the other.
fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let one = |xs: &[C64], ys: &[C64]| {
        xs.iter().map(|x| ys.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_undoes_forward(x in signal(256)) {
        let back = inverse_dft(&dense_dft(&Signal::new(x.clone()).unwrap())).unwrap();
        prop_assert!(max_diff(back.samples(), &x) < 1e-9);
    }

    #[test]
    fn fast_matches_dense(x in signal(200)) {
        let s = Signal::new(x).unwrap();
        prop_assert!(max_diff(&fast_dft(&s), &dense_dft(&s)) < 1e-9);
    }

    #[test]
    fn shifting_multiplies_by_phase(x in signal(128), tau in -300i64..300) {
        let s = Signal::new(x).unwrap();
        let n = s.len();
        let shifted = dense_dft(&shift(&s, tau));
        let expected: Vec<C64> = dense_dft(&s)
            .iter()
            .enumerate()
            .map(|(f, v)| v * unit_turns((tau * f as i64).rem_euclid(n as i64) as f64 / n as f64))
            .collect();
        prop_assert!(max_diff(&shifted, &expected) < 1e-9);
    }

    #[test]
    fn dft_is_linear(x in signal(64), a in complex(), b in complex(), seed in 0u64..100) {
        let n = x.len();
        let y: Vec<C64> = (0..n).map(|i| unit_turns((seed as f64 + i as f64 * 0.37) % 1.0)).collect();
        let mix: Vec<C64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = dense_dft(&Signal::new(mix).unwrap());
        let (fx, fy) = (dense_dft(&Signal::new(x).unwrap()), dense_dft(&Signal::new(y).unwrap()));
        let rhs: Vec<C64> = fx.iter().zip(&fy).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn buckets_fold_the_spectrum(x in pow2_signal(8), log_b in 0u32..=8, tau in -1000i64..1000) {
        let n = x.len();
        let b = 1usize << log_b.min(n.trailing_zeros());
        let s = Signal::new(x).unwrap();
        let mut ledger = SampleLedger::new();
        let got = bucketize(&s, b, tau, &mut ledger).unwrap();
        let dense = dense_dft(&s);
        let oracle: Vec<C64> = (0..b)
            .map(|i| {
                (i..n).step_by(b)
                    .map(|f| dense[f] * unit_turns((tau * f as i64).rem_euclid(n as i64) as f64 / n as f64))
                    .sum()
            })
            .collect();
        prop_assert!(max_diff(&got.values, &oracle) < 1e-9);
        let l = (n / b) as i64;
        let mut expected: Vec<usize> = (0..b as i64).map(|j| (j * l - tau).rem_euclid(n as i64) as usize).collect();
        expected.sort_unstable();
        prop_assert_eq!(ledger.touched_sorted(), expected);
        prop_assert_eq!(ledger.count(), b as u64);
    }

    #[test]
    fn svd_reconstructs_with_sorted_values(a in matrix(6)) {
        let s = svd(&a);
        prop_assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.sigma.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn polynomial_roots_are_roots(coeffs in prop::collection::vec(complex(), 1..=4)) {
        let roots = poly_roots(&coeffs).unwrap();
        prop_assert_eq!(roots.len(), coeffs.len());
        let scale = 1.0 + coeffs.iter().map(|c| c.norm()).sum::<f64>();
        for z in roots {
            prop_assert!(poly_eval(&coeffs, z).norm() <= 1e-7 * scale);
        }
    }

    #[test]
    fn pencil_returns_reciprocal_locations(
        picks in prop::collection::btree_set(0usize..64, 1..=4),
        amps in prop::collection::vec((0.5..1.5f64, 0.0..1.0f64), 4),
    ) {
        let tones: Vec<(C64, C64)> = picks
            .iter()
            .zip(&amps)
            .map(|(&f, &(r, t))| (C64::from_polar(r, 2.0 * PI * t), unit_turns(f as f64 / 64.0)))
            .collect();
        let a = tones.len();
        let m = |k: i64| tones.iter().map(|&(p, z)| p * z.powi(k as i32)).sum::<C64>();
        let y = SmallMatrix::from_fn(a + 1, a + 1, |r, c| m(r as i64 - c as i64));
        let e = pencil_eigenvalues(&y.submatrix(0, a + 1, 0, a), &y.submatrix(0, a + 1, 1, a + 1), a).unwrap();
        let want: Vec<C64> = tones.iter().map(|t| t.1.inv()).collect();
        prop_assert!(!e.truncated);
        prop_assert!(hausdorff(&e.values, &want) < 1e-7);
    }

    #[test]
    fn parent_bucket_is_sum_of_children(x in pow2_signal(8), depth in 0usize..8) {
        let n = x.len();
        let depth = depth.min(n.trailing_zeros().saturating_sub(1) as usize);
        prop_assume!(n >= 2);
        let s = Signal::new(x).unwrap();
        let mut ledger = SampleLedger::new();
        let parent = initial_layer(&s, depth, 0.0, &mut ledger).unwrap();
        let child = expand_layer(&s, &parent, 0.0, &mut ledger).unwrap();
        for (&i, v) in &parent.values {
            let sum = child.values[&i] + child.values[&(i + (1 << depth))];
            prop_assert!((v - sum).norm() < 1e-9);
        }
    }

    #[test]
    fn truncation_keeps_largest(k in 1usize..10, seed in 0u64..1000) {
        let case = generate_test_case(128, 10, Snr::Exact, seed).unwrap();
        let mut t = case.truth.clone();
        t.truncate_to(k);
        prop_assert_eq!(t.len(), k);
        let kept_min = t.iter().map(|(_, v)| v.norm()).fold(f64::INFINITY, f64::min);
        let dropped_max = case.truth.iter().filter(|(f, _)| !t.contains(*f)).map(|(_, v)| v.norm()).fold(0.0, f64::max);
        prop_assert!(kept_min >= dropped_max);
    }
}

#[test]
fn kay_weights_sum_to_one() {
    for m in 2..=64 {
        let s: f64 = kay_weights(m).iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "m={m}: {s}");
    }
}

#[test]
fn noise_matches_requested_snr() {
    for db in [0.0, 10.0, 20.0] {
        let mut ratio = 0.0;
        for seed in 0..20 {
            let case = generate_test_case(2048, 8, Snr::Db(db), seed).unwrap();
            let clean = inverse_sparse_dft(&case.truth).unwrap();
            let p_sig: f64 = clean.samples().iter().map(|z| z.norm_sqr()).sum();
            let p_noise: f64 = case.signal.samples().iter().zip(clean.samples()).map(|(a, b)| (a - b).norm_sqr()).sum();
            ratio += p_sig / p_noise;
        }
        let measured = 10.0 * (ratio / 20.0).log10();
        assert!((measured - db).abs() <= 0.5, "asked {db} dB, got {measured:.2}");
    }
}

#[test]
fn least_squares_on_tall_system() {
    // 12 equally spaced samples of four tones; the amplitudes come back exactly.
    let n = 64.0;
    let a = SmallMatrix::from_fn(12, 4, |r, c| unit_turns((r * [3, 7, 19, 40][c]) as f64 / n));
    let x = [C64::new(1.0, -0.5), C64::new(0.0, 2.0), C64::new(0.0, 0.0), C64::new(-0.3, 0.0)];
    let b = a.mul_vec(&x);
    let sol = least_squares(&a, &b).unwrap();
    assert_eq!(sol.rank, 4);
    assert!(sol.residual < 1e-10);
    assert!(max_diff(&sol.x, &x) < 1e-10);
}
