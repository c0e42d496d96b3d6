mod common;

use common::*;
use fcmtune::alpha_ml::{dm_log_marginal, fit_alpha, total_log_likelihood, CountMatrix};
use fcmtune::alphabet::{Alphabet, SymbolSequence};
use fcmtune::dependence::{cohens_kappa, cramers_v, lagged_joint, pami, profile, select_k, Measure};
use fcmtune::fcm::{bitrate, generate, HyperParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn seq(data: Vec<u8>) -> SymbolSequence {
    SymbolSequence::new(Alphabet::abcd(), data).unwrap()
}

/// Code length by recounting every context occurrence in the prefix.
fn quadratic_bitrate(data: &[u8], r: usize, k: usize, alpha: f64) -> (f64, u64) {
    let mut bits = 0.0;
    let mut floored = 0;
    for t in 0..data.len() {
        if t < k {
            bits += (r as f64).log2();
            continue;
        }
        let ctx = &data[t - k..t];
        let mut n = vec![0u32; r];
        for u in k..t {
            if &data[u - k..u] == ctx {
                n[data[u] as usize] += 1;
            }
        }
        let total: u32 = n.iter().sum();
        if total == 0 && alpha == 0.0 {
            bits += (r as f64).log2();
            continue;
        }
        let p = (n[data[t] as usize] as f64 + alpha) / (total as f64 + r as f64 * alpha);
        if p == 0.0 {
            floored += 1;
            bits += 32.0;
        } else {
            bits -= p.log2();
        }
    }
    (bits, floored)
}

#[test]
fn bitrate_matches_quadratic_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..300 {
        let len = rng.random_range(1..150);
        let data = random_symbols(&mut rng, 4, len);
        let k = rng.random_range(0..5);
        let alpha = if case % 5 == 0 { 0.0 } else { rng.random_range(0.001..3.0) };
        let got = bitrate(&seq(data.clone()), &HyperParams::new(k, alpha).unwrap()).unwrap();
        let (bits, floored) = quadratic_bitrate(&data, 4, k, alpha);
        assert!((got.total_bits - bits).abs() <= 1e-9 * bits.max(1.0), "case {case}");
        assert_eq!(got.floored_events, floored, "case {case}");
    }
}

#[test]
fn pami_matches_brute_force_on_four_symbols() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..400 {
        let len = rng.random_range(2..=50);
        let data = random_symbols(&mut rng, 4, len);
        for h in 1..=4.min(len - 1) {
            let got = pami(&seq(data.clone()), h).unwrap();
            let want = brute_force_cmi(&data, h).max(0.0);
            assert!((got - want).abs() <= 1e-12, "h={h} {data:?}: {got} vs {want}");
        }
    }
}

#[test]
fn pami_argmax_is_base_invariant() {
    for seed in 0..10 {
        let s = generate(&HyperParams::new(seed as usize % 4 + 1, 0.3).unwrap(), 5000, seed).unwrap();
        let p = profile(&s, Measure::Pami, 8).unwrap();
        let mut bits = p.clone();
        bits.values.iter_mut().for_each(|v| *v /= std::f64::consts::LN_2);
        assert_eq!(select_k(&p).unwrap(), select_k(&bits).unwrap());
    }
}

#[test]
fn lagged_joint_margins_are_shifted_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let len = rng.random_range(2..300);
        let data = random_symbols(&mut rng, 4, len);
        let h = rng.random_range(1..len);
        let lj = lagged_joint(&seq(data.clone()), h).unwrap();
        let sum: f64 = lj.joint.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        let n = (len - h) as f64;
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| lj.get(i, j)).sum();
            let col: f64 = (0..4).map(|j| lj.get(j, i)).sum();
            let late = data[h..].iter().filter(|&&x| x as usize == i).count() as f64 / n;
            let early = data[..len - h].iter().filter(|&&x| x as usize == i).count() as f64 / n;
            assert!((row - late).abs() <= 1e-12 && (col - early).abs() <= 1e-12);
        }
    }
}

#[test]
fn association_measures_on_generated_data() {
    for seed in 0..20 {
        let s = generate(&HyperParams::new(seed as usize % 5, 0.5).unwrap(), 2000, seed).unwrap();
        for h in 1..=6 {
            let v = cramers_v(&s, h).unwrap().value;
            let k = cohens_kappa(&s, h).unwrap().value;
            assert!((v - naive_cramers_v(s.data(), 4, h).unwrap()).abs() <= 1e-12);
            assert!((k - naive_cohens_kappa(s.data(), 4, h).unwrap()).abs() <= 1e-12);
        }
    }
}

#[test]
fn log_likelihood_matches_sequential_product() {
    for seed in 0..60 {
        let rows = random_count_rows(seed);
        let m = CountMatrix::from_rows(1, 4, rows.clone()).unwrap();
        for &a in &[1e-4, 0.01, 0.37, 1.0, 5.5, 300.0, 1e5] {
            let want = sequential_log_likelihood(&rows, a);
            let got = total_log_likelihood(&m, a).unwrap();
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "seed {seed} alpha {a}");
        }
        for row in rows.iter().take(5) {
            let a = 0.8;
            let got = dm_log_marginal(row, a).unwrap();
            assert!((got - sequential_log_marginal(row, a)).abs() <= 1e-10 * got.abs().max(1.0));
        }
    }
}

#[test]
fn fit_alpha_is_row_permutation_invariant() {
    for seed in 0..20 {
        let mut rows = random_count_rows(seed);
        let a = fit_alpha(&CountMatrix::from_rows(2, 4, rows.clone()).unwrap()).unwrap();
        rows.reverse();
        let b = fit_alpha(&CountMatrix::from_rows(2, 4, rows).unwrap()).unwrap();
        assert!((a.alpha_star - b.alpha_star).abs() <= 1e-9 * a.alpha_star);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_pami_nonnegative(data in prop::collection::vec(0u8..4, 2..120), h in 1usize..6) {
        prop_assume!(h < data.len());
        prop_assert!(pami(&seq(data), h).unwrap() >= 0.0);
    }

    #[test]
    fn prop_kappa_bounded(data in prop::collection::vec(0u8..4, 3..200), h in 1usize..4) {
        prop_assume!(h < data.len());
        let k = cohens_kappa(&seq(data), h).unwrap();
        if !k.degenerate {
            // Full-sequence marginals let kappa step slightly past -1 on short inputs.
            prop_assert!(k.value <= 1.0 + 1e-12);
            prop_assert!(k.value >= -1.5);
        }
    }

    #[test]
    fn prop_fit_is_a_maximum(seed in 0u64..10_000) {
        let rows = random_count_rows(seed);
        let m = CountMatrix::from_rows(1, 4, rows.clone()).unwrap();
        let fit = fit_alpha(&m).unwrap();
        prop_assume!(!fit.degenerate);
        let at = sequential_log_likelihood(&rows, fit.alpha_star);
        for f in [0.9, 1.1] {
            let a = (fit.alpha_star * f).clamp(1e-6, 1e12);
            prop_assert!(at >= sequential_log_likelihood(&rows, a) - 1e-9 * at.abs());
        }
    }
}
