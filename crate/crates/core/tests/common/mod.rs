//! Independent reference implementations used by the integration tests.
//! Each one recomputes a quantity from its textbook definition with plain
//! loops, sharing no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Conditional mutual information `I(Y_t; Y_{t-h} | Y_{t-h+1..t-1})` in
/// nats from the empirical distribution of the `T - h` windows of length
/// `h + 1`. Every marginal is found by rescanning all windows.
pub fn brute_force_cmi(data: &[u8], h: usize) -> f64 {
    let windows: Vec<&[u8]> = data.windows(h + 1).collect();
    let n = windows.len() as f64;
    let freq = |pred: &dyn Fn(&[u8]) -> bool| windows.iter().filter(|w| pred(w)).count() as f64 / n;

    let mut types = windows.clone();
    types.sort();
    types.dedup();
    let mut total = 0.0;
    for w in types {
        let p_full = freq(&|x| x == w);
        let p_left = freq(&|x| x[..h] == w[..h]);
        let p_right = freq(&|x| x[1..] == w[1..]);
        let p_mid = freq(&|x| x[1..h] == w[1..h]);
        total += p_full * (p_full * p_mid / (p_left * p_right)).ln();
    }
    total
}

/// Lag-h joint counts and full-sequence marginal probabilities.
fn joint_and_marginals(data: &[u8], r: usize, h: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let t = data.len();
    let mut joint = vec![vec![0.0; r]; r];
    for i in h..t {
        joint[data[i] as usize][data[i - h] as usize] += 1.0;
    }
    for row in &mut joint {
        for v in row.iter_mut() {
            *v /= (t - h) as f64;
        }
    }
    let marg: Vec<f64> = (0..r)
        .map(|s| data.iter().filter(|&&x| x as usize == s).count() as f64 / t as f64)
        .collect();
    (joint, marg)
}

/// Cramér's ν: `sqrt(chi2 / (r_eff - 1))` over cells with positive expected mass.
pub fn naive_cramers_v(data: &[u8], r: usize, h: usize) -> Option<f64> {
    let (joint, p) = joint_and_marginals(data, r, h);
    let r_eff = p.iter().filter(|&&x| x > 0.0).count();
    if r_eff < 2 {
        return None;
    }
    let mut s = 0.0;
    for i in 0..r {
        for j in 0..r {
            if p[i] > 0.0 && p[j] > 0.0 {
                s += (joint[i][j] - p[i] * p[j]).powi(2) / (p[i] * p[j]);
            }
        }
    }
    Some((s / (r_eff as f64 - 1.0)).sqrt())
}

/// Cohen's κ: `(Σ_i p_ii - p_i²) / (1 - Σ_i p_i²)`.
pub fn naive_cohens_kappa(data: &[u8], r: usize, h: usize) -> Option<f64> {
    let (joint, p) = joint_and_marginals(data, r, h);
    let chance: f64 = p.iter().map(|x| x * x).sum();
    if chance >= 1.0 {
        return None;
    }
    let observed: f64 = (0..r).map(|i| joint[i][i]).sum();
    Some((observed - chance) / (1.0 - chance))
}

/// Dirichlet-multinomial log marginal of one row as a product of
/// sequential Lidstone predictions.
pub fn sequential_log_marginal(row: &[u32], alpha: f64) -> f64 {
    let r = row.len() as f64;
    let mut num = 0.0;
    for &n in row {
        for i in 0..n {
            num += (i as f64 + alpha).ln();
        }
    }
    let total: u32 = row.iter().sum();
    let mut den = 0.0;
    for i in 0..total {
        den += (i as f64 + r * alpha).ln();
    }
    num - den
}

pub fn sequential_log_likelihood(rows: &[Vec<u32>], alpha: f64) -> f64 {
    rows.iter().map(|row| sequential_log_marginal(row, alpha)).sum()
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Random count matrix over `r = 4` symbols. Odd seeds give rows skewed
/// towards one symbol (interior optimum), even seeds near-uniform rows.
pub fn random_count_rows(seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(3..60);
    let skewed = seed % 2 == 1;
    (0..rows)
        .map(|_| {
            let favourite = rng.random_range(0..4);
            (0..4)
                .map(|s| {
                    let cap = if skewed && s != favourite { 3 } else { 25 };
                    rng.random_range(0..cap)
                })
                .collect()
        })
        .collect()
}

/// Random symbol data with long runs or uniform noise, alternating by seed.
pub fn random_symbols(rng: &mut ChaCha8Rng, r: usize, len: usize) -> Vec<u8> {
    let sticky = rng.random_bool(0.5);
    let mut out = Vec::with_capacity(len);
    let mut cur = rng.random_range(0..r) as u8;
    for _ in 0..len {
        if !sticky || rng.random_bool(0.3) {
            cur = rng.random_range(0..r) as u8;
        }
        out.push(cur);
    }
    out
}
