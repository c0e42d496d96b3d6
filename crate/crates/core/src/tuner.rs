//! Hyperparameter selection: the two-step pipeline (pami order selection,
//! then maximum-likelihood smoothing) and the exhaustive grid-search
//! baseline it is measured against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha_ml::{fit_alpha, AlphaFit, CountMatrix};
use crate::alphabet::SymbolSequence;
use crate::dependence::{profile, select_k, DependenceProfile, Measure};
use crate::error::{Error, Result};
use crate::fcm::{bitrate, bitrate_sweep, build_counts, BitrateResult, HyperParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TwoStep,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    pub params: HyperParams,
    pub bitrate: BitrateResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DependenceProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_fit: Option<AlphaFit>,
    /// Number of bitrate evaluations (compressor runs) performed.
    pub evaluations: usize,
}

/// `steps` equally spaced smoothing values from 0 to 1 inclusive.
pub fn alpha_grid(steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect(),
    }
}

/// Orders `1..=max_k`.
pub fn k_grid(max_k: usize) -> Vec<usize> {
    (1..=max_k).collect()
}

pub const DEFAULT_MAX_K: usize = 10;
pub const DEFAULT_ALPHA_STEPS: usize = 101;

/// Two-step selection: `k*` is the lag of maximum pami over `1..=max_lag`,
/// `alpha*` maximizes the Dirichlet-multinomial likelihood of the order-`k*`
/// counts. The sequence is coded once, with `(k*, alpha*)`.
pub fn two_step_select(seq: &SymbolSequence, max_lag: usize) -> Result<SelectionResult> {
    let pami = profile(seq, Measure::Pami, max_lag)?;
    let k = select_k(&pami)?;
    let fit = fit_alpha(&CountMatrix::from_counts(&build_counts(seq, k)?))?;
    let params = HyperParams::new(k, fit.alpha_star)?;
    let bitrate = bitrate(seq, &params)?;
    Ok(SelectionResult {
        method: Method::TwoStep,
        params,
        bitrate,
        profile: Some(pami),
        alpha_fit: Some(fit),
        evaluations: 1,
    })
}

/// Scores every `(k, alpha)` pair and returns the one with the lowest
/// bitrate, preferring smaller `k` and then smaller `alpha` on ties.
/// Duplicate grid values are ignored and order does not matter.
pub fn grid_search(seq: &SymbolSequence, k_grid: &[usize], alpha_grid: &[f64]) -> Result<SelectionResult> {
    let mut ks = k_grid.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut alphas = alpha_grid.to_vec();
    if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidParameter("alpha grid values must be finite and >= 0".into()));
    }
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    if ks.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidParameter("grid search needs non-empty grids".into()));
    }

    let per_k: Vec<Vec<BitrateResult>> = ks
        .par_iter()
        .map(|&k| bitrate_sweep(seq, k, &alphas))
        .collect::<Result<_>>()?;

    let mut best: Option<(HyperParams, BitrateResult)> = None;
    for (&k, row) in ks.iter().zip(&per_k) {
        for (&alpha, result) in alphas.iter().zip(row) {
            if best.is_none_or(|(_, b)| result.total_bits < b.total_bits) {
                best = Some((HyperParams { k, alpha }, *result));
            }
        }
    }
    let (params, bitrate) = best.expect("grids are non-empty");
    Ok(SelectionResult {
        method: Method::GridSearch,
        params,
        bitrate,
        profile: None,
        alpha_fit: None,
        evaluations: ks.len() * alphas.len(),
    })
}

/// Both selection routes on one sequence, plus the bitrate of the
/// generating parameters when they are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub truth: Option<HyperParams>,
    pub bps_true: Option<f64>,
    pub two_step: SelectionResult,
    pub grid: SelectionResult,
}

impl Comparison {
    pub fn k_match(&self) -> Option<bool> {
        self.truth.map(|t| t.k == self.two_step.params.k)
    }

    pub const CSV_HEADER: &'static str = "true_k,true_alpha,bps,k_star,alpha_star,bps_star,k_match,\
gs_k,gs_alpha,bps_gs,two_step_evaluations,grid_evaluations,gs_floored_events";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            opt(self.truth.map(|t| t.k.to_string())),
            opt(self.truth.map(|t| t.alpha.to_string())),
            opt(self.bps_true.map(|b| b.to_string())),
            self.two_step.params.k,
            self.two_step.params.alpha,
            self.two_step.bitrate.bits_per_symbol,
            opt(self.k_match().map(|m| m.to_string())),
            self.grid.params.k,
            self.grid.params.alpha,
            self.grid.bitrate.bits_per_symbol,
            self.two_step.evaluations,
            self.grid.evaluations,
            self.grid.bitrate.floored_events,
        )
    }
}

pub fn compare(
    seq: &SymbolSequence,
    truth: Option<HyperParams>,
    max_lag: usize,
    k_grid: &[usize],
    alpha_grid: &[f64],
) -> Result<Comparison> {
    let bps_true = truth
        .map(|t| bitrate(seq, &t).map(|b| b.bits_per_symbol))
        .transpose()?;
    Ok(Comparison {
        truth,
        bps_true,
        two_step: two_step_select(seq, max_lag)?,
        grid: grid_search(seq, k_grid, alpha_grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcm::generate;

    #[test]
    fn default_grid_has_1010_points() {
        let seq = generate(&HyperParams::new(2, 0.5).unwrap(), 2000, 1).unwrap();
        let res = grid_search(&seq, &k_grid(DEFAULT_MAX_K), &alpha_grid(DEFAULT_ALPHA_STEPS)).unwrap();
        assert_eq!(res.evaluations, 1010);
        assert_eq!(res.method, Method::GridSearch);
    }

    #[test]
    fn alpha_grid_values() {
        let g = alpha_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert_eq!(g[7], 0.07);
        assert_eq!(alpha_grid(11)[3], 0.3);
    }

    #[test]
    fn singleton_grid() {
        let seq = generate(&HyperParams::new(2, 0.5).unwrap(), 3000, 2).unwrap();
        let res = grid_search(&seq, &[2], &[0.5]).unwrap();
        assert_eq!(res.params, HyperParams { k: 2, alpha: 0.5 });
        assert_eq!(res.evaluations, 1);
        let direct = bitrate(&seq, &res.params).unwrap();
        assert!((direct.bits_per_symbol - res.bitrate.bits_per_symbol).abs() < 1e-12);
    }

    #[test]
    fn grid_minimum_beats_every_point() {
        let seq = generate(&HyperParams::new(3, 0.2).unwrap(), 5000, 3).unwrap();
        let (ks, alphas) = ([1, 2, 3, 4], alpha_grid(11));
        let res = grid_search(&seq, &ks, &alphas).unwrap();
        for k in ks {
            for &a in &alphas {
                let b = bitrate(&seq, &HyperParams::new(k, a).unwrap()).unwrap();
                assert!(res.bitrate.bits_per_symbol <= b.bits_per_symbol + 1e-12);
            }
        }
    }

    #[test]
    fn grid_ordering_is_irrelevant() {
        let seq = generate(&HyperParams::new(2, 0.3).unwrap(), 4000, 4).unwrap();
        let a = grid_search(&seq, &[1, 2, 3], &[0.0, 0.2, 0.4, 0.6]).unwrap();
        let b = grid_search(&seq, &[3, 1, 2, 2], &[0.6, 0.2, 0.0, 0.4, 0.2]).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.bitrate, b.bitrate);
    }

    #[test]
    fn grid_rejects_empty_or_negative() {
        let seq = generate(&HyperParams::new(1, 0.3).unwrap(), 100, 4).unwrap();
        assert!(grid_search(&seq, &[], &[0.5]).is_err());
        assert!(grid_search(&seq, &[1], &[]).is_err());
        assert!(grid_search(&seq, &[1], &[-0.1]).is_err());
    }

    #[test]
    fn two_step_codes_once_and_is_deterministic() {
        let seq = generate(&HyperParams::new(2, 0.2).unwrap(), 20_000, 5).unwrap();
        let a = two_step_select(&seq, 10).unwrap();
        let b = two_step_select(&seq, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evaluations, 1);
        assert_eq!(a.params.k, 2);
        assert!(a.profile.is_some() && a.alpha_fit.is_some());
    }

    #[test]
    fn memoryless_source_codes_near_two_bits() {
        let seq = generate(&HyperParams::new(0, 1e9).unwrap(), 50_000, 6).unwrap();
        let res = two_step_select(&seq, 10).unwrap();
        assert!((res.bitrate.bits_per_symbol - 2.0).abs() < 0.05, "{res:?}");
    }

    #[test]
    fn comparison_csv_has_header_arity() {
        let truth = HyperParams::new(2, 0.4).unwrap();
        let seq = generate(&truth, 5000, 7).unwrap();
        let cmp = compare(&seq, Some(truth), 6, &k_grid(4), &alpha_grid(11)).unwrap();
        let header_cols = Comparison::CSV_HEADER.split(',').count();
        assert_eq!(cmp.csv_row().split(',').count(), header_cols);
        assert_eq!(cmp.grid.evaluations, 44);
        assert_eq!(cmp.two_step.evaluations, 1);
    }
}
