//! Simulation experiments: dependence profiles over a `(k, alpha)` lattice
//! (exp1) and the full selection pipeline on sampled pairs (exp2), with the
//! summary statistics used to judge them.
//!
//! Every replica seeds its own generator from `(base seed, stream, replica,
//! T)`, and results are collected in work-item order, so output files do
//! not depend on thread count or scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha_ml::{fit_alpha, CountMatrix};
use crate::dependence::{profile, Measure, DEFAULT_MAX_LAG};
use crate::error::{Error, Result};
use crate::fcm::{bitrate, build_counts, generate, HyperParams, SeqRng};
use crate::tuner::{alpha_grid, grid_search, k_grid, two_step_select, DEFAULT_ALPHA_STEPS, DEFAULT_MAX_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Exp1Profiles,
    Exp2Pipeline,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" | "exp1_profiles" => Ok(Experiment::Exp1Profiles),
            "exp2" | "exp2_pipeline" => Ok(Experiment::Exp2Pipeline),
            other => Err(Error::InvalidParameter(format!("unknown experiment {other:?} (expected exp1 or exp2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::InvalidParameter(format!("unknown preset {other:?} (expected desk or paper)"))),
        }
    }
}

pub const DEFAULT_BASE_SEED: u64 = 42;

/// Smoothing values of the simulation lattice: `i / 200` for `i = 1..=200`.
/// Zero is left out because the generator needs `alpha > 0`.
pub fn lattice_alphas() -> Vec<f64> {
    (1..=200).map(|i| i as f64 / 200.0).collect()
}

fn default_grid_k_max() -> usize {
    DEFAULT_MAX_K
}

fn default_grid_alpha_steps() -> usize {
    DEFAULT_ALPHA_STEPS
}

/// One experiment run. Serialized as the `--config` JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Generating orders. exp1 crosses them with `alpha_set`; exp2 samples
    /// pairs from the same lattice.
    pub k_set: Vec<usize>,
    pub alpha_set: Vec<f64>,
    pub t_set: Vec<usize>,
    /// Sequences per `(k, alpha)` cell (exp1) or sampled pairs (exp2).
    pub replicas: usize,
    pub base_seed: u64,
    pub h_max: usize,
    /// exp2: draw fresh pairs for every T instead of reusing one draw.
    #[serde(default)]
    pub redraw_pairs_per_t: bool,
    #[serde(default = "default_grid_k_max")]
    pub grid_k_max: usize,
    #[serde(default = "default_grid_alpha_steps")]
    pub grid_alpha_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment, preset: Preset) -> Self {
        let (t_set, replicas) = match (experiment, preset) {
            (Experiment::Exp1Profiles, Preset::Desk) => (vec![20_000], 10),
            (Experiment::Exp1Profiles, Preset::Paper) => (vec![100_000], 100),
            (Experiment::Exp2Pipeline, Preset::Desk) => (vec![1_000, 10_000, 100_000], 200),
            (Experiment::Exp2Pipeline, Preset::Paper) => (vec![1_000, 10_000, 100_000], 1000),
        };
        Self {
            experiment,
            k_set: (1..=10).collect(),
            alpha_set: lattice_alphas(),
            t_set,
            replicas,
            base_seed: DEFAULT_BASE_SEED,
            h_max: DEFAULT_MAX_LAG,
            redraw_pairs_per_t: false,
            grid_k_max: DEFAULT_MAX_K,
            grid_alpha_steps: DEFAULT_ALPHA_STEPS,
            output_dir: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.k_set.is_empty() || self.alpha_set.is_empty() || self.t_set.is_empty() {
            return bad("k_set, alpha_set and t_set must be non-empty".into());
        }
        if let Some(a) = self.alpha_set.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return bad(format!("alpha_set values must be finite and > 0, got {a}"));
        }
        if self.h_max == 0 {
            return bad("h_max must be at least 1".into());
        }
        if let Some(t) = self.t_set.iter().find(|&&t| t <= self.h_max) {
            return bad(format!("every T must exceed h_max = {}, got {t}", self.h_max));
        }
        if let Some(k) = self.k_set.iter().find(|&&k| k > 30) {
            return bad(format!("k = {k} is outside the supported range 0..=30"));
        }
        if self.experiment == Experiment::Exp2Pipeline && (self.grid_k_max == 0 || self.grid_alpha_steps == 0) {
            return bad("the grid needs at least one k and one alpha".into());
        }
        Ok(())
    }

    fn k_axis(&self) -> usize {
        let max_k = self.k_set.iter().copied().max().unwrap_or(1);
        max_k.max(self.h_max)
    }
}

const PAIR_STREAM: u64 = 1;
const EXP1_STREAM: u64 = 2;
const EXP2_STREAM: u64 = 3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one work item, a hash of its coordinates.
pub fn replica_seed(base: u64, stream: u64, replica: u64, len: u64) -> u64 {
    [stream, replica, len].iter().fold(splitmix(base), |acc, &x| splitmix(acc ^ x))
}

/// A work item that errored, with the seed needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub t: usize,
    pub k: usize,
    pub alpha: f64,
    pub replica: usize,
    pub seed: u64,
    pub error: String,
}

// ---------------------------------------------------------------------------
// Statistics

/// Product-moment correlation. Errors on length mismatch, fewer than two
/// points, or a constant vector (`Error::Degenerate`).
pub fn pearson_r(z: &[f64], a: &[f64]) -> Result<f64> {
    if z.len() != a.len() || z.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "pearson_r needs two equal-length vectors of at least 2 values, got {} and {}",
            z.len(),
            a.len()
        )));
    }
    let n = z.len() as f64;
    let mz = z.iter().sum::<f64>() / n;
    let ma = a.iter().sum::<f64>() / n;
    let (mut szz, mut saa, mut sza) = (0.0, 0.0, 0.0);
    for (&x, &y) in z.iter().zip(a) {
        let (dx, dy) = (x - mz, y - ma);
        szz += dx * dx;
        saa += dy * dy;
        sza += dx * dy;
    }
    if szz == 0.0 || saa == 0.0 {
        return Err(Error::Degenerate("pearson_r of a constant vector".into()));
    }
    Ok((sza / (szz.sqrt() * saa.sqrt())).clamp(-1.0, 1.0))
}

/// `mean(z - a)`.
pub fn bias(z: &[f64], a: &[f64]) -> Result<f64> {
    if z.len() != a.len() || z.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "bias needs two equal-length non-empty vectors, got {} and {}",
            z.len(),
            a.len()
        )));
    }
    Ok(z.iter().zip(a).map(|(x, y)| x - y).sum::<f64>() / z.len() as f64)
}

/// Percentage of values strictly above `threshold`.
pub fn pct_above(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    100.0 * values.iter().filter(|&&v| v > threshold).count() as f64 / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (R type 7).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Boxplot summary of the finite values, `None` if there are none.
pub fn five_number(values: &[f64]) -> Option<FiveNumber> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(FiveNumber {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// True order `k` (rows) against selected order `k*` (columns), both on
/// `1..=k_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k_max: usize,
    pub cells: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k_max: usize) -> Self {
        Self {
            k_max,
            cells: vec![vec![0; k_max]; k_max],
        }
    }

    pub fn record(&mut self, k: usize, k_star: usize) -> Result<()> {
        if !(1..=self.k_max).contains(&k) || !(1..=self.k_max).contains(&k_star) {
            return Err(Error::InvalidParameter(format!(
                "({k}, {k_star}) is outside the 1..={} confusion axis",
                self.k_max
            )));
        }
        self.cells[k - 1][k_star - 1] += 1;
        Ok(())
    }

    pub fn get(&self, k: usize, k_star: usize) -> u64 {
        self.cells[k - 1][k_star - 1]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k_max).map(|i| self.cells[i][i]).sum()
    }

    /// `trace / total`, NaN for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// The most frequent `k*` for true order `k`, smallest on ties.
    pub fn modal_prediction(&self, k: usize) -> Option<usize> {
        let row = &self.cells[k - 1];
        let best = *row.iter().max()?;
        (best > 0).then(|| row.iter().position(|&c| c == best).unwrap() + 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k\\k_star");
        for j in 1..=self.k_max {
            write!(out, ",{j}").unwrap();
        }
        out.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            write!(out, "{}", i + 1).unwrap();
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Quality of the smoothing estimates, conditioned on the selected order
/// `k*` and on the true order `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStats {
    /// `None` when either vector is constant.
    pub pearson_r_given_kstar: Option<f64>,
    pub pearson_r_given_k: Option<f64>,
    pub bias_given_kstar: f64,
    pub bias_given_k: f64,
    pub pct_gt1_given_kstar: f64,
    pub pct_gt1_given_k: f64,
    pub pct_gt5_given_kstar: f64,
    pub pct_gt5_given_k: f64,
}

impl AlphaStats {
    pub fn compute(alpha: &[f64], given_kstar: &[f64], given_k: &[f64]) -> Result<Self> {
        let r = |z: &[f64]| match pearson_r(z, alpha) {
            Ok(v) => Ok(Some(v)),
            Err(Error::Degenerate(_)) => Ok(None),
            Err(_) if alpha.len() < 2 => Ok(None),
            Err(e) => Err(e),
        };
        Ok(Self {
            pearson_r_given_kstar: r(given_kstar)?,
            pearson_r_given_k: r(given_k)?,
            bias_given_kstar: bias(given_kstar, alpha)?,
            bias_given_k: bias(given_k, alpha)?,
            pct_gt1_given_kstar: pct_above(given_kstar, 1.0),
            pct_gt1_given_k: pct_above(given_k, 1.0),
            pct_gt5_given_kstar: pct_above(given_kstar, 5.0),
            pct_gt5_given_k: pct_above(given_k, 5.0),
        })
    }

    pub const CSV_HEADER: &'static str = "t,r_given_kstar,r_given_k,bias_given_kstar,bias_given_k,\
pct_gt1_given_kstar,pct_gt1_given_k,pct_gt5_given_kstar,pct_gt5_given_k";

    fn csv_row(&self, t: usize) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{t},{},{},{},{},{},{},{},{}",
            opt(self.pearson_r_given_kstar),
            opt(self.pearson_r_given_k),
            self.bias_given_kstar,
            self.bias_given_k,
            self.pct_gt1_given_kstar,
            self.pct_gt1_given_k,
            self.pct_gt5_given_kstar,
            self.pct_gt5_given_k
        )
    }
}

// ---------------------------------------------------------------------------
// exp1: dependence profiles

/// Profiles of one generated sequence, lags `1..=h_max`. Degenerate values
/// are NaN (null in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub replica: usize,
    pub seed: u64,
    #[serde(with = "nan_as_null")]
    pub pami: Vec<f64>,
    #[serde(with = "nan_as_null")]
    pub cramers_v: Vec<f64>,
    #[serde(with = "nan_as_null")]
    pub cohens_kappa: Vec<f64>,
}

impl ProfileSample {
    pub fn values(&self, measure: Measure) -> &[f64] {
        match measure {
            Measure::Pami => &self.pami,
            Measure::CramersV => &self.cramers_v,
            Measure::CohensKappa => &self.cohens_kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCell {
    pub t: usize,
    pub k: usize,
    pub alpha: f64,
    pub samples: Vec<ProfileSample>,
}

impl ProfileCell {
    /// Share of replicas whose `measure` profile peaks at lag `k`.
    pub fn peak_rate(&self, measure: Measure) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        let hits = self
            .samples
            .iter()
            .filter(|s| argmax_lag(s.values(measure)) == Some(self.k))
            .count();
        hits as f64 / self.samples.len() as f64
    }

    /// Five-number summary of `measure` at every lag.
    pub fn lag_summaries(&self, measure: Measure) -> Vec<Option<FiveNumber>> {
        let lags = self.samples.first().map_or(0, |s| s.values(measure).len());
        (0..lags)
            .map(|i| {
                let column: Vec<f64> = self.samples.iter().map(|s| s.values(measure)[i]).collect();
                five_number(&column)
            })
            .collect()
    }

    fn file_stem(&self) -> String {
        format!("T{}_k{}_a{:.3}", self.t, self.k, self.alpha)
    }
}

fn argmax_lag(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
            best = Some((i + 1, v));
        }
    }
    best.map(|(lag, _)| lag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileArchive {
    pub config: ExperimentConfig,
    pub cells: Vec<ProfileCell>,
    pub failures: Vec<Failure>,
}

pub fn run_exp1(config: &ExperimentConfig) -> Result<ProfileArchive> {
    config.validate()?;
    let mut coords = Vec::new();
    for &t in &config.t_set {
        for &k in &config.k_set {
            for &alpha in &config.alpha_set {
                coords.push((t, k, alpha));
            }
        }
    }
    let lattice = config.k_set.len() * config.alpha_set.len();
    let items: Vec<(usize, usize)> = (0..coords.len())
        .flat_map(|c| (0..config.replicas).map(move |r| (c, r)))
        .collect();

    let outcomes: Vec<std::result::Result<ProfileSample, Failure>> = items
        .par_iter()
        .map(|&(c, replica)| {
            let (t, k, alpha) = coords[c];
            let seed = replica_seed(
                config.base_seed,
                EXP1_STREAM,
                ((c % lattice) * config.replicas + replica) as u64,
                t as u64,
            );
            exp1_sample(k, alpha, t, replica, seed, config.h_max).map_err(|e| Failure {
                t,
                k,
                alpha,
                replica,
                seed,
                error: e.to_string(),
            })
        })
        .collect();

    let mut cells: Vec<ProfileCell> = coords
        .iter()
        .map(|&(t, k, alpha)| ProfileCell {
            t,
            k,
            alpha,
            samples: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for (&(c, _), outcome) in items.iter().zip(outcomes) {
        match outcome {
            Ok(sample) => cells[c].samples.push(sample),
            Err(f) => failures.push(f),
        }
    }
    Ok(ProfileArchive {
        config: config.clone(),
        cells,
        failures,
    })
}

fn exp1_sample(k: usize, alpha: f64, t: usize, replica: usize, seed: u64, h_max: usize) -> Result<ProfileSample> {
    let seq = generate(&HyperParams::new(k, alpha)?, t, seed)?;
    Ok(ProfileSample {
        replica,
        seed,
        pami: profile(&seq, Measure::Pami, h_max)?.values,
        cramers_v: profile(&seq, Measure::CramersV, h_max)?.values,
        cohens_kappa: profile(&seq, Measure::CohensKappa, h_max)?.values,
    })
}

// ---------------------------------------------------------------------------
// exp2: selection pipeline

/// Outcome of the pipeline on one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub t: usize,
    pub replica: usize,
    pub seed: u64,
    pub k: usize,
    pub alpha: f64,
    pub k_star: usize,
    /// Smoothing fitted at the selected order.
    pub alpha_given_kstar: f64,
    /// Smoothing fitted at the true order.
    pub alpha_given_k: f64,
    pub alpha_given_kstar_hit_bound: bool,
    pub alpha_given_k_hit_bound: bool,
    /// Bitrate of the generating pair.
    pub bps: f64,
    pub bps_star: f64,
    pub bps_gs: f64,
    pub gs_k: usize,
    pub gs_alpha: f64,
    pub two_step_evaluations: usize,
    pub grid_evaluations: usize,
}

impl PipelineRecord {
    pub fn k_match(&self) -> bool {
        self.k == self.k_star
    }

    pub const CSV_HEADER: &'static str = "t,replica,seed,k,alpha,k_star,alpha_given_kstar,alpha_given_k,\
bps,bps_star,bps_gs,gs_k,gs_alpha,k_match,two_step_evaluations,grid_evaluations";

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.replica,
            self.seed,
            self.k,
            self.alpha,
            self.k_star,
            self.alpha_given_kstar,
            self.alpha_given_k,
            self.bps,
            self.bps_star,
            self.bps_gs,
            self.gs_k,
            self.gs_alpha,
            self.k_match(),
            self.two_step_evaluations,
            self.grid_evaluations
        )
    }
}

/// Aggregates for one sequence length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub t: usize,
    pub completed: usize,
    pub failed: usize,
    pub confusion: ConfusionMatrix,
    pub alpha_stats: Option<AlphaStats>,
}

impl LengthSummary {
    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// The sampled `(k, alpha)` pairs, per T when redrawn.
    pub pairs: Vec<Vec<HyperParams>>,
    pub records: Vec<PipelineRecord>,
    pub failures: Vec<Failure>,
    pub summaries: Vec<LengthSummary>,
}

impl ExperimentReport {
    pub fn summary(&self, t: usize) -> Option<&LengthSummary> {
        self.summaries.iter().find(|s| s.t == t)
    }

    pub fn records_at(&self, t: usize) -> impl Iterator<Item = &PipelineRecord> {
        self.records.iter().filter(move |r| r.t == t)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Draws `n` pairs uniformly, with replacement, from `k_set x alpha_set`.
pub fn sample_pairs(k_set: &[usize], alpha_set: &[f64], n: usize, seed: u64) -> Vec<HyperParams> {
    let mut rng = SeqRng::seed_from_u64(seed);
    let cells = k_set.len() * alpha_set.len();
    (0..n)
        .map(|_| {
            let c = rng.random_range(0..cells);
            HyperParams {
                k: k_set[c / alpha_set.len()],
                alpha: alpha_set[c % alpha_set.len()],
            }
        })
        .collect()
}

pub fn run_exp2(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let draws = if config.redraw_pairs_per_t { config.t_set.len() } else { 1 };
    let pairs: Vec<Vec<HyperParams>> = (0..draws)
        .map(|d| {
            let salt = if config.redraw_pairs_per_t { config.t_set[d] as u64 } else { 0 };
            let seed = replica_seed(config.base_seed, PAIR_STREAM, 0, salt);
            sample_pairs(&config.k_set, &config.alpha_set, config.replicas, seed)
        })
        .collect();
    let ks = k_grid(config.grid_k_max);
    let alphas = alpha_grid(config.grid_alpha_steps);

    let items: Vec<(usize, usize)> = (0..config.t_set.len())
        .flat_map(|ti| (0..config.replicas).map(move |r| (ti, r)))
        .collect();
    let outcomes: Vec<std::result::Result<PipelineRecord, Failure>> = items
        .par_iter()
        .map(|&(ti, replica)| {
            let t = config.t_set[ti];
            let truth = pairs[if config.redraw_pairs_per_t { ti } else { 0 }][replica];
            let seed = replica_seed(config.base_seed, EXP2_STREAM, replica as u64, t as u64);
            pipeline(truth, t, replica, seed, config.h_max, &ks, &alphas).map_err(|e| Failure {
                t,
                k: truth.k,
                alpha: truth.alpha,
                replica,
                seed,
                error: e.to_string(),
            })
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let summaries = config
        .t_set
        .iter()
        .map(|&t| summarize(config.k_axis(), t, &records, &failures))
        .collect::<Result<_>>()?;
    Ok(ExperimentReport {
        config: config.clone(),
        pairs,
        records,
        failures,
        summaries,
    })
}

fn pipeline(
    truth: HyperParams,
    t: usize,
    replica: usize,
    seed: u64,
    h_max: usize,
    ks: &[usize],
    alphas: &[f64],
) -> Result<PipelineRecord> {
    let seq = generate(&truth, t, seed)?;
    let two = two_step_select(&seq, h_max)?;
    let given_k = fit_alpha(&CountMatrix::from_counts(&build_counts(&seq, truth.k)?))?;
    let gs = grid_search(&seq, ks, alphas)?;
    let fit = two.alpha_fit.as_ref().expect("two-step always fits alpha");
    Ok(PipelineRecord {
        t,
        replica,
        seed,
        k: truth.k,
        alpha: truth.alpha,
        k_star: two.params.k,
        alpha_given_kstar: two.params.alpha,
        alpha_given_k: given_k.alpha_star,
        alpha_given_kstar_hit_bound: fit.hit_bound,
        alpha_given_k_hit_bound: given_k.hit_bound,
        bps: bitrate(&seq, &truth)?.bits_per_symbol,
        bps_star: two.bitrate.bits_per_symbol,
        bps_gs: gs.bitrate.bits_per_symbol,
        gs_k: gs.params.k,
        gs_alpha: gs.params.alpha,
        two_step_evaluations: two.evaluations,
        grid_evaluations: gs.evaluations,
    })
}

fn summarize(k_axis: usize, t: usize, records: &[PipelineRecord], failures: &[Failure]) -> Result<LengthSummary> {
    let mut confusion = ConfusionMatrix::new(k_axis);
    let (mut alpha, mut given_kstar, mut given_k) = (Vec::new(), Vec::new(), Vec::new());
    for r in records.iter().filter(|r| r.t == t) {
        confusion.record(r.k, r.k_star)?;
        alpha.push(r.alpha);
        given_kstar.push(r.alpha_given_kstar);
        given_k.push(r.alpha_given_k);
    }
    let alpha_stats = if alpha.is_empty() {
        None
    } else {
        Some(AlphaStats::compute(&alpha, &given_kstar, &given_k)?)
    };
    Ok(LengthSummary {
        t,
        completed: alpha.len(),
        failed: failures.iter().filter(|f| f.t == t).count(),
        confusion,
        alpha_stats,
    })
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Exp1(ProfileArchive),
    Exp2(ExperimentReport),
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    Ok(match config.experiment {
        Experiment::Exp1Profiles => Report::Exp1(run_exp1(config)?),
        Experiment::Exp2Pipeline => Report::Exp2(run_exp2(config)?),
    })
}

impl Report {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes every output file of `report` under `dir`, returning their paths.
///
/// exp1: `profiles/<cell>.csv`, `profile_summary.csv`, `report.json`,
/// `summary.txt`. exp2: `confusion_T<T>.csv`, `alpha_stats.csv`,
/// `dispersion.csv`, `failures.csv`, `report.json`, `summary.txt`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut files = match report {
        Report::Exp1(archive) => emit_exp1(archive, dir)?,
        Report::Exp2(exp) => emit_exp2(exp, dir)?,
    };
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    let path = dir.join("report.json");
    write_file(&path, &json)?;
    files.push(path);
    Ok(files)
}

fn emit_exp1(archive: &ProfileArchive, dir: &Path) -> Result<Vec<PathBuf>> {
    let profiles = dir.join("profiles");
    create_dir(&profiles)?;
    let mut files = Vec::new();
    let mut summary_csv = String::from("t,k,alpha,measure,lag,min,q1,median,q3,max\n");
    for cell in &archive.cells {
        let mut csv = String::from("replica,seed,lag,pami,cramers_v,cohens_kappa\n");
        for s in &cell.samples {
            for lag in 0..s.pami.len() {
                writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    s.replica,
                    s.seed,
                    lag + 1,
                    s.pami[lag],
                    s.cramers_v[lag],
                    s.cohens_kappa[lag]
                )
                .unwrap();
            }
        }
        let path = profiles.join(format!("{}.csv", cell.file_stem()));
        write_file(&path, &csv)?;
        files.push(path);
        for measure in Measure::ALL {
            for (i, five) in cell.lag_summaries(measure).iter().enumerate() {
                write!(summary_csv, "{},{},{},{},{}", cell.t, cell.k, cell.alpha, measure, i + 1).unwrap();
                match five {
                    Some(f) => writeln!(summary_csv, ",{},{},{},{},{}", f.min, f.q1, f.median, f.q3, f.max),
                    None => writeln!(summary_csv, ",,,,,"),
                }
                .unwrap();
            }
        }
    }
    let path = dir.join("profile_summary.csv");
    write_file(&path, &summary_csv)?;
    files.push(path);

    let path = dir.join("summary.txt");
    write_file(&path, &exp1_text(archive))?;
    files.push(path);
    Ok(files)
}

fn exp1_text(archive: &ProfileArchive) -> String {
    let c = &archive.config;
    let mut out = String::new();
    writeln!(
        out,
        "exp1: {} cells x {} replicas, T = {:?}, h_max = {}, base seed {}",
        archive.cells.len() / c.t_set.len(),
        c.replicas,
        c.t_set,
        c.h_max,
        c.base_seed
    )
    .unwrap();
    writeln!(out, "failures: {}", archive.failures.len()).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "share of replicas whose profile peaks at lag k (mean over alpha)").unwrap();
    for &t in &c.t_set {
        writeln!(out, "T = {t}").unwrap();
        writeln!(out, "{:>4} {:>10} {:>10} {:>13}", "k", "pami", "cramers_v", "cohens_kappa").unwrap();
        for &k in &c.k_set {
            let cells: Vec<&ProfileCell> = archive.cells.iter().filter(|x| x.t == t && x.k == k).collect();
            let mean = |m: Measure| {
                let rates: Vec<f64> = cells.iter().map(|x| x.peak_rate(m)).filter(|v| v.is_finite()).collect();
                rates.iter().sum::<f64>() / rates.len() as f64
            };
            writeln!(
                out,
                "{k:>4} {:>10.3} {:>10.3} {:>13.3}",
                mean(Measure::Pami),
                mean(Measure::CramersV),
                mean(Measure::CohensKappa)
            )
            .unwrap();
        }
    }
    out
}

fn emit_exp2(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut stats_csv = format!("{}\n", AlphaStats::CSV_HEADER);
    for s in &report.summaries {
        let path = dir.join(format!("confusion_T{}.csv", s.t));
        write_file(&path, &s.confusion.to_csv())?;
        files.push(path);
        match &s.alpha_stats {
            Some(a) => writeln!(stats_csv, "{}", a.csv_row(s.t)).unwrap(),
            None => writeln!(stats_csv, "{},,,,,,,,", s.t).unwrap(),
        }
    }
    let path = dir.join("alpha_stats.csv");
    write_file(&path, &stats_csv)?;
    files.push(path);

    let mut dispersion = format!("{}\n", PipelineRecord::CSV_HEADER);
    for r in &report.records {
        writeln!(dispersion, "{}", r.csv_row()).unwrap();
    }
    let path = dir.join("dispersion.csv");
    write_file(&path, &dispersion)?;
    files.push(path);

    let mut fails = String::from("t,replica,seed,k,alpha,error\n");
    for f in &report.failures {
        writeln!(fails, "{},{},{},{},{},\"{}\"", f.t, f.replica, f.seed, f.k, f.alpha, f.error.replace('"', "'")).unwrap();
    }
    let path = dir.join("failures.csv");
    write_file(&path, &fails)?;
    files.push(path);

    let path = dir.join("summary.txt");
    write_file(&path, &exp2_text(report))?;
    files.push(path);
    Ok(files)
}

fn fmt_stat(v: f64) -> String {
    if v.is_finite() && v.abs() >= 1e4 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

/// Plain-text summary: accuracy, the eight smoothing statistics and the
/// confusion matrix for every T.
pub fn exp2_text(report: &ExperimentReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    writeln!(
        out,
        "exp2: {} replicas per T, T = {:?}, h_max = {}, base seed {}",
        c.replicas, c.t_set, c.h_max, c.base_seed
    )
    .unwrap();
    let unique: std::collections::BTreeSet<(usize, u64)> = report
        .pairs
        .iter()
        .flatten()
        .map(|p| (p.k, p.alpha.to_bits()))
        .collect();
    writeln!(out, "unique (k, alpha) pairs: {}", unique.len()).unwrap();
    for s in &report.summaries {
        writeln!(out).unwrap();
        writeln!(out, "T = {} ({} completed, {} failed)", s.t, s.completed, s.failed).unwrap();
        writeln!(out, "  {:<26}{}", "k* accuracy", fmt_stat(s.accuracy())).unwrap();
        if let Some(a) = &s.alpha_stats {
            let r = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), fmt_stat);
            let rows = [
                ("r(alpha*|k*, alpha)", r(a.pearson_r_given_kstar)),
                ("r(alpha*|k, alpha)", r(a.pearson_r_given_k)),
                ("Bias alpha*|k*", fmt_stat(a.bias_given_kstar)),
                ("Bias alpha*|k", fmt_stat(a.bias_given_k)),
                ("% (alpha*|k*) > 1", fmt_stat(a.pct_gt1_given_kstar)),
                ("% (alpha*|k) > 1", fmt_stat(a.pct_gt1_given_k)),
                ("% (alpha*|k*) > 5", fmt_stat(a.pct_gt5_given_kstar)),
                ("% (alpha*|k) > 5", fmt_stat(a.pct_gt5_given_k)),
            ];
            for (name, value) in rows {
                writeln!(out, "  {name:<26}{value}").unwrap();
            }
        }
        writeln!(out, "  confusion (rows k, columns k*):").unwrap();
        write!(out, "  {:>4}", "").unwrap();
        for j in 1..=s.confusion.k_max {
            write!(out, "{j:>5}").unwrap();
        }
        writeln!(out).unwrap();
        for (i, row) in s.confusion.cells.iter().enumerate() {
            write!(out, "  {:>4}", i + 1).unwrap();
            for cnt in row {
                write!(out, "{cnt:>5}").unwrap();
            }
            writeln!(out).unwrap();
        }
    }
    out
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(|v| v.is_finite().then_some(*v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
    }
}
