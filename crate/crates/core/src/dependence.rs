//! Serial-dependence measures for categorical sequences and the
//! maximum-pami order selector.
//!
//! All estimators are plug-in relative frequencies. Lagged joints are
//! normalized by the number of lag-h pairs `T - h`, while Cramér's ν and
//! Cohen's κ take the marginals from the whole sequence.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::alphabet::SymbolSequence;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_LAG: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Pami,
    CramersV,
    CohensKappa,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Pami, Measure::CramersV, Measure::CohensKappa];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Pami => "pami",
            Measure::CramersV => "cramers_v",
            Measure::CohensKappa => "cohens_kappa",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pami" => Ok(Measure::Pami),
            "cramers" | "cramers_v" | "cramer" => Ok(Measure::CramersV),
            "kappa" | "cohens_kappa" | "cohen" => Ok(Measure::CohensKappa),
            other => Err(Error::InvalidParameter(format!(
                "unknown measure {other:?} (expected pami, cramers or kappa)"
            ))),
        }
    }
}

/// Per-lag values of one measure, lags `1..=values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceProfile {
    pub measure: Measure,
    pub values: Vec<f64>,
    /// Lags at which the measure was degenerate (constant sequence).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_lags: Vec<usize>,
}

impl DependenceProfile {
    pub fn max_lag(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, lag: usize) -> f64 {
        self.values[lag - 1]
    }
}

/// Empirical lag-h joint distribution, `joint[i * r + j] = p̂(Y_t = i, Y_{t-h} = j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedJoint {
    pub lag: usize,
    pub r: usize,
    pub joint: Vec<f64>,
    pub marginals: Vec<f64>,
}

impl LaggedJoint {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.joint[i * self.r + j]
    }
}

/// A measure value plus a flag for inputs where it is not informative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    pub value: f64,
    pub degenerate: bool,
}

pub fn marginals(seq: &SymbolSequence) -> Result<Vec<f64>> {
    if seq.is_empty() {
        return Err(Error::TooShort("marginals of an empty sequence".into()));
    }
    let mut counts = vec![0u64; seq.cardinality()];
    for &s in seq.data() {
        counts[s as usize] += 1;
    }
    let t = seq.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / t).collect())
}

fn check_lag(seq: &SymbolSequence, h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::InvalidParameter("lag must be at least 1".into()));
    }
    if h >= seq.len() {
        return Err(Error::TooShort(format!(
            "lag {h} needs more than {h} symbols, got {}",
            seq.len()
        )));
    }
    Ok(())
}

pub fn lagged_joint(seq: &SymbolSequence, h: usize) -> Result<LaggedJoint> {
    check_lag(seq, h)?;
    let r = seq.cardinality();
    let data = seq.data();
    let mut counts = vec![0u64; r * r];
    for t in h..data.len() {
        counts[data[t] as usize * r + data[t - h] as usize] += 1;
    }
    let pairs = (data.len() - h) as f64;
    Ok(LaggedJoint {
        lag: h,
        r,
        joint: counts.into_iter().map(|c| c as f64 / pairs).collect(),
        marginals: marginals(seq)?,
    })
}

/// Cramér's ν at lag `h`, with the square root over the whole normalized
/// chi-square sum. Cells with a zero expected product are skipped and `r`
/// counts only symbols that occur.
pub fn cramers_v(seq: &SymbolSequence, h: usize) -> Result<Association> {
    let lj = lagged_joint(seq, h)?;
    let p = &lj.marginals;
    let present = p.iter().filter(|&&x| x > 0.0).count();
    if present < 2 {
        return Ok(Association {
            value: 0.0,
            degenerate: true,
        });
    }
    let mut chi = 0.0;
    for i in 0..lj.r {
        for j in 0..lj.r {
            let e = p[i] * p[j];
            if e > 0.0 {
                let d = lj.get(i, j) - e;
                chi += d * d / e;
            }
        }
    }
    Ok(Association {
        value: (chi / (present - 1) as f64).sqrt(),
        degenerate: false,
    })
}

/// Cohen's κ at lag `h`. Undefined (NaN, flagged) for constant sequences.
pub fn cohens_kappa(seq: &SymbolSequence, h: usize) -> Result<Association> {
    let lj = lagged_joint(seq, h)?;
    let chance: f64 = lj.marginals.iter().map(|p| p * p).sum();
    let denom = 1.0 - chance;
    if denom <= 0.0 {
        return Ok(Association {
            value: f64::NAN,
            degenerate: true,
        });
    }
    let agree: f64 = (0..lj.r).map(|i| lj.get(i, i) - lj.marginals[i] * lj.marginals[i]).sum();
    Ok(Association {
        value: agree / denom,
        degenerate: false,
    })
}

/// Partial auto mutual information at lag `h`: the plug-in conditional
/// mutual information `I(Y_t; Y_{t+h} | Y_{t+1}, ..., Y_{t+h-1})` in nats.
///
/// Counts the `N = T - h` windows of length `h + 1` together with their
/// interior, left (first + interior) and right (interior + last) parts, all
/// taken from those same windows, and sums
/// `c(w)/N * ln(c(w) c(m) / (c(l) c(rgt)))` over observed windows.
pub fn pami(seq: &SymbolSequence, h: usize) -> Result<f64> {
    check_lag(seq, h)?;
    let r = seq.cardinality() as u64;
    let window_len = h + 1;
    let space = r
        .checked_pow(window_len as u32)
        .ok_or_else(|| Error::InvalidParameter(format!("lag {h} is too large for {r} symbols")))?;
    let interior_space = r.pow(h as u32 - 1);
    let right_space = interior_space * r;

    let data = seq.data();
    let n = data.len() - h;
    let mut windows: FxHashMap<u64, u32> = FxHashMap::default();
    let mut code = 0u64;
    for (t, &s) in data.iter().enumerate() {
        code = (code % (space / r)) * r + s as u64;
        if t + 1 >= window_len {
            *windows.entry(code).or_insert(0) += 1;
        }
    }

    let mut left: FxHashMap<u64, u32> = FxHashMap::default();
    let mut right: FxHashMap<u64, u32> = FxHashMap::default();
    let mut interior: FxHashMap<u64, u32> = FxHashMap::default();
    for (&w, &c) in &windows {
        *left.entry(w / r).or_insert(0) += c;
        *right.entry(w % right_space).or_insert(0) += c;
        *interior.entry((w / r) % interior_space).or_insert(0) += c;
    }

    // Accumulate in key order so the result does not depend on hash order.
    let mut keys: Vec<u64> = windows.keys().copied().collect();
    keys.sort_unstable();
    let nf = n as f64;
    let mut acc = 0.0;
    for w in keys {
        let cw = windows[&w] as f64;
        let cl = left[&(w / r)] as f64;
        let cr = right[&(w % right_space)] as f64;
        let cm = if h == 1 {
            nf
        } else {
            interior[&((w / r) % interior_space)] as f64
        };
        acc += cw / nf * ((cw * cm) / (cl * cr)).ln();
    }
    // Plug-in CMI is non-negative; only rounding can push it below zero.
    Ok(acc.max(0.0))
}

pub fn profile(seq: &SymbolSequence, measure: Measure, max_lag: usize) -> Result<DependenceProfile> {
    if max_lag == 0 {
        return Err(Error::InvalidParameter("max lag must be at least 1".into()));
    }
    if max_lag >= seq.len() {
        return Err(Error::TooShort(format!(
            "a profile to lag {max_lag} needs more than {max_lag} symbols, got {}",
            seq.len()
        )));
    }
    let mut values = Vec::with_capacity(max_lag);
    let mut degenerate_lags = Vec::new();
    for h in 1..=max_lag {
        let v = match measure {
            Measure::Pami => pami(seq, h)?,
            Measure::CramersV | Measure::CohensKappa => {
                let a = if measure == Measure::CramersV {
                    cramers_v(seq, h)?
                } else {
                    cohens_kappa(seq, h)?
                };
                if a.degenerate {
                    degenerate_lags.push(h);
                }
                a.value
            }
        };
        values.push(v);
    }
    Ok(DependenceProfile {
        measure,
        values,
        degenerate_lags,
    })
}

/// The smallest lag attaining the maximum finite value.
pub fn select_k(profile: &DependenceProfile) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in profile.values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i + 1, v));
        }
    }
    best.map(|(lag, _)| lag).ok_or_else(|| {
        Error::Degenerate(if profile.values.is_empty() {
            "empty profile".into()
        } else {
            "profile has no finite values".into()
        })
    })
}
