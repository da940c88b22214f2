//! Temporal dependence measures and embedding-lag selection.
//!
//! Mutual information between a series and its delayed copy is estimated with
//! a plug-in estimator over an equal-width 2-D histogram spanning the series'
//! `[min, max]`. Marginals are the row and column sums of that joint
//! histogram. The estimator is biased upwards by roughly
//! `(bins - 1)^2 / (2 n ln 2)` bits, which [`histogram_bias_bits`] exposes so
//! the lag rule can treat values at that level as "no dependence".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 16;
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.05;
/// Multiple of the histogram bias below which MI counts as vanished.
pub const DEFAULT_NOISE_FLOOR_FACTOR: f64 = 2.0;

/// Sample autocorrelation for lags `0..=max_lag` with the shared biased
/// denominator `Σ (x_t - x̄)^2`, which keeps every `|r(k)| <= 1`.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if max_lag >= n {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            available: n,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    acf.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum();
        acf.push(num / denom);
    }
    Ok(acf)
}

/// Square joint-count table of `(x_t, x_{t+delay})` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram {
    bins: usize,
    counts: Vec<u64>,
}

impl JointHistogram {
    pub fn from_counts(bins: usize, counts: Vec<u64>) -> Result<Self> {
        if bins == 0 || counts.len() != bins * bins {
            return Err(Error::invalid("joint histogram must be bins x bins"));
        }
        Ok(Self { bins, counts })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.bins + y]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Plug-in mutual information in bits, clipped at zero.
    #[allow(clippy::needless_range_loop)]
    pub fn mutual_information(&self) -> f64 {
        let b = self.bins;
        let total = self.total() as f64;
        if total == 0.0 {
            return 0.0;
        }
        let mut row = vec![0u64; b];
        let mut col = vec![0u64; b];
        for x in 0..b {
            for y in 0..b {
                let c = self.count(x, y);
                row[x] += c;
                col[y] += c;
            }
        }
        let mut mi = 0.0;
        for x in 0..b {
            for y in 0..b {
                let c = self.count(x, y);
                if c == 0 {
                    continue;
                }
                // p(x,y) / (p(x) p(y)) = c * total / (row * col)
                let ratio = (c as f64 * total) / (row[x] as f64 * col[y] as f64);
                mi += (c as f64 / total) * ratio.log2();
            }
        }
        mi.max(0.0)
    }
}

/// Equal-width bin assignment over `[min, max]`; the maximum lands in the last bin.
pub fn bin_indices(values: &[f64], bins: usize) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(Error::invalid("bins must be at least 1"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateSeries);
    }
    let width = hi - lo;
    Ok(values
        .iter()
        .map(|&v| {
            let idx = ((v - lo) / width * bins as f64) as usize;
            idx.min(bins - 1)
        })
        .collect())
}

pub fn joint_histogram(binned: &[usize], bins: usize, delay: usize) -> JointHistogram {
    let mut counts = vec![0u64; bins * bins];
    for (a, b) in binned.iter().zip(&binned[delay..]) {
        counts[a * bins + b] += 1;
    }
    JointHistogram { bins, counts }
}

/// Mutual information in bits between the series and its copy shifted by `delay`.
pub fn mutual_information(values: &[f64], delay: usize, bins: usize) -> Result<f64> {
    check_delay(values.len(), delay)?;
    let binned = bin_indices(values, bins)?;
    Ok(joint_histogram(&binned, bins, delay).mutual_information())
}

fn check_delay(n: usize, delay: usize) -> Result<()> {
    if delay == 0 {
        return Err(Error::invalid("delay must be at least 1"));
    }
    if n <= delay + 1 {
        return Err(Error::InsufficientData {
            needed: delay + 2,
            available: n,
        });
    }
    Ok(())
}

/// Approximate upward bias of the plug-in MI estimator for independent
/// variables, in bits.
pub fn histogram_bias_bits(bins: usize, n_pairs: usize) -> f64 {
    let b = bins.saturating_sub(1) as f64;
    b * b / (2.0 * n_pairs as f64 * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum LagRule {
    /// First delay whose MI drops below `threshold_fraction` of MI at delay 1,
    /// or below `noise_floor_bits`.
    Threshold {
        threshold_fraction: f64,
        noise_floor_bits: f64,
    },
    /// First local minimum of the MI profile.
    FirstMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSelection {
    pub lag: usize,
    /// False when no delay satisfied the rule and `lag` fell back to `max_delay`.
    pub converged: bool,
}

/// Smallest delay `d` (1-based) with `mi_bits[d-1] < threshold_fraction * mi_bits[0]`
/// or `mi_bits[d-1] <= noise_floor_bits`. Passing a zero floor gives the bare
/// relative-threshold rule.
pub fn select_embedding_lag(
    mi_bits: &[f64],
    threshold_fraction: f64,
    noise_floor_bits: f64,
) -> Result<LagSelection> {
    check_profile(mi_bits)?;
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "threshold_fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    let cutoff = threshold_fraction * mi_bits[0];
    let hit = mi_bits
        .iter()
        .position(|&v| v < cutoff || v <= noise_floor_bits);
    Ok(match hit {
        Some(i) => LagSelection {
            lag: i + 1,
            converged: true,
        },
        None => LagSelection {
            lag: mi_bits.len(),
            converged: false,
        },
    })
}

/// Delay of the first local minimum (`mi[d-1] <= mi[d]` after a strict decrease).
pub fn first_minimum_lag(mi_bits: &[f64]) -> Result<LagSelection> {
    check_profile(mi_bits)?;
    for i in 1..mi_bits.len().saturating_sub(1) {
        if mi_bits[i] < mi_bits[i - 1] && mi_bits[i] <= mi_bits[i + 1] {
            return Ok(LagSelection {
                lag: i + 1,
                converged: true,
            });
        }
    }
    Ok(LagSelection {
        lag: mi_bits.len(),
        converged: false,
    })
}

fn check_profile(mi_bits: &[f64]) -> Result<()> {
    if mi_bits.is_empty() {
        return Err(Error::invalid("empty MI profile"));
    }
    if mi_bits.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("MI profile is identically zero"));
    }
    if !(mi_bits[0] > 0.0) {
        return Err(Error::invalid("MI at delay 1 must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub max_delay: usize,
    pub bins: usize,
    pub threshold_fraction: f64,
    /// Noise floor as a multiple of [`histogram_bias_bits`]; 0 disables it.
    pub noise_floor_factor: f64,
    pub first_minimum: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            max_delay: 144,
            bins: DEFAULT_BINS,
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
            noise_floor_factor: DEFAULT_NOISE_FLOOR_FACTOR,
            first_minimum: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub max_delay: usize,
    pub bins: usize,
    /// Lags `0..=max_delay`.
    pub acf: Vec<f64>,
    /// Lags `1..=max_delay`.
    pub mi_bits: Vec<f64>,
    pub rule: LagRule,
    pub selected_lag: usize,
    pub converged: bool,
}

pub fn mi_profile(values: &[f64], options: &ProfileOptions) -> Result<DelayProfile> {
    let max_delay = options.max_delay;
    if max_delay == 0 {
        return Err(Error::invalid("max_delay must be at least 1"));
    }
    check_delay(values.len(), max_delay)?;
    let acf = autocorrelation(values, max_delay)?;
    let binned = bin_indices(values, options.bins)?;
    let mi_bits: Vec<f64> = (1..=max_delay)
        .into_par_iter()
        .map(|d| joint_histogram(&binned, options.bins, d).mutual_information())
        .collect();

    let (rule, selection) = if options.first_minimum {
        (LagRule::FirstMinimum, first_minimum_lag(&mi_bits)?)
    } else {
        let floor = options.noise_floor_factor * histogram_bias_bits(options.bins, values.len() - 1);
        let rule = LagRule::Threshold {
            threshold_fraction: options.threshold_fraction,
            noise_floor_bits: floor,
        };
        (rule, select_embedding_lag(&mi_bits, options.threshold_fraction, floor)?)
    };

    Ok(DelayProfile {
        max_delay,
        bins: options.bins,
        acf,
        mi_bits,
        rule,
        selected_lag: selection.lag,
        converged: selection.converged,
    })
}

impl DelayProfile {
    /// `lag,acf,mi_bits` rows; lag 0 has an empty MI field.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lag,acf,mi_bits")?;
        writeln!(out, "0,{},", self.acf[0])?;
        for (i, mi) in self.mi_bits.iter().enumerate() {
            writeln!(out, "{},{},{}", i + 1, self.acf[i + 1], mi)?;
        }
        out.flush()
    }
}
