//! Sliding-window delay embedding.
//!
//! Row `i` of an embedding of length `m` is `source[origin + i .. origin + i + m]`
//! and its target is `source[origin + i + m]`. Consecutive rows overlap in
//! `m - 1` entries, so the dataset only stores the underlying run of samples.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::timeseries::WindSeries;

pub const DEFAULT_EMBEDDING: usize = 72;
/// Two weeks of 10-minute samples.
pub const TWO_WEEKS: usize = 2016;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    m: usize,
    origin_index: usize,
    samples: Vec<f64>,
}

impl EmbeddingDataset {
    /// `n_rows` rows over `source`, with row 0 starting at `origin_index`.
    pub fn from_source(source: &[f64], m: usize, origin_index: usize, n_rows: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("embedding length m must be at least 1"));
        }
        let needed = origin_index + n_rows + m;
        if needed > source.len() {
            return Err(Error::InsufficientData {
                needed,
                available: source.len(),
            });
        }
        Ok(Self {
            m,
            origin_index,
            samples: source[origin_index..needed].to_vec(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    pub fn n_rows(&self) -> usize {
        self.samples.len() - self.m
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i..i + self.m]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.samples[i + self.m]
    }

    pub fn targets(&self) -> &[f64] {
        &self.samples[self.m..]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.n_rows()).map(move |i| (self.row(i), self.target(i)))
    }

    /// The contiguous source samples the rows are drawn from.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Matrix dump: `x1..xm,target` per row.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.m).map(|j| format!("x{j}")).collect();
        writeln!(out, "{},target", header.join(","))?;
        for (row, target) in self.rows() {
            for v in row {
                write!(out, "{v},")?;
            }
            writeln!(out, "{target}")?;
        }
        out.flush()
    }
}

/// Embeds the whole series: `len - m` rows.
pub fn embed(series: &WindSeries, m: usize) -> Result<EmbeddingDataset> {
    let n = series.len();
    if n <= m {
        return Err(Error::InsufficientData {
            needed: m + 1,
            available: n,
        });
    }
    EmbeddingDataset::from_source(series.values(), m, 0, n - m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub train: EmbeddingDataset,
    pub validation: EmbeddingDataset,
    /// First sample after the final validation target.
    pub test_start_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitSummary {
    pub m: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub train_first_sample: usize,
    pub train_last_target: usize,
    pub validation_first_target: usize,
    pub test_start_index: usize,
}

/// Training rows are the first `n_train` embedding rows of the series and
/// validation rows the next `n_validation`; at least one sample must remain
/// for testing.
pub fn plan_split(series: &WindSeries, m: usize, n_train: usize, n_validation: usize) -> Result<SplitPlan> {
    if n_train == 0 {
        return Err(Error::invalid("n_train must be at least 1"));
    }
    let test_start_index = m + n_train + n_validation;
    if series.len() <= test_start_index {
        return Err(Error::InsufficientData {
            needed: test_start_index + 1,
            available: series.len(),
        });
    }
    let values = series.values();
    Ok(SplitPlan {
        train: EmbeddingDataset::from_source(values, m, 0, n_train)?,
        validation: EmbeddingDataset::from_source(values, m, n_train, n_validation)?,
        test_start_index,
    })
}

impl SplitPlan {
    pub fn summary(&self) -> SplitSummary {
        let m = self.train.m();
        let n_train = self.train.n_rows();
        SplitSummary {
            m,
            n_train,
            n_validation: self.validation.n_rows(),
            train_first_sample: 0,
            train_last_target: m + n_train - 1,
            validation_first_target: m + n_train,
            test_start_index: self.test_start_index,
        }
    }
}
