use sha2::{Digest, Sha256};

use crate::embedding::EmbeddingDataset;
use crate::error::{Error, Result};

/// Row-oriented regression data: `n_rows` windows of `n_features` values, each
/// with a scalar target.
pub trait Dataset: Sync {
    fn n_rows(&self) -> usize;
    fn n_features(&self) -> usize;
    fn row(&self, i: usize) -> &[f64];
    fn target(&self, i: usize) -> f64;

    fn feature(&self, i: usize, f: usize) -> f64 {
        self.row(i)[f]
    }

    /// SHA-256 over the shape and the bit patterns of every feature and target.
    fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_rows() as u64).to_le_bytes());
        h.update((self.n_features() as u64).to_le_bytes());
        for i in 0..self.n_rows() {
            for v in self.row(i) {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(self.target(i).to_bits().to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }
}

impl Dataset for EmbeddingDataset {
    fn n_rows(&self) -> usize {
        EmbeddingDataset::n_rows(self)
    }

    fn n_features(&self) -> usize {
        self.m()
    }

    fn row(&self, i: usize) -> &[f64] {
        EmbeddingDataset::row(self, i)
    }

    fn target(&self, i: usize) -> f64 {
        EmbeddingDataset::target(self, i)
    }

    fn feature(&self, i: usize, f: usize) -> f64 {
        self.samples()[i + f]
    }
}

/// Plain row-major feature matrix with targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDataset {
    n_features: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl DenseDataset {
    pub fn new(n_features: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::invalid("at least one feature is required"));
        }
        if x.len() != n_features * y.len() {
            return Err(Error::invalid(format!(
                "feature matrix has {} values, expected {} x {}",
                x.len(),
                y.len(),
                n_features
            )));
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { n_features, x, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::invalid("ragged feature rows"));
        }
        Self::new(n_features, rows.concat(), y)
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }
}

impl Dataset for DenseDataset {
    fn n_rows(&self) -> usize {
        self.y.len()
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    fn target(&self, i: usize) -> f64 {
        self.y[i]
    }
}
