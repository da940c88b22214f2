//! Random forest regression built on CART trees.
//!
//! Each tree is grown on its own bootstrap sample and at every node only a
//! random subset of `mtry` features competes for the split. The forest output
//! is the unweighted mean of the tree outputs. Rows a tree never drew are its
//! out-of-bag rows; predicting every row from its out-of-bag trees alone gives
//! the OOB error estimate stored on the model.

mod data;
mod io;
pub mod rng;
mod tree;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use data::{Dataset, DenseDataset};
pub use io::{load_model, save_model, FORMAT_VERSION};
pub use tree::{best_split, midpoint, train_tree, Node, RegressionTree, Split, GAIN_TIE_RTOL, MIN_RELATIVE_GAIN};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Bootstrap {
    /// `n` draws with replacement (≈ 63.2 % distinct rows).
    WithReplacement,
    /// `round(fraction * n)` distinct rows drawn without replacement.
    Subsample { fraction: f64 },
    /// Every tree sees every row once.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features offered to each split; `None` means `ceil(m / 3)`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: Bootstrap,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            mtry: None,
            min_leaf: 5,
            max_depth: None,
            bootstrap: Bootstrap::WithReplacement,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, m: usize) -> usize {
        self.mtry.unwrap_or_else(|| m.div_ceil(3)).clamp(1, m.max(1))
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        if let Some(mtry) = self.mtry {
            if mtry == 0 || mtry > m {
                return Err(Error::invalid(format!("mtry must lie in 1..={m}, got {mtry}")));
            }
        }
        if let Bootstrap::Subsample { fraction } = self.bootstrap {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::invalid(format!(
                    "subsample fraction must lie in (0, 1], got {fraction}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub(crate) format_version: u64,
    pub(crate) m: usize,
    pub(crate) config: ForestConfig,
    pub(crate) trees: Vec<RegressionTree>,
    pub(crate) oob_rmse: Option<f64>,
    pub(crate) train_fingerprint: String,
}

/// Draws the in-bag multiset for one tree from its bootstrap stream.
pub fn bootstrap_rows(n: usize, mode: Bootstrap, tree_seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(tree_seed, rng::BOOTSTRAP_STREAM);
    let mut rows = match mode {
        Bootstrap::WithReplacement => (0..n).map(|_| rng.random_range(0..n)).collect(),
        Bootstrap::Subsample { fraction } => {
            let k = ((fraction * n as f64).round() as usize).clamp(1, n);
            index::sample(&mut rng, n, k).into_vec()
        }
        Bootstrap::Off => (0..n).collect::<Vec<_>>(),
    };
    rows.sort_unstable();
    rows
}

/// Trains `config.n_trees` trees in parallel on the ambient rayon pool. The
/// result depends only on `(data, config)`.
pub fn train_forest(data: &impl Dataset, config: &ForestConfig) -> Result<RandomForestModel> {
    let n = data.n_rows();
    let m = data.n_features();
    if n == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    config.validate(m)?;
    let mut config = config.clone();
    config.mtry = Some(config.resolved_mtry(m));

    let trees: Vec<RegressionTree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = rng::tree_seed(config.seed, t);
            let rows = bootstrap_rows(n, config.bootstrap, seed);
            train_tree(data, &rows, &config, seed)
        })
        .collect();

    let mut model = RandomForestModel {
        format_version: FORMAT_VERSION,
        m,
        config,
        trees,
        oob_rmse: None,
        train_fingerprint: data.fingerprint(),
    };
    if model.config.bootstrap != Bootstrap::Off {
        model.oob_rmse = match oob_error(&model, data) {
            Ok(v) => Some(v),
            Err(Error::NoOutOfBagRows) => None,
            Err(e) => return Err(e),
        };
    }
    Ok(model)
}

impl RandomForestModel {
    /// Assembles a model from already grown trees, e.g. hand-built ones.
    pub fn from_trees(m: usize, config: ForestConfig, trees: Vec<RegressionTree>, train_fingerprint: String) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("a forest needs at least one tree"));
        }
        let model = Self {
            format_version: FORMAT_VERSION,
            m,
            config,
            trees,
            oob_rmse: None,
            train_fingerprint,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn oob_rmse(&self) -> Option<f64> {
        self.oob_rmse
    }

    pub fn train_fingerprint(&self) -> &str {
        &self.train_fingerprint
    }

    /// Mean over trees of the leaf reached by `x`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.m {
            return Err(Error::WindowLength {
                expected: self.m,
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for t in &self.trees {
            sum += t.predict(x);
        }
        sum / self.trees.len() as f64
    }

    /// Mean over trees of the fraction of distinct training rows each drew.
    pub fn mean_unique_in_bag_fraction(&self) -> f64 {
        let total: f64 = self.trees.iter().map(RegressionTree::unique_in_bag_fraction).sum();
        total / self.trees.len() as f64
    }

    /// Structural checks shared by deserialization and `from_trees`.
    pub(crate) fn validate(&self) -> Result<()> {
        let corrupt = |msg: String| Err(Error::CorruptModel(msg));
        if self.m == 0 {
            return corrupt("m must be positive".into());
        }
        if self.trees.is_empty() {
            return corrupt("model holds no trees".into());
        }
        let n_rows = self.trees[0].in_bag.len();
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.in_bag.len() != n_rows {
                return corrupt(format!("tree {t} has an in-bag mask of a different length"));
            }
            if tree.nodes.is_empty() {
                return corrupt(format!("tree {t} has no nodes"));
            }
            for (i, node) in tree.nodes.iter().enumerate() {
                match *node {
                    Node::Leaf { value, .. } if !value.is_finite() => {
                        return corrupt(format!("tree {t} node {i}: non-finite leaf"));
                    }
                    Node::Leaf { .. } => {}
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let len = tree.nodes.len();
                        if feature >= self.m || !threshold.is_finite() || left <= i || right <= i || left >= len || right >= len {
                            return corrupt(format!("tree {t} node {i}: malformed split"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// RMSE over rows that are out-of-bag for at least one tree, each predicted
/// by the mean of its out-of-bag trees only.
pub fn oob_error(model: &RandomForestModel, data: &impl Dataset) -> Result<f64> {
    if model.config.bootstrap == Bootstrap::Off {
        return Err(Error::NoBootstrap);
    }
    let n = data.n_rows();
    if model.trees[0].in_bag.len() != n {
        return Err(Error::DatasetMismatch(format!(
            "model was trained on {} rows, dataset has {n}",
            model.trees[0].in_bag.len()
        )));
    }
    if data.n_features() != model.m {
        return Err(Error::DatasetMismatch(format!(
            "model expects {} features, dataset has {}",
            model.m,
            data.n_features()
        )));
    }
    let mut sse = 0.0;
    let mut counted = 0usize;
    for i in 0..n {
        let x = data.row(i);
        let mut sum = 0.0;
        let mut k = 0usize;
        for tree in model.trees.iter().filter(|t| t.in_bag[i] == 0) {
            sum += tree.predict(x);
            k += 1;
        }
        if k > 0 {
            let err = data.target(i) - sum / k as f64;
            sse += err * err;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::NoOutOfBagRows);
    }
    Ok((sse / counted as f64).sqrt())
}
