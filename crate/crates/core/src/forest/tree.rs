//! CART regression trees grown by variance reduction.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::rng;
use super::ForestConfig;

/// Candidate gains within this relative distance of the current best count as
/// ties, which are resolved by lowest feature index and then lowest threshold.
pub const GAIN_TIE_RTOL: f64 = 1e-9;

/// A split must remove more than this fraction of the parent variance.
pub const MIN_RELATIVE_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// `Var(parent) - (n_L/n) Var(L) - (n_R/n) Var(R)`.
    pub gain: f64,
}

/// Cut point between two consecutive distinct sorted values `lo < hi`,
/// guaranteed to satisfy `lo <= t < hi`.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) * 0.5;
    if t < hi {
        t
    } else {
        lo
    }
}

fn mean_of(data: &impl Dataset, rows: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &r in rows {
        sum += data.target(r);
    }
    sum / rows.len() as f64
}

fn population_variance(data: &impl Dataset, rows: &[usize]) -> f64 {
    let mean = mean_of(data, rows);
    let mut ss = 0.0;
    for &r in rows {
        let d = data.target(r) - mean;
        ss += d * d;
    }
    ss / rows.len() as f64
}

/// Best variance-reducing split of `rows` over `candidate_features`, scanning
/// features in ascending index order and thresholds in ascending order. Each
/// side must keep at least `min_leaf` samples (duplicates in `rows` count).
pub fn best_split(
    data: &impl Dataset,
    rows: &[usize],
    candidate_features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf || candidate_features.is_empty() {
        return None;
    }
    let first = data.target(rows[0]);
    if rows.iter().all(|&r| data.target(r) == first) {
        return None;
    }
    let min_gain = MIN_RELATIVE_GAIN * population_variance(data, rows);

    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();

    let nf = n as f64;
    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &f in &features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (data.feature(r, f), data.target(r))));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            let n_left = i + 1;
            let n_right = n - n_left;
            if pairs[i].0 == pairs[i + 1].0 || n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let (nl, nr) = (n_left as f64, n_right as f64);
            let diff = left_sum / nl - (total - left_sum) / nr;
            let gain = nl * nr / (nf * nf) * diff * diff;
            if !(gain > min_gain) {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => gain > b.gain * (1.0 + GAIN_TIE_RTOL),
            };
            if better {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(pairs[i].0, pairs[i + 1].0),
                    gain,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Depth-first node array; the root is `nodes[0]`.
    pub(crate) nodes: Vec<Node>,
    /// Number of times each training row was drawn for this tree.
    pub(crate) in_bag: Vec<u32>,
}

impl RegressionTree {
    pub fn from_parts(nodes: Vec<Node>, in_bag: Vec<u32>) -> Self {
        Self { nodes, in_bag }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn in_bag(&self) -> &[u32] {
        &self.in_bag
    }

    pub fn is_out_of_bag(&self, row: usize) -> bool {
        self.in_bag.get(row).is_some_and(|&c| c == 0)
    }

    /// Routes `x` to a leaf; values equal to a threshold go left.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Fraction of training rows drawn at least once.
    pub fn unique_in_bag_fraction(&self) -> f64 {
        let drawn = self.in_bag.iter().filter(|&&c| c > 0).count();
        drawn as f64 / self.in_bag.len() as f64
    }
}

struct Grower<'a, D: Dataset> {
    data: &'a D,
    min_leaf: usize,
    max_depth: Option<usize>,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl<D: Dataset> Grower<'_, D> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        self.nodes.push(Node::Leaf {
            value: mean_of(self.data, rows),
            samples: rows.len(),
        });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let m = self.data.n_features();
        if self.mtry >= m {
            return (0..m).collect();
        }
        let mut f = index::sample(&mut self.rng, m, self.mtry).into_vec();
        f.sort_unstable();
        f
    }

    /// `rows` is sorted ascending, with repeats for multiply-drawn rows.
    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let n = rows.len();
        let first = self.data.target(rows[0]);
        let pure = rows.iter().all(|&r| self.data.target(r) == first);
        if pure || n < 2 * self.min_leaf || self.max_depth.is_some_and(|d| depth >= d) {
            return self.leaf(rows);
        }
        let features = self.candidate_features();
        let Some(split) = best_split(self.data, rows, &features, self.min_leaf) else {
            return self.leaf(rows);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.feature(r, split.feature) <= split.threshold);

        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: f64::NAN,
            samples: n,
        });
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows one tree on the multiset `in_bag` of row indices. `config.mtry` must
/// already be resolved; feature subsets come from stream 1 of `tree_seed`.
pub fn train_tree(data: &impl Dataset, in_bag: &[usize], config: &ForestConfig, tree_seed: u64) -> RegressionTree {
    assert!(!in_bag.is_empty(), "in-bag sample must be nonempty");
    let mut rows = in_bag.to_vec();
    rows.sort_unstable();
    let mut counts = vec![0u32; data.n_rows()];
    for &r in &rows {
        counts[r] += 1;
    }
    let mut grower = Grower {
        data,
        min_leaf: config.min_leaf.max(1),
        max_depth: config.max_depth,
        mtry: config.resolved_mtry(data.n_features()),
        rng: rng::stream(tree_seed, rng::FEATURE_STREAM),
        nodes: Vec::new(),
    };
    grower.grow(&rows, 0);
    RegressionTree {
        nodes: grower.nodes,
        in_bag: counts,
    }
}

#[cfg(test)]
mod tests {
    use super::super::data::DenseDataset;
    use super::*;

    fn column(x: &[f64], y: &[f64]) -> DenseDataset {
        DenseDataset::new(1, x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn four_point_split() {
        let d = column(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 10.0, 10.0]);
        let rows = [0, 1, 2, 3];
        // exhaustive over the 3 candidate cuts
        let var = |ys: &[f64]| {
            let m = ys.iter().sum::<f64>() / ys.len() as f64;
            ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / ys.len() as f64
        };
        let y = [0.0, 0.0, 10.0, 10.0];
        let gains: Vec<f64> = (1..4)
            .map(|k| var(&y) - (k as f64 / 4.0) * var(&y[..k]) - ((4 - k) as f64 / 4.0) * var(&y[k..]))
            .collect();
        assert_eq!(gains[1], 25.0);
        assert!((gains[0] - (25.0 - 0.75 * (200.0 / 9.0))).abs() < 1e-12);
        assert!((gains[2] - gains[0]).abs() < 1e-12);
        let s = best_split(&d, &rows, &[0], 1).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.gain, 25.0);
    }

    #[test]
    fn no_split_when_targets_constant_or_features_flat() {
        let d = column(&[1.0, 2.0, 3.0, 4.0], &[7.0; 4]);
        assert!(best_split(&d, &[0, 1, 2, 3], &[0], 1).is_none());
        let flat = DenseDataset::new(2, vec![1.0, 5.0, 1.0, 5.0, 1.0, 5.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(best_split(&flat, &[0, 1, 2], &[0, 1], 1).is_none());
    }

    #[test]
    fn min_leaf_is_honoured() {
        let d = column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[0.0, 10.0, 10.0, 10.0, 10.0, 10.0]);
        let s = best_split(&d, &[0, 1, 2, 3, 4, 5], &[0], 1).unwrap();
        assert_eq!(s.threshold, 1.5);
        let s = best_split(&d, &[0, 1, 2, 3, 4, 5], &[0], 2).unwrap();
        assert_eq!(s.threshold, 2.5);
        assert!(best_split(&d, &[0, 1, 2, 3, 4, 5], &[0], 4).is_none());
    }

    #[test]
    fn equal_gain_prefers_lowest_feature() {
        // features 0 and 1 induce the same partition
        let d = DenseDataset::new(2, vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0], vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        let s = best_split(&d, &[0, 1, 2, 3], &[1, 0], 1).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo <= t && t < hi);
        assert_eq!(midpoint(2.0, 3.0), 2.5);
    }

    fn config(min_leaf: usize) -> ForestConfig {
        ForestConfig {
            min_leaf,
            mtry: None,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn constant_targets_single_leaf() {
        let d = column(&[1.0, 2.0, 3.0], &[4.5; 3]);
        let t = train_tree(&d, &[0, 1, 2], &config(1), 1);
        assert_eq!(t.nodes(), &[Node::Leaf { value: 4.5, samples: 3 }]);
    }

    #[test]
    fn large_min_leaf_single_leaf_mean() {
        let d = column(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 10.0]);
        let t = train_tree(&d, &[0, 1, 1, 3], &config(4), 1);
        assert_eq!(t.nodes(), &[Node::Leaf { value: 3.75, samples: 4 }]);
        assert_eq!(t.in_bag(), &[1, 2, 0, 1]);
        assert!(t.is_out_of_bag(2));
    }

    #[test]
    fn depth_cap_is_respected() {
        let x: Vec<f64> = (0..64).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let d = column(&x, &y);
        let rows: Vec<usize> = (0..64).collect();
        let cfg = ForestConfig {
            max_depth: Some(3),
            ..config(1)
        };
        let t = train_tree(&d, &rows, &cfg, 9);
        assert_eq!(t.depth(), 3);
        assert_eq!(t.n_leaves(), 8);
    }

    #[test]
    fn routing_sends_ties_left() {
        let t = RegressionTree::from_parts(
            vec![
                Node::Split {
                    feature: 0,
                    threshold: 1.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: -1.0, samples: 1 },
                Node::Leaf { value: 1.0, samples: 1 },
            ],
            vec![],
        );
        assert_eq!(t.predict(&[1.0]), -1.0);
        assert_eq!(t.predict(&[1.0000001]), 1.0);
    }
}
