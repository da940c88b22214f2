#![allow(dead_code, clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

//! Test-only reference implementations, kept independent of the library's
//! split search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive CART: at every node, every feature and every cut between
/// consecutive distinct values is scored by explicit two-pass variances of
/// the materialized children.
#[derive(Debug, Clone)]
pub enum OracleTree {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleTree>,
        right: Box<OracleTree>,
    },
}

impl OracleTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            OracleTree::Leaf(v) => *v,
            OracleTree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

fn mean(ys: &[f64]) -> f64 {
    let mut s = 0.0;
    for y in ys {
        s += y;
    }
    s / ys.len() as f64
}

fn variance(ys: &[f64]) -> f64 {
    let mu = mean(ys);
    let mut s = 0.0;
    for y in ys {
        s += (y - mu) * (y - mu);
    }
    s / ys.len() as f64
}

pub struct OracleParams {
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

pub fn oracle_cart(x: &[Vec<f64>], y: &[f64], params: &OracleParams) -> OracleTree {
    let rows: Vec<usize> = (0..y.len()).collect();
    grow(x, y, rows, params, 0)
}

fn grow(x: &[Vec<f64>], y: &[f64], rows: Vec<usize>, p: &OracleParams, depth: usize) -> OracleTree {
    let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let leaf = OracleTree::Leaf(mean(&ys));
    let pure = ys.iter().all(|&v| v == ys[0]);
    if pure || rows.len() < 2 * p.min_leaf || p.max_depth.is_some_and(|d| depth >= d) {
        return leaf;
    }
    let parent_var = variance(&ys);
    let n = rows.len() as f64;
    let n_features = x[0].len();

    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..n_features {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut t = a + (b - a) * 0.5;
            if t >= b {
                t = a;
            }
            let left: Vec<f64> = rows.iter().filter(|&&r| x[r][f] <= t).map(|&r| y[r]).collect();
            let right: Vec<f64> = rows.iter().filter(|&&r| x[r][f] > t).map(|&r| y[r]).collect();
            if left.len() < p.min_leaf || right.len() < p.min_leaf {
                continue;
            }
            let gain = parent_var
                - (left.len() as f64 / n) * variance(&left)
                - (right.len() as f64 / n) * variance(&right);
            if !(gain > 1e-12 * parent_var) {
                continue;
            }
            if best.is_none_or(|(g, _, _)| gain > g * (1.0 + 1e-9)) {
                best = Some((gain, f, t));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x[r][feature] <= threshold);
    OracleTree::Split {
        feature,
        threshold,
        left: Box::new(grow(x, y, l, p, depth + 1)),
        right: Box::new(grow(x, y, r, p, depth + 1)),
    }
}

/// Random small regression problem: features mix a coarse integer grid (to
/// force duplicate values) with continuous draws; targets are continuous.
pub struct RandomProblem {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub queries: Vec<Vec<f64>>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

pub fn random_problem(seed: u64) -> RandomProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=32);
    let m = rng.random_range(1..=6);
    let coarse: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|f| {
                    if coarse[f] {
                        rng.random_range(0..5) as f64
                    } else {
                        rng.random_range(-10.0..10.0)
                    }
                })
                .collect()
        })
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..25.0)).collect();
    let mut queries = x.clone();
    for _ in 0..64 {
        queries.push((0..m).map(|_| rng.random_range(-12.0..12.0)).collect());
    }
    let min_leaf = rng.random_range(1..=3);
    let max_depth = if rng.random_bool(0.3) { Some(rng.random_range(1..=4)) } else { None };
    RandomProblem {
        x,
        y,
        queries,
        min_leaf,
        max_depth,
    }
}
