mod common;

use proptest::prelude::*;
use windrf::forest::{train_forest, Bootstrap, Dataset, DenseDataset, ForestConfig};

use common::{oracle_cart, random_problem, OracleParams};

fn single_tree(p: &common::RandomProblem, seed: u64) -> windrf::forest::RandomForestModel {
    let data = DenseDataset::from_rows(&p.x, p.y.clone()).unwrap();
    let config = ForestConfig {
        n_trees: 1,
        mtry: Some(data.n_features()),
        min_leaf: p.min_leaf,
        max_depth: p.max_depth,
        bootstrap: Bootstrap::Off,
        seed,
    };
    train_forest(&data, &config).unwrap()
}

#[test]
fn unbagged_full_mtry_tree_equals_exhaustive_cart() {
    for seed in 0..500u64 {
        let p = random_problem(seed);
        let model = single_tree(&p, seed);
        let oracle = oracle_cart(&p.x, &p.y, &OracleParams { min_leaf: p.min_leaf, max_depth: p.max_depth });
        for q in &p.queries {
            let got = model.predict(q).unwrap();
            let want = oracle.predict(q);
            assert_eq!(got.to_bits(), want.to_bits(), "seed {seed}, query {q:?}: {got} vs {want}");
        }
    }
}

#[test]
fn forest_seed_irrelevant_without_randomness() {
    for seed in 0..50u64 {
        let p = random_problem(seed);
        let a = single_tree(&p, 1);
        let b = single_tree(&p, 12345);
        assert_eq!(a.trees(), b.trees());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_agrees_on_arbitrary_problems(seed in any::<u64>()) {
        let p = random_problem(seed);
        let model = single_tree(&p, 0);
        let oracle = oracle_cart(&p.x, &p.y, &OracleParams { min_leaf: p.min_leaf, max_depth: p.max_depth });
        for q in &p.queries {
            prop_assert_eq!(model.predict(q).unwrap().to_bits(), oracle.predict(q).to_bits());
        }
    }
}
