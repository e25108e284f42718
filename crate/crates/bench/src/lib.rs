//! Fixtures shared by the benchmarks.

use qubo_tree::{
    build_split_qubo, generate_synthetic, BinaryDataset, SplitQubo, SplitQuboOptions, SyntheticSpec,
};

/// Planted `K = 1` dataset with `n_samples` rows and `n_conditions` columns.
pub fn synthetic(n_samples: usize, n_conditions: usize) -> BinaryDataset {
    generate_synthetic(&SyntheticSpec::new(n_samples, n_conditions, 1, 7).unwrap()).unwrap()
}

pub fn split_problem(
    n_samples: usize,
    n_conditions: usize,
    m: usize,
    a: Option<f64>,
) -> (BinaryDataset, SplitQubo) {
    let data = synthetic(n_samples, n_conditions);
    let q = build_split_qubo(&data, &SplitQuboOptions::new(m, a)).unwrap();
    (data, q)
}
