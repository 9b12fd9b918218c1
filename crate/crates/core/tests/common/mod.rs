#![allow(dead_code)]

use covpow::graph::{NodePartition, WeightedGraph};
use covpow::linalg::SpdMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    gaussian(rng, n, n).qr().q()
}

/// Eigenvalues log-uniform in `[cond^-1/2, cond^1/2]`, both ends attained.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> SpdMatrix {
    let q = orthogonal(rng, n);
    let mut ev: Vec<f64> = (0..n)
        .map(|_| cond.powf(rng.random::<f64>() - 0.5))
        .collect();
    ev[0] = cond.powf(-0.5);
    if n > 1 {
        ev[n - 1] = cond.sqrt();
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(ev));
    let m = &q * d * q.transpose();
    SpdMatrix::from_matrix((&m + m.transpose()) * 0.5).unwrap()
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = gaussian(rng, n, n);
    (&g + g.transpose()) * 0.5
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.1..1.0)));
            }
        }
    }
    WeightedGraph::from_edges(n, &edges).unwrap()
}

/// Random proper, non-empty observed subset.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> NodePartition {
    assert!(n >= 2);
    let k = rng.random_range(1..n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    NodePartition::new(n, idx[..k].to_vec()).unwrap()
}

/// Spectral norm of a general matrix.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}
