#![allow(dead_code)]

use gsp_discrim::experiment::{build_replicate, Replicate};
use gsp_discrim::{generate_geometric_graph, laplacian, normalize_support, Matrix, SupportMatrix};

pub fn normalized_laplacian(n: usize, neighbors: usize, seed: u64) -> SupportMatrix {
    let g = generate_geometric_graph(n, neighbors, seed).unwrap();
    normalize_support(&laplacian(&g)).unwrap()
}

pub fn replicate(n: usize, k: usize, seed: u64) -> Replicate {
    build_replicate(generate_geometric_graph(n, 5.min(n - 1), seed).unwrap(), k).unwrap()
}

/// Σ h_k S^k formed explicitly with dense matrix powers.
pub fn dense_filter(taps: &[f64], s: &Matrix) -> Matrix {
    let n = s.rows();
    let mut power = Matrix::identity(n);
    let mut acc = Matrix::zeros(n, n);
    for &h in taps {
        acc = Matrix::from_fn(n, n, |i, j| acc[(i, j)] + h * power[(i, j)]);
        power = power.matmul(s);
    }
    acc
}

pub fn permute_matrix(m: &Matrix, perm: &[usize]) -> Matrix {
    // (PᵀMP)[i][j] = M[perm[i]][perm[j]]
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(perm[i], perm[j])])
}

pub fn permute_vec(x: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&p| x[p]).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
