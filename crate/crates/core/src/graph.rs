//! Geometric random graphs, support matrices and the graph shift.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::spectral::eig_sym;

/// Undirected k-nearest-neighbour graph on points in the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    n: usize,
    k_neighbors: usize,
    seed: u64,
    positions: Vec<[f64; 2]>,
    weights: Matrix,
}

impl GeometricGraph {
    /// Builds the graph over explicit positions. Used by the generator and
    /// by tests that need hand-placed nodes.
    pub fn from_positions(positions: Vec<[f64; 2]>, k_neighbors: usize, seed: u64) -> Result<Self> {
        let n = positions.len();
        if k_neighbors == 0 || n <= k_neighbors {
            return Err(Error::InvalidConfig(format!(
                "need n > k_neighbors > 0, got n={n}, k={k_neighbors}"
            )));
        }
        if let Some(p) = positions
            .iter()
            .find(|p| !p.iter().all(|c| (0.0..=1.0).contains(c)))
        {
            return Err(Error::InvalidInput(format!(
                "position {p:?} outside the unit square"
            )));
        }

        let dist = |i: usize, j: usize| {
            let dx = positions[i][0] - positions[j][0];
            let dy = positions[i][1] - positions[j][1];
            dx.hypot(dy)
        };

        let mut adjacent = vec![false; n * n];
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
        for i in 0..n {
            order.clear();
            order.extend((0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)));
            // ties go to the lower index
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, j) in order.iter().take(k_neighbors) {
                adjacent[i * n + j] = true;
                adjacent[j * n + i] = true;
            }
        }

        let weights = Matrix::from_fn(n, n, |i, j| {
            if adjacent[i * n + j] {
                (-dist(i, j)).exp()
            } else {
                0.0
            }
        });
        Ok(Self {
            n,
            k_neighbors,
            seed,
            positions,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_neighbors(&self) -> usize {
        self.k_neighbors
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// Serializes as `n k seed`, n position lines, then `i j w` for every
    /// edge with `i < j`. Floats carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n, self.k_neighbors, self.seed);
        for p in &self.positions {
            let _ = writeln!(out, "{:.16e} {:.16e}", p[0], p[1]);
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let w = self.weights[(i, j)];
                if w != 0.0 {
                    let _ = writeln!(out, "{i} {j} {w:.16e}");
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(parse_err(ln, "header must be `n k seed`"));
        }
        let n: usize = head[0].parse().map_err(|_| parse_err(ln, "bad n"))?;
        let k: usize = head[1].parse().map_err(|_| parse_err(ln, "bad k"))?;
        let seed: u64 = head[2].parse().map_err(|_| parse_err(ln, "bad seed"))?;

        let mut positions = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| parse_err(ln, "truncated position block"))?;
            let v = parse_floats(ln, line, 2)?;
            positions.push([v[0], v[1]]);
        }

        let mut weights = Matrix::zeros(n, n);
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(ln, "edge line must be `i j w`"));
            }
            let i: usize = parts[0].parse().map_err(|_| parse_err(ln, "bad i"))?;
            let j: usize = parts[1].parse().map_err(|_| parse_err(ln, "bad j"))?;
            let w: f64 = parts[2].parse().map_err(|_| parse_err(ln, "bad weight"))?;
            if i >= j || j >= n {
                return Err(parse_err(ln, "edge indices must satisfy i < j < n"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(parse_err(ln, "weight must be finite and nonnegative"));
            }
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
        Ok(Self {
            n,
            k_neighbors: k,
            seed,
            positions,
            weights,
        })
    }
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

pub(crate) fn parse_floats(ln: usize, line: &str, expected: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "bad float"))?;
    if v.len() != expected {
        return Err(parse_err(
            ln,
            &format!("expected {expected} values, found {}", v.len()),
        ));
    }
    Ok(v)
}

/// Draws `n` uniform points in the unit square and links each to its
/// `k_neighbors` nearest neighbours, symmetrized by union, with
/// `w_ij = exp(-d_ij)`.
pub fn generate_geometric_graph(n: usize, k_neighbors: usize, seed: u64) -> Result<GeometricGraph> {
    if k_neighbors == 0 || n <= k_neighbors {
        return Err(Error::InvalidConfig(format!(
            "need n > k_neighbors > 0, got n={n}, k={k_neighbors}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    GeometricGraph::from_positions(positions, k_neighbors, seed)
}

/// Symmetric graph shift operator together with the sparsity pattern it
/// must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMatrix {
    entries: Matrix,
    mask: Vec<bool>,
}

impl SupportMatrix {
    pub fn new(entries: Matrix, mask: Vec<bool>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidInput("support matrix must be square".into()));
        }
        let n = entries.rows();
        check_len(n * n, mask.len())?;
        if !entries.is_finite() {
            return Err(Error::InvalidInput("non-finite support entry".into()));
        }
        if entries.max_asymmetry() > 0.0 {
            return Err(Error::InvalidInput("support matrix must be symmetric".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if !mask[i * n + j] && entries[(i, j)] != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i},{j}) is nonzero outside the sparsity mask"
                    )));
                }
            }
        }
        Ok(Self { entries, mask })
    }

    /// Takes the mask from the nonzero pattern, with the diagonal always
    /// permitted.
    pub fn from_dense(entries: Matrix) -> Result<Self> {
        let n = entries.rows();
        let mask = (0..n * entries.cols())
            .map(|idx| idx / n == idx % n || entries.as_slice()[idx] != 0.0)
            .collect();
        Self::new(entries, mask)
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn permitted(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n() + j]
    }
}

/// Combinatorial Laplacian `D − A`.
pub fn laplacian(g: &GeometricGraph) -> SupportMatrix {
    let n = g.n();
    let w = g.weights();
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let entries = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            degrees[i]
        } else if w[(i, j)] != 0.0 {
            -w[(i, j)]
        } else {
            0.0
        }
    });
    let mask = (0..n * n)
        .map(|idx| idx / n == idx % n || w.as_slice()[idx] != 0.0)
        .collect();
    SupportMatrix { entries, mask }
}

/// Divides `s` by its largest eigenvalue magnitude so the result has unit
/// operator norm.
pub fn normalize_support(s: &SupportMatrix) -> Result<SupportMatrix> {
    if s.entries.max_abs() == 0.0 {
        return Err(Error::Degenerate("cannot normalize the zero matrix".into()));
    }
    let spec = eig_sym(s)?;
    let top = spec
        .eigenvalues()
        .last()
        .map(|l| l.abs())
        .unwrap_or(0.0);
    if top == 0.0 {
        return Err(Error::Degenerate("largest eigenvalue magnitude is zero".into()));
    }
    let mut entries = s.entries.scaled(1.0 / top);
    // symmetric by construction, but keep it bit-exact
    let n = s.n();
    for i in 0..n {
        for j in (i + 1)..n {
            entries[(j, i)] = entries[(i, j)];
        }
    }
    Ok(SupportMatrix {
        entries,
        mask: s.mask.clone(),
    })
}

/// One local exchange: `S·x`.
pub fn graph_shift(s: &SupportMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len(s.n(), x.len())?;
    Ok(shift_unchecked(s, x))
}

pub(crate) fn shift_unchecked(s: &SupportMatrix, x: &[f64]) -> Vec<f64> {
    let n = s.n();
    (0..n)
        .map(|i| {
            let row = s.entries.row(i);
            let mask = &s.mask[i * n..(i + 1) * n];
            row.iter()
                .zip(mask)
                .zip(x)
                .filter(|((_, &m), _)| m)
                .map(|((a, _), b)| a * b)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_too_few_nodes() {
        assert!(matches!(
            generate_geometric_graph(5, 5, 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(generate_geometric_graph(3, 0, 0).is_err());
    }

    #[test]
    fn two_nodes_single_edge() {
        let g = generate_geometric_graph(2, 1, 42).unwrap();
        let [a, b] = [g.positions()[0], g.positions()[1]];
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!((g.weights()[(0, 1)] - (-d).exp()).abs() < 1e-15);
        assert_eq!(g.weights()[(0, 1)], g.weights()[(1, 0)]);
        assert_eq!(g.weights()[(0, 0)], 0.0);
    }

    #[test]
    fn collinear_middle_node_gets_degree_two() {
        let pos = vec![[0.0, 0.5], [0.4, 0.5], [1.0, 0.5]];
        let g = GeometricGraph::from_positions(pos, 1, 0).unwrap();
        let w = g.weights();
        assert!(w[(0, 1)] > 0.0 && w[(1, 2)] > 0.0);
        assert_eq!(w[(0, 2)], 0.0);
        let degree = |i: usize| (0..3).filter(|&j| w[(i, j)] > 0.0).count();
        assert_eq!((degree(0), degree(1), degree(2)), (1, 2, 1));
    }

    #[test]
    fn tie_broken_by_lower_index() {
        // node 1 sits exactly between 0 and 2
        let pos = vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]];
        let g = GeometricGraph::from_positions(pos, 1, 0).unwrap();
        assert!(g.weights()[(1, 0)] > 0.0);
        // 2 still links to 1 from its own list
        assert!(g.weights()[(1, 2)] > 0.0);
    }

    #[test]
    fn laplacian_of_one_edge() {
        let pos = vec![[0.0, 0.0], [0.3, 0.4]];
        let g = GeometricGraph::from_positions(pos, 1, 0).unwrap();
        let w = (-0.5f64).exp();
        let l = laplacian(&g);
        let expect = Matrix::from_rows(&[vec![w, -w], vec![-w, w]]);
        assert!(l.entries().sub(&expect).max_abs() < 1e-15);
    }

    #[test]
    fn normalize_diagonal() {
        let s = SupportMatrix::from_dense(Matrix::diag(&[2.0, 1.0])).unwrap();
        let out = normalize_support(&s).unwrap();
        let expect = Matrix::diag(&[1.0, 0.5]);
        assert!(out.entries().sub(&expect).max_abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_zero() {
        let s = SupportMatrix::from_dense(Matrix::zeros(3, 3)).unwrap();
        assert!(matches!(normalize_support(&s), Err(Error::Degenerate(_))));
    }

    #[test]
    fn shift_swaps() {
        let s = SupportMatrix::from_dense(Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]))
            .unwrap();
        assert_eq!(graph_shift(&s, &[1.0, 2.0]).unwrap(), vec![2.0, 1.0]);
        let z = SupportMatrix::from_dense(Matrix::zeros(2, 2)).unwrap();
        assert_eq!(graph_shift(&z, &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            graph_shift(&s, &[1.0]),
            Err(Error::Shape { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn support_rejects_entries_outside_mask() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(SupportMatrix::new(m, vec![true, false, false, true]).is_err());
        let asym = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(SupportMatrix::from_dense(asym).is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = generate_geometric_graph(12, 3, 9).unwrap();
        let back = GeometricGraph::from_text(&g.to_text()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn text_rejects_garbage() {
        assert!(GeometricGraph::from_text("").is_err());
        assert!(GeometricGraph::from_text("2 1 0\n0.1 0.2\n").is_err());
        assert!(GeometricGraph::from_text("2 1 0\n0.1 0.2\n0.3 0.4\n1 0 0.5\n").is_err());
    }
}
