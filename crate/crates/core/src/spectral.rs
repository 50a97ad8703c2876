//! Symmetric eigendecomposition, graph Fourier transform, and the split of
//! the eigenbasis into low- and high-magnitude parts.

use crate::error::{check_len, Error, Result};
use crate::graph::SupportMatrix;
use crate::linalg::{norm2, Matrix};

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenpairs sorted by ascending `|λ|`, ties by ascending signed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal `V`, column `i` paired with `eigenvalues()[i]`.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.last().map_or(0.0, |l| l.abs())
    }

    /// `V·diag(λ)·Vᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let v = &self.eigenvectors;
        let scaled = Matrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        scaled.matmul(&v.transpose())
    }
}

/// Eigendecomposition of a support matrix.
pub fn eig_sym(s: &SupportMatrix) -> Result<Spectrum> {
    eig_sym_dense(s.entries())
}

/// Cyclic Jacobi on a dense symmetric matrix. Sweeps until the largest
/// off-diagonal entry is at most `1e-12·‖S‖_max`, giving up after 100 sweeps.
pub fn eig_sym_dense(s: &Matrix) -> Result<Spectrum> {
    if !s.is_square() {
        return Err(Error::InvalidInput("eigendecomposition needs a square matrix".into()));
    }
    if !s.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let asym = s.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let n = s.rows();
    // symmetrize so tiny asymmetries below the tolerance don't bias rotations
    let mut a = Matrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let mut v = Matrix::identity(n);
    let threshold = 1e-12 * s.max_abs();

    let mut converged = false;
    for _ in 0..=MAX_SWEEPS {
        if max_off_diagonal(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)] != 0.0 {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (li, lj) = (a[(i, i)], a[(j, j)]);
        li.abs().total_cmp(&lj.abs()).then(li.total_cmp(&lj))
    });
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    for c in 0..n {
        let flip = (0..n)
            .map(|r| eigenvectors[(r, c)])
            .find(|x| x.abs() > 1e-12)
            .is_some_and(|x| x < 0.0);
        if flip {
            for r in 0..n {
                eigenvectors[(r, c)] = -eigenvectors[(r, c)];
            }
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn max_off_diagonal(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max(a[(i, j)].abs());
        }
    }
    worst
}

/// Applies the rotation that annihilates `a[p][q]`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Graph Fourier transform `Vᵀx`.
pub fn gft(spec: &Spectrum, x: &[f64]) -> Result<Vec<f64>> {
    check_len(spec.n(), x.len())?;
    Ok(spec.eigenvectors.tr_matvec(x))
}

/// Inverse transform `V·x̃`.
pub fn igft(spec: &Spectrum, xt: &[f64]) -> Result<Vec<f64>> {
    check_len(spec.n(), xt.len())?;
    Ok(spec.eigenvectors.matvec(xt))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Low,
    High,
}

/// Partition of the eigenbasis at sorted index `k`: the `k` smallest
/// magnitudes versus the remaining `n − k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSplit {
    k: usize,
    v_low: Matrix,
    v_high: Matrix,
    lambda_low: Vec<f64>,
    lambda_high: Vec<f64>,
}

impl SubspaceSplit {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.v_low.rows()
    }

    pub fn v_low(&self) -> &Matrix {
        &self.v_low
    }

    pub fn v_high(&self) -> &Matrix {
        &self.v_high
    }

    pub fn lambda_low(&self) -> &[f64] {
        &self.lambda_low
    }

    pub fn lambda_high(&self) -> &[f64] {
        &self.lambda_high
    }

    pub fn basis(&self, band: Band) -> &Matrix {
        match band {
            Band::Low => &self.v_low,
            Band::High => &self.v_high,
        }
    }

    /// `V_Kᵀ·d`, the low-frequency content of `d`.
    pub fn low_coefficients(&self, d: &[f64]) -> Vec<f64> {
        self.v_low.tr_matvec(d)
    }

    /// `V_{N−K}ᵀ·d`
    pub fn high_coefficients(&self, d: &[f64]) -> Vec<f64> {
        self.v_high.tr_matvec(d)
    }
}

pub fn split_subspace(spec: &Spectrum, k: usize) -> Result<SubspaceSplit> {
    let n = spec.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidConfig(format!("split index k={k} must satisfy 0 < k < {n}")));
    }
    Ok(SubspaceSplit {
        k,
        v_low: spec.eigenvectors.columns(0..k),
        v_high: spec.eigenvectors.columns(k..n),
        lambda_low: spec.eigenvalues[..k].to_vec(),
        lambda_high: spec.eigenvalues[k..].to_vec(),
    })
}

/// Orthogonal projection of `w` onto one band, optionally rescaled to unit
/// norm.
pub fn project_subspace(split: &SubspaceSplit, w: &[f64], band: Band, normalize: bool) -> Result<Vec<f64>> {
    check_len(split.n(), w.len())?;
    let basis = split.basis(band);
    let mut out = basis.matvec(&basis.tr_matvec(w));
    if normalize {
        let norm = norm2(&out);
        if norm < 1e-12 {
            return Err(Error::DegenerateProjection(norm));
        }
        out.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn identity_spectrum() {
        let spec = eig_sym_dense(&Matrix::identity(4)).unwrap();
        assert!(spec.eigenvalues().iter().all(|&l| l == 1.0));
        let v = spec.eigenvectors();
        assert!(v.transpose().matmul(v).sub(&Matrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn swap_matrix_tie_break() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let spec = eig_sym_dense(&m).unwrap();
        assert!((spec.eigenvalues()[0] + 1.0).abs() < 1e-12);
        assert!((spec.eigenvalues()[1] - 1.0).abs() < 1e-12);
        // first significant component positive
        for c in 0..2 {
            assert!(spec.eigenvector(c)[0] > 0.0);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.1, 0.0]]);
        assert!(matches!(eig_sym_dense(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_matrix_is_already_diagonal() {
        let spec = eig_sym_dense(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(spec.eigenvalues(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn split_bounds() {
        let spec = eig_sym_dense(&Matrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert!(split_subspace(&spec, 0).is_err());
        assert!(split_subspace(&spec, 3).is_err());
        let split = split_subspace(&spec, 2).unwrap();
        assert_eq!(split.lambda_low(), &[1.0, 2.0]);
        assert_eq!(split.lambda_high(), &[3.0]);
        // largest-magnitude eigenvector is e_0
        assert_eq!(split.v_high().column(0), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn projection_errors_on_orthogonal_input() {
        let spec = eig_sym_dense(&Matrix::diag(&[1.0, 2.0, 3.0])).unwrap();
        let split = split_subspace(&spec, 1).unwrap();
        let v1 = spec.eigenvector(0);
        assert!(matches!(
            project_subspace(&split, &v1, Band::High, true),
            Err(Error::DegenerateProjection(_))
        ));
        let v3 = spec.eigenvector(2);
        let p = project_subspace(&split, &v3, Band::High, true).unwrap();
        assert!(max_abs_diff(&p, &v3) < 1e-12);
    }
}
