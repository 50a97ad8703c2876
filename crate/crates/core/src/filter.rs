//! FIR graph filters, filter banks, exact spectral-domain filters, and the
//! integral-Lipschitz / cutoff diagnostics computed on a frequency grid.

use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::graph::{shift_unchecked, SupportMatrix};
use crate::linalg::{axpy, Matrix};
use crate::spectral::Spectrum;

/// Number of points in the uniform `[0, lam_max]` grid used by
/// [`il_constant`] and [`cutoff_frequency`].
pub const GRID_POINTS: usize = 257;

/// Polynomial filter `Σ_k h_k S^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidInput("filter needs at least one tap".into()));
        }
        if !taps.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidInput("filter taps must be finite".into()));
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// `h'(λ)` by Horner on the derivative coefficients.
    pub fn derivative(&self, lam: f64) -> f64 {
        self.taps
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &h)| acc * lam + k as f64 * h)
    }
}

/// F filters with a common tap count.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filters: Vec<FirFilter>,
}

impl FilterBank {
    pub fn new(filters: Vec<FirFilter>) -> Result<Self> {
        let first = filters
            .first()
            .ok_or_else(|| Error::InvalidInput("filter bank needs at least one filter".into()))?;
        let taps = first.taps.len();
        if filters.iter().any(|f| f.taps.len() != taps) {
            return Err(Error::InvalidInput("filters in a bank must share a tap count".into()));
        }
        Ok(Self { filters })
    }

    /// Bank from an `F × (K+1)` tap array.
    pub fn from_taps(taps: &Matrix) -> Result<Self> {
        Self::new(
            (0..taps.rows())
                .map(|f| FirFilter::new(taps.row(f).to_vec()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn filters(&self) -> &[FirFilter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn tap_count(&self) -> usize {
        self.filters[0].taps.len()
    }

    pub fn tap_matrix(&self) -> Matrix {
        Matrix::from_fn(self.len(), self.tap_count(), |f, k| self.filters[f].taps[k])
    }

    /// `F K+1`, then one line of taps per filter (17 significant digits).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.tap_count());
        for f in &self.filters {
            let line: Vec<String> = f.taps.iter().map(|t| format!("{t:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
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
            msg: "missing `F K+1` header".into(),
        })?;
        let dims = crate::graph::parse_floats(ln, header, 2)?;
        let (count, taps) = (dims[0] as usize, dims[1] as usize);
        if count as f64 != dims[0] || taps as f64 != dims[1] {
            return Err(Error::Parse {
                line: ln,
                msg: "header counts must be integers".into(),
            });
        }
        let mut filters = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: ln,
                msg: "truncated filter bank".into(),
            })?;
            filters.push(FirFilter::new(crate::graph::parse_floats(ln, line, taps)?)?);
        }
        Self::new(filters)
    }
}

/// Per-eigenvalue gains applied exactly in the graph frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilter {
    response: Vec<f64>,
}

impl SpectralFilter {
    pub fn new(response: Vec<f64>) -> Result<Self> {
        if !response.iter().all(|r| r.is_finite()) {
            return Err(Error::InvalidInput("spectral response must be finite".into()));
        }
        Ok(Self { response })
    }

    /// The response of an FIR filter sampled on `spec`'s eigenvalues.
    pub fn from_fir(f: &FirFilter, spec: &Spectrum) -> Self {
        Self {
            response: spec.eigenvalues().iter().map(|&l| freq_response(f, l)).collect(),
        }
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    /// Whether any gain past sorted index `k` is nonzero.
    pub fn high_response_nonzero(&self, k: usize) -> bool {
        self.response.iter().skip(k).any(|&r| r != 0.0)
    }

    pub fn max_gain(&self) -> f64 {
        self.response.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// `Σ_k h_k S^k x`, accumulated over iterated shifts.
pub fn apply_fir(f: &FirFilter, s: &SupportMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len(s.n(), x.len())?;
    Ok(apply_fir_unchecked(f, s, x))
}

pub(crate) fn apply_fir_unchecked(f: &FirFilter, s: &SupportMatrix, x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|v| v * f.taps[0]).collect();
    let mut z = x.to_vec();
    for &h in &f.taps[1..] {
        z = shift_unchecked(s, &z);
        axpy(h, &z, &mut out);
    }
    out
}

/// `h(λ) = Σ_k h_k λ^k`
pub fn freq_response(f: &FirFilter, lam: f64) -> f64 {
    f.taps.iter().rev().fold(0.0, |acc, &h| acc * lam + h)
}

/// `V·diag(h)·Vᵀ·x`
pub fn apply_spectral(sf: &SpectralFilter, spec: &Spectrum, x: &[f64]) -> Result<Vec<f64>> {
    check_len(spec.n(), x.len())?;
    check_len(spec.n(), sf.len())?;
    Ok(apply_spectral_unchecked(sf, spec, x))
}

pub(crate) fn apply_spectral_unchecked(sf: &SpectralFilter, spec: &Spectrum, x: &[f64]) -> Vec<f64> {
    let v = spec.eigenvectors();
    let mut coeffs = v.tr_matvec(x);
    for (c, r) in coeffs.iter_mut().zip(&sf.response) {
        *c *= r;
    }
    v.matvec(&coeffs)
}

pub(crate) fn grid(lam_max: f64) -> impl Iterator<Item = f64> {
    let step = lam_max / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS).map(move |j| j as f64 * step)
}

/// Integral-Lipschitz constant estimate: max of `|λ·h'(λ)|` over the
/// 257-point grid on `[0, lam_max]`.
pub fn il_constant(f: &FirFilter, lam_max: f64) -> f64 {
    grid(lam_max).fold(0.0, |m, l| m.max((l * f.derivative(l)).abs()))
}

pub fn bank_il_constant(bank: &FilterBank, lam_max: f64) -> f64 {
    bank.filters
        .iter()
        .fold(0.0, |m, f| m.max(il_constant(f, lam_max)))
}

/// Smallest grid point past which `|h'(λ)| < eps` everywhere on the grid.
/// Returns `lam_max` when even the last grid point fails.
pub fn cutoff_frequency(f: &FirFilter, eps: f64, lam_max: f64) -> f64 {
    let points: Vec<f64> = grid(lam_max).collect();
    match points.iter().rposition(|&l| f.derivative(l).abs() >= eps) {
        Some(j) if j + 1 == points.len() => lam_max,
        Some(j) => points[j],
        None => points[0],
    }
}

/// Spectral filter equal to `low_profile` on the `k` lowest-magnitude
/// eigenvalues and exactly zero above.
pub fn zero_high_response(spec: &Spectrum, k: usize, low_profile: &[f64]) -> Result<SpectralFilter> {
    let n = spec.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidConfig(format!("split index k={k} must satisfy 0 < k < {n}")));
    }
    check_len(k, low_profile.len())?;
    let mut response = low_profile.to_vec();
    response.resize(n, 0.0);
    SpectralFilter::new(response)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fir(t: &[f64]) -> FirFilter {
        FirFilter::new(t.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_taps() {
        assert!(FirFilter::new(vec![]).is_err());
        assert!(FirFilter::new(vec![1.0, f64::NAN]).is_err());
        assert!(FilterBank::new(vec![fir(&[1.0]), fir(&[1.0, 2.0])]).is_err());
        assert!(FilterBank::new(vec![]).is_err());
    }

    #[test]
    fn frequency_response_values() {
        assert_eq!(freq_response(&fir(&[1.0, 0.0, 0.0]), 0.5), 1.0);
        assert_eq!(freq_response(&fir(&[0.0, 1.0]), 0.7), 0.7);
        // power-sum oracle: 1 + 2·2 + 3·4
        let f = fir(&[1.0, 2.0, 3.0]);
        let oracle: f64 = f.taps().iter().enumerate().map(|(k, h)| h * 2f64.powi(k as i32)).sum();
        assert_eq!(oracle, 17.0);
        assert_eq!(freq_response(&f, 2.0), oracle);
    }

    #[test]
    fn il_constants() {
        assert_eq!(il_constant(&fir(&[3.0]), 1.0), 0.0);
        assert_eq!(il_constant(&fir(&[0.0, 1.0]), 1.0), 1.0);
        assert_eq!(il_constant(&fir(&[0.0, 0.0, 1.0]), 1.0), 2.0);
        let bank = FilterBank::new(vec![fir(&[0.0, 1.0]), fir(&[0.5, 0.0])]).unwrap();
        assert_eq!(bank_il_constant(&bank, 1.0), 1.0);
        let consts = FilterBank::new(vec![fir(&[1.0]), fir(&[-2.0])]).unwrap();
        assert_eq!(bank_il_constant(&consts, 1.0), 0.0);
        let single = FilterBank::new(vec![fir(&[0.2, -0.4, 0.9])]).unwrap();
        assert_eq!(
            bank_il_constant(&single, 1.0),
            il_constant(&single.filters()[0], 1.0)
        );
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_frequency(&fir(&[2.0]), 0.1, 1.0), 0.0);
        assert_eq!(cutoff_frequency(&fir(&[0.0, 1.0]), 0.5, 1.0), 1.0);
        // h = 2λ − λ², h' = 2 − 2λ drops below 1 past λ = 0.5
        let c = cutoff_frequency(&fir(&[0.0, 2.0, -1.0]), 1.0, 1.0);
        assert!((c - 0.5).abs() <= 1.0 / 256.0, "{c}");
        // h = λ²: the derivative grows, so no flat tail exists on the grid
        assert_eq!(cutoff_frequency(&fir(&[0.0, 0.0, 1.0]), 1.0, 1.0), 1.0);
    }

    #[test]
    fn bank_text_round_trip() {
        let bank = FilterBank::new(vec![fir(&[0.1, -1.0 / 3.0, 2.5e-9]), fir(&[1.0, 0.0, -7.0])])
            .unwrap();
        let text = bank.to_text();
        assert!(text.starts_with("2 3\n"));
        assert_eq!(FilterBank::from_text(&text).unwrap(), bank);
        assert!(FilterBank::from_text("2 3\n1 2 3\n").is_err());
    }

    #[test]
    fn zero_high_checks_lengths() {
        let spec = crate::spectral::eig_sym_dense(&Matrix::diag(&[0.0, 0.5, 1.0])).unwrap();
        assert!(zero_high_response(&spec, 1, &[1.0, 1.0]).is_err());
        assert!(zero_high_response(&spec, 3, &[1.0, 1.0, 1.0]).is_err());
        let sf = zero_high_response(&spec, 2, &[1.0, 2.0]).unwrap();
        assert_eq!(sf.response(), &[1.0, 2.0, 0.0]);
        assert!(!sf.high_response_nonzero(2));
        assert!(sf.high_response_nonzero(1));
    }
}
