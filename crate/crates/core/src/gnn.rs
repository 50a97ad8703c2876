//! Pointwise nonlinearities, single-layer GNN forward maps, and the
//! single-tap readout.

use crate::error::{check_len, Error, Result};
use crate::filter::{apply_fir_unchecked, apply_spectral_unchecked, FilterBank, SpectralFilter};
use crate::graph::SupportMatrix;
use crate::linalg::axpy;
use crate::spectral::{eig_sym, Spectrum};

/// A strictly increasing, Lipschitz scalar activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Tanh,
    Identity,
    /// `t` for `t ≥ 0`, `slope·t` otherwise, with `slope ∈ (0, 1)`.
    LeakyRectifier { slope: f64 },
}

impl Nonlinearity {
    pub fn leaky_rectifier(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "leaky rectifier slope must lie in (0, 1), got {slope}"
            )));
        }
        Ok(Self::LeakyRectifier { slope })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Tanh => t.tanh(),
            Self::Identity => t,
            Self::LeakyRectifier { slope } => {
                if t >= 0.0 {
                    t
                } else {
                    slope * t
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Tanh => {
                let c = t.cosh();
                1.0 / (c * c)
            }
            Self::Identity => 1.0,
            Self::LeakyRectifier { slope } => {
                if t >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        1.0
    }

    pub fn strictly_monotone(&self) -> bool {
        true
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&t| self.eval(t)).collect()
    }

    pub fn descriptor(&self) -> String {
        match *self {
            Self::Tanh => "tanh".into(),
            Self::Identity => "identity".into(),
            Self::LeakyRectifier { slope } => format!("leaky_rectifier {slope:.16e}"),
        }
    }

    pub fn from_descriptor(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        match parts.as_slice() {
            ["tanh"] => Ok(Self::Tanh),
            ["identity"] => Ok(Self::Identity),
            ["leaky_rectifier", a] => Self::leaky_rectifier(
                a.parse()
                    .map_err(|_| Error::InvalidInput(format!("bad slope `{a}`")))?,
            ),
            _ => Err(Error::InvalidInput(format!("unknown nonlinearity `{s}`"))),
        }
    }
}

/// A support matrix together with its eigendecomposition. FIR banks run on
/// the support, spectral banks on the eigenbasis.
#[derive(Debug, Clone)]
pub struct GraphOperator {
    support: SupportMatrix,
    spectrum: Spectrum,
}

impl GraphOperator {
    pub fn new(support: SupportMatrix) -> Result<Self> {
        let spectrum = eig_sym(&support)?;
        Ok(Self { support, spectrum })
    }

    pub fn n(&self) -> usize {
        self.support.n()
    }

    pub fn support(&self) -> &SupportMatrix {
        &self.support
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
}

/// A bank of F linear filters mapping one input signal to F features.
#[derive(Debug, Clone, PartialEq)]
pub enum Bank {
    Fir(FilterBank),
    Spectral(Vec<SpectralFilter>),
}

impl Bank {
    pub fn spectral(filters: Vec<SpectralFilter>) -> Result<Self> {
        let n = filters
            .first()
            .ok_or_else(|| Error::InvalidInput("filter bank needs at least one filter".into()))?
            .len();
        if filters.iter().any(|f| f.len() != n) {
            return Err(Error::InvalidInput("spectral filters must share a length".into()));
        }
        Ok(Self::Spectral(filters))
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Fir(b) => b.len(),
            Self::Spectral(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-filter gains on the operator's eigenvalues.
    pub fn responses(&self, op: &GraphOperator) -> Vec<SpectralFilter> {
        match self {
            Self::Fir(b) => b
                .filters()
                .iter()
                .map(|f| SpectralFilter::from_fir(f, op.spectrum()))
                .collect(),
            Self::Spectral(v) => v.clone(),
        }
    }

    fn check(&self, op: &GraphOperator, x: &[f64]) -> Result<()> {
        check_len(op.n(), x.len())?;
        if let Self::Spectral(v) = self {
            check_len(op.n(), v[0].len())?;
        }
        Ok(())
    }
}

/// Linear features `H^f(S)·x`, one per filter.
pub fn bank_forward(bank: &Bank, op: &GraphOperator, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    bank.check(op, x)?;
    Ok(match bank {
        Bank::Fir(b) => b
            .filters()
            .iter()
            .map(|f| apply_fir_unchecked(f, op.support(), x))
            .collect(),
        Bank::Spectral(v) => v
            .iter()
            .map(|f| apply_spectral_unchecked(f, op.spectrum(), x))
            .collect(),
    })
}

/// Filter bank followed by a pointwise nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleLayerGnn {
    pub bank: Bank,
    pub sigma: Nonlinearity,
}

impl SingleLayerGnn {
    pub fn new(bank: Bank, sigma: Nonlinearity) -> Result<Self> {
        if bank.is_empty() {
            return Err(Error::InvalidInput("GNN needs at least one filter".into()));
        }
        Ok(Self { bank, sigma })
    }

    pub fn features(&self) -> usize {
        self.bank.len()
    }
}

/// Features `σ(H^f(S)·x)`.
pub fn gnn_forward(gnn: &SingleLayerGnn, op: &GraphOperator, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut feats = bank_forward(&gnn.bank, op, x)?;
    for feat in &mut feats {
        feat.iter_mut().for_each(|v| *v = gnn.sigma.eval(*v));
    }
    Ok(feats)
}

/// Per-node weighted sum of features, weights shared across nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    weights: Vec<f64>,
}

impl Readout {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidInput("readout weights must be nonempty and finite".into()));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn readout_apply(r: &Readout, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_len(r.weights.len(), features.len())?;
    let n = features[0].len();
    let mut out = vec![0.0; n];
    for (w, feat) in r.weights.iter().zip(features) {
        check_len(n, feat.len())?;
        axpy(*w, feat, &mut out);
    }
    Ok(out)
}

/// Model file: the filter-bank text block, one readout line, and one
/// nonlinearity descriptor line.
pub fn model_to_text(bank: &FilterBank, readout: &Readout, sigma: Nonlinearity) -> Result<String> {
    check_len(bank.len(), readout.weights.len())?;
    let mut out = bank.to_text();
    let line: Vec<String> = readout.weights.iter().map(|w| format!("{w:.16e}")).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
    out.push_str(&sigma.descriptor());
    out.push('\n');
    Ok(out)
}

pub fn model_from_text(text: &str) -> Result<(FilterBank, Readout, Nonlinearity)> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if lines.len() < 3 {
        return Err(Error::Parse {
            line: lines.len(),
            msg: "model file too short".into(),
        });
    }
    let (sigma_ln, sigma_line) = lines[lines.len() - 1];
    let (readout_ln, readout_line) = lines[lines.len() - 2];
    let bank_text: Vec<&str> = lines[..lines.len() - 2].iter().map(|(_, l)| *l).collect();
    let bank = FilterBank::from_text(&bank_text.join("\n"))?;
    let weights = crate::graph::parse_floats(readout_ln, readout_line, bank.len())?;
    let sigma = Nonlinearity::from_descriptor(sigma_line).map_err(|e| Error::Parse {
        line: sigma_ln,
        msg: e.to_string(),
    })?;
    Ok((bank, Readout::new(weights)?, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FirFilter;

    #[test]
    fn leaky_slope_validated() {
        assert!(Nonlinearity::leaky_rectifier(0.0).is_err());
        assert!(Nonlinearity::leaky_rectifier(1.0).is_err());
        let l = Nonlinearity::leaky_rectifier(0.1).unwrap();
        assert_eq!(l.eval(-2.0), -0.2);
        assert_eq!(l.eval(3.0), 3.0);
    }

    #[test]
    fn descriptor_round_trip() {
        for s in [
            Nonlinearity::Tanh,
            Nonlinearity::Identity,
            Nonlinearity::leaky_rectifier(0.25).unwrap(),
        ] {
            assert_eq!(Nonlinearity::from_descriptor(&s.descriptor()).unwrap(), s);
        }
        assert!(Nonlinearity::from_descriptor("relu").is_err());
    }

    #[test]
    fn readout_examples() {
        let f = vec![vec![1.0, -2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let one = Readout::new(vec![1.0]).unwrap();
        assert_eq!(readout_apply(&one, &f[..1]).unwrap(), f[0]);
        let pick = Readout::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(readout_apply(&pick, &f).unwrap(), f[1]);
        let avg = Readout::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(
            readout_apply(&avg, &[f[0].clone(), f[0].clone()]).unwrap(),
            f[0]
        );
        assert!(readout_apply(&avg, &f[..1]).is_err());
    }

    #[test]
    fn model_text_round_trip() {
        let bank = FilterBank::new(vec![
            FirFilter::new(vec![0.1, 0.2, 0.3]).unwrap(),
            FirFilter::new(vec![-1.0, 0.0, 1e-3]).unwrap(),
        ])
        .unwrap();
        let readout = Readout::new(vec![0.7, -0.125]).unwrap();
        let text = model_to_text(&bank, &readout, Nonlinearity::Tanh).unwrap();
        let (b, r, s) = model_from_text(&text).unwrap();
        assert_eq!((b, r, s), (bank, readout, Nonlinearity::Tanh));
    }
}
