//! Randomized check suites over fresh geometric graphs, shared by the
//! `verify` subcommand and the test harness. Each suite reports a pass flag
//! against a fixed bar alongside the raw counts.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::discrim::{
    positive_filter, random_full_band_filter, random_zero_high_filter, verify_corollary1,
    verify_corollary2, verify_theorem1, verify_theorem2_forward, PairMode, TrialRecord,
    VerifyOptions, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::experiment::{build_replicate, derive_seed, Replicate};
use crate::gnn::{Bank, Nonlinearity, SingleLayerGnn};
use crate::graph::generate_geometric_graph;

/// Graph size, cutoff and neighbor count used by the suites.
pub const SUITE_N: usize = 20;
pub const SUITE_K: usize = 4;
pub const SUITE_NEIGHBORS: usize = 5;
pub const SUITE_GRAPHS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    Theorem2Identity,
    Theorem2Positive,
    Theorem2Tanh,
    Corollary1,
    Corollary2,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Theorem1 => "theorem1",
            Self::Theorem2Identity => "theorem2_identity",
            Self::Theorem2Positive => "theorem2_positive",
            Self::Theorem2Tanh => "theorem2_tanh",
            Self::Corollary1 => "corollary1",
            Self::Corollary2 => "corollary2",
        }
    }

    /// Trial count used when none is given.
    pub fn default_trials(&self) -> usize {
        match self {
            Self::Theorem1 | Self::Theorem2Tanh => 1000,
            Self::Theorem2Identity | Self::Theorem2Positive | Self::Corollary1 => 500,
            Self::Corollary2 => 2000,
        }
    }

    /// Suites selected by a `--theorem` value.
    pub fn select(name: &str) -> Result<Vec<Suite>> {
        Ok(match name {
            "1" => vec![Self::Theorem1],
            "2" => vec![Self::Theorem2Identity, Self::Theorem2Positive, Self::Theorem2Tanh],
            "cor1" => vec![Self::Corollary1],
            "cor2" => vec![Self::Corollary2],
            "all" => vec![
                Self::Theorem1,
                Self::Theorem2Identity,
                Self::Theorem2Positive,
                Self::Theorem2Tanh,
                Self::Corollary1,
                Self::Corollary2,
            ],
            _ => return Err(Error::InvalidConfig(format!("unknown theorem `{name}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub trials: usize,
    pub passed: bool,
    /// Human-readable counts behind the verdict.
    pub detail: String,
    /// Per-trial records tagged with the graph they ran on.
    pub log: Vec<(usize, TrialRecord)>,
}

impl SuiteResult {
    /// One row per trial, numbered across graphs in graph order.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", TrialRecord::CSV_HEADER);
        for (t, (_, r)) in self.log.iter().enumerate() {
            let row = TrialRecord { trial: t, ..*r };
            let _ = writeln!(out, "{}", row.csv_row());
        }
        out
    }
}

/// Graph `index` of a suite, with its operator and split.
pub fn suite_graph(seed: u64, index: usize) -> Result<Replicate> {
    let graph = generate_geometric_graph(SUITE_N, SUITE_NEIGHBORS, derive_seed(seed, &[0x7375, index as u64]))?;
    build_replicate(graph, SUITE_K)
}

/// Splits `trials` over the suite graphs as evenly as possible.
fn per_graph(trials: usize) -> Vec<usize> {
    (0..SUITE_GRAPHS)
        .map(|g| trials / SUITE_GRAPHS + usize::from(g < trials % SUITE_GRAPHS))
        .collect()
}

fn bank_rng(seed: u64, g: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x6261, g as u64]))
}

fn tag(g: usize, log: Vec<TrialRecord>) -> impl Iterator<Item = (usize, TrialRecord)> {
    log.into_iter().map(move |r| (g, r))
}

/// Runs one suite with `trials` total trials spread over ten graphs.
pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<SuiteResult> {
    let mut log = Vec::with_capacity(trials);
    let (passed, detail) = match suite {
        Suite::Theorem1 => {
            let mut counterexamples = 0;
            for (g, t) in per_graph(trials).into_iter().enumerate() {
                let rep = suite_graph(seed, g)?;
                let spec = rep.operator.spectrum();
                let mut rng = bank_rng(seed, g);
                let bank = Bank::spectral(vec![
                    random_zero_high_filter(spec, SUITE_K, &mut rng)?,
                    random_full_band_filter(spec, &mut rng)?,
                    random_full_band_filter(spec, &mut rng)?,
                ])?;
                let gnn = SingleLayerGnn::new(bank, Nonlinearity::Tanh)?;
                let r = verify_theorem1(&rep.operator, &rep.split, &gnn, t, derive_seed(seed, &[1, g as u64]), DEFAULT_TOL)?;
                counterexamples += r.counterexamples;
                log.extend(tag(g, r.log));
            }
            (
                counterexamples == 0,
                format!("{counterexamples} counterexamples in {trials} pairs outside D_H"),
            )
        }
        Suite::Theorem2Identity | Suite::Theorem2Positive | Suite::Theorem2Tanh => {
            let (mut agree, mut in_phi, mut max_res) = (0, 0, 0.0f64);
            for (g, t) in per_graph(trials).into_iter().enumerate() {
                let rep = suite_graph(seed, g)?;
                let spec = rep.operator.spectrum();
                let mut rng = bank_rng(seed, g);
                let mut filters = vec![
                    random_zero_high_filter(spec, SUITE_K, &mut rng)?,
                    random_full_band_filter(spec, &mut rng)?,
                    random_full_band_filter(spec, &mut rng)?,
                ];
                let (sigma, mode) = match suite {
                    Suite::Theorem2Identity => (Nonlinearity::Identity, PairMode::Random),
                    Suite::Theorem2Positive => {
                        filters = filters.iter().map(positive_filter).collect();
                        (Nonlinearity::leaky_rectifier(0.1)?, PairMode::PositiveRegime)
                    }
                    _ => (Nonlinearity::Tanh, PairMode::Random),
                };
                let gnn = SingleLayerGnn::new(Bank::spectral(filters)?, sigma)?;
                let r = verify_theorem2_forward(
                    &rep.operator,
                    &rep.split,
                    &gnn,
                    t,
                    derive_seed(seed, &[2, g as u64]),
                    VerifyOptions::default(),
                    mode,
                )?;
                agree += r.agreements;
                in_phi += r.in_d_phi;
                max_res = max_res.max(r.max_residual_low_gnn);
                log.extend(tag(g, r.log));
            }
            match suite {
                Suite::Theorem2Identity => (
                    agree == trials,
                    format!("{agree}/{trials} verdicts agree"),
                ),
                Suite::Theorem2Positive => (
                    in_phi == trials && max_res <= 1e-9,
                    format!("{in_phi}/{trials} nondiscriminable, max residual {max_res:.3e}"),
                ),
                _ => {
                    let discriminated = trials - in_phi;
                    (
                        discriminated as f64 >= 0.99 * trials as f64,
                        format!("{discriminated}/{trials} discriminated, {agree}/{trials} verdicts agree"),
                    )
                }
            }
        }
        Suite::Corollary1 => {
            let mut agree = 0;
            for (g, t) in per_graph(trials).into_iter().enumerate() {
                let rep = suite_graph(seed, g)?;
                let spec = rep.operator.spectrum();
                let mut rng = bank_rng(seed, g);
                let bank = Bank::spectral(
                    (0..3)
                        .map(|_| random_zero_high_filter(spec, SUITE_K, &mut rng))
                        .collect::<Result<_>>()?,
                )?;
                let gnn = SingleLayerGnn::new(bank, Nonlinearity::Tanh)?;
                let r = verify_corollary1(&rep.operator, &rep.split, &gnn, t, derive_seed(seed, &[3, g as u64]), DEFAULT_TOL)?;
                agree += r.agreements;
                log.extend(tag(g, r.log));
            }
            (agree == trials, format!("{agree}/{trials} verdicts agree"))
        }
        Suite::Corollary2 => {
            let (mut graphs_with_witness, mut violations) = (0, 0);
            let mut residuals = Vec::with_capacity(trials);
            let mut first = Vec::new();
            for (g, t) in per_graph(trials).into_iter().enumerate() {
                let rep = suite_graph(seed, g)?;
                let spec = rep.operator.spectrum();
                let mut rng = bank_rng(seed, g);
                let bank = Bank::spectral(vec![
                    random_zero_high_filter(spec, SUITE_K, &mut rng)?,
                    random_full_band_filter(spec, &mut rng)?,
                ])?;
                let gnn = SingleLayerGnn::new(bank, Nonlinearity::Tanh)?;
                let r = verify_corollary2(&rep.operator, &rep.split, &gnn, t, derive_seed(seed, &[4, g as u64]), DEFAULT_TOL)?;
                violations += r.subset_violations;
                // witness must show up within the first 200 trials of each graph
                if r.first_witness.is_some_and(|w| w < 200) {
                    graphs_with_witness += 1;
                }
                first.push(r.first_witness);
                residuals.extend(r.probe_residuals);
                log.extend(tag(g, r.log));
            }
            let above = residuals.iter().filter(|&&r| r > 1e-6).count();
            let frac = above as f64 / residuals.len().max(1) as f64;
            (
                graphs_with_witness == SUITE_GRAPHS && violations == 0 && frac >= 0.95,
                format!(
                    "witness on {graphs_with_witness}/{SUITE_GRAPHS} graphs (first at {first:?}), \
                     {violations} subset violations, probe residual > 1e-6 in {above}/{}",
                    residuals.len()
                ),
            )
        }
    };
    Ok(SuiteResult {
        suite,
        trials,
        passed,
        detail,
        log,
    })
}
