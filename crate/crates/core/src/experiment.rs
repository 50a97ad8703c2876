//! Synthetic regression benchmark: inputs confined to a chosen band of the
//! normalized Laplacian's spectrum, targets `sign(c₀x + c₁Sx + c₂S²x)`, a
//! linear filter bank and a tanh GNN trained on identical data, replicated
//! over random geometric graphs.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::filter::{apply_fir_unchecked, FirFilter};
use crate::gnn::{GraphOperator, Nonlinearity};
use crate::graph::{generate_geometric_graph, laplacian, normalize_support, GeometricGraph, SupportMatrix};
use crate::linalg::{norm2, Matrix};
use crate::spectral::{project_subspace, split_subspace, Band, SubspaceSplit};
use crate::training::{evaluate, train, Dataset, History, TrainConfig, TrainableModel};

/// Band of the spectrum the inputs are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subspace {
    Low,
    High,
    Full,
}

impl Subspace {
    pub const ALL: [Subspace; 3] = [Subspace::Low, Subspace::High, Subspace::Full];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::High => "high",
            Self::Full => "full",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Self::Low => 1,
            Self::High => 2,
            Self::Full => 3,
        }
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subspace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Self::Low),
            "high" => Ok(Self::High),
            "full" => Ok(Self::Full),
            _ => Err(Error::InvalidConfig(format!("unknown subspace `{s}`"))),
        }
    }
}

/// Parses `low`, `high`, `full`, or `all`.
pub fn parse_subspaces(s: &str) -> Result<Vec<Subspace>> {
    if s == "all" {
        Ok(Subspace::ALL.to_vec())
    } else {
        s.split(',').map(|p| p.trim().parse()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    FilterBank,
    Gnn,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FilterBank => "filter_bank",
            Self::Gnn => "gnn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub neighbors: usize,
    pub features: usize,
    pub taps: usize,
    pub subspaces: Vec<Subspace>,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub graphs: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Full-size setting: 30 graphs of 50 nodes, 8000/200/200 samples.
    pub fn paper() -> Self {
        Self {
            n: 50,
            k: 10,
            neighbors: 5,
            features: 32,
            taps: 3,
            subspaces: Subspace::ALL.to_vec(),
            train_size: 8000,
            val_size: 200,
            test_size: 200,
            graphs: 30,
            train: TrainConfig::default(),
            seed: 0,
        }
    }

    /// Scaled-down setting that finishes in minutes.
    pub fn desk() -> Self {
        let mut c = Self::paper();
        c.graphs = 10;
        c.train_size = 2000;
        c.train.epochs = 20;
        c
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            _ => Err(Error::InvalidConfig(format!("unknown preset `{name}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.n {
            return Err(Error::InvalidConfig(format!("need 0 < k < n, got k={} n={}", self.k, self.n)));
        }
        if [self.features, self.taps, self.train_size, self.val_size, self.test_size]
            .contains(&0)
        {
            return Err(Error::InvalidConfig("counts must be positive".into()));
        }
        if self.neighbors == 0 || self.neighbors >= self.n {
            return Err(Error::InvalidConfig("need 0 < neighbors < n".into()));
        }
        self.train.validate()
    }

    /// Applies `key = value` lines (`#` starts a comment).
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: idx + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value `{v}` for `{key}`")))
        }
        match key {
            "n" => self.n = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "neighbors" => self.neighbors = num(key, value)?,
            "features" => self.features = num(key, value)?,
            "taps" => self.taps = num(key, value)?,
            "subspace" => self.subspaces = parse_subspaces(value)?,
            "train" => self.train_size = num(key, value)?,
            "val" => self.val_size = num(key, value)?,
            "test" => self.test_size = num(key, value)?,
            "graphs" => self.graphs = num(key, value)?,
            "epochs" => self.train.epochs = num(key, value)?,
            "batch_size" => self.train.batch_size = num(key, value)?,
            "learning_rate" => self.train.learning_rate = num(key, value)?,
            "decay" => self.train.decay = num(key, value)?,
            "il_weight" => self.train.il_weight = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

/// Unit-norm input: a standard normal draw projected onto the chosen band
/// (no projection for `Full`). A degenerate projection is redrawn once.
pub fn generate_input(split: &SubspaceSplit, mode: Subspace, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let n = split.n();
    let mut last = Error::DegenerateProjection(0.0);
    for _ in 0..2 {
        let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let out = match mode {
            Subspace::Low => project_subspace(split, &w, Band::Low, true),
            Subspace::High => project_subspace(split, &w, Band::High, true),
            Subspace::Full => {
                let norm = norm2(&w);
                if norm < 1e-12 {
                    Err(Error::DegenerateProjection(norm))
                } else {
                    Ok(w.iter().map(|v| v / norm).collect())
                }
            }
        };
        match out {
            Ok(x) => return Ok(x),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// `sign(c₀x + c₁Sx + c₂S²x)` with `sign(0) = +1`.
pub fn generate_target(s_norm: &SupportMatrix, x: &[f64], coeffs: [f64; 3]) -> Result<Vec<f64>> {
    check_len(s_norm.n(), x.len())?;
    let poly = FirFilter::new(coeffs.to_vec())?;
    Ok(apply_fir_unchecked(&poly, s_norm, x)
        .into_iter()
        .map(|v| if v >= 0.0 { 1.0 } else { -1.0 })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

fn draw_set(s_norm: &SupportMatrix, split: &SubspaceSplit, mode: Subspace, count: usize, coeffs: [f64; 3], rng: &mut impl Rng) -> Result<Dataset> {
    let mut set = Dataset::default();
    for _ in 0..count {
        let x = generate_input(split, mode, rng)?;
        set.targets.push(generate_target(s_norm, &x, coeffs)?);
        set.inputs.push(x);
    }
    Ok(set)
}

/// Train, validation and test sets drawn in that order from one stream.
pub fn build_dataset(
    s_norm: &SupportMatrix,
    split: &SubspaceSplit,
    mode: Subspace,
    counts: (usize, usize, usize),
    coeffs: [f64; 3],
    rng: &mut impl Rng,
) -> Result<DatasetSplits> {
    Ok(DatasetSplits {
        train: draw_set(s_norm, split, mode, counts.0, coeffs, rng)?,
        val: draw_set(s_norm, split, mode, counts.1, coeffs, rng)?,
        test: draw_set(s_norm, split, mode, counts.2, coeffs, rng)?,
    })
}

/// Target coefficients, i.i.d. `U[-1, 1]`.
pub fn draw_coefficients(rng: &mut impl Rng) -> [f64; 3] {
    [
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
    ]
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent child seed for a labelled sub-stream.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

const TAG_GRAPH: u64 = 0x6772;
const TAG_DATA: u64 = 0x6461;
const TAG_INIT: u64 = 0x696e;
const TAG_SHUFFLE: u64 = 0x7368;

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub subspace: Subspace,
    pub graph: usize,
    pub model: ModelKind,
    pub test_mse: f64,
    pub il_constant: f64,
    pub wall_time_s: f64,
    pub history: History,
    pub trained: TrainableModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub subspace: Subspace,
    pub model: ModelKind,
    pub mean_error: f64,
    pub ci_halfwidth: f64,
    pub per_graph: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregateReport {
    pub runs: Vec<RunMetrics>,
    pub summaries: Vec<Summary>,
}

impl AggregateReport {
    pub fn summary(&self, subspace: Subspace, model: ModelKind) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.subspace == subspace && s.model == model)
    }

    /// `filter error / gnn error − 1` on the mean errors.
    pub fn relative_gap(&self, subspace: Subspace) -> Option<f64> {
        let f = self.summary(subspace, ModelKind::FilterBank)?;
        let g = self.summary(subspace, ModelKind::Gnn)?;
        Some(f.mean_error / g.mean_error - 1.0)
    }

    /// Per-graph `filter / gnn − 1`, in graph order.
    pub fn per_graph_gaps(&self, subspace: Subspace) -> Vec<f64> {
        match (
            self.summary(subspace, ModelKind::FilterBank),
            self.summary(subspace, ModelKind::Gnn),
        ) {
            (Some(f), Some(g)) => f
                .per_graph
                .iter()
                .zip(&g.per_graph)
                .map(|(a, b)| a / b - 1.0)
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Mean and normal-approximation 95% half-width `1.96·sd/√G`.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let g = values.len();
    if g == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / g as f64;
    if g == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (g - 1) as f64;
    (mean, 1.96 * var.sqrt() / (g as f64).sqrt())
}

/// Graph, normalized Laplacian and split for one replicate.
pub struct Replicate {
    pub graph: GeometricGraph,
    pub operator: GraphOperator,
    pub split: SubspaceSplit,
}

pub fn build_replicate(graph: GeometricGraph, k: usize) -> Result<Replicate> {
    let support = normalize_support(&laplacian(&graph))?;
    let operator = GraphOperator::new(support)?;
    let split = split_subspace(operator.spectrum(), k)?;
    Ok(Replicate {
        graph,
        operator,
        split,
    })
}

pub fn replicate_graph(config: &ExperimentConfig, index: usize) -> Result<GeometricGraph> {
    generate_geometric_graph(
        config.n,
        config.neighbors,
        derive_seed(config.seed, &[TAG_GRAPH, index as u64]),
    )
}

/// Replacements for generated pieces of a run.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    /// Used for every replicate instead of a random graph.
    pub graph: Option<GeometricGraph>,
    /// Initial taps for both models.
    pub init_taps: Option<Matrix>,
    /// Initial readout for both models.
    pub init_readout: Option<Vec<f64>>,
}

impl RunOverrides {
    fn check(&self, config: &ExperimentConfig) -> Result<()> {
        if let Some(g) = &self.graph {
            if g.n() != config.n {
                return Err(Error::InvalidConfig(format!(
                    "loaded graph has {} nodes, config expects {}",
                    g.n(),
                    config.n
                )));
            }
        }
        if let Some(t) = &self.init_taps {
            if (t.rows(), t.cols()) != (config.features, config.taps) {
                return Err(Error::InvalidConfig(format!(
                    "loaded bank is {}x{}, config expects {}x{}",
                    t.rows(),
                    t.cols(),
                    config.features,
                    config.taps
                )));
            }
        }
        if let Some(r) = &self.init_readout {
            check_len(config.features, r.len())?;
        }
        Ok(())
    }
}

fn run_replicate(
    config: &ExperimentConfig,
    overrides: &RunOverrides,
    rep: &Replicate,
    subspace: Subspace,
    index: usize,
) -> Result<Vec<RunMetrics>> {
    let idx = index as u64;
    let s = rep.operator.support();
    let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[TAG_DATA, subspace.tag(), idx]));
    let coeffs = draw_coefficients(&mut data_rng);
    let data = build_dataset(
        s,
        &rep.split,
        subspace,
        (config.train_size, config.val_size, config.test_size),
        coeffs,
        &mut data_rng,
    )?;
    let train_config = TrainConfig {
        seed: derive_seed(config.seed, &[TAG_SHUFFLE, subspace.tag(), idx]),
        ..config.train.clone()
    };
    let init_seed = derive_seed(config.seed, &[TAG_INIT, subspace.tag(), idx]);

    [ModelKind::FilterBank, ModelKind::Gnn]
        .into_iter()
        .map(|kind| {
            let start = Instant::now();
            let mut init_rng = ChaCha8Rng::seed_from_u64(init_seed);
            let mut model = TrainableModel::init(
                config.features,
                config.taps,
                Nonlinearity::Tanh,
                kind == ModelKind::Gnn,
                &mut init_rng,
            )?;
            if let Some(t) = &overrides.init_taps {
                model.taps = t.clone();
            }
            if let Some(r) = &overrides.init_readout {
                model.readout = r.clone();
            }
            let (trained, history) = train(&model, s, &data.train, &data.val, &train_config)?;
            let test_mse = evaluate(&trained, s, &data.test)?;
            let (il_constant, _) = crate::training::il_regularizer(&trained.taps, train_config.lam_max, 1.0);
            Ok(RunMetrics {
                subspace,
                graph: index,
                model: kind,
                test_mse,
                il_constant,
                wall_time_s: start.elapsed().as_secs_f64(),
                history,
                trained,
            })
        })
        .collect()
}

/// Runs every (subspace, graph) replicate, in parallel, and aggregates in
/// replicate order.
pub fn run_experiment_with(config: &ExperimentConfig, overrides: &RunOverrides) -> Result<AggregateReport> {
    config.validate()?;
    overrides.check(config)?;
    let replicates: Vec<Replicate> = (0..config.graphs)
        .into_par_iter()
        .map(|i| {
            let graph = match &overrides.graph {
                Some(g) => g.clone(),
                None => replicate_graph(config, i)?,
            };
            build_replicate(graph, config.k).map_err(|e| Error::Replicate {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(Subspace, usize)> = config
        .subspaces
        .iter()
        .flat_map(|&s| (0..config.graphs).map(move |i| (s, i)))
        .collect();
    let results: Vec<Vec<RunMetrics>> = jobs
        .par_iter()
        .map(|&(s, i)| {
            run_replicate(config, overrides, &replicates[i], s, i).map_err(|e| Error::Replicate {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let runs: Vec<RunMetrics> = results.into_iter().flatten().collect();

    let mut summaries = Vec::new();
    for &sub in &config.subspaces {
        for kind in [ModelKind::FilterBank, ModelKind::Gnn] {
            let per_graph: Vec<f64> = runs
                .iter()
                .filter(|r| r.subspace == sub && r.model == kind)
                .map(|r| r.test_mse)
                .collect();
            let (mean_error, ci_halfwidth) = mean_ci(&per_graph);
            summaries.push(Summary {
                subspace: sub,
                model: kind,
                mean_error,
                ci_halfwidth,
                per_graph,
            });
        }
    }
    Ok(AggregateReport { runs, summaries })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateReport> {
    run_experiment_with(config, &RunOverrides::default())
}

pub const SUMMARY_HEADER: &str = "subspace,model,mean_error,ci_halfwidth,n_graphs";
pub const RUNS_HEADER: &str = "subspace,graph,model,test_mse,il_constant,wall_time_s";

pub fn summary_csv(report: &AggregateReport) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in &report.summaries {
        let _ = writeln!(
            out,
            "{},{},{:.16e},{:.16e},{}",
            s.subspace,
            s.model,
            s.mean_error,
            s.ci_halfwidth,
            s.per_graph.len()
        );
    }
    out
}

pub fn runs_csv(report: &AggregateReport) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for r in &report.runs {
        let _ = writeln!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.6}",
            r.subspace, r.graph, r.model, r.test_mse, r.il_constant, r.wall_time_s
        );
    }
    out
}

/// Fixed-width table of the summaries plus per-subspace relative gaps.
pub fn summary_table(report: &AggregateReport) -> String {
    let mut out = format!(
        "{:<8} {:<12} {:>12} {:>12} {:>8}\n",
        "subspace", "model", "mean_error", "ci95", "graphs"
    );
    for s in &report.summaries {
        let _ = writeln!(
            out,
            "{:<8} {:<12} {:>12.6} {:>12.6} {:>8}",
            s.subspace.as_str(),
            s.model.as_str(),
            s.mean_error,
            s.ci_halfwidth,
            s.per_graph.len()
        );
    }
    let mut seen = Vec::new();
    for s in &report.summaries {
        if seen.contains(&s.subspace) {
            continue;
        }
        seen.push(s.subspace);
        if let Some(gap) = report.relative_gap(s.subspace) {
            let _ = writeln!(out, "gap[{}] = {:+.2}%", s.subspace, 100.0 * gap);
        }
    }
    out
}

/// Writes `summary.csv`, `runs.csv` and per-run histories under `history/`,
/// and prints the summary table.
pub fn emit_report(report: &AggregateReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("summary.csv"), summary_csv(report))?;
    std::fs::write(out_dir.join("runs.csv"), runs_csv(report))?;
    if !report.runs.is_empty() {
        let hist_dir = out_dir.join("history");
        std::fs::create_dir_all(&hist_dir)?;
        for r in &report.runs {
            let name = format!("{}_{:03}_{}.csv", r.subspace, r.graph, r.model);
            std::fs::write(hist_dir.join(name), r.history.to_csv())?;
        }
    }
    print!("{}", summary_table(report));
    Ok(())
}

/// One parsed `summary.csv` row: `(subspace, model, mean, ci, graphs)`.
pub type SummaryRow = (Subspace, String, f64, f64, usize);

/// Parses a `summary.csv` back into rows.
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: "unexpected summary header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Parse {
                line: i + 2,
                msg: format!("bad summary row `{line}`"),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad());
            }
            Ok((
                cols[0].parse()?,
                cols[1].to_string(),
                cols[2].parse().map_err(|_| bad())?,
                cols[3].parse().map_err(|_| bad())?,
                cols[4].parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_ci_values() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - 1.96 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_ci(&[5.0]), (5.0, 0.0));
    }

    #[test]
    fn config_text_overrides() {
        let mut c = ExperimentConfig::desk();
        c.apply_text("# comment\ngraphs = 3\nsubspace = high\nil_weight=0.5 # trailing\n")
            .unwrap();
        assert_eq!(c.graphs, 3);
        assert_eq!(c.subspaces, vec![Subspace::High]);
        assert_eq!(c.train.il_weight, 0.5);
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("graphs").is_err());
    }

    #[test]
    fn presets() {
        let p = ExperimentConfig::paper();
        assert_eq!((p.n, p.k, p.features, p.taps, p.graphs), (50, 10, 32, 3, 30));
        assert_eq!((p.train_size, p.val_size, p.test_size), (8000, 200, 200));
        let d = ExperimentConfig::desk();
        assert_eq!((d.graphs, d.train_size, d.train.epochs), (10, 2000, 20));
        assert!(ExperimentConfig::preset("huge").is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, &[TAG_DATA, 1, 0]);
        let b = derive_seed(7, &[TAG_DATA, 1, 1]);
        let c = derive_seed(8, &[TAG_DATA, 1, 0]);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, derive_seed(7, &[TAG_DATA, 1, 0]));
    }
}
