use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gsp_discrim::experiment::{
    emit_report, parse_subspaces, replicate_graph, run_experiment_with, AggregateReport,
    ExperimentConfig, ModelKind, RunOverrides,
};
use gsp_discrim::gnn::{model_from_text, model_to_text};
use gsp_discrim::suites::{run_suite, Suite};
use gsp_discrim::training::{gradient_check, TrainableModel};
use gsp_discrim::{Error, FilterBank, GeometricGraph, Nonlinearity, Result};

#[derive(Parser)]
#[command(name = "gsp-discrim", version, about = "Filter-bank vs. GNN discriminability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train filter banks and GNNs on band-limited synthetic data.
    Run(Box<RunArgs>),
    /// Randomized checks of the discriminability results.
    Verify(VerifyArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Desk,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    /// key = value file applied on top of the preset
    #[arg(long)]
    config: Option<PathBuf>,
    /// low, high, full, or all
    #[arg(long)]
    subspace: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    graphs: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    il_weight: Option<f64>,
    /// Write the first replicate's graph to this file.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Use this graph for every replicate instead of random ones.
    #[arg(long)]
    load_graph: Option<PathBuf>,
    /// Directory for every trained bank (`<subspace>_<graph>_<model>.bank`).
    #[arg(long, value_name = "DIR")]
    save_bank: Option<PathBuf>,
    /// Directory for every trained model (bank, readout, activation).
    #[arg(long, value_name = "DIR")]
    save_model: Option<PathBuf>,
    /// Initial taps for both models, in bank text format.
    #[arg(long, conflicts_with = "load_model")]
    load_bank: Option<PathBuf>,
    /// Initial taps and readout for both models, in model text format.
    #[arg(long)]
    load_model: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "cor1")]
    Cor1,
    #[value(name = "cor2")]
    Cor2,
    All,
}

impl Theorem {
    fn as_str(self) -> &'static str {
        match self {
            Self::One => "1",
            Self::Two => "2",
            Self::Cor1 => "cor1",
            Self::Cor2 => "cor2",
            Self::All => "all",
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    theorem: Theorem,
    /// Total trials per suite (defaults differ per suite)
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match args.preset {
        Preset::Paper => ExperimentConfig::paper(),
        Preset::Desk => ExperimentConfig::desk(),
    };
    if let Some(path) = &args.config {
        config.apply_text(&std::fs::read_to_string(path)?)?;
    }
    if let Some(s) = &args.subspace {
        config.subspaces = parse_subspaces(s)?;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.graphs {
        config.graphs = v;
    }
    if let Some(v) = args.epochs {
        config.train.epochs = v;
    }
    if let Some(v) = args.batch_size {
        config.train.batch_size = v;
    }
    if let Some(v) = args.il_weight {
        config.train.il_weight = v;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<bool> {
    let config = build_config(&args)?;
    let mut overrides = RunOverrides::default();
    if let Some(p) = &args.load_graph {
        overrides.graph = Some(GeometricGraph::from_text(&std::fs::read_to_string(p)?)?);
    }
    if let Some(p) = &args.load_bank {
        overrides.init_taps = Some(FilterBank::from_text(&std::fs::read_to_string(p)?)?.tap_matrix());
    }
    if let Some(p) = &args.load_model {
        let (bank, readout, _) = model_from_text(&std::fs::read_to_string(p)?)?;
        overrides.init_taps = Some(bank.tap_matrix());
        overrides.init_readout = Some(readout.weights().to_vec());
    }
    if let Some(p) = &args.dump_graph {
        let g = match &overrides.graph {
            Some(g) => g.clone(),
            None => replicate_graph(&config, 0)?,
        };
        std::fs::write(p, g.to_text())?;
    }
    let report = run_experiment_with(&config, &overrides)?;
    emit_report(&report, &args.out)?;
    if let Some(dir) = &args.save_bank {
        save_trained(&report, dir, "bank", |m, _| Ok(m.bank()?.to_text()))?;
    }
    if let Some(dir) = &args.save_model {
        save_trained(&report, dir, "model", |m, kind| {
            // the linear model is stored with the identity activation
            let sigma = match kind {
                ModelKind::FilterBank => Nonlinearity::Identity,
                ModelKind::Gnn => m.sigma,
            };
            model_to_text(&m.bank()?, &m.readout()?, sigma)
        })?;
    }
    Ok(true)
}

fn save_trained(
    report: &AggregateReport,
    dir: &Path,
    ext: &str,
    render: impl Fn(&TrainableModel, ModelKind) -> Result<String>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in &report.runs {
        let name = format!("{}_{:03}_{}.{ext}", r.subspace, r.graph, r.model);
        std::fs::write(dir.join(name), render(&r.trained, r.model)?)?;
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<bool> {
    std::fs::create_dir_all(&args.out)?;
    let mut all = true;
    for suite in Suite::select(args.theorem.as_str())? {
        let trials = args.trials.unwrap_or_else(|| suite.default_trials());
        let result = run_suite(suite, trials, args.seed)?;
        std::fs::write(args.out.join(format!("verify_{}.csv", suite.name())), result.to_csv())?;
        println!(
            "{:<20} {}  {}",
            suite.name(),
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
        all &= result.passed;
    }
    Ok(all)
}

fn gradcheck(args: GradcheckArgs) -> Result<bool> {
    let report = gradient_check(args.trials, args.seed)?;
    print!("{}", report.to_csv());
    println!(
        "max relative error {:.3e} over {} configurations: {}",
        report.max_rel_error(),
        report.cases.len(),
        if report.all_passed() { "PASS" } else { "FAIL" }
    );
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(*a),
        Command::Verify(a) => verify(a),
        Command::Gradcheck(a) => gradcheck(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidConfig(_) | Error::Parse { .. } => 2,
                _ => 3,
            })
        }
    }
}
