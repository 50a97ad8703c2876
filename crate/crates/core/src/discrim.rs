//! Nondiscriminable-set membership, secant analysis, and randomized checks
//! of when a pointwise nonlinearity lets a stable single-layer GNN tell
//! apart signals that its linear filter bank cannot.
//!
//! A pair `(x, y)` is nondiscriminable for an architecture when the
//! difference of its outputs has no energy on the `k` lowest-magnitude
//! eigenvectors, i.e. `V_Kᵀ(out(x) − out(y)) = 0`. Exact zero is
//! unattainable in floating point, so membership is decided against a
//! relative threshold `tol · scale · gain`, where `scale = max(‖x‖, ‖y‖)`
//! and `gain` bounds the architecture's amplification (Frobenius norm of
//! the per-filter peak gains, times `C_σ` for the GNN).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::filter::SpectralFilter;
use crate::gnn::{bank_forward, GraphOperator, Nonlinearity, SingleLayerGnn};
use crate::linalg::{axpy, cholesky_solve, norm2, sub};
use crate::spectral::{Spectrum, SubspaceSplit};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SECANT_TOL: f64 = 1e-9;
/// Gains at or below this magnitude count as an exactly-zero response.
pub const ZERO_RESPONSE_TOL: f64 = 1e-10;
const SCALE_FLOOR: f64 = 1e-30;
/// Secant falls back to the derivative when the two inputs are this close.
const SECANT_GAP: f64 = 1e-12;

/// Outcome of a single membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub residual: f64,
    pub threshold: f64,
}

/// Whether `d ∈ Nul(V_Kᵀ)`, relative to `‖d‖`.
pub fn in_nul_vk(split: &SubspaceSplit, d: &[f64], tol: f64) -> Result<Membership> {
    check_len(split.n(), d.len())?;
    let residual = norm2(&split.low_coefficients(d));
    let threshold = tol * norm2(d).max(SCALE_FLOOR);
    Ok(Membership {
        member: residual <= threshold,
        residual,
        threshold,
    })
}

fn pair_scale(x: &[f64], y: &[f64]) -> f64 {
    norm2(x).max(norm2(y)).max(SCALE_FLOOR)
}

fn bank_gain(responses: &[SpectralFilter]) -> f64 {
    responses.iter().map(|r| r.max_gain().powi(2)).sum::<f64>().sqrt()
}

/// `sqrt(Σ_f ‖V_Kᵀ(a_f − b_f)‖²)`
fn joint_low_residual(split: &SubspaceSplit, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(fa, fb)| norm2(&split.low_coefficients(&sub(fa, fb))).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Membership of `(x, y)` in the filter bank's nondiscriminable set. The
/// direct test on `x − y` is run alongside; the two must agree because a
/// linear filter cannot create frequency content.
pub fn pair_in_d_h(
    split: &SubspaceSplit,
    bank: &crate::gnn::Bank,
    op: &GraphOperator,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<Membership> {
    check_len(x.len(), y.len())?;
    let hx = bank_forward(bank, op, x)?;
    let hy = bank_forward(bank, op, y)?;
    let scale = pair_scale(x, y);
    let residual = joint_low_residual(split, &hx, &hy);
    let threshold = tol * scale * bank_gain(&bank.responses(op));
    let filtered = Membership {
        member: residual <= threshold,
        residual,
        threshold,
    };

    let d = sub(x, y);
    let direct = norm2(&split.low_coefficients(&d)) <= tol * scale;
    if direct != filtered.member {
        return Err(Error::Inconsistent(format!(
            "difference test says {direct} but filter-bank test says {} (residual {residual:e}, threshold {threshold:e})",
            filtered.member
        )));
    }
    Ok(filtered)
}

/// Evidence for membership of a pair in the filter-bank and GNN
/// nondiscriminable sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairVerdict {
    pub in_d_h: bool,
    pub in_d_phi: bool,
    pub residual_low_filter: f64,
    pub residual_low_gnn: f64,
    pub threshold_filter: f64,
    pub threshold_gnn: f64,
    pub tolerance_used: f64,
}

/// Membership of `(x, y)` in both sets, aggregating residuals over features.
pub fn pair_in_d_phi(
    split: &SubspaceSplit,
    gnn: &SingleLayerGnn,
    op: &GraphOperator,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<PairVerdict> {
    check_len(x.len(), y.len())?;
    let hx = bank_forward(&gnn.bank, op, x)?;
    let hy = bank_forward(&gnn.bank, op, y)?;
    let activate = |feats: &[Vec<f64>]| -> Vec<Vec<f64>> {
        feats.iter().map(|f| gnn.sigma.apply(f)).collect()
    };
    let (px, py) = (activate(&hx), activate(&hy));

    let base = tol * pair_scale(x, y) * bank_gain(&gnn.bank.responses(op));
    let residual_low_filter = joint_low_residual(split, &hx, &hy);
    let residual_low_gnn = joint_low_residual(split, &px, &py);
    let threshold_filter = base;
    let threshold_gnn = base * gnn.sigma.lipschitz_constant();
    Ok(PairVerdict {
        in_d_h: residual_low_filter <= threshold_filter,
        in_d_phi: residual_low_gnn <= threshold_gnn,
        residual_low_filter,
        residual_low_gnn,
        threshold_filter,
        threshold_gnn,
        tolerance_used: tol,
    })
}

/// A signal pair plus the high-band coefficients of `y − x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub delta: Vec<f64>,
}

fn normal_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Draws `x ~ N(0, I)` and `y = x + V_{N−K}·δ`, `δ ~ N(0, scale²·I)`, so the
/// pair differs only in high-magnitude frequencies.
pub fn sample_pair_in_d_h(split: &SubspaceSplit, rng: &mut impl Rng, scale: f64) -> SampledPair {
    let n = split.n();
    let x = normal_vec(rng, n);
    let delta: Vec<f64> = normal_vec(rng, n - split.k())
        .into_iter()
        .map(|d| d * scale)
        .collect();
    let mut y = x.clone();
    axpy(1.0, &split.v_high().matvec(&delta), &mut y);
    SampledPair { x, y, delta }
}

/// Slope of `σ` between `a` and `b`, or `σ'(a)` when they coincide.
pub fn secant(sigma: Nonlinearity, a: f64, b: f64) -> f64 {
    if (a - b).abs() < SECANT_GAP {
        sigma.derivative(a)
    } else {
        (sigma.eval(a) - sigma.eval(b)) / (a - b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSecants {
    pub secants: Vec<f64>,
    pub max_deviation: f64,
    /// Whether the filter has a nonzero gain above the cutoff index.
    pub high_response_nonzero: bool,
}

/// Per-filter secants of the nonlinearity between the filter outputs of two
/// signals.
#[derive(Debug, Clone, PartialEq)]
pub struct SecantReport {
    pub filters: Vec<FilterSecants>,
}

impl SecantReport {
    /// Largest secant spread among filters with a nonzero high response;
    /// zero when there are none.
    pub fn active_max_deviation(&self) -> f64 {
        self.filters
            .iter()
            .filter(|f| f.high_response_nonzero)
            .fold(0.0, |m, f| m.max(f.max_deviation))
    }

    pub fn is_constant(&self, secant_tol: f64) -> bool {
        self.active_max_deviation() <= secant_tol
    }
}

pub fn high_response_nonzero(response: &SpectralFilter, cutoff_k: usize) -> bool {
    response
        .response()
        .iter()
        .skip(cutoff_k)
        .any(|r| r.abs() > ZERO_RESPONSE_TOL)
}

pub fn secant_report(
    gnn: &SingleLayerGnn,
    op: &GraphOperator,
    x: &[f64],
    y: &[f64],
    cutoff_k: usize,
) -> Result<SecantReport> {
    check_len(x.len(), y.len())?;
    let hx = bank_forward(&gnn.bank, op, x)?;
    let hy = bank_forward(&gnn.bank, op, y)?;
    let responses = gnn.bank.responses(op);
    let filters = hx
        .iter()
        .zip(&hy)
        .zip(&responses)
        .map(|((fx, fy), resp)| {
            let secants: Vec<f64> = fx.iter().zip(fy).map(|(&a, &b)| secant(gnn.sigma, a, b)).collect();
            let mean = secants.iter().sum::<f64>() / secants.len() as f64;
            let max_deviation = secants.iter().fold(0.0f64, |m, b| m.max((b - mean).abs()));
            FilterSecants {
                secants,
                max_deviation,
                high_response_nonzero: high_response_nonzero(resp, cutoff_k),
            }
        })
        .collect();
    Ok(SecantReport { filters })
}

/// One verifier trial, as written to the verification CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub in_d_h: bool,
    pub in_d_phi: bool,
    pub residual_low_filter: f64,
    pub residual_low_gnn: f64,
    pub max_secant_deviation: f64,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str =
        "trial,in_d_h,in_d_phi,residual_low_filter,residual_low_gnn,max_secant_deviation";

    fn from_verdict(trial: usize, v: &PairVerdict, secants: &SecantReport) -> Self {
        Self {
            trial,
            in_d_h: v.in_d_h,
            in_d_phi: v.in_d_phi,
            residual_low_filter: v.residual_low_filter,
            residual_low_gnn: v.residual_low_gnn,
            max_secant_deviation: secants.active_max_deviation(),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            self.trial,
            self.in_d_h,
            self.in_d_phi,
            self.residual_low_filter,
            self.residual_low_gnn,
            self.max_secant_deviation
        )
    }
}

pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TrialRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Tolerances shared by the verifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub tol: f64,
    pub secant_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            secant_tol: DEFAULT_SECANT_TOL,
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trials<T: Send>(
    trials: usize,
    seed: u64,
    f: impl Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, &mut trial_rng(seed, t)))
        .collect()
}

fn zero_high_flags(gnn: &SingleLayerGnn, op: &GraphOperator, k: usize) -> Vec<bool> {
    gnn.bank
        .responses(op)
        .iter()
        .map(|r| !high_response_nonzero(r, k))
        .collect()
}

fn check_split(split: &SubspaceSplit, op: &GraphOperator) -> Result<()> {
    check_len(op.n(), split.n())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub trials: usize,
    pub counterexamples: usize,
    pub log: Vec<TrialRecord>,
}

/// Samples pairs that the filter bank discriminates and counts those the
/// GNN fails to discriminate. Needs at least one filter whose response
/// vanishes above the cutoff; with one, the count should be zero.
pub fn verify_theorem1(
    op: &GraphOperator,
    split: &SubspaceSplit,
    gnn: &SingleLayerGnn,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Theorem1Report> {
    check_split(split, op)?;
    if !zero_high_flags(gnn, op, split.k()).into_iter().any(|z| z) {
        return Err(Error::InvalidConfig(
            "bank needs a filter with zero response above the cutoff".into(),
        ));
    }
    if !gnn.sigma.strictly_monotone() {
        return Err(Error::InvalidConfig("nonlinearity must be strictly monotone".into()));
    }
    let n = op.n();
    let log = run_trials(trials, seed, |t, rng| {
        for _ in 0..100 {
            let x = normal_vec(rng, n);
            let y = normal_vec(rng, n);
            let v = pair_in_d_phi(split, gnn, op, &x, &y, tol)?;
            if v.in_d_h {
                continue;
            }
            let s = secant_report(gnn, op, &x, &y, split.k())?;
            return Ok(TrialRecord::from_verdict(t, &v, &s));
        }
        Err(Error::Numerical(format!(
            "trial {t}: no pair outside D_H after 100 draws"
        )))
    })?;
    let counterexamples = log.iter().filter(|r| r.in_d_phi).count();
    Ok(Theorem1Report {
        trials,
        counterexamples,
        log,
    })
}

/// How verifier pairs inside the filter bank's nondiscriminable set are
/// drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// [`sample_pair_in_d_h`] with unit scale.
    Random,
    /// Random pair shifted by a constant offset large enough that every
    /// filter output of both signals is positive.
    PositiveRegime,
}

/// Shifts a sampled pair by `t·1` so that every filter output of both
/// signals is strictly positive. Requires `H^f·1 > 0` entrywise for all
/// filters.
pub fn shift_to_positive_regime(
    gnn: &SingleLayerGnn,
    op: &GraphOperator,
    pair: SampledPair,
) -> Result<SampledPair> {
    let n = op.n();
    let ones = vec![1.0; n];
    let lift = bank_forward(&gnn.bank, op, &ones)?;
    if lift.iter().flatten().any(|&u| u <= 0.0) {
        return Err(Error::InvalidConfig(
            "positive-regime pairs need every filter to map the all-ones signal to a positive signal".into(),
        ));
    }
    let hx = bank_forward(&gnn.bank, op, &pair.x)?;
    let hy = bank_forward(&gnn.bank, op, &pair.y)?;
    let mut t = 0.0f64;
    for ((u, fx), fy) in lift.iter().zip(&hx).zip(&hy) {
        for i in 0..n {
            t = t.max(-fx[i].min(fy[i]) / u[i]);
        }
    }
    // clear of zero by a unit margin
    t += 1.0;
    let shift = |v: &[f64]| v.iter().map(|a| a + t).collect::<Vec<f64>>();
    Ok(SampledPair {
        x: shift(&pair.x),
        y: shift(&pair.y),
        delta: pair.delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Report {
    pub trials: usize,
    /// Trials where "constant secant" and "in D_Φ" agree.
    pub agreements: usize,
    pub constant_secant: usize,
    pub in_d_phi: usize,
    /// Smallest `|log10(residual / threshold)|` of the D_Φ decision.
    pub worst_margin: f64,
    pub max_residual_low_gnn: f64,
    pub log: Vec<TrialRecord>,
}

impl Theorem2Report {
    pub fn agreement_rate(&self) -> f64 {
        self.agreements as f64 / self.trials.max(1) as f64
    }
}

/// For pairs the filter bank cannot discriminate, checks that the GNN fails
/// to discriminate exactly when the secants are constant across nodes.
pub fn verify_theorem2_forward(
    op: &GraphOperator,
    split: &SubspaceSplit,
    gnn: &SingleLayerGnn,
    trials: usize,
    seed: u64,
    opts: VerifyOptions,
    mode: PairMode,
) -> Result<Theorem2Report> {
    check_split(split, op)?;
    if gnn.features() < 2 {
        return Err(Error::InvalidConfig("needs at least two filters".into()));
    }
    if !zero_high_flags(gnn, op, split.k())[0] {
        return Err(Error::InvalidConfig(
            "first filter must have zero response above the cutoff".into(),
        ));
    }
    let results = run_trials(trials, seed, |t, rng| {
        let mut pair = sample_pair_in_d_h(split, rng, 1.0);
        if mode == PairMode::PositiveRegime {
            pair = shift_to_positive_regime(gnn, op, pair)?;
        }
        let v = pair_in_d_phi(split, gnn, op, &pair.x, &pair.y, opts.tol)?;
        let s = secant_report(gnn, op, &pair.x, &pair.y, split.k())?;
        Ok((v, TrialRecord::from_verdict(t, &v, &s), s.is_constant(opts.secant_tol)))
    })?;

    let mut report = Theorem2Report {
        trials,
        agreements: 0,
        constant_secant: 0,
        in_d_phi: 0,
        worst_margin: f64::INFINITY,
        max_residual_low_gnn: 0.0,
        log: Vec::with_capacity(trials),
    };
    for (v, rec, constant) in results {
        report.agreements += usize::from(constant == v.in_d_phi);
        report.constant_secant += usize::from(constant);
        report.in_d_phi += usize::from(v.in_d_phi);
        let margin = if v.threshold_gnn > 0.0 && v.residual_low_gnn > 0.0 {
            (v.residual_low_gnn / v.threshold_gnn).log10().abs()
        } else {
            f64::INFINITY
        };
        report.worst_margin = report.worst_margin.min(margin);
        report.max_residual_low_gnn = report.max_residual_low_gnn.max(v.residual_low_gnn);
        report.log.push(rec);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corollary1Report {
    pub trials: usize,
    pub agreements: usize,
    pub in_d_h: usize,
    pub log: Vec<TrialRecord>,
}

/// Mixed trials (even: pairs inside D_H, odd: generic pairs) with a bank
/// whose every filter vanishes above the cutoff; the two sets must agree.
pub fn verify_corollary1(
    op: &GraphOperator,
    split: &SubspaceSplit,
    gnn: &SingleLayerGnn,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Corollary1Report> {
    check_split(split, op)?;
    if !zero_high_flags(gnn, op, split.k()).into_iter().all(|z| z) {
        return Err(Error::InvalidConfig(
            "every filter must have zero response above the cutoff".into(),
        ));
    }
    let n = op.n();
    let log = run_trials(trials, seed, |t, rng| {
        let (x, y) = if t % 2 == 0 {
            let p = sample_pair_in_d_h(split, rng, 1.0);
            (p.x, p.y)
        } else {
            (normal_vec(rng, n), normal_vec(rng, n))
        };
        let v = pair_in_d_phi(split, gnn, op, &x, &y, tol)?;
        let s = secant_report(gnn, op, &x, &y, split.k())?;
        Ok(TrialRecord::from_verdict(t, &v, &s))
    })?;
    Ok(Corollary1Report {
        trials,
        agreements: log.iter().filter(|r| r.in_d_h == r.in_d_phi).count(),
        in_d_h: log.iter().filter(|r| r.in_d_h).count(),
        log,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corollary2Report {
    pub trials: usize,
    /// Pairs in D_Φ but not in D_H.
    pub subset_violations: usize,
    /// Pairs in D_H but not in D_Φ.
    pub strict_witnesses: usize,
    pub first_witness: Option<usize>,
    /// Least-squares residual of the constant-secant system, one per trial.
    pub probe_residuals: Vec<f64>,
    pub log: Vec<TrialRecord>,
}

impl Corollary2Report {
    pub fn probe_fraction_above(&self, threshold: f64) -> f64 {
        let hits = self.probe_residuals.iter().filter(|&&r| r > threshold).count();
        hits as f64 / self.probe_residuals.len().max(1) as f64
    }
}

/// Nonzero solution `ε` of `tanh(a) − tanh(a − ε) = b·ε` with the smallest
/// magnitude, or `None` when only the trivial root exists.
pub fn constant_secant_offset(a: f64, b: f64) -> Option<f64> {
    let g = |e: f64| a.tanh() - (a - e).tanh() - b * e;
    let slope0 = Nonlinearity::Tanh.derivative(a) - b;
    if slope0 == 0.0 {
        return None;
    }
    // past this, |b·ε| > 2 bounds the tanh difference and g cannot vanish
    let reach = 2.0 / b + 2.0;
    let mut best: Option<f64> = None;
    for dir in [1.0, -1.0] {
        // sign of g just off zero in this direction
        let s0 = slope0.signum() * dir;
        let mut lo = 0.0;
        let mut found = None;
        let steps = 600;
        for j in 1..=steps {
            let e = dir * reach * (1e-9f64).powf(1.0 - j as f64 / steps as f64);
            if g(e).signum() == -s0 {
                found = Some((lo, e));
                break;
            }
            lo = e;
        }
        if let Some((mut lo, mut hi)) = found {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if g(mid).signum() == s0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            if best.is_none_or(|r: f64| root.abs() < r.abs()) {
                best = Some(root);
            }
        }
    }
    best
}

/// Residual of the least-squares fit `min_δ ‖V_{N−K}·δ − ε*(b)‖` where
/// `ε*_i(b)` is the per-node offset that would give secant `b` at
/// pre-activation `a_i`. A nonzero residual means no high-band difference
/// produces a constant secant `b`.
pub fn constant_secant_probe(split: &SubspaceSplit, pre_activation: &[f64], b: f64) -> Result<f64> {
    check_len(split.n(), pre_activation.len())?;
    let target: Vec<f64> = pre_activation
        .iter()
        .map(|&a| constant_secant_offset(a, b).unwrap_or(0.0))
        .collect();
    let vh = split.v_high();
    let gram = vh.transpose().matmul(vh);
    let rhs = vh.tr_matvec(&target);
    let delta = cholesky_solve(&gram, &rhs)
        .ok_or_else(|| Error::Numerical("normal equations are not positive definite".into()))?;
    Ok(norm2(&sub(&vh.matvec(&delta), &target)))
}

/// Checks `D_Φ ⊂ D_H` for a tanh GNN: no sampled pair lands in D_Φ outside
/// D_H, some pair in D_H is discriminated, and the constant-secant system
/// has no exact solution on random draws.
pub fn verify_corollary2(
    op: &GraphOperator,
    split: &SubspaceSplit,
    gnn: &SingleLayerGnn,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Corollary2Report> {
    check_split(split, op)?;
    if split.n() - split.k() <= 1 {
        return Err(Error::InvalidConfig("needs more than one high-band eigenvector".into()));
    }
    if gnn.sigma != Nonlinearity::Tanh {
        return Err(Error::InvalidConfig("nonlinearity must be tanh".into()));
    }
    let active = zero_high_flags(gnn, op, split.k())
        .iter()
        .position(|z| !z)
        .ok_or_else(|| {
            Error::InvalidConfig("needs a filter with nonzero response above the cutoff".into())
        })?;
    let n = op.n();
    let results = run_trials(trials, seed, |t, rng| {
        let (x, y) = if t % 2 == 0 {
            let p = sample_pair_in_d_h(split, rng, 1.0);
            (p.x, p.y)
        } else {
            (normal_vec(rng, n), normal_vec(rng, n))
        };
        let v = pair_in_d_phi(split, gnn, op, &x, &y, tol)?;
        let s = secant_report(gnn, op, &x, &y, split.k())?;

        let probe_x = normal_vec(rng, n);
        let pre = &bank_forward(&gnn.bank, op, &probe_x)?[active];
        let b: f64 = rng.random_range(f64::EPSILON..1.0);
        let residual = constant_secant_probe(split, pre, b)?;
        Ok((TrialRecord::from_verdict(t, &v, &s), residual))
    })?;

    let (log, probe_residuals): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let witnesses: Vec<usize> = log
        .iter()
        .filter(|r| r.in_d_h && !r.in_d_phi)
        .map(|r| r.trial)
        .collect();
    Ok(Corollary2Report {
        trials,
        subset_violations: log.iter().filter(|r| r.in_d_phi && !r.in_d_h).count(),
        strict_witnesses: witnesses.len(),
        first_witness: witnesses.first().copied(),
        probe_residuals,
        log,
    })
}

fn random_gains(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let mag = rng.random_range(0.5..1.5);
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Filter with random gains of magnitude in `[0.5, 1.5)` on the `k` low
/// eigenvalues and exactly zero above.
pub fn random_zero_high_filter(spec: &Spectrum, k: usize, rng: &mut impl Rng) -> Result<SpectralFilter> {
    crate::filter::zero_high_response(spec, k, &random_gains(rng, k))
}

/// Random low gains and a single constant nonzero gain on every high
/// eigenvalue, the flat-tail shape assumed for filters that do respond
/// above the cutoff.
pub fn random_flat_high_filter(spec: &Spectrum, k: usize, rng: &mut impl Rng) -> Result<SpectralFilter> {
    let n = spec.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidConfig(format!("split index k={k} must satisfy 0 < k < {n}")));
    }
    let mut response = random_gains(rng, k);
    let high = random_gains(rng, 1)[0];
    response.resize(n, high);
    SpectralFilter::new(response)
}

/// Independent random gains on every eigenvalue.
pub fn random_full_band_filter(spec: &Spectrum, rng: &mut impl Rng) -> Result<SpectralFilter> {
    SpectralFilter::new(random_gains(rng, spec.n()))
}

/// Same gains but with positive sign, so the bank maps positive
/// low-frequency signals to positive outputs.
pub fn positive_filter(filter: &SpectralFilter) -> SpectralFilter {
    SpectralFilter::new(filter.response().iter().map(|r| r.abs()).collect())
        .expect("abs of finite gains is finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secant_of_tanh() {
        let b = secant(Nonlinearity::Tanh, 1.0, -1.0);
        assert!((b - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(secant(Nonlinearity::Tanh, 0.0, 0.0), 1.0);
        assert_eq!(secant(Nonlinearity::Identity, 3.0, -2.0), 1.0);
    }

    #[test]
    fn offset_solves_secant_equation() {
        for &(a, b) in &[(0.3, 0.5), (-1.2, 0.2), (2.0, 0.3), (0.0, 0.99)] {
            let e = constant_secant_offset(a, b).expect("root exists");
            assert!(e != 0.0);
            let slope = (a.tanh() - (a - e).tanh()) / e;
            assert!((slope - b).abs() < 1e-9, "a={a} b={b} e={e} slope={slope}");
        }
    }

    #[test]
    fn offset_absent_when_secant_unreachable() {
        // secants of tanh never reach 1
        assert_eq!(constant_secant_offset(0.5, 0.9999999), None);
    }

    #[test]
    fn csv_header_matches_row_arity() {
        let r = TrialRecord {
            trial: 3,
            in_d_h: true,
            in_d_phi: false,
            residual_low_filter: 0.0,
            residual_low_gnn: 1.5,
            max_secant_deviation: 0.25,
        };
        let csv = records_to_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 6);
        assert!(lines.next().unwrap().starts_with("3,true,false,"));
    }
}
