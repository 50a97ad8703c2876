//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gsp_discrim::experiment::{parse_summary_csv, Subspace};
use gsp_discrim::suites::{run_suite, Suite};
use gsp_discrim::training::{gradient_check, GRADCHECK_REL_TOL};
use gsp_discrim::{apply_fir, eig_sym, freq_response, generate_geometric_graph, gft, laplacian, normalize_support, FirFilter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn spectral_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for trial in 0..100 {
        let n = rng.random_range(2..=50);
        let neighbors = 5.min(n - 1);
        let g = generate_geometric_graph(n, neighbors, trial).unwrap();
        let s = normalize_support(&laplacian(&g)).unwrap();
        let spec = eig_sym(&s).unwrap();
        let taps: Vec<f64> = (0..rng.random_range(1..=5)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = FirFilter::new(taps).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let lhs = gft(&spec, &apply_fir(&f, &s, &x).unwrap()).unwrap();
        let xt = gft(&spec, &x).unwrap();
        let err = lhs
            .iter()
            .zip(&xt)
            .zip(spec.eigenvalues())
            .map(|((a, b), &lam)| (a - freq_response(&f, lam) * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = err / xn;
        worst = worst.max(rel);
        if err > 1e-9 * xn {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: failures == 0 && elapsed < Duration::from_secs(10),
        detail: format!("100 triples, {failures} over tolerance, worst {worst:.2e}·‖x‖, {:.2}s", elapsed.as_secs_f64()),
    }
}

fn suite(s: Suite, trials: usize, budget: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let r = run_suite(s, trials, 0).unwrap();
    let elapsed = start.elapsed();
    let in_time = budget.is_none_or(|b| elapsed < b);
    Outcome {
        passed: r.passed && in_time,
        detail: format!("{} trials, {}, {:.2}s", r.trials, r.detail, elapsed.as_secs_f64()),
    }
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let report = gradient_check(20, 0).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        passed: report.cases.len() >= 20
            && report.all_passed()
            && report.max_rel_error() <= GRADCHECK_REL_TOL
            && elapsed < Duration::from_secs(60),
        detail: format!(
            "{} configurations, max relative error {:.2e}, {:.2}s",
            report.cases.len(),
            report.max_rel_error(),
            elapsed.as_secs_f64()
        ),
    }
}

fn desk_run(out: &Path) -> (bool, Duration, String) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_gsp-discrim"))
        .args(["run", "--preset", "desk", "--seed", "7", "--out"])
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("failed to launch gsp-discrim");
    let elapsed = start.elapsed();
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap_or_default();
    (status.success(), elapsed, summary)
}

fn desk_gaps(ok: bool, elapsed: Duration, summary: &str) -> Outcome {
    if !ok {
        return Outcome { passed: false, detail: "desk run failed".into() };
    }
    let rows = match parse_summary_csv(summary) {
        Ok(r) => r,
        Err(e) => return Outcome { passed: false, detail: format!("unreadable summary: {e}") },
    };
    let mean = |sub: Subspace, model: &str| {
        rows.iter().find(|r| r.0 == sub && r.1 == model).map(|r| r.2).unwrap_or(f64::NAN)
    };
    let gap = |sub: Subspace| mean(sub, "filter_bank") / mean(sub, "gnn") - 1.0;
    let (low, high, full) = (gap(Subspace::Low), gap(Subspace::High), gap(Subspace::Full));
    Outcome {
        passed: high >= 0.25 && low.abs() <= 0.15 && full.abs() <= 0.15 && elapsed < Duration::from_secs(15 * 60),
        detail: format!(
            "gap high {:+.2}% (need ≥ +25%), low {:+.2}%, full {:+.2}% (need within ±15%), {:.0}s",
            100.0 * high,
            100.0 * low,
            100.0 * full,
            elapsed.as_secs_f64()
        ),
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 spectral equivalence", spectral_equivalence()),
        ("2 zero-high tanh bank", suite(Suite::Theorem1, 1000, Some(Duration::from_secs(30)))),
        ("3a identity activation agreement", suite(Suite::Theorem2Identity, 500, None)),
        ("3b leaky-rectifier positive pairs", suite(Suite::Theorem2Positive, 500, None)),
        ("3c tanh discriminates D_H pairs", suite(Suite::Theorem2Tanh, 1000, None)),
        ("4 all-zero-high bank agreement", suite(Suite::Corollary1, 500, None)),
        ("5 strict inclusion witnesses", suite(Suite::Corollary2, 2000, None)),
        ("6 gradient check", gradients()),
    ];

    let (ok_a, t_a, sum_a) = desk_run(&dir.path().join("a"));
    results.push(("7 desk-scale gap", desk_gaps(ok_a, t_a, &sum_a)));
    let (ok_b, _, sum_b) = desk_run(&dir.path().join("b"));
    results.push((
        "8 deterministic summary.csv",
        Outcome {
            passed: ok_a && ok_b && !sum_a.is_empty() && sum_a == sum_b,
            detail: format!("{} bytes vs {} bytes, identical: {}", sum_a.len(), sum_b.len(), sum_a == sum_b),
        },
    ));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {:<36} {}", if o.passed { "PASS" } else { "FAIL" }, name, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {} failed", results.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
