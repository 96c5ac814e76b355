//! The acceptance gate: one test per criterion, each printing a single
//! "criterion N: PASS/FAIL" line (plus per-cell detail) before asserting.
//! Criteria 1-3 share one six-cell study of 200 replicates each. Reference
//! means and spreads are pinned as constants; a cell passes when its mean
//! lies within two spreads of the reference.

use mixpredict::fpca::{center, fit_fpca};
use mixpredict::glm::{fit_logistic, log_likelihood, ColumnLabel, DesignMatrix, FitOptions};
use mixpredict::simplex::{aitchison_distance, closure, contrast_matrix, ilr, ilr_inv};
use mixpredict::simulate::{generate, run_study, SimConfig, SimReport};
use mixpredict_cli::ingest::ingest;
use mixpredict_cli::protocol::{cross_validate, tau_grid, tau_sweep};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

const STUDY_SEED: u64 = 42;
const STUDY_REPLICATES: usize = 200;
const RUNTIME_LIMIT_SECONDS: f64 = 600.0;

/// Reference rows: (n, sigma, mean, spread). The window is mean +/- 2 spreads.
const COR_REFERENCE: [(usize, f64, f64, f64); 6] = [
    (100, 0.2, 0.943, 0.049),
    (1000, 0.2, 0.964, 0.012),
    (10000, 0.2, 0.967, 0.004),
    (100, 0.6, 0.937, 0.048),
    (1000, 0.6, 0.966, 0.013),
    (10000, 0.6, 0.967, 0.004),
];

const MISE_REFERENCE: [(usize, f64, f64, f64); 6] = [
    (100, 0.2, 0.263, 0.206),
    (1000, 0.2, 0.109, 0.035),
    (10000, 0.2, 0.097, 0.012),
    (100, 0.6, 0.287, 0.486),
    (1000, 0.6, 0.112, 0.039),
    (10000, 0.6, 0.106, 0.012),
];

const GAMMA_REFERENCE: [(usize, f64, f64, f64); 6] = [
    (100, 0.2, 0.083, 0.390),
    (1000, 0.2, -0.024, 0.113),
    (10000, 0.2, -0.035, 0.029),
    (100, 0.6, 0.004, 0.413),
    (1000, 0.6, -0.072, 0.102),
    (10000, 0.6, -0.085, 0.031),
];

/// Per cell: three (mean, spread) pairs, one per compositional coordinate.
const ALPHA_REFERENCE: [(usize, f64, [(f64, f64); 3]); 6] = [
    (100, 0.2, [(0.001, 0.100), (0.000, 0.105), (-0.001, 0.072)]),
    (1000, 0.2, [(0.003, 0.024), (-0.006, 0.028), (0.003, 0.019)]),
    (10000, 0.2, [(0.001, 0.008), (-0.005, 0.009), (0.004, 0.006)]),
    (100, 0.6, [(0.013, 0.100), (-0.014, 0.111), (0.001, 0.072)]),
    (1000, 0.6, [(0.003, 0.026), (-0.013, 0.031), (0.010, 0.019)]),
    (10000, 0.6, [(0.004, 0.007), (-0.013, 0.009), (0.009, 0.006)]),
];

struct Cell {
    seconds: f64,
    report: SimReport,
}

static STUDY: OnceLock<Vec<Cell>> = OnceLock::new();

fn study() -> &'static [Cell] {
    STUDY.get_or_init(|| {
        let mut cells = Vec::new();
        for &sigma in &[0.2, 0.6] {
            for &n in &[100usize, 1000, 10000] {
                let mut config = SimConfig::new(n, sigma);
                config.replicates = STUDY_REPLICATES;
                config.seed = STUDY_SEED;
                let started = Instant::now();
                let report = run_study(std::slice::from_ref(&config))
                    .expect("study cell failed")
                    .remove(0);
                cells.push(Cell {
                    seconds: started.elapsed().as_secs_f64(),
                    report,
                });
            }
        }
        cells
    })
}

fn window(reference: &[(usize, f64, f64, f64)], n: usize, sigma: f64) -> (f64, f64) {
    let row = reference
        .iter()
        .find(|(rn, rs, _, _)| *rn == n && (*rs - sigma).abs() < 1e-12)
        .expect("reference row");
    (row.2, row.3)
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn criterion_1_functional_coefficient_correlation() {
    let cells = study();
    let mut misses = 0;
    let mut detail = String::new();
    for cell in cells {
        let (n, sigma) = (cell.report.config.n, cell.report.config.sigma);
        let (mean, spread) = window(&COR_REFERENCE, n, sigma);
        let got = cell.report.cor.mean;
        let ok = (got - mean).abs() <= 2.0 * spread;
        if !ok {
            misses += 1;
        }
        detail.push_str(&format!(
            "  n={n} sigma={sigma}: cor {got:.4} vs window [{:.3}, {:.3}] {}\n",
            mean - 2.0 * spread,
            mean + 2.0 * spread,
            if ok { "ok" } else { "MISS" }
        ));
    }
    let slowest = cells
        .iter()
        .filter(|c| c.report.config.n == 10000)
        .map(|c| c.seconds)
        .fold(0.0f64, f64::max);
    let runtime_ok = slowest < RUNTIME_LIMIT_SECONDS;
    let pass = misses == 0 && runtime_ok;
    println!(
        "criterion 1: {}; correlation within {}/6 reference windows; largest-cell runtime {slowest:.0}s (limit {RUNTIME_LIMIT_SECONDS:.0}s)",
        if pass { "PASS" } else { "FAIL" },
        6 - misses
    );
    print!("{detail}");
    assert!(
        pass,
        "correlation missed {misses}/6 windows (runtime ok: {runtime_ok})\n{detail}"
    );
}

#[test]
fn criterion_2_functional_coefficient_mise() {
    let cells = study();
    let mut misses = 0;
    let mut detail = String::new();
    for cell in cells {
        let (n, sigma) = (cell.report.config.n, cell.report.config.sigma);
        let (mean, spread) = window(&MISE_REFERENCE, n, sigma);
        let got = cell.report.mise.mean;
        let ok = (got - mean).abs() <= 2.0 * spread;
        if !ok {
            misses += 1;
        }
        detail.push_str(&format!(
            "  n={n} sigma={sigma}: mise {got:.4} vs window [{:.3}, {:.3}] {}\n",
            mean - 2.0 * spread,
            mean + 2.0 * spread,
            if ok { "ok" } else { "MISS" }
        ));
    }
    let pass = misses == 0;
    println!(
        "criterion 2: {}; integrated squared error within {}/6 reference windows",
        if pass { "PASS" } else { "FAIL" },
        6 - misses
    );
    print!("{detail}");
    assert!(pass, "mise missed {misses}/6 windows\n{detail}");
}

#[test]
fn criterion_3_scalar_and_compositional_bias() {
    let cells = study();
    let mut misses: Vec<String> = Vec::new();
    for cell in cells {
        let (n, sigma) = (cell.report.config.n, cell.report.config.sigma);
        let (mean, spread) = window(&GAMMA_REFERENCE, n, sigma);
        let got = cell.report.gamma_bias.mean;
        if (got - mean).abs() > 2.0 * spread {
            misses.push(format!(
                "gamma n={n} sigma={sigma}: {got:.4} vs [{:.3}, {:.3}]",
                mean - 2.0 * spread,
                mean + 2.0 * spread
            ));
        }
        let alpha_row = ALPHA_REFERENCE
            .iter()
            .find(|(rn, rs, _)| *rn == n && (*rs - sigma).abs() < 1e-12)
            .expect("alpha reference row");
        for (j, (amean, aspread)) in alpha_row.2.iter().enumerate() {
            let got = cell.report.alpha_bias[j].mean;
            if (got - amean).abs() > 2.0 * aspread {
                misses.push(format!(
                    "alpha{} n={n} sigma={sigma}: {got:.4} vs [{:.3}, {:.3}]",
                    j + 1,
                    amean - 2.0 * aspread,
                    amean + 2.0 * aspread
                ));
            }
        }
    }
    let pass = misses.is_empty();
    println!(
        "criterion 3: {}; scalar and compositional bias within {}/24 reference windows",
        if pass { "PASS" } else { "FAIL" },
        24 - misses.len()
    );
    for m in &misses {
        println!("  missed: {m}");
    }
    assert!(pass, "bias windows missed: {misses:?}");
}

#[test]
fn criterion_4_property_suite() {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // Contrast matrices: orthonormal rows that sum to zero.
    for d in 2..=10usize {
        let cm = contrast_matrix(d).unwrap();
        let m = cm.matrix();
        for i in 0..d - 1 {
            let row_sum: f64 = (0..d).map(|c| m[(i, c)]).sum();
            check(row_sum.abs() <= 1e-10, &format!("contrast D={d} row {i} sums to {row_sum:.2e}"));
            for j in 0..d - 1 {
                let dot: f64 = (0..d).map(|c| m[(i, c)] * m[(j, c)]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                check(
                    (dot - target).abs() <= 1e-10,
                    &format!("contrast D={d} rows {i},{j} dot {dot:.6}"),
                );
            }
        }
    }

    // Coordinate round trips and isometry over 1000 random compositions.
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    let random_composition = |d: usize, rng: &mut ChaCha12Rng| {
        let raw: Vec<f64> = (0..d)
            .map(|_| {
                let e: f64 = StandardNormal.sample(rng);
                e.exp()
            })
            .collect();
        closure(&raw).unwrap()
    };
    for i in 0..500 {
        let d = 2 + (i % 7);
        let a = random_composition(d, &mut rng);
        let b = random_composition(d, &mut rng);
        let va = ilr(&a);
        let vb = ilr(&b);
        let back = ilr_inv(&va, d).unwrap();
        let round_trip = a
            .parts()
            .iter()
            .zip(back.parts())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        check(round_trip <= 1e-10, &format!("round trip error {round_trip:.2e} at D={d}"));
        let euclid: f64 = va
            .coords()
            .iter()
            .zip(vb.coords())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let aitch = aitchison_distance(&a, &b).unwrap();
        check(
            (euclid - aitch).abs() <= 1e-10,
            &format!("isometry gap {:.2e} at D={d}", (euclid - aitch).abs()),
        );
    }

    // Eigenbasis: orthonormal under the grid quadrature, capturing the
    // requested variance fraction.
    let (data, _) = generate(&SimConfig::new(400, 0.2), 1).unwrap();
    let (_, centered) = center(data.predictors().curves()).unwrap();
    let basis = fit_fpca(&centered, 0.85).unwrap();
    let dt = basis.grid().spacing();
    for i in 0..basis.m() {
        for j in 0..=i {
            let dot: f64 = basis
                .eigenfunction(i)
                .iter()
                .zip(basis.eigenfunction(j))
                .map(|(a, b)| a * b)
                .sum::<f64>()
                * dt;
            let target = if i == j { 1.0 } else { 0.0 };
            check(
                (dot - target).abs() <= 1e-8,
                &format!("eigenfunctions {i},{j} inner product {dot:.6}"),
            );
        }
    }
    check(
        basis.captured_fraction() >= 0.85 && basis.captured_fraction() <= 1.0 + 1e-12,
        &format!("captured fraction {:.4}", basis.captured_fraction()),
    );

    // Logistic fits: tiny gradients, nondecreasing objective traces, and no
    // coefficient grid point beating the fitted optimum.
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    for instance in 0..5u64 {
        let n = 40 + 2 * instance as usize;
        let true_beta = [0.3, -0.6, 0.8];
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x1: f64 = StandardNormal.sample(&mut rng);
            let x2: f64 = StandardNormal.sample(&mut rng);
            let eta = true_beta[0] + true_beta[1] * x1 + true_beta[2] * x2;
            let p = 1.0 / (1.0 + (-eta).exp());
            y.push(u8::from(rng.random::<f64>() < p));
            rows.push(vec![1.0, x1, x2]);
        }
        let design = DesignMatrix::from_rows(
            &rows,
            vec![ColumnLabel::Intercept, ColumnLabel::Scalar, ColumnLabel::IlrCoordinate(0)],
        )
        .unwrap();
        let fit = fit_logistic(&design, &y, &FitOptions::default()).unwrap();
        check(fit.converged, &format!("instance {instance} did not converge"));
        check(
            fit.gradient_norm <= 1e-6,
            &format!("instance {instance} gradient {:.2e}", fit.gradient_norm),
        );
        let monotone = fit.objective_trace.windows(2).all(|w| w[1] >= w[0]);
        check(monotone, &format!("instance {instance} objective trace decreased"));

        let base = log_likelihood(&fit, &design, &y).unwrap();
        let offsets = [-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0];
        let mut probe = fit.clone();
        for &d0 in &offsets {
            for &d1 in &offsets {
                for &d2 in &offsets {
                    probe.coefficients = vec![
                        fit.coefficients[0] + d0,
                        fit.coefficients[1] + d1,
                        fit.coefficients[2] + d2,
                    ];
                    let ll = log_likelihood(&probe, &design, &y).unwrap();
                    check(
                        ll <= base + 1e-9,
                        &format!("instance {instance} grid point beats the fit by {:.2e}", ll - base),
                    );
                }
            }
        }
    }

    let pass = failures.is_empty();
    println!(
        "criterion 4: {}; contrast matrices D=2..10, 500 round-trip/isometry pairs, eigenbasis orthonormality and capture, 5 logistic grid oracles",
        if pass { "PASS" } else { "FAIL" }
    );
    for f in failures.iter().take(10) {
        println!("  failed: {f}");
    }
    assert!(pass, "{} property failures: {:?}", failures.len(), failures.iter().take(10).collect::<Vec<_>>());
}

#[test]
fn criterion_5_fixture_cross_validation() {
    let signal = ingest(&fixture("signal.csv")).unwrap();
    let signal_accuracy = cross_validate(&signal, 5, 0.99, 0).unwrap().mean_accuracy;
    let signal_ok = signal_accuracy >= 0.80;

    let noise = ingest(&fixture("noise.csv")).unwrap();
    let mut inside = 0;
    let mut accuracies = Vec::new();
    for seed in 0..10 {
        let a = cross_validate(&noise, 5, 0.99, seed).unwrap().mean_accuracy;
        if (0.40..=0.60).contains(&a) {
            inside += 1;
        }
        accuracies.push(format!("{a:.3}"));
    }
    let noise_ok = inside >= 9;

    let pass = signal_ok && noise_ok;
    println!(
        "criterion 5: {}; signal fixture accuracy {signal_accuracy:.4} (needs >= 0.80); noise fixture inside [0.40, 0.60] for {inside}/10 seeds (needs >= 9)",
        if pass { "PASS" } else { "FAIL" }
    );
    println!("  noise accuracies: {}", accuracies.join(" "));
    assert!(pass);
}

#[test]
fn criterion_6_threshold_sweep_shape() {
    let records = ingest(&fixture("sweep.csv")).unwrap();
    let grid = tau_grid(0.01, 0.0005).unwrap();
    let sweep = tau_sweep(&records, &grid, 5, 0.99, 0).unwrap();

    let best = sweep.best.expect("no sweep row produced an accuracy");
    let best_row = &sweep.rows[best];
    let max_at_positive_tau = best_row.tau > 0.0;
    let monotone = sweep.rows.windows(2).all(|w| w[1].n_kept <= w[0].n_kept);

    let pass = max_at_positive_tau && monotone;
    println!(
        "criterion 6: {}; best accuracy {:.4} at tau {} (n_kept {}), kept counts nonincreasing: {monotone}",
        if pass { "PASS" } else { "FAIL" },
        best_row.accuracy.unwrap_or(f64::NAN),
        best_row.tau,
        best_row.n_kept
    );
    assert!(pass);
}

fn run_cli(args: &[&str], workdir: &Path) -> Vec<u8> {
    let output = Command::new(env!("CARGO_BIN_EXE_mixpredict"))
        .args(args)
        .current_dir(workdir)
        .output()
        .expect("failed to launch the binary");
    assert!(
        output.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    output.stdout
}

#[test]
fn criterion_7_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let signal = fixture("signal.csv");
    let sweep = fixture("sweep.csv");
    let signal = signal.to_str().unwrap();
    let sweep = sweep.to_str().unwrap();

    let cases: Vec<(&str, Vec<String>)> = vec![
        (
            "simulate",
            ["simulate", "--n", "100", "--sigma", "0.2", "--replicates", "5", "--seed", "7", "--out"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
        (
            "fit",
            ["fit", "--data", signal, "--out"].iter().map(|s| s.to_string()).collect(),
        ),
        (
            "cv",
            ["cv", "--data", signal, "--seed", "3", "--out"].iter().map(|s| s.to_string()).collect(),
        ),
        (
            "sweep",
            ["sweep", "--data", sweep, "--tau-max", "0.005", "--tau-step", "0.001", "--seed", "2", "--out"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
    ];

    let mut all_ok = true;
    for (name, base_args) in &cases {
        let out_a = dir.path().join(format!("{name}_a.out"));
        let out_b = dir.path().join(format!("{name}_b.out"));
        let mut args_a: Vec<&str> = base_args.iter().map(|s| s.as_str()).collect();
        let mut args_b = args_a.clone();
        args_a.push(out_a.to_str().unwrap());
        args_b.push(out_b.to_str().unwrap());

        let stdout_a = run_cli(&args_a, dir.path());
        let stdout_b = run_cli(&args_b, dir.path());
        let file_a = std::fs::read(&out_a).unwrap();
        let file_b = std::fs::read(&out_b).unwrap();
        if stdout_a != stdout_b || file_a != file_b {
            all_ok = false;
            println!("  {name}: reruns differ");
        }
    }
    println!(
        "criterion 7: {}; {} commands rerun byte-identically (output files and stdout)",
        if all_ok { "PASS" } else { "FAIL" },
        cases.len()
    );
    assert!(all_ok);
}
