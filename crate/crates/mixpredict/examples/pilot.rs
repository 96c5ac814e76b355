//! Runs one cell of the Monte-Carlo validation study and prints the retained
//! component count alongside every metric summary.
//!
//! Usage: pilot <n> <sigma> <replicates> [lambda]

use mixpredict::mixmodel::{fit, FitConfig};
use mixpredict::simulate::{curve_correlation, generate, mise, SimConfig};
use std::time::Instant;

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn main() {
    let mut args = std::env::args().skip(1);
    let usage = "usage: pilot <n> <sigma> <replicates> [lambda]";
    let n: usize = args.next().expect(usage).parse().expect(usage);
    let sigma: f64 = args.next().expect(usage).parse().expect(usage);
    let reps: usize = args.next().expect(usage).parse().expect(usage);
    let lambda: f64 = args.next().map(|s| s.parse().expect(usage)).unwrap_or(0.85);

    let config = SimConfig {
        replicates: reps,
        seed: 42,
        lambda,
        ..SimConfig::new(n, sigma)
    };
    let fit_config = FitConfig {
        include_intercept: false,
        ..FitConfig::new(lambda)
    };

    let start = Instant::now();
    let mut cors = Vec::new();
    let mut mises = Vec::new();
    let mut gbias = Vec::new();
    let mut abias: Vec<Vec<f64>> = vec![Vec::new(); 3];
    let mut ms = Vec::new();
    let mut failed = 0usize;
    for rep in 0..reps as u64 {
        let (data, truth) = generate(&config, rep).unwrap();
        match fit(&data, &fit_config) {
            Ok(f) => {
                ms.push(f.basis.m() as f64);
                cors.push(curve_correlation(&f.beta_curve, &truth.beta).unwrap());
                mises.push(mise(&f.beta_curve, &truth.beta).unwrap());
                gbias.push(f.gamma - truth.gamma);
                for k in 0..3 {
                    abias[k].push(f.alpha.parts()[k] - truth.alpha.parts()[k]);
                }
            }
            Err(_) => failed += 1,
        }
    }

    let (m_mean, _) = mean_sd(&ms);
    let m_min = ms.iter().cloned().fold(f64::INFINITY, f64::min);
    let m_max = ms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (c_m, c_s) = mean_sd(&cors);
    let (mi_m, mi_s) = mean_sd(&mises);
    let (g_m, g_s) = mean_sd(&gbias);
    println!(
        "n={n} sigma={sigma} reps={reps} lambda={lambda} elapsed={:.1}s failed={failed}",
        start.elapsed().as_secs_f64()
    );
    println!("  M    mean {m_mean:.2} range [{m_min:.0}, {m_max:.0}]");
    println!("  cor  {c_m:.4} ({c_s:.4})");
    println!("  mise {mi_m:.4} ({mi_s:.4})");
    println!("  gbia {g_m:.4} ({g_s:.4})");
    for (k, values) in abias.iter().enumerate() {
        let (a_m, a_s) = mean_sd(values);
        println!("  a{}b  {a_m:.4} ({a_s:.4})", k + 1);
    }
}
