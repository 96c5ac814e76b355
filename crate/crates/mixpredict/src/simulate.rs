//! Monte-Carlo validation study for the mixed-predictor pipeline.
//!
//! Each replicate draws a dataset with one scalar, one 3-part compositional,
//! and one functional predictor whose true coefficients are known, fits the
//! pipeline without an intercept, and measures how well the estimates recover
//! the truth. The study driver runs replicates in parallel with one
//! deterministic RNG stream per replicate, so a given configuration always
//! produces bit-identical reports regardless of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fpca::{quadrature_inner_product, FunctionalSample, Grid};
use crate::glm::FitOptions;
use crate::mixmodel::{fit, FitConfig, MixedDataset, MixedPredictors};
use crate::simplex::{closure, ilr, ilr_inv, Composition, IlrVector};

/// One cell of the study: a sample size, noise level, and generator shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Observations per replicate.
    pub n: usize,
    /// Scale of the latent Gaussian noise added to the linear predictor.
    pub sigma: f64,
    /// Monte-Carlo replicates to run.
    pub replicates: usize,
    /// Grid resolution T for the functional predictor on [0, 1].
    pub grid_size: usize,
    /// Number of cosine components J in the generator.
    pub components: usize,
    /// Spectral decay exponent a; component j has scale j^(-a/2).
    pub decay: f64,
    /// Variance fraction for the eigenbasis truncation during fitting.
    pub lambda: f64,
    /// Base seed; replicate r uses the (seed, r) substream.
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, sigma: f64) -> Self {
        Self {
            n,
            sigma,
            replicates: 200,
            grid_size: 100,
            components: 50,
            decay: 1.1,
            lambda: 0.85,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidParameter(format!(
                "n = {} is too small to fit the pipeline",
                self.n
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("zero replicates".into()));
        }
        if self.grid_size < 2 || self.components == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid_size {} / components {}",
                self.grid_size, self.components
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma {}", self.sigma)));
        }
        if !(self.decay > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "decay {} must exceed 1 for the component variances to be summable",
                self.decay
            )));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "variance fraction {} outside (0, 1]",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// The generator's true coefficients, for scoring estimates against.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub gamma: f64,
    pub alpha: Composition,
    pub beta: FunctionalSample,
}

/// True coefficient of cosine component j (1-based) in the functional
/// coefficient: 0.3 for j = 1, alternating 4 (-1)^(j+1) j^(-2) afterwards.
fn beta_coefficient(j: usize) -> f64 {
    if j == 1 {
        0.3
    } else {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        4.0 * sign / (j * j) as f64
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Draws one replicate's dataset together with the truth that produced it.
///
/// All three predictor blocks are centered within the sample before the
/// response is drawn, so the linear predictor carries no incidental offset
/// and the intercept-free fit is well specified.
pub fn generate(config: &SimConfig, replicate: u64) -> Result<(MixedDataset, GroundTruth)> {
    config.validate()?;
    let n = config.n;
    let t_len = config.grid_size;
    let j_len = config.components;
    let grid = Grid::uniform(0.0, 1.0, t_len)?;

    // sqrt(2) cos(j pi t) for j = 1..=J, evaluated on the grid.
    let sqrt2 = 2.0f64.sqrt();
    let phi: Vec<Vec<f64>> = (1..=j_len)
        .map(|j| {
            grid.points()
                .iter()
                .map(|t| sqrt2 * (j as f64 * std::f64::consts::PI * t).cos())
                .collect()
        })
        .collect();

    let beta_values: Vec<f64> = (0..t_len)
        .map(|k| {
            (1..=j_len)
                .map(|j| beta_coefficient(j) * phi[j - 1][k])
                .sum()
        })
        .collect();
    let truth = GroundTruth {
        gamma: 1.0,
        alpha: Composition::new(vec![0.3, 0.5, 0.2])?,
        beta: FunctionalSample::new(grid.clone(), beta_values)?,
    };

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(replicate);
    let sqrt3 = 3.0f64.sqrt();

    let mut scalar = Vec::with_capacity(n);
    let mut raw_coords: Vec<IlrVector> = Vec::with_capacity(n);
    let mut curve_values: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    for _ in 0..n {
        scalar.push(StandardNormal.sample(&mut rng));
        // 1 - U is strictly positive, so the closure never sees a zero part.
        let parts: Vec<f64> = (0..3).map(|_| 1.0 - rng.random::<f64>()).collect();
        raw_coords.push(ilr(&closure(&parts)?));
        let loadings: Vec<f64> = (1..=j_len)
            .map(|j| {
                let z: f64 = (2.0 * rng.random::<f64>() - 1.0) * sqrt3;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (j as f64).powf(-config.decay / 2.0) * z
            })
            .collect();
        let values: Vec<f64> = (0..t_len)
            .map(|k| (0..j_len).map(|j| loadings[j] * phi[j][k]).sum())
            .collect();
        curve_values.push(values);
        noise.push({
            let e: f64 = StandardNormal.sample(&mut rng);
            config.sigma * e
        });
    }

    // Center every block within the sample.
    let scalar_mean = scalar.iter().sum::<f64>() / n as f64;
    for z in scalar.iter_mut() {
        *z -= scalar_mean;
    }
    let coord_means: Vec<f64> = (0..2)
        .map(|k| raw_coords.iter().map(|v| v.coords()[k]).sum::<f64>() / n as f64)
        .collect();
    let centered_coords: Vec<IlrVector> = raw_coords
        .iter()
        .map(|v| {
            IlrVector::new(
                v.coords()
                    .iter()
                    .zip(&coord_means)
                    .map(|(c, m)| c - m)
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let compositions: Vec<Composition> = centered_coords
        .iter()
        .map(|v| ilr_inv(v, 3))
        .collect::<Result<Vec<_>>>()?;
    let mut curve_means = vec![0.0; t_len];
    for values in &curve_values {
        for (m, v) in curve_means.iter_mut().zip(values) {
            *m += v;
        }
    }
    for m in curve_means.iter_mut() {
        *m /= n as f64;
    }
    let curves: Vec<FunctionalSample> = curve_values
        .iter()
        .map(|values| {
            FunctionalSample::new(
                grid.clone(),
                values.iter().zip(&curve_means).map(|(v, m)| v - m).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    // The compositional effect is the Aitchison inner product, which in ilr
    // coordinates is the plain dot product.
    let alpha_coords = ilr(&truth.alpha);
    let response: Vec<u8> = (0..n)
        .map(|i| {
            let comp_term: f64 = alpha_coords
                .coords()
                .iter()
                .zip(centered_coords[i].coords())
                .map(|(a, c)| a * c)
                .sum();
            let func_term =
                quadrature_inner_product(truth.beta.values(), curves[i].values(), &grid)?;
            let eta = truth.gamma * scalar[i] + comp_term + func_term + noise[i];
            Ok(u8::from(rng.random::<f64>() < sigmoid(eta)))
        })
        .collect::<Result<Vec<_>>>()?;

    let dataset = MixedDataset::new(
        MixedPredictors::new(scalar, compositions, curves)?,
        response,
    )?;
    Ok((dataset, truth))
}

/// Integrated squared error between an estimated and a true curve.
pub fn mise(estimate: &FunctionalSample, truth: &FunctionalSample) -> Result<f64> {
    if estimate.grid() != truth.grid() {
        return Err(Error::GridMismatch(
            "estimate and truth live on different grids".into(),
        ));
    }
    let diff: Vec<f64> = estimate
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| a - b)
        .collect();
    quadrature_inner_product(&diff, &diff, estimate.grid())
}

/// Pearson correlation of two curves across the grid points.
pub fn curve_correlation(a: &FunctionalSample, b: &FunctionalSample) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(
            "curves live on different grids".into(),
        ));
    }
    let n = a.values().len() as f64;
    let ma = a.values().iter().sum::<f64>() / n;
    let mb = b.values().iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.values().iter().zip(b.values()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance(
            "constant curve has no correlation".into(),
        ));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Estimation errors of one completed replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    /// Correlation between the estimated and true functional coefficient.
    pub cor: f64,
    /// Integrated squared error of the functional coefficient.
    pub mise: f64,
    /// Estimated minus true scalar coefficient.
    pub gamma_error: f64,
    /// Estimated minus true compositional coefficient, per part.
    pub alpha_error: Vec<f64>,
}

/// Mean and sample standard deviation of a metric across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

/// Aggregated study results for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub config: SimConfig,
    pub completed: usize,
    pub failed: usize,
    pub cor: MetricSummary,
    pub mise: MetricSummary,
    pub gamma_bias: MetricSummary,
    pub alpha_bias: Vec<MetricSummary>,
}

fn run_replicate(config: &SimConfig, replicate: u64) -> Result<ReplicateOutcome> {
    let (dataset, truth) = generate(config, replicate)?;
    let fit_config = FitConfig {
        lambda: config.lambda,
        include_intercept: false,
        glm: FitOptions::default(),
    };
    let model = fit(&dataset, &fit_config)?;
    Ok(ReplicateOutcome {
        cor: curve_correlation(&model.beta_curve, &truth.beta)?,
        mise: mise(&model.beta_curve, &truth.beta)?,
        gamma_error: model.gamma - truth.gamma,
        alpha_error: model
            .alpha
            .parts()
            .iter()
            .zip(truth.alpha.parts())
            .map(|(est, tru)| est - tru)
            .collect(),
    })
}

/// Runs every configuration, excluding failed replicates up to a 5% budget.
///
/// Replicates run in parallel but are aggregated in replicate order, so the
/// output is a pure function of the configurations.
pub fn run_study(configs: &[SimConfig]) -> Result<Vec<SimReport>> {
    configs
        .iter()
        .map(|config| {
            config.validate()?;
            let outcomes: Vec<Result<ReplicateOutcome>> = (0..config.replicates as u64)
                .into_par_iter()
                .map(|rep| run_replicate(config, rep))
                .collect();
            let failed = outcomes.iter().filter(|o| o.is_err()).count();
            if failed as f64 > 0.05 * config.replicates as f64 {
                return Err(Error::TooManyFailures {
                    failed,
                    total: config.replicates,
                });
            }
            let completed: Vec<&ReplicateOutcome> =
                outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
            let collect_metric = |f: &dyn Fn(&ReplicateOutcome) -> f64| -> MetricSummary {
                MetricSummary::from_values(
                    &completed.iter().map(|o| f(o)).collect::<Vec<f64>>(),
                )
            };
            let alpha_bias = (0..3)
                .map(|k| collect_metric(&|o: &ReplicateOutcome| o.alpha_error[k]))
                .collect();
            Ok(SimReport {
                config: config.clone(),
                completed: completed.len(),
                failed,
                cor: collect_metric(&|o| o.cor),
                mise: collect_metric(&|o| o.mise),
                gamma_bias: collect_metric(&|o| o.gamma_error),
                alpha_bias,
            })
        })
        .collect()
}

/// Flat machine-readable form of the study results.
pub fn reports_to_csv(reports: &[SimReport]) -> String {
    let mut out = String::from(
        "n,sigma,replicates,grid_size,components,decay,lambda,seed,completed,failed,\
         cor_mean,cor_sd,mise_mean,mise_sd,gamma_bias_mean,gamma_bias_sd,\
         alpha1_bias_mean,alpha1_bias_sd,alpha2_bias_mean,alpha2_bias_sd,\
         alpha3_bias_mean,alpha3_bias_sd\n",
    );
    for r in reports {
        let c = &r.config;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            c.n, c.sigma, c.replicates, c.grid_size, c.components, c.decay, c.lambda, c.seed,
            r.completed, r.failed
        ));
        for s in [r.cor, r.mise, r.gamma_bias]
            .iter()
            .chain(r.alpha_bias.iter())
        {
            out.push_str(&format!(",{},{}", s.mean, s.sd));
        }
        out.push('\n');
    }
    out
}

fn summary_cell(s: &MetricSummary) -> String {
    format!("{:.3} ({:.3})", s.mean, s.sd)
}

/// Aligned text tables, one block per metric, sample sizes across the
/// columns and noise levels down the rows.
pub fn format_report_tables(reports: &[SimReport]) -> String {
    let mut ns: Vec<usize> = Vec::new();
    let mut sigmas: Vec<f64> = Vec::new();
    for r in reports {
        if !ns.contains(&r.config.n) {
            ns.push(r.config.n);
        }
        if !sigmas.iter().any(|s| s == &r.config.sigma) {
            sigmas.push(r.config.sigma);
        }
    }
    let find = |sigma: f64, n: usize| -> Option<&SimReport> {
        reports
            .iter()
            .find(|r| r.config.sigma == sigma && r.config.n == n)
    };

    let width = 16;
    let mut out = String::new();
    let blocks: [(&str, Box<dyn Fn(&SimReport) -> &MetricSummary>); 3] = [
        (
            "correlation of estimated and true functional coefficient",
            Box::new(|r: &SimReport| &r.cor),
        ),
        (
            "integrated squared error of the functional coefficient",
            Box::new(|r: &SimReport| &r.mise),
        ),
        (
            "bias of the scalar coefficient",
            Box::new(|r: &SimReport| &r.gamma_bias),
        ),
    ];
    for (title, metric) in &blocks {
        out.push_str(title);
        out.push_str("\n  sigma \\ n ");
        for n in &ns {
            out.push_str(&format!("{n:>width$}"));
        }
        out.push('\n');
        for &sigma in &sigmas {
            out.push_str(&format!("  {sigma:<10}"));
            for &n in &ns {
                let cell = find(sigma, n).map_or_else(|| "-".into(), |r| summary_cell(metric(r)));
                out.push_str(&format!("{cell:>width$}"));
            }
            out.push('\n');
        }
        out.push('\n');
    }

    out.push_str("bias of the compositional coefficient parts\n");
    for part in 0..3 {
        out.push_str(&format!("  part {}\n  sigma \\ n ", part + 1));
        for n in &ns {
            out.push_str(&format!("{n:>width$}"));
        }
        out.push('\n');
        for &sigma in &sigmas {
            out.push_str(&format!("  {sigma:<10}"));
            for &n in &ns {
                let cell = find(sigma, n)
                    .map_or_else(|| "-".into(), |r| summary_cell(&r.alpha_bias[part]));
                out.push_str(&format!("{cell:>width$}"));
            }
            out.push('\n');
        }
    }

    let failures: usize = reports.iter().map(|r| r.failed).sum();
    if failures > 0 {
        out.push_str(&format!(
            "\n{failures} replicate(s) failed and were excluded\n"
        ));
    }
    out
}
