//! The direction-prediction protocol: turn market records into a mixed
//! dataset, build the binary response from open returns, subsample by move
//! magnitude, cross-validate with per-fold refitting, and sweep thresholds.

use crate::ingest::{MarketRecord, INTRADAY_POINTS};
use crate::{CliError, Result};
use chrono::NaiveDate;
use mixpredict::fpca::{FunctionalSample, Grid};
use mixpredict::mixmodel::{classify, fit, predict, FitConfig, MixedDataset, MixedFit, MixedPredictors};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Fewest records the 5-fold protocol is willing to run on.
pub const MIN_RECORDS: usize = 20;

/// Largest accepted magnitude threshold; daily open returns live well below
/// this, so anything bigger is a mistake rather than a filter.
pub const MAX_TAU: f64 = 0.1;

/// Ridge applied when a fold's unpenalized fit separates. Sized so the
/// penalized coefficients stay moderate: a microscopic penalty lets them
/// grow until the back-transformed composition collapses onto the simplex
/// boundary at float precision, which the simplex types rightly reject.
pub const FALLBACK_RIDGE: f64 = 1e-2;

/// The three market regimes reported on: a run-up, a crash, and the
/// adjustment period after it.
pub const PHASE_COUNT: usize = 3;

pub fn phase_range(phase: usize) -> Result<(NaiveDate, NaiveDate)> {
    let ymd = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).unwrap();
    match phase {
        1 => Ok((ymd(2014, 12, 2), ymd(2015, 6, 18))),
        2 => Ok((ymd(2015, 6, 19), ymd(2015, 10, 14))),
        3 => Ok((ymd(2015, 10, 15), ymd(2016, 4, 29))),
        other => Err(CliError::BadRequest(format!(
            "phase must be 1, 2, or 3, got {other}"
        ))),
    }
}

/// Keeps the records dated within [from, to], preserving order.
pub fn filter_date_range(
    records: &[MarketRecord],
    from: NaiveDate,
    to: NaiveDate,
) -> Result<Vec<MarketRecord>> {
    if from > to {
        return Err(CliError::BadRequest(format!(
            "date range starts {from} after it ends {to}"
        )));
    }
    Ok(records
        .iter()
        .filter(|r| r.date >= from && r.date <= to)
        .cloned()
        .collect())
}

/// Binary response: 1 for a strictly positive next-day open return.
pub fn make_response(records: &[MarketRecord]) -> Vec<u8> {
    records
        .iter()
        .map(|r| u8::from(r.open_return > 0.0))
        .collect()
}

/// Keeps records whose open-return magnitude exceeds tau. tau = 0 keeps
/// everything (zero returns map to class 0 rather than being dropped).
pub fn threshold_subsample(records: &[MarketRecord], tau: f64) -> Result<Vec<MarketRecord>> {
    if !(0.0..=MAX_TAU).contains(&tau) {
        return Err(CliError::BadRequest(format!(
            "tau must lie in [0, {MAX_TAU}], got {tau}"
        )));
    }
    let kept: Vec<MarketRecord> = records
        .iter()
        .filter(|r| tau == 0.0 || r.open_return.abs() > tau)
        .cloned()
        .collect();
    if kept.len() < MIN_RECORDS {
        return Err(CliError::EmptySubsample {
            kept: kept.len(),
            needed: MIN_RECORDS,
        });
    }
    Ok(kept)
}

/// The intraday grid: 49 five-minute marks mapped onto [0, 1].
pub fn intraday_grid() -> Grid {
    Grid::uniform(0.0, 1.0, INTRADAY_POINTS).expect("static grid")
}

pub fn to_mixed_predictors(records: &[MarketRecord]) -> Result<MixedPredictors> {
    let grid = intraday_grid();
    let scalars: Vec<f64> = records.iter().map(|r| r.volume).collect();
    let comps: Vec<_> = records.iter().map(|r| r.emotions.clone()).collect();
    let curves = records
        .iter()
        .map(|r| FunctionalSample::new(grid.clone(), r.intraday.clone()))
        .collect::<mixpredict::Result<Vec<_>>>()?;
    Ok(MixedPredictors::new(scalars, comps, curves)?)
}

pub fn to_mixed_dataset(records: &[MarketRecord]) -> Result<MixedDataset> {
    Ok(MixedDataset::new(
        to_mixed_predictors(records)?,
        make_response(records),
    )?)
}

/// Seeded fold assignment: a uniform shuffle cut into contiguous blocks,
/// with the remainder spread one per fold starting from the first.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / k;
    let remainder = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < remainder);
        let mut fold: Vec<usize> = order[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    folds
}

/// Everything one cross-validation run produced, including the per-fold
/// models so callers can audit that held-out data never shaped them.
#[derive(Debug, Clone)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub lambda: f64,
    pub n: usize,
    pub folds: Vec<Vec<usize>>,
    pub fold_accuracies: Vec<f64>,
    pub ridge_fallback_folds: Vec<usize>,
    pub fold_models: Vec<MixedFit>,
    pub mean_accuracy: f64,
}

/// Errors from an unpenalized fold fit that mean the optimizer walked off
/// toward separation. The coefficient guard catches the blow-up mid-iteration
/// as `SeparationDetected`, but a fit can also converge by tolerance just
/// under that guard and then fail the composition back-transform, surfacing
/// as `Overflow` or a boundary part from the closure. Training inputs were
/// validated before the fit, so those errors cannot be blamed on the data.
fn separation_like(e: &mixpredict::Error) -> bool {
    matches!(
        e,
        mixpredict::Error::SeparationDetected { .. }
            | mixpredict::Error::Overflow(_)
            | mixpredict::Error::NonPositiveEntry { .. }
    )
}

pub fn cross_validate(
    records: &[MarketRecord],
    k: usize,
    lambda: f64,
    seed: u64,
) -> Result<CvReport> {
    if k < 2 {
        return Err(CliError::BadRequest(format!("need at least 2 folds, got {k}")));
    }
    let n = records.len();
    if n < 4 * k {
        return Err(CliError::TooFewForFolds { n, k });
    }
    let response = make_response(records);
    let folds = fold_indices(n, k, seed);

    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_models = Vec::with_capacity(k);
    let mut ridge_fallback_folds = Vec::new();
    for (f, fold) in folds.iter().enumerate() {
        let mut held = vec![false; n];
        for &i in fold {
            held[i] = true;
        }
        let train: Vec<MarketRecord> = (0..n)
            .filter(|&i| !held[i])
            .map(|i| records[i].clone())
            .collect();
        let test: Vec<MarketRecord> = fold.iter().map(|&i| records[i].clone()).collect();

        let train_data = to_mixed_dataset(&train)?;
        let config = FitConfig::new(lambda);
        let model = match fit(&train_data, &config) {
            Ok(m) => m,
            Err(e) if separation_like(&e) => {
                ridge_fallback_folds.push(f);
                let mut ridged = config.clone();
                ridged.glm.ridge = FALLBACK_RIDGE;
                fit(&train_data, &ridged)?
            }
            Err(e) => return Err(e.into()),
        };

        let probs = predict(&model, &to_mixed_predictors(&test)?)?;
        let predicted = classify(&probs, 0.5)?;
        let correct = fold
            .iter()
            .zip(&predicted)
            .filter(|(&i, &p)| response[i] == p)
            .count();
        fold_accuracies.push(correct as f64 / fold.len() as f64);
        fold_models.push(model);
    }

    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvReport {
        k,
        seed,
        lambda,
        n,
        folds,
        fold_accuracies,
        ridge_fallback_folds,
        fold_models,
        mean_accuracy,
    })
}

/// One row of a threshold sweep. Accuracy is absent when the subsample is
/// too small or its cross-validation broke down; `note` says which.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub tau: f64,
    pub n_kept: usize,
    pub accuracy: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Index into `rows` of the best accuracy, first row winning ties.
    pub best: Option<usize>,
}

pub fn tau_sweep(
    records: &[MarketRecord],
    taus: &[f64],
    k: usize,
    lambda: f64,
    seed: u64,
) -> Result<SweepReport> {
    if taus.is_empty() {
        return Err(CliError::BadRequest("the tau grid is empty".to_string()));
    }
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let kept = match threshold_subsample(records, tau) {
            Ok(kept) => kept,
            Err(CliError::EmptySubsample { kept, .. }) => {
                rows.push(SweepRow {
                    tau,
                    n_kept: kept,
                    accuracy: None,
                    note: "empty_subsample".to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let n_kept = kept.len();
        match cross_validate(&kept, k, lambda, seed) {
            Ok(report) => {
                let note = if report.ridge_fallback_folds.is_empty() {
                    String::new()
                } else {
                    let folds: Vec<String> = report
                        .ridge_fallback_folds
                        .iter()
                        .map(|f| f.to_string())
                        .collect();
                    format!("ridge_fallback:{}", folds.join(";"))
                };
                rows.push(SweepRow {
                    tau,
                    n_kept,
                    accuracy: Some(report.mean_accuracy),
                    note,
                });
            }
            Err(CliError::TooFewForFolds { .. }) => rows.push(SweepRow {
                tau,
                n_kept,
                accuracy: None,
                note: "too_few_for_folds".to_string(),
            }),
            Err(CliError::Model(e)) => rows.push(SweepRow {
                tau,
                n_kept,
                accuracy: None,
                note: format!("fit_failed:{e}"),
            }),
            Err(e) => return Err(e),
        }
    }
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.accuracy.map(|a| (i, a)))
        .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
        .map(|(i, _)| i);
    Ok(SweepReport { rows, best })
}

/// Evenly spaced tau grid from 0 to `max` inclusive.
pub fn tau_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(0.0..=MAX_TAU).contains(&max) || step <= 0.0 || !step.is_finite() {
        return Err(CliError::BadRequest(format!(
            "need 0 <= tau-max <= {MAX_TAU} and a positive step, got max {max} step {step}"
        )));
    }
    let count = (max / step).round() as usize;
    // Multiples of a decimal step drift by an ulp or two; snapping each
    // point back through a 10-decimal rendering keeps the grid values (and
    // the labels derived from them) on the intended decimals.
    let mut grid: Vec<f64> = (0..=count)
        .map(|i| format!("{:.10}", i as f64 * step).parse::<f64>().unwrap())
        .collect();
    if let Some(last) = grid.last_mut() {
        if (*last - max).abs() < step * 1e-9 {
            *last = max;
        }
    }
    grid.retain(|&t| t <= MAX_TAU);
    Ok(grid)
}
