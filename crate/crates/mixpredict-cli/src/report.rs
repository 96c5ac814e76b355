//! Renders fitted models, cross-validation runs, and threshold sweeps as
//! plain text and CSV. All formatting is fixed-width or fixed-precision so
//! rerunning a command reproduces its output byte for byte.

use crate::ingest::{EMOTIONS, INTRADAY_POINTS};
use crate::protocol::{CvReport, SweepReport};
use mixpredict::mixmodel::MixedFit;
use std::fmt::Write;

/// Five-minute clock labels for the two trading sessions covered by the
/// intraday grid: 09:35 to 11:30, then 13:00 to 15:00.
pub fn intraday_labels() -> Vec<String> {
    let mut labels = Vec::with_capacity(INTRADAY_POINTS);
    let mut push_session = |from: u32, to: u32| {
        let mut minutes = from;
        while minutes <= to {
            labels.push(format!("{:02}:{:02}", minutes / 60, minutes % 60));
            minutes += 5;
        }
    };
    push_session(9 * 60 + 35, 11 * 60 + 30);
    push_session(13 * 60, 15 * 60);
    debug_assert_eq!(labels.len(), INTRADAY_POINTS);
    labels
}

/// The coefficient curve as `time,beta` rows. Grids of the intraday length
/// get clock labels; anything else is labeled by its grid value.
pub fn beta_curve_csv(fit: &MixedFit) -> String {
    let values = fit.beta_curve.values();
    let mut out = String::from("time,beta\n");
    if values.len() == INTRADAY_POINTS {
        for (label, v) in intraday_labels().iter().zip(values) {
            let _ = writeln!(out, "{label},{v}");
        }
    } else {
        for (t, v) in fit.beta_curve.grid().points().iter().zip(values) {
            let _ = writeln!(out, "{t},{v}");
        }
    }
    out
}

/// Human-readable coefficient summary: the compositional coefficients as a
/// composition (two decimals), the standardized-volume coefficient, the
/// intercept, and the fit diagnostics.
pub fn coefficient_report(fit: &MixedFit) -> String {
    let mut out = String::from("fitted coefficients\n\n");

    out.push_str("composition coefficient (sums to 1)\n");
    let parts = fit.alpha.parts();
    let names: Vec<String> = if parts.len() == EMOTIONS.len() {
        EMOTIONS.iter().map(|e| e.to_string()).collect()
    } else {
        (1..=parts.len()).map(|i| format!("part{i}")).collect()
    };
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0);
    for (name, p) in names.iter().zip(parts) {
        let _ = writeln!(out, "  {name:width$}  {p:.2}");
    }

    let _ = writeln!(out, "\nscalar coefficient (standardized units)  {:.4}", fit.gamma);
    match fit.intercept {
        Some(b0) => {
            let _ = writeln!(out, "intercept  {b0:.4}");
        }
        None => out.push_str("intercept  none (fit without one)\n"),
    }
    let _ = writeln!(
        out,
        "curve coefficient  {} basis components, rendered in beta_curve.csv",
        fit.curve_coefficients.len()
    );
    let _ = writeln!(
        out,
        "\nconverged: {} after {} iterations, gradient max-norm {:.2e}",
        fit.diagnostics.converged, fit.diagnostics.iterations, fit.diagnostics.gradient_norm
    );
    out
}

pub fn render_cv(report: &CvReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}-fold cross-validation  (seed {}, lambda {}, n {})\n",
        report.k, report.seed, report.lambda, report.n
    );
    out.push_str("fold  size  accuracy  note\n");
    for (f, (fold, acc)) in report.folds.iter().zip(&report.fold_accuracies).enumerate() {
        let note = if report.ridge_fallback_folds.contains(&f) {
            "  ridge fallback"
        } else {
            ""
        };
        let _ = writeln!(out, "{f:>4}  {:>4}  {acc:>8.4}{note}", fold.len());
    }
    let _ = writeln!(out, "\nmean accuracy  {:.4}", report.mean_accuracy);
    out
}

/// The sweep as `tau,n_kept,mean_accuracy,flags` rows. Starved or failed
/// rows keep their flag and leave the accuracy blank; the best row is
/// flagged `best`.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("tau,n_kept,mean_accuracy,flags\n");
    for (i, row) in report.rows.iter().enumerate() {
        let accuracy = match row.accuracy {
            Some(a) => format!("{a:.6}"),
            None => String::new(),
        };
        let mut flags: Vec<&str> = Vec::new();
        if !row.note.is_empty() {
            flags.push(&row.note);
        }
        if report.best == Some(i) {
            flags.push("best");
        }
        let _ = writeln!(out, "{},{},{},{}", row.tau, row.n_kept, accuracy, flags.join(" "));
    }
    out
}

/// One line naming the sweep's arg-max row, if any row produced an accuracy.
pub fn sweep_summary(report: &SweepReport) -> Option<String> {
    report.best.map(|i| {
        let row = &report.rows[i];
        format!(
            "max mean accuracy {:.6} at tau {} with {} records kept",
            row.accuracy.unwrap_or(f64::NAN),
            row.tau,
            row.n_kept
        )
    })
}
