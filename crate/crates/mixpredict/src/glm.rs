//! Logistic regression by Newton's method with step-halving.
//!
//! The solver maximizes the Bernoulli log-likelihood
//! `sum_i [y_i eta_i - log(1 + exp(eta_i))]` with `eta = X beta`, optionally
//! minus a ridge term `ridge/2 * |beta|^2` applied to every column including
//! the intercept (the default ridge is 0, i.e. plain maximum likelihood).
//! Each iteration solves the weighted normal equations and halves the step
//! until the objective does not decrease, so the recorded objective trace is
//! nondecreasing by construction.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient magnitude past which an unpenalized fit is declared separated.
const SEPARATION_LIMIT: f64 = 1e3;

/// When no step improves the objective at floating-point resolution, the fit
/// still counts as converged if the gradient max-norm is within this band.
/// The default `tol` of 1e-8 can be unreachable: near the optimum a Newton
/// step improves the objective by about gradient^2 / curvature, which falls
/// below one ulp of the objective while the gradient is still of order 1e-7.
const STALL_GRADIENT_BAND: f64 = 1e-6;

/// What a design column means, used for error messages, reports, and for
/// slicing the coefficient vector back into model blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnLabel {
    Intercept,
    /// The standardized scalar predictor.
    Scalar,
    /// Ilr coordinate of the compositional block, 0-based.
    IlrCoordinate(usize),
    /// Principal component score of the functional block, 0-based.
    FpcaScore(usize),
}

impl std::fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnLabel::Intercept => write!(f, "intercept"),
            ColumnLabel::Scalar => write!(f, "scalar"),
            ColumnLabel::IlrCoordinate(i) => write!(f, "ilr coordinate {}", i + 1),
            ColumnLabel::FpcaScore(j) => write!(f, "component score {}", j + 1),
        }
    }
}

/// A dense n x q design with one semantic label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    labels: Vec<ColumnLabel>,
}

impl DesignMatrix {
    pub fn new(x: DMatrix<f64>, labels: Vec<ColumnLabel>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidDimension(format!(
                "design must be non-empty, got {} x {}",
                x.nrows(),
                x.ncols()
            )));
        }
        if labels.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} columns",
                labels.len(),
                x.ncols()
            )));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(format!("design entry {bad}")));
        }
        if x.nrows() <= x.ncols() {
            log::warn!(
                "design has {} rows for {} columns; the MLE is unlikely to be stable",
                x.nrows(),
                x.ncols()
            );
        }
        Ok(Self { x, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<ColumnLabel>) -> Result<Self> {
        let n = rows.len();
        let q = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::DimensionMismatch("ragged design rows".into()));
        }
        let x = DMatrix::from_fn(n, q, |i, j| rows[i][j]);
        Self::new(x, labels)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[ColumnLabel] {
        &self.labels
    }

    /// Number of observations n.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of columns q.
    pub fn q(&self) -> usize {
        self.x.ncols()
    }
}

/// Solver knobs. The defaults fit to gradient max-norm 1e-8 in at most 100
/// Newton steps with no penalty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the gradient max-norm and on the step norm.
    /// A fit whose objective reaches floating-point resolution before the
    /// gradient reaches `tol` still converges if the gradient is within
    /// [`STALL_GRADIENT_BAND`].
    pub tol: f64,
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            ridge: 0.0,
        }
    }
}

/// A fitted logistic model plus convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Unpenalized log-likelihood at the final coefficients.
    pub final_loglik: f64,
    /// Max-norm of the (penalized, when ridge > 0) gradient at the final
    /// coefficients.
    pub gradient_norm: f64,
    /// Objective value before the first step and after each accepted step.
    /// Nondecreasing; equals the log-likelihood trace when ridge is 0.
    pub objective_trace: Vec<f64>,
}

/// Numerically stable logistic link.
fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(eta)) without overflow for large |eta|.
fn log1p_exp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn loglik_at(x: &DMatrix<f64>, y: &[u8], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| f64::from(yi) * e - log1p_exp(e))
        .sum()
}

fn penalized_objective(x: &DMatrix<f64>, y: &[u8], beta: &DVector<f64>, ridge: f64) -> f64 {
    loglik_at(x, y, beta) - 0.5 * ridge * beta.norm_squared()
}

fn validate_response(y: &[u8], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} design rows",
            y.len(),
            n
        )));
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidParameter(format!(
            "response entries must be 0 or 1, got {bad}"
        )));
    }
    Ok(())
}

/// Maximum-likelihood (or ridge-penalized) logistic fit.
pub fn fit_logistic(design: &DesignMatrix, y: &[u8], options: &FitOptions) -> Result<LogisticFit> {
    let x = design.matrix();
    let (n, q) = (design.n(), design.q());
    validate_response(y, n)?;
    if options.max_iter == 0 || !(options.tol > 0.0) || !(options.ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max_iter {} / tol {} / ridge {}",
            options.max_iter, options.tol, options.ridge
        )));
    }
    // Without a penalty a one-class response pushes the intercept to
    // infinity; refuse early with a clear error instead of "diverging".
    if options.ridge == 0.0 {
        if y.iter().all(|&v| v == 0) {
            return Err(Error::DegenerateResponse(0));
        }
        if y.iter().all(|&v| v == 1) {
            return Err(Error::DegenerateResponse(1));
        }
    }

    let ridge = options.ridge;
    let mut beta = DVector::zeros(q);
    let mut objective = penalized_objective(x, y, &beta, ridge);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0;

    let gradient = |beta: &DVector<f64>| -> DVector<f64> {
        let pi = DVector::from_iterator(n, (x * beta).iter().map(|&e| sigmoid(e)));
        let resid = DVector::from_iterator(n, y.iter().zip(pi.iter()).map(|(&yi, &p)| f64::from(yi) - p));
        x.tr_mul(&resid) - beta * ridge
    };

    for _ in 0..options.max_iter {
        let grad = gradient(&beta);
        if grad.amax() <= options.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let pi = DVector::from_iterator(n, (x * &beta).iter().map(|&e| sigmoid(e)));
        // H = X' W X + ridge I via the square root of W.
        let mut xw = x.clone();
        for i in 0..n {
            let sw = (pi[i] * (1.0 - pi[i])).sqrt();
            xw.row_mut(i).scale_mut(sw);
        }
        let mut h = xw.tr_mul(&xw);
        for j in 0..q {
            h[(j, j)] += ridge;
        }
        let chol = Cholesky::new(h).ok_or(Error::SingularHessian)?;
        {
            // Cholesky can "succeed" with vanishing pivots when columns are
            // collinear; treat a hopeless condition number as singular too.
            let l = chol.l_dirty();
            let mut dmin = f64::INFINITY;
            let mut dmax = 0.0f64;
            for j in 0..q {
                dmin = dmin.min(l[(j, j)]);
                dmax = dmax.max(l[(j, j)]);
            }
            if !(dmin > 1e-8 * dmax) {
                return Err(Error::SingularHessian);
            }
        }
        let step = chol.solve(&grad);

        // Step-halving: accept the first scale that does not decrease the
        // objective; give up on this iteration after 20 halvings.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=20 {
            let candidate = &beta + &step * scale;
            let value = penalized_objective(x, y, &candidate, ridge);
            if value >= objective {
                beta = candidate;
                objective = value;
                trace.push(value);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            stalled = true;
            break;
        }

        if ridge == 0.0 {
            if let Some(j) = (0..q).find(|&j| beta[j].abs() > SEPARATION_LIMIT) {
                return Err(Error::SeparationDetected {
                    label: design.labels()[j].to_string(),
                    limit: SEPARATION_LIMIT,
                });
            }
        }

        if (&step * scale).norm() <= options.tol {
            converged = true;
            break;
        }
    }

    let grad = gradient(&beta);
    if grad.amax() <= options.tol || (stalled && grad.amax() <= STALL_GRADIENT_BAND) {
        converged = true;
    }
    Ok(LogisticFit {
        final_loglik: loglik_at(x, y, &beta),
        gradient_norm: grad.amax(),
        coefficients: beta.data.into(),
        converged,
        iterations,
        objective_trace: trace,
    })
}

/// Predicted success probabilities for new rows, clamped strictly inside
/// (0, 1) so downstream log-odds never see 0 or 1 exactly.
pub fn predict_proba(fit: &LogisticFit, design: &DesignMatrix) -> Result<Vec<f64>> {
    if design.q() != fit.coefficients.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} columns against {} coefficients",
            design.q(),
            fit.coefficients.len()
        )));
    }
    let beta = DVector::from_column_slice(&fit.coefficients);
    Ok((design.matrix() * beta)
        .iter()
        .map(|&e| sigmoid(e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
        .collect())
}

/// Unpenalized log-likelihood of the fit on any compatible dataset.
pub fn log_likelihood(fit: &LogisticFit, design: &DesignMatrix, y: &[u8]) -> Result<f64> {
    if design.q() != fit.coefficients.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} columns against {} coefficients",
            design.q(),
            fit.coefficients.len()
        )));
    }
    validate_response(y, design.n())?;
    Ok(loglik_at(
        design.matrix(),
        y,
        &DVector::from_column_slice(&fit.coefficients),
    ))
}
