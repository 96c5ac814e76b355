//! The mixed-predictor pipeline: one scalar, one composition, and one curve
//! per observation, combined into a single logistic design.
//!
//! Fitting standardizes the scalar, maps compositions to centered ilr
//! coordinates, projects curves onto a freshly fitted eigenbasis, and runs
//! the Newton solver on the assembled design. The compositional and
//! functional coefficient blocks are then mapped back to their native spaces
//! (a composition and a curve) for interpretation. All centering statistics
//! and the basis are stored in the fit so prediction on new observations
//! reuses them instead of re-deriving anything from test data.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpca::{fit_fpca, project, reconstruct_curve, FpcaBasis, FunctionalSample};
use crate::glm::{fit_logistic, predict_proba, ColumnLabel, DesignMatrix, FitOptions, LogisticFit};
use crate::simplex::{ilr, ilr_inv, Composition, IlrVector};

/// Predictor columns for n observations, one of each kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PredictorsRepr", into = "PredictorsRepr")]
pub struct MixedPredictors {
    scalar: Vec<f64>,
    compositions: Vec<Composition>,
    curves: Vec<FunctionalSample>,
}

#[derive(Serialize, Deserialize)]
struct PredictorsRepr {
    scalar: Vec<f64>,
    compositions: Vec<Composition>,
    curves: Vec<FunctionalSample>,
}

impl MixedPredictors {
    pub fn new(
        scalar: Vec<f64>,
        compositions: Vec<Composition>,
        curves: Vec<FunctionalSample>,
    ) -> Result<Self> {
        let n = scalar.len();
        if n == 0 {
            return Err(Error::InvalidDimension("no observations".into()));
        }
        if compositions.len() != n || curves.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} scalars, {} compositions, {} curves",
                compositions.len(),
                curves.len()
            )));
        }
        if let Some(bad) = scalar.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(format!("scalar predictor {bad}")));
        }
        let d = compositions[0].dim();
        if compositions.iter().any(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch(
                "compositions have differing part counts".into(),
            ));
        }
        let grid = curves[0].grid();
        if curves.iter().any(|c| c.grid() != grid) {
            return Err(Error::GridMismatch(
                "curves live on differing grids".into(),
            ));
        }
        Ok(Self {
            scalar,
            compositions,
            curves,
        })
    }

    pub fn len(&self) -> usize {
        self.scalar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scalar.is_empty()
    }

    pub fn scalar(&self) -> &[f64] {
        &self.scalar
    }

    pub fn compositions(&self) -> &[Composition] {
        &self.compositions
    }

    pub fn curves(&self) -> &[FunctionalSample] {
        &self.curves
    }
}

impl TryFrom<PredictorsRepr> for MixedPredictors {
    type Error = Error;

    fn try_from(r: PredictorsRepr) -> Result<Self> {
        MixedPredictors::new(r.scalar, r.compositions, r.curves)
    }
}

impl From<MixedPredictors> for PredictorsRepr {
    fn from(p: MixedPredictors) -> Self {
        PredictorsRepr {
            scalar: p.scalar,
            compositions: p.compositions,
            curves: p.curves,
        }
    }
}

/// Predictors plus the binary response.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    predictors: MixedPredictors,
    response: Vec<u8>,
}

impl MixedDataset {
    pub fn new(predictors: MixedPredictors, response: Vec<u8>) -> Result<Self> {
        if response.len() != predictors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} responses for {} observations",
                response.len(),
                predictors.len()
            )));
        }
        if let Some(&bad) = response.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!(
                "response entries must be 0 or 1, got {bad}"
            )));
        }
        Ok(Self {
            predictors,
            response,
        })
    }

    pub fn predictors(&self) -> &MixedPredictors {
        &self.predictors
    }

    pub fn response(&self) -> &[u8] {
        &self.response
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }
}

/// Training statistics reapplied verbatim at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centers {
    pub scalar_mean: f64,
    /// Sample standard deviation (n - 1 denominator) of the scalar.
    pub scalar_sd: f64,
    /// Per-coordinate means of the training ilr coordinates.
    pub ilr_means: Vec<f64>,
}

/// Pipeline configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Variance fraction for the eigenbasis truncation.
    pub lambda: f64,
    pub include_intercept: bool,
    pub glm: FitOptions,
}

impl FitConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            include_intercept: true,
            glm: FitOptions::default(),
        }
    }
}

/// A fitted mixed-predictor classifier with its back-transformed coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedFit {
    pub intercept: Option<f64>,
    /// Coefficient of the standardized scalar.
    pub gamma: f64,
    /// Compositional coefficients in ilr coordinates.
    pub alpha_star: IlrVector,
    /// The same coefficients mapped back to the simplex.
    pub alpha: Composition,
    /// Coefficients on the component scores.
    pub curve_coefficients: Vec<f64>,
    /// The functional coefficient rebuilt from the eigenbasis.
    pub beta_curve: FunctionalSample,
    pub basis: FpcaBasis,
    pub centers: Centers,
    pub labels: Vec<ColumnLabel>,
    pub diagnostics: LogisticFit,
}

fn is_numerically_constant(values: &[f64]) -> bool {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let scale = values
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-300);
    values.iter().all(|v| (v - mean).abs() <= 1e-12 * scale)
}

struct Blocks {
    ilr_coords: Vec<IlrVector>,
    scores: Vec<Vec<f64>>,
}

fn compute_blocks(predictors: &MixedPredictors, basis: &FpcaBasis) -> Result<Blocks> {
    let ilr_coords: Vec<IlrVector> = predictors.compositions().iter().map(ilr).collect();
    let scores = predictors
        .curves()
        .iter()
        .map(|c| project(basis, c).map(Vec::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(Blocks { ilr_coords, scores })
}

fn build_matrix(
    predictors: &MixedPredictors,
    blocks: &Blocks,
    centers: &Centers,
    include_intercept: bool,
) -> Result<DesignMatrix> {
    let n = predictors.len();
    let d1 = blocks.ilr_coords[0].len();
    let m = blocks.scores[0].len();
    let offset = usize::from(include_intercept);
    let q = offset + 1 + d1 + m;

    let mut labels = Vec::with_capacity(q);
    if include_intercept {
        labels.push(ColumnLabel::Intercept);
    }
    labels.push(ColumnLabel::Scalar);
    labels.extend((0..d1).map(ColumnLabel::IlrCoordinate));
    labels.extend((0..m).map(ColumnLabel::FpcaScore));

    let x = DMatrix::from_fn(n, q, |i, j| {
        if include_intercept && j == 0 {
            1.0
        } else if j == offset {
            (predictors.scalar()[i] - centers.scalar_mean) / centers.scalar_sd
        } else if j < offset + 1 + d1 {
            let k = j - offset - 1;
            blocks.ilr_coords[i].coords()[k] - centers.ilr_means[k]
        } else {
            blocks.scores[i][j - offset - 1 - d1]
        }
    });
    DesignMatrix::new(x, labels)
}

/// Builds the training design and the centering statistics it used.
///
/// Column order is intercept (optional), standardized scalar, centered ilr
/// coordinates, then component scores. Numerically constant columns are
/// rejected here, where the offender can still be named, rather than
/// surfacing later as an unexplained singular Hessian.
pub fn assemble_design(
    data: &MixedDataset,
    basis: &FpcaBasis,
    include_intercept: bool,
) -> Result<(DesignMatrix, Centers)> {
    let predictors = data.predictors();
    let n = predictors.len();
    if n < 2 {
        return Err(Error::InvalidDimension(
            "need at least 2 observations to standardize predictors".into(),
        ));
    }
    let blocks = compute_blocks(predictors, basis)?;

    if is_numerically_constant(predictors.scalar()) {
        return Err(Error::ZeroVarianceColumn {
            label: ColumnLabel::Scalar.to_string(),
        });
    }
    let d1 = blocks.ilr_coords[0].len();
    for k in 0..d1 {
        let col: Vec<f64> = blocks.ilr_coords.iter().map(|v| v.coords()[k]).collect();
        if is_numerically_constant(&col) {
            return Err(Error::ZeroVarianceColumn {
                label: ColumnLabel::IlrCoordinate(k).to_string(),
            });
        }
    }
    for j in 0..blocks.scores[0].len() {
        let col: Vec<f64> = blocks.scores.iter().map(|s| s[j]).collect();
        if is_numerically_constant(&col) {
            return Err(Error::ZeroVarianceColumn {
                label: ColumnLabel::FpcaScore(j).to_string(),
            });
        }
    }

    let scalar_mean = predictors.scalar().iter().sum::<f64>() / n as f64;
    let scalar_sd = (predictors
        .scalar()
        .iter()
        .map(|v| (v - scalar_mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64)
        .sqrt();
    let ilr_means: Vec<f64> = (0..d1)
        .map(|k| {
            blocks
                .ilr_coords
                .iter()
                .map(|v| v.coords()[k])
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let centers = Centers {
        scalar_mean,
        scalar_sd,
        ilr_means,
    };
    let design = build_matrix(predictors, &blocks, &centers, include_intercept)?;
    Ok((design, centers))
}

/// Fits the full pipeline on a training dataset.
pub fn fit(data: &MixedDataset, config: &FitConfig) -> Result<MixedFit> {
    if data.len() < 10 {
        log::warn!(
            "fitting on {} observations; estimates will be unstable",
            data.len()
        );
    }
    let basis = fit_fpca(data.predictors().curves(), config.lambda)?;
    let (design, centers) = assemble_design(data, &basis, config.include_intercept)?;
    let logistic = fit_logistic(&design, data.response(), &config.glm)?;

    let coef = &logistic.coefficients;
    let offset = usize::from(config.include_intercept);
    let d = data.predictors().compositions()[0].dim();
    let intercept = config.include_intercept.then(|| coef[0]);
    let gamma = coef[offset];
    let alpha_star = IlrVector::new(coef[offset + 1..offset + d].to_vec())?;
    let alpha = ilr_inv(&alpha_star, d)?;
    let curve_coefficients = coef[offset + d..].to_vec();
    let beta_curve = reconstruct_curve(&basis, &curve_coefficients)?;

    Ok(MixedFit {
        intercept,
        gamma,
        alpha_star,
        alpha,
        curve_coefficients,
        beta_curve,
        basis,
        centers,
        labels: design.labels().to_vec(),
        diagnostics: logistic,
    })
}

/// Success probabilities for new observations, using the stored basis and
/// centering statistics (nothing is re-estimated from the new data).
pub fn predict(fit: &MixedFit, new_data: &MixedPredictors) -> Result<Vec<f64>> {
    if new_data.compositions()[0].dim() != fit.alpha.dim() {
        return Err(Error::DimensionMismatch(format!(
            "model was fit with {}-part compositions, got {}",
            fit.alpha.dim(),
            new_data.compositions()[0].dim()
        )));
    }
    let blocks = compute_blocks(new_data, &fit.basis)?;
    let design = build_matrix(new_data, &blocks, &fit.centers, fit.intercept.is_some())?;
    predict_proba(&fit.diagnostics, &design)
}

/// Hard 0/1 labels from probabilities: class 1 iff the probability strictly
/// exceeds the cutoff (a probability exactly at the cutoff goes to class 0).
/// The conventional cutoff is 0.5.
pub fn classify(probs: &[f64], cut: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&cut) {
        return Err(Error::InvalidParameter(format!(
            "classification cutoff {cut} outside [0, 1]"
        )));
    }
    Ok(probs.iter().map(|&p| u8::from(p > cut)).collect())
}

impl MixedFit {
    /// Serializes the full fit, basis and centers included, as JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit fields are finite and serializable")
    }

    /// Parses and cross-checks a fit serialized by [`MixedFit::to_json`].
    pub fn from_json(s: &str) -> Result<Self> {
        let fit: MixedFit =
            serde_json::from_str(s).map_err(|e| Error::ModelFormat(e.to_string()))?;
        fit.validate()?;
        Ok(fit)
    }

    fn validate(&self) -> Result<()> {
        let d = self.alpha.dim();
        if self.alpha_star.len() + 1 != d {
            return Err(Error::ModelFormat(format!(
                "{} ilr coefficients for a {}-part composition",
                self.alpha_star.len(),
                d
            )));
        }
        if self.curve_coefficients.len() != self.basis.m() {
            return Err(Error::ModelFormat(format!(
                "{} curve coefficients for a basis of {} components",
                self.curve_coefficients.len(),
                self.basis.m()
            )));
        }
        if self.beta_curve.grid() != self.basis.grid() {
            return Err(Error::ModelFormat(
                "functional coefficient grid differs from the basis grid".into(),
            ));
        }
        if self.centers.ilr_means.len() != self.alpha_star.len() {
            return Err(Error::ModelFormat(
                "centering statistics do not match the compositional block".into(),
            ));
        }
        if !(self.centers.scalar_sd > 0.0) || !self.centers.scalar_sd.is_finite() {
            return Err(Error::ModelFormat(format!(
                "scalar scale {} is not a positive number",
                self.centers.scalar_sd
            )));
        }
        let offset = usize::from(self.intercept.is_some());
        let coef = &self.diagnostics.coefficients;
        if self.labels.len() != coef.len() || coef.len() != offset + d + self.basis.m() {
            return Err(Error::ModelFormat(
                "coefficient count does not match the label list".into(),
            ));
        }
        if self.intercept.is_some() && self.labels.first() != Some(&ColumnLabel::Intercept) {
            return Err(Error::ModelFormat(
                "intercept present but not labeled first".into(),
            ));
        }
        // The stored blocks must be exact slices of the flat coefficient
        // vector, and alpha must be the image of alpha_star.
        let mut expected = Vec::with_capacity(coef.len());
        expected.extend(self.intercept);
        expected.push(self.gamma);
        expected.extend_from_slice(self.alpha_star.coords());
        expected.extend_from_slice(&self.curve_coefficients);
        if coef
            .iter()
            .zip(&expected)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::ModelFormat(
                "coefficient blocks disagree with the flat coefficient vector".into(),
            ));
        }
        let alpha_check = ilr_inv(&self.alpha_star, d)?;
        let drift = alpha_check
            .parts()
            .iter()
            .zip(self.alpha.parts())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if drift > 1e-12 {
            return Err(Error::ModelFormat(format!(
                "compositional coefficients drift {drift} from their ilr image"
            )));
        }
        Ok(())
    }
}
